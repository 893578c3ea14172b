mod common;

use mtsp_core::exchange::{
    build_bundles, pad_missing_costs, solve_exchange, solve_exchange_with, status_quo_objective, Bundle, Cost,
    CostMatrix, ExchangeKind, ExchangeOptions, ExchangeRound, PaddedMatrix, Proposal,
};
use mtsp_core::routing::bundle_cost;
use mtsp_core::{Limit, SolveStatus};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

/// Cheapest assignment of bundles to agents by trying every owner (or none)
/// for every bundle.
fn enumerate(round: &ExchangeRound, d: &[Vec<f64>], options: &ExchangeOptions) -> Option<f64> {
    let (nb, na) = (round.bundles.len(), round.num_agents());
    let mut best: Option<f64> = None;
    let total = (na + 1).pow(nb as u32);
    'codes: for code in 0..total {
        let mut owner = vec![None; nb];
        let mut c = code;
        for o in owner.iter_mut() {
            let v = c % (na + 1);
            c /= na + 1;
            *o = (v < na).then_some(v);
        }
        for p in &round.proposals {
            let covering = (0..nb).filter(|&b| owner[b].is_some() && round.bundles[b].contains(p.city)).count();
            if covering != 1 {
                continue 'codes;
            }
        }
        for (a, p) in round.proposals.iter().enumerate() {
            let mine: Vec<usize> = (0..nb).filter(|&b| owner[b] == Some(a)).collect();
            if options.one_bundle_per_agent && mine.len() > 1 {
                continue 'codes;
            }
            let size: usize = mine.iter().map(|&b| round.bundles[b].size()).sum();
            if size + p.city_count < 3 {
                continue 'codes;
            }
            if let Some(allowed) = &options.allowed {
                if mine.iter().any(|&b| !allowed[b][a]) {
                    continue 'codes;
                }
            }
        }
        let obj: f64 = (0..nb).filter_map(|b| owner[b].map(|a| d[b][a])).sum();
        if best.is_none_or(|x| obj < x) {
            best = Some(obj);
        }
    }
    best
}

fn check_decision_is_feasible(round: &ExchangeRound, assigned: &[Vec<usize>], one_bundle: bool) {
    for p in &round.proposals {
        let covering = assigned.iter().flatten().filter(|&&b| round.bundles[b].contains(p.city)).count();
        assert_eq!(covering, 1, "city {} covered {covering} times", p.city);
    }
    for (a, p) in round.proposals.iter().enumerate() {
        if one_bundle {
            assert!(assigned[a].len() <= 1);
        }
        let size: usize = assigned[a].iter().map(|&b| round.bundles[b].size()).sum();
        assert!(size + p.city_count >= 3);
    }
}

/// Guest and host cost columns of the worked example, priced from scratch.
fn worked_costs() -> (ExchangeRound, PaddedMatrix<f64>) {
    let inst = common::worked_example();
    let d = inst.dist();
    // host 0 drops city 4 (keeping {0, 2}), guest 1 drops city 5 (keeping {0, 1, 3})
    let host_base = [0, 2];
    let guest_base = [0, 1, 3];
    let price = |base: &[usize], bundle: &[usize]| bundle_cost(d, base, None, bundle, Limit::Unlimited).unwrap().cost.unwrap();
    let round = build_bundles(
        ExchangeKind::P2p,
        &[Proposal { agent: 0, city: 4, city_count: 3 }, Proposal { agent: 1, city: 5, city_count: 4 }],
    )
    .unwrap();
    let mut m = CostMatrix::missing(&round);
    for (b, bundle) in [vec![4], vec![5], vec![4, 5]].iter().enumerate() {
        m.set(b, 0, price(&host_base, bundle));
        m.set(b, 1, price(&guest_base, bundle));
    }
    (round, pad_missing_costs(&m).unwrap())
}

#[test]
fn worked_example_columns() {
    let (round, costs) = worked_costs();
    assert_eq!(round.bundles, vec![Bundle::Single(4), Bundle::Single(5), Bundle::Pair(4, 5)]);
    let host = [268.47, 279.61, 435.77];
    let guest = [43.84, 201.95, 272.66];
    for b in 0..3 {
        assert!((costs.d[b][0] - host[b]).abs() < 0.01, "host row {b}: {}", costs.d[b][0]);
        assert!((costs.d[b][1] - guest[b]).abs() < 0.01, "guest row {b}: {}", costs.d[b][1]);
    }
}

#[test]
fn pair_bundle_wins_only_with_the_one_bundle_row() {
    let (round, costs) = worked_costs();
    let with = solve_exchange(&round, &costs, Limit::Unlimited).unwrap().decision.unwrap();
    assert_eq!(with.assigned, vec![vec![], vec![2]]);
    assert!((with.objective - 272.66).abs() < 0.01);
    let options = ExchangeOptions {
        one_bundle_per_agent: false,
        allowed: None,
    };
    let without = solve_exchange_with(&round, &costs, &options, Limit::Unlimited).unwrap().decision.unwrap();
    assert_eq!(without.assigned, vec![vec![], vec![0, 1]]);
    // 245.79 is the sum of the two-decimal costs; each carries up to 0.01 of rounding
    assert!((without.objective - (costs.d[0][1] + costs.d[1][1])).abs() < TOL);
    assert!((without.objective - 245.79).abs() < 0.02, "{without:?}");
    assert!(without.objective < with.objective);
}

#[test]
fn missing_costs_are_padded_above_every_reported_cost() {
    let rows = vec![
        vec![Cost::Present(3.0), Cost::Missing],
        vec![Cost::Present(7.5), Cost::Present(1.0)],
    ];
    let p = pad_missing_costs(&CostMatrix::from_rows(rows)).unwrap();
    assert_eq!(p.d[0][1], 15.0);
    assert!(p.padded[0][1] && !p.padded[1][0]);
}

#[test]
fn empty_limit_yields_no_decision() {
    let (round, costs) = worked_costs();
    let s = solve_exchange(&round, &costs, Limit::Nodes(0));
    let s = s.unwrap();
    assert!(s.decision.is_none());
    assert_eq!(s.status, SolveStatus::NoIncumbent);
}

fn round_strategy() -> impl Strategy<Value = (ExchangeRound, Vec<Vec<f64>>, bool, Vec<Vec<bool>>)> {
    (0usize..3, 1usize..=3)
        .prop_flat_map(|(kind, guests)| {
            let (kind, agents) = match kind {
                0 => (ExchangeKind::P2p, 2),
                1 => (ExchangeKind::Cnp, guests + 1),
                _ => (ExchangeKind::Auction, guests.min(2) + 1),
            };
            (
                Just(kind),
                proptest::collection::vec(2usize..5, agents),
                any::<bool>(),
                any::<u64>(),
            )
        })
        .prop_flat_map(|(kind, counts, one, seed)| {
            let props: Vec<Proposal> = counts
                .iter()
                .enumerate()
                .map(|(a, &c)| Proposal { agent: a, city: 10 + a, city_count: c })
                .collect();
            let round = build_bundles(kind, &props).unwrap();
            let (nb, na) = (round.bundles.len(), props.len());
            (
                Just(round),
                proptest::collection::vec(proptest::collection::vec(0u32..100, na), nb),
                Just(one),
                proptest::collection::vec(proptest::collection::vec(any::<bool>(), na), nb),
                Just(seed),
            )
        })
        .prop_map(|(round, d, one, mut allowed, _)| {
            // the status quo stays allowed so the model is always feasible
            for a in 0..round.num_agents() {
                allowed[round.single_of(a)][a] = true;
            }
            let d = d.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            (round, d, one, allowed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn exchange_matches_enumeration((round, d, one, allowed) in round_strategy(), use_mask in any::<bool>()) {
        let na = round.num_agents();
        let costs = pad_missing_costs(&CostMatrix::from_rows(
            d.iter().map(|r| r.iter().map(|&v| Cost::Present(v)).collect()).collect(),
        )).unwrap();
        let options = ExchangeOptions { one_bundle_per_agent: one, allowed: use_mask.then_some(allowed) };
        let s = solve_exchange_with(&round, &costs, &options, Limit::Unlimited).unwrap();
        prop_assert_eq!(s.status, SolveStatus::Optimal);
        let decision = s.decision.unwrap();
        let oracle = enumerate(&round, &d, &options).unwrap();
        prop_assert!((decision.objective - oracle).abs() < TOL, "milp {} oracle {}", decision.objective, oracle);
        check_decision_is_feasible(&round, &decision.assigned, one);
        // the status quo is always feasible, so it bounds the optimum and wins ties
        let sq = status_quo_objective(&round, &costs);
        prop_assert!(decision.objective <= sq + TOL);
        if (sq - oracle).abs() < TOL {
            prop_assert!(decision.status_quo);
            prop_assert_eq!(decision.assigned, (0..na).map(|a| vec![round.single_of(a)]).collect::<Vec<_>>());
        }
    }
}
