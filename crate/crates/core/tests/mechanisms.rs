mod common;

use std::collections::{BTreeMap, BTreeSet};

use mtsp_core::clock::{Budget, ClockMode};
use mtsp_core::instance::{validate_allocation, Instance};
use mtsp_core::mechanisms::{run, MechanismKind, Protocol, Session, Termination, Variant, LENGTH_TOL};
use proptest::prelude::*;

const DECENTRAL: [(Protocol, Variant); 6] = [
    (Protocol::P2p, Variant::Benevolent),
    (Protocol::P2p, Variant::Selfish),
    (Protocol::Cnp, Variant::Benevolent),
    (Protocol::Cnp, Variant::Selfish),
    (Protocol::Auction, Variant::Benevolent),
    (Protocol::Auction, Variant::Selfish),
];

fn route_lengths(s: &Session<'_>) -> Vec<f64> {
    s.routes().iter().map(|r| r.length).collect()
}

/// Steps a session to the end, checking the per-round invariants.
fn check_session(inst: &Instance<f64>, protocol: Protocol, variant: Variant, budget: Budget) -> usize {
    let mut s = Session::new(protocol, variant, inst, budget);
    let mut offered: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut memory: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    let mut lengths = route_lengths(&s);
    let mut rounds = 0;
    while let Some(r) = s.step().cloned() {
        rounds += 1;
        assert!(validate_allocation(inst, &s.allocation()).is_empty(), "round {}", r.round);
        for route in s.routes() {
            assert!(route.check(inst.n()).is_ok());
            assert!((inst.dist().closed_length(&route.cities) - route.length).abs() < 1e-6);
        }
        let sets = s.allocation().sets;
        for (route, set) in s.routes().iter().zip(&sets) {
            assert_eq!(&route.city_set(), set);
        }
        for o in &r.offers {
            assert!(
                offered.insert((o.proposer, o.counterpart, o.city)),
                "city {} offered twice by {} to {}",
                o.city,
                o.proposer,
                o.counterpart
            );
            memory.entry((o.proposer, o.counterpart)).or_default().insert(o.city);
        }
        for (&(p, c), cities) in &memory {
            assert_eq!(&s.memory(p, c), cities);
        }
        let now = route_lengths(&s);
        if r.exact && !r.abandoned {
            let before = r.total_before.unwrap();
            match variant {
                Variant::Benevolent => assert!(r.total_after <= before + LENGTH_TOL, "{before} -> {}", r.total_after),
                Variant::Selfish => {
                    for (a, (old, new)) in lengths.iter().zip(&now).enumerate() {
                        assert!(new <= &(old + LENGTH_TOL), "salesman {a}: {old} -> {new}");
                    }
                }
            }
        }
        if r.abandoned {
            assert!(r.offers.is_empty() && r.transfers.is_empty());
        }
        lengths = now;
    }
    rounds
}

#[test]
fn first_p2p_round_reproduces_the_worked_example() {
    let inst = common::worked_example();
    let mut s = Session::new(Protocol::P2p, Variant::Benevolent, &inst, Budget::unlimited(ClockMode::Nodes));
    let r = s.step().unwrap().clone();
    assert_eq!(r.host, Some(0));
    let offers: Vec<(usize, usize, usize)> = r.offers.iter().map(|o| (o.proposer, o.counterpart, o.city)).collect();
    assert_eq!(offers, vec![(1, 0, 5), (0, 1, 4)]);
    assert!((r.objective.unwrap() - 272.66).abs() < 0.01);
    assert!((r.status_quo_objective.unwrap() - (268.47 + 201.95)).abs() < 0.02);
    assert_eq!(r.transfers.len(), 1);
    assert_eq!((r.transfers[0].city, r.transfers[0].from, r.transfers[0].to), (4, 0, 1));
    assert_eq!(s.allocation().sets, vec![BTreeSet::from([0, 2]), BTreeSet::from([0, 1, 3, 4, 5])]);
    let lengths = route_lengths(&s);
    assert!((lengths[0] - 223.61).abs() < 0.01);
    assert!((lengths[1] - 686.94).abs() < 0.01);
    assert!(r.exact);
}

#[test]
fn selfish_guest_refuses_a_swap_that_lengthens_the_host() {
    let inst = common::worked_example();
    let mut s = Session::new(Protocol::P2p, Variant::Selfish, &inst, Budget::unlimited(ClockMode::Nodes));
    let r = s.step().unwrap().clone();
    // the guest would gain but the host's cost for city 5 exceeds its saving
    assert!(r.transfers.is_empty());
    assert_eq!(s.allocation(), inst.endowment().clone());
}

#[test]
fn every_mechanism_converges_without_a_limit() {
    let inst = common::random_instance(11, 8, 3);
    for kind in MechanismKind::ALL {
        let r = run(kind, &inst, Budget::unlimited(ClockMode::Nodes));
        assert_eq!(r.termination, Termination::Converged, "{kind}");
        assert!(r.all_optimal, "{kind}");
        assert!(validate_allocation(&inst, &r.allocation).is_empty(), "{kind}");
        assert!((r.total - r.routes.iter().map(|x| x.length).sum::<f64>()).abs() < 1e-9);
    }
}

#[test]
fn runs_are_deterministic_in_node_mode() {
    let inst = common::random_instance(3, 9, 3);
    for kind in MechanismKind::ALL {
        for budget in [Budget::nodes(40), Budget::nodes(400), Budget::unlimited(ClockMode::Nodes)] {
            let a = run(kind, &inst, budget.clone());
            let b = run(kind, &inst, budget);
            assert_eq!(a.total, b.total, "{kind}");
            assert_eq!(a.rounds, b.rounds, "{kind}");
            assert_eq!(a.messages, b.messages, "{kind}");
            assert_eq!(a.elapsed(), b.elapsed(), "{kind}");
        }
    }
}

#[test]
fn small_budgets_stop_early_but_stay_valid() {
    let inst = common::random_instance(8, 9, 2);
    for kind in MechanismKind::ALL {
        for limit in [1, 5, 25] {
            let r = run(kind, &inst, Budget::nodes(limit));
            assert!(validate_allocation(&inst, &r.allocation).is_empty(), "{kind} at {limit}");
            assert!(r.elapsed() <= limit, "{kind} at {limit} used {}", r.elapsed());
            assert!(r.total.is_finite());
        }
    }
    let r = run(MechanismKind::CentrB, &inst, Budget::nodes(1));
    assert_eq!(r.termination, Termination::BudgetExhausted);
    assert!(!r.all_optimal);
}

#[test]
fn no_reallocation_keeps_the_endowment() {
    let inst = common::random_instance(21, 8, 3);
    let r = run(MechanismKind::NoRealloc, &inst, Budget::unlimited(ClockMode::Nodes));
    assert_eq!(&r.allocation, inst.endowment());
}

#[test]
fn centralised_run_charges_the_authority_then_the_salesmen() {
    let inst = common::random_instance(5, 8, 2);
    let r = run(MechanismKind::CentrB, &inst, Budget::unlimited(ClockMode::Nodes));
    let labels: Vec<&str> = r.budget.phases.iter().map(|p| p.label.as_str()).collect();
    assert_eq!(labels[0], "ca");
    assert!(r.elapsed() > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn protocol_invariants_hold_every_round(seed in any::<u64>(), n in 5usize..=8, m in 2usize..=3, limit in prop_oneof![Just(None), (5u64..400).prop_map(Some)]) {
        let inst = common::random_instance(seed, n, m);
        for (protocol, variant) in DECENTRAL {
            let budget = match limit {
                None => Budget::unlimited(ClockMode::Nodes),
                Some(l) => Budget::nodes(l),
            };
            check_session(&inst, protocol, variant, budget);
        }
    }

    #[test]
    fn nothing_beats_the_centralised_optimum(seed in any::<u64>(), n in 4usize..=8, m in 2usize..=3) {
        prop_assume!(n > m);
        let inst = common::random_instance(seed, n, m);
        let centr = run(MechanismKind::CentrB, &inst, Budget::unlimited(ClockMode::Nodes));
        prop_assert!(centr.all_optimal);
        let oracle = common::mtsp_oracle(inst.dist(), m);
        prop_assert!((centr.total - oracle).abs() < 1e-6);
        for kind in MechanismKind::ALL {
            let r = run(kind, &inst, Budget::unlimited(ClockMode::Nodes));
            prop_assert!(r.total >= centr.total - 1e-6, "{} {} < {}", kind, r.total, centr.total);
        }
    }
}
