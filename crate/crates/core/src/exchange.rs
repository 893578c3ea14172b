//! Bundles, cost matrices and the winner-determination model shared by the
//! peer-to-peer, contract-net and auction exchanges.
//!
//! Every participating agent proposes exactly one of its cities. Bundles are
//! listed single-city bundles first (in proposal order), then two-city
//! bundles. Cost matrices are indexed `[bundle][agent]`.

use mtsp_milp::{solve, Limit, MilpModel, Relation, Scalar, SolveStatus, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::{limit_is_empty, Effort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeKind {
    /// Host and one guest: the two singles and their pair.
    P2p,
    /// Host first, then guests: all singles and the pairs `{c^h, c^g}`.
    Cnp,
    /// All singles and all pairs.
    Auction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bundle {
    Single(usize),
    Pair(usize, usize),
}

impl Bundle {
    pub fn cities(&self) -> Vec<usize> {
        match *self {
            Bundle::Single(c) => vec![c],
            Bundle::Pair(a, b) => vec![a, b],
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Bundle::Single(_) => 1,
            Bundle::Pair(..) => 2,
        }
    }

    pub fn contains(&self, city: usize) -> bool {
        match *self {
            Bundle::Single(c) => c == city,
            Bundle::Pair(a, b) => a == city || b == city,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub agent: usize,
    pub city: usize,
    /// Current size of the agent's city set, depot and proposed city included.
    pub city_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRound {
    pub kind: ExchangeKind,
    /// Proposals in column order; for P2P and CNP the host comes first.
    pub proposals: Vec<Proposal>,
    pub bundles: Vec<Bundle>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("an exchange needs at least two proposals, got {0}")]
    TooFewProposals(usize),
    #[error("a peer-to-peer exchange has exactly two proposals, got {0}")]
    P2pArity(usize),
    #[error("city {0} is proposed twice")]
    DuplicateCity(usize),
    #[error("agent {0} proposes twice")]
    DuplicateAgent(usize),
    #[error("every cost entry is missing")]
    AllMissing,
    #[error("cost matrix shape does not match the round")]
    Shape,
    #[error("no assignment satisfies the exchange constraints")]
    Infeasible,
}

impl ExchangeRound {
    pub fn num_agents(&self) -> usize {
        self.proposals.len()
    }

    /// Index of the single-city bundle of the `i`-th proposer.
    pub fn single_of(&self, i: usize) -> usize {
        i
    }

    pub fn bundle_index(&self, bundle: Bundle) -> Option<usize> {
        let norm = |b: Bundle| match b {
            Bundle::Pair(a, c) if a > c => Bundle::Pair(c, a),
            other => other,
        };
        let target = norm(bundle);
        self.bundles.iter().position(|&b| norm(b) == target)
    }

    /// Column of `agent`, if it participates.
    pub fn column_of(&self, agent: usize) -> Option<usize> {
        self.proposals.iter().position(|p| p.agent == agent)
    }

    /// Membership `w[city][bundle]` over the proposed cities.
    pub fn membership(&self) -> Vec<Vec<bool>> {
        self.proposals
            .iter()
            .map(|p| self.bundles.iter().map(|b| b.contains(p.city)).collect())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bundles.iter().map(Bundle::size).collect()
    }
}

pub fn build_bundles(kind: ExchangeKind, proposals: &[Proposal]) -> Result<ExchangeRound, ExchangeError> {
    let k = proposals.len();
    if k < 2 {
        return Err(ExchangeError::TooFewProposals(k));
    }
    if kind == ExchangeKind::P2p && k != 2 {
        return Err(ExchangeError::P2pArity(k));
    }
    for (i, p) in proposals.iter().enumerate() {
        if proposals[..i].iter().any(|q| q.city == p.city) {
            return Err(ExchangeError::DuplicateCity(p.city));
        }
        if proposals[..i].iter().any(|q| q.agent == p.agent) {
            return Err(ExchangeError::DuplicateAgent(p.agent));
        }
    }
    let mut bundles: Vec<Bundle> = proposals.iter().map(|p| Bundle::Single(p.city)).collect();
    match kind {
        ExchangeKind::P2p | ExchangeKind::Cnp => {
            let host = proposals[0].city;
            bundles.extend(proposals[1..].iter().map(|g| Bundle::Pair(host, g.city)));
        }
        ExchangeKind::Auction => {
            for i in 0..k {
                for j in i + 1..k {
                    bundles.push(Bundle::Pair(proposals[i].city, proposals[j].city));
                }
            }
        }
    }
    Ok(ExchangeRound {
        kind,
        proposals: proposals.to_vec(),
        bundles,
    })
}

/// A cost entry: either known, or not reported by the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cost<T> {
    Present(T),
    Missing,
}

impl<T: Scalar> Cost<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Cost::Present(v) => Some(v),
            Cost::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    /// `d[bundle][agent]`.
    pub d: Vec<Vec<Cost<T>>>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn missing(round: &ExchangeRound) -> Self {
        Self {
            d: vec![vec![Cost::Missing; round.num_agents()]; round.bundles.len()],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Cost<T>>>) -> Self {
        Self { d: rows }
    }

    pub fn set(&mut self, bundle: usize, agent_col: usize, value: T) {
        self.d[bundle][agent_col] = Cost::Present(value);
    }

    pub fn get(&self, bundle: usize, agent_col: usize) -> Cost<T> {
        self.d[bundle][agent_col]
    }
}

/// Cost matrix with every entry known; `padded` marks substituted entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedMatrix<T> {
    pub d: Vec<Vec<T>>,
    pub padded: Vec<Vec<bool>>,
}

/// Replaces each missing entry by twice the largest present entry.
pub fn pad_missing_costs<T: Scalar>(matrix: &CostMatrix<T>) -> Result<PaddedMatrix<T>, ExchangeError> {
    let max = matrix
        .d
        .iter()
        .flatten()
        .filter_map(|c| c.value())
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(ExchangeError::AllMissing)?;
    let pad = max + max;
    let d = matrix
        .d
        .iter()
        .map(|row| row.iter().map(|c| c.value().unwrap_or(pad)).collect())
        .collect();
    let padded = matrix
        .d
        .iter()
        .map(|row| row.iter().map(|c| c.value().is_none()).collect())
        .collect();
    Ok(PaddedMatrix { d, padded })
}

#[derive(Debug, Clone)]
pub struct ExchangeOptions {
    /// At most one bundle per agent. Dropping it admits the assignments the
    /// bundle costs cannot price correctly.
    pub one_bundle_per_agent: bool,
    /// `allowed[bundle][agent]`; forbidden entries are fixed to zero.
    pub allowed: Option<Vec<Vec<bool>>>,
}

impl Default for ExchangeOptions {
    fn default() -> Self {
        Self {
            one_bundle_per_agent: true,
            allowed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision<T> {
    /// Bundle indices received by each agent column.
    pub assigned: Vec<Vec<usize>>,
    pub objective: T,
    /// Some chosen entry was a padded (unreported) cost.
    pub uses_padding: bool,
    /// Every proposer takes back its own city.
    pub status_quo: bool,
}

#[derive(Debug, Clone)]
pub struct ExchangeSolve<T> {
    /// `None` when the budget ran out before any assignment was found.
    pub decision: Option<AllocationDecision<T>>,
    pub status: SolveStatus,
    pub effort: Effort,
}

/// Sum of each proposer's cost for its own city.
pub fn status_quo_objective<T: Scalar>(round: &ExchangeRound, costs: &PaddedMatrix<T>) -> T {
    (0..round.num_agents()).fold(T::zero(), |acc, a| acc + costs.d[round.single_of(a)][a])
}

fn decision_from<T: Scalar>(round: &ExchangeRound, costs: &PaddedMatrix<T>, assigned: Vec<Vec<usize>>) -> AllocationDecision<T> {
    let mut objective = T::zero();
    let mut uses_padding = false;
    for (a, bundles) in assigned.iter().enumerate() {
        for &b in bundles {
            objective += costs.d[b][a];
            uses_padding |= costs.padded[b][a];
        }
    }
    let status_quo = assigned
        .iter()
        .enumerate()
        .all(|(a, bs)| bs.as_slice() == [round.single_of(a)]);
    AllocationDecision {
        assigned,
        objective,
        uses_padding,
        status_quo,
    }
}

pub fn solve_exchange<T: Scalar>(
    round: &ExchangeRound,
    costs: &PaddedMatrix<T>,
    limit: Limit,
) -> Result<ExchangeSolve<T>, ExchangeError> {
    solve_exchange_with(round, costs, &ExchangeOptions::default(), limit)
}

/// Minimum-cost assignment of bundles to agents such that every proposed
/// city is handed out exactly once and every agent keeps the depot plus at
/// least one city. When the status quo is within tolerance of the optimum
/// it is preferred, so that ties never move cities around.
pub fn solve_exchange_with<T: Scalar>(
    round: &ExchangeRound,
    costs: &PaddedMatrix<T>,
    options: &ExchangeOptions,
    limit: Limit,
) -> Result<ExchangeSolve<T>, ExchangeError> {
    let (nb, na) = (round.bundles.len(), round.num_agents());
    if costs.d.len() != nb || costs.d.iter().any(|r| r.len() != na) {
        return Err(ExchangeError::Shape);
    }
    if limit_is_empty(limit) {
        return Ok(ExchangeSolve {
            decision: None,
            status: SolveStatus::NoIncumbent,
            effort: Effort::default(),
        });
    }
    let allowed = |b: usize, a: usize| options.allowed.as_ref().is_none_or(|m| m[b][a]);

    let mut model = MilpModel::new();
    let x: Vec<Vec<VarId>> = (0..nb)
        .map(|b| {
            (0..na)
                .map(|a| {
                    let v = model.add_binary(format!("x_{a}_{b}"));
                    model.set_objective(v, costs.d[b][a]);
                    if !allowed(b, a) {
                        model.set_bounds(v, T::zero(), T::zero());
                    }
                    v
                })
                .collect()
        })
        .collect();
    for (ci, p) in round.proposals.iter().enumerate() {
        let terms = (0..nb)
            .filter(|&b| round.bundles[b].contains(p.city))
            .flat_map(|b| x[b].iter().map(|&v| (v, T::one())))
            .collect();
        model.add_constraint(format!("cover_{ci}"), terms, Relation::Equal, T::one());
    }
    for (a, p) in round.proposals.iter().enumerate() {
        if options.one_bundle_per_agent {
            let terms = (0..nb).map(|b| (x[b][a], T::one())).collect();
            model.add_constraint(format!("one_{a}"), terms, Relation::LessEq, T::one());
        }
        let need = 3.0 - p.city_count as f64;
        if need > 0.0 {
            let terms = (0..nb)
                .map(|b| (x[b][a], T::from_usize(round.bundles[b].size()).unwrap()))
                .collect();
            model.add_constraint(format!("keep_{a}"), terms, Relation::GreaterEq, T::from_f64_lossy(need));
        }
    }

    let sol = solve(&model, limit).expect("well-formed exchange model");
    let effort = Effort {
        nodes: sol.nodes,
        elapsed: sol.elapsed,
        solver_calls: 1,
    };
    match sol.status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => return Err(ExchangeError::Infeasible),
        SolveStatus::NoIncumbent => {
            return Ok(ExchangeSolve {
                decision: None,
                status: sol.status,
                effort,
            })
        }
        SolveStatus::Optimal | SolveStatus::Feasible => {}
    }
    let half = T::from_f64_lossy(0.5);
    let assigned: Vec<Vec<usize>> = (0..na)
        .map(|a| (0..nb).filter(|&b| sol.value(x[b][a]) > half).collect())
        .collect();
    let mut decision = decision_from(round, costs, assigned);

    let sq_allowed = (0..na).all(|a| allowed(round.single_of(a), a));
    if sq_allowed && !decision.status_quo {
        let sq = status_quo_objective(round, costs);
        if sq <= decision.objective + T::feas_tol() * T::one().max(sq.abs()) {
            decision = decision_from(round, costs, (0..na).map(|a| vec![round.single_of(a)]).collect());
        }
    }
    Ok(ExchangeSolve {
        decision: Some(decision),
        status: sol.status,
        effort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(agent: usize, city: usize, count: usize) -> Proposal {
        Proposal { agent, city, city_count: count }
    }

    #[test]
    fn bundle_counts() {
        let props: Vec<Proposal> = (0..6).map(|i| p(i, 10 + i, 3)).collect();
        assert_eq!(build_bundles(ExchangeKind::P2p, &props[..2]).unwrap().bundles.len(), 3);
        assert_eq!(build_bundles(ExchangeKind::Cnp, &props[..4]).unwrap().bundles.len(), 7);
        assert_eq!(build_bundles(ExchangeKind::Auction, &props[..4]).unwrap().bundles.len(), 10);
    }

    #[test]
    fn rejects_duplicates_and_arity() {
        assert_eq!(
            build_bundles(ExchangeKind::Auction, &[p(0, 4, 3), p(1, 4, 3)]),
            Err(ExchangeError::DuplicateCity(4))
        );
        assert_eq!(
            build_bundles(ExchangeKind::P2p, &[p(0, 1, 3), p(1, 2, 3), p(2, 3, 3)]),
            Err(ExchangeError::P2pArity(3))
        );
        assert_eq!(build_bundles(ExchangeKind::Cnp, &[p(0, 1, 3)]), Err(ExchangeError::TooFewProposals(1)));
    }

    #[test]
    fn padding_doubles_the_largest_entry() {
        let m = CostMatrix::from_rows(vec![
            vec![Cost::Present(268.47f64), Cost::Missing],
            vec![Cost::Present(435.77), Cost::Present(1.0)],
        ]);
        let padded = pad_missing_costs(&m).unwrap();
        assert!((padded.d[0][1] - 871.54).abs() < 1e-9);
        assert!(padded.padded[0][1] && !padded.padded[0][0]);
        assert_eq!(padded.d[1][0], 435.77);

        let zeros = CostMatrix::from_rows(vec![vec![Cost::Present(0.0), Cost::Missing]]);
        assert_eq!(pad_missing_costs(&zeros).unwrap().d[0][1], 0.0);
        let none: CostMatrix<f64> = CostMatrix::from_rows(vec![vec![Cost::Missing]]);
        assert_eq!(pad_missing_costs(&none), Err(ExchangeError::AllMissing));
    }

    #[test]
    fn status_quo_wins_ties() {
        let round = build_bundles(ExchangeKind::P2p, &[p(0, 1, 3), p(1, 2, 3)]).unwrap();
        // swapping costs exactly as much as keeping
        let costs = PaddedMatrix {
            d: vec![vec![5.0, 5.0], vec![5.0, 5.0], vec![20.0, 20.0]],
            padded: vec![vec![false; 2]; 3],
        };
        let s = solve_exchange(&round, &costs, Limit::Unlimited).unwrap();
        let d = s.decision.unwrap();
        assert!(d.status_quo);
        assert_eq!(d.assigned, vec![vec![0], vec![1]]);
    }
}
