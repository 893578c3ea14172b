//! Routing formulations: single-salesman TSP, joint MTSP, and the drop-city
//! TSP that picks which city to offer, plus city/bundle cost evaluation.
//!
//! Subtours are eliminated with node potentials (Miller-Tucker-Zemlin rows).
//! City subsets are sorted before modelling, so results do not depend on the
//! order in which callers list cities.

use std::collections::BTreeSet;
use std::time::Duration;

use mtsp_milp::{solve, Limit, MilpModel, MilpSolution, Relation, Scalar, SolveStatus, VarId};
use thiserror::Error;

use crate::geometry::DistanceMatrix;
use crate::instance::{Allocation, Instance, Route, DEPOT};

/// Largest subset the Held-Karp oracle accepts.
pub const HELD_KARP_MAX: usize = 16;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RoutingError {
    #[error("the depot must belong to the city subset")]
    MissingDepot,
    #[error("city {0} is outside the distance matrix")]
    UnknownCity(usize),
    #[error("{n} cities cannot host {m} non-empty tours")]
    TooFewCities { n: usize, m: usize },
    #[error("bundle city {0} already belongs to the base set")]
    BundleOverlap(usize),
    #[error("subset of {0} cities is too large for the oracle")]
    TooLarge(usize),
}

/// Solver work spent on a request.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Effort {
    pub nodes: u64,
    pub elapsed: Duration,
    /// Number of branch-and-bound runs; closed-form cases need none.
    pub solver_calls: u32,
}

impl Effort {
    pub fn add(&mut self, other: Effort) {
        self.nodes += other.nodes;
        self.elapsed += other.elapsed;
        self.solver_calls += other.solver_calls;
    }

    fn of<T>(sol: &MilpSolution<T>) -> Self {
        Self {
            nodes: sol.nodes,
            elapsed: sol.elapsed,
            solver_calls: 1,
        }
    }
}

/// `limit` minus what `spent` already used.
pub fn remaining_limit(limit: Limit, spent: Effort) -> Limit {
    match limit {
        Limit::Unlimited => Limit::Unlimited,
        Limit::Nodes(k) => Limit::Nodes(k.saturating_sub(spent.nodes)),
        Limit::Wall(d) => Limit::Wall(d.saturating_sub(spent.elapsed)),
    }
}

pub fn limit_is_empty(limit: Limit) -> bool {
    matches!(limit, Limit::Nodes(0)) || matches!(limit, Limit::Wall(d) if d.is_zero())
}

/// Worse of two statuses, for requests made of several solves.
pub fn combine_status(a: SolveStatus, b: SolveStatus) -> SolveStatus {
    use SolveStatus::*;
    let rank = |s| match s {
        Optimal => 0,
        Feasible => 1,
        NoIncumbent => 2,
        Infeasible => 3,
        Unbounded => 4,
    };
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

#[derive(Debug, Clone)]
pub struct TourSolve<T> {
    /// Present when `status` is `Optimal` or `Feasible`.
    pub route: Option<Route<T>>,
    pub status: SolveStatus,
    pub effort: Effort,
}

fn normalise(dist_len: usize, cities: &[usize]) -> Result<Vec<usize>, RoutingError> {
    let set: BTreeSet<usize> = cities.iter().copied().collect();
    if !set.contains(&DEPOT) {
        return Err(RoutingError::MissingDepot);
    }
    if let Some(&c) = set.iter().find(|&&c| c >= dist_len) {
        return Err(RoutingError::UnknownCity(c));
    }
    Ok(set.into_iter().collect())
}

/// Arc variables `x[i][j]` (local indices, `i != j`) with the distance objective.
fn arc_vars<T: Scalar>(model: &mut MilpModel<T>, dist: &DistanceMatrix<T>, cities: &[usize]) -> Vec<Vec<Option<VarId>>> {
    let n = cities.len();
    let mut x = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = model.add_binary(format!("x_{}_{}", cities[i], cities[j]));
                model.set_objective(v, dist.get(cities[i], cities[j]));
                x[i][j] = Some(v);
            }
        }
    }
    x
}

fn out_terms<T: Scalar>(x: &[Vec<Option<VarId>>], i: usize) -> Vec<(VarId, T)> {
    x[i].iter().flatten().map(|&v| (v, T::one())).collect()
}

fn in_terms<T: Scalar>(x: &[Vec<Option<VarId>>], j: usize) -> Vec<(VarId, T)> {
    x.iter().filter_map(|row| row[j]).map(|v| (v, T::one())).collect()
}

/// Potentials `p_i` for non-depot nodes and the rows
/// `p_i - p_j + big * x_ij <= big - 1`.
fn mtz_rows<T: Scalar>(model: &mut MilpModel<T>, x: &[Vec<Option<VarId>>], cities: &[usize], big: usize) {
    let n = cities.len();
    let big_t = T::from_usize(big).expect("city count fits the scalar");
    let p: Vec<Option<VarId>> = (0..n)
        .map(|i| (i != 0).then(|| model.add_continuous(format!("p_{}", cities[i]), T::zero(), T::infinity())))
        .collect();
    for i in 1..n {
        for j in 1..n {
            if i == j {
                continue;
            }
            let (pi, pj, xij) = (p[i].unwrap(), p[j].unwrap(), x[i][j].unwrap());
            model.add_constraint(
                format!("mtz_{}_{}", cities[i], cities[j]),
                vec![(pi, T::one()), (pj, -T::one()), (xij, big_t)],
                Relation::LessEq,
                big_t - T::one(),
            );
        }
    }
}

/// Successor lists from a solved arc assignment.
fn successors<T: Scalar>(sol: &MilpSolution<T>, x: &[Vec<Option<VarId>>]) -> Vec<Vec<usize>> {
    let half = T::from_f64_lossy(0.5);
    x.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter_map(|(j, v)| v.filter(|&v| sol.value(v) > half).map(|_| j))
                .collect()
        })
        .collect()
}

/// Follows successors from the depot through `first` back to the depot.
fn walk(succ: &[Vec<usize>], first: usize, cities: &[usize]) -> Vec<usize> {
    let mut order = Vec::new();
    let mut cur = first;
    while cur != 0 && order.len() < cities.len() {
        order.push(cities[cur]);
        cur = match succ[cur].first() {
            Some(&next) => next,
            None => break,
        };
    }
    order
}

fn to_limit_status<T: Scalar>(limit: Limit) -> Option<TourSolve<T>> {
    limit_is_empty(limit).then(|| TourSolve {
        route: None,
        status: SolveStatus::NoIncumbent,
        effort: Effort::default(),
    })
}

/// Shortest closed tour from the depot through exactly `cities`.
///
/// Up to two non-depot cities the tour is unique and is returned without a
/// solver run. An empty `limit` always yields `NoIncumbent`.
pub fn solve_tsp<T: Scalar>(dist: &DistanceMatrix<T>, cities: &[usize], limit: Limit) -> Result<TourSolve<T>, RoutingError> {
    let cities = normalise(dist.len(), cities)?;
    if let Some(empty) = to_limit_status(limit) {
        return Ok(empty);
    }
    let n = cities.len();
    if n <= 3 {
        return Ok(TourSolve {
            route: Some(Route::from_order(&cities[1..], dist)),
            status: SolveStatus::Optimal,
            effort: Effort::default(),
        });
    }
    let mut model = MilpModel::new();
    let x = arc_vars(&mut model, dist, &cities);
    for i in 0..n {
        model.add_constraint(format!("out_{}", cities[i]), out_terms(&x, i), Relation::Equal, T::one());
        model.add_constraint(format!("in_{}", cities[i]), in_terms(&x, i), Relation::Equal, T::one());
    }
    mtz_rows(&mut model, &x, &cities, n);
    let sol = solve(&model, limit).expect("well-formed tour model");
    let effort = Effort::of(&sol);
    let route = sol.status.has_solution().then(|| {
        let succ = successors(&sol, &x);
        Route::from_order(&walk(&succ, succ[0][0], &cities), dist)
    });
    Ok(TourSolve {
        route,
        status: sol.status,
        effort,
    })
}

#[derive(Debug, Clone)]
pub struct MtspSolve<T> {
    pub allocation: Option<Allocation>,
    pub routes: Option<Vec<Route<T>>>,
    pub status: SolveStatus,
    pub effort: Effort,
}

impl<T: Scalar> MtspSolve<T> {
    pub fn total(&self) -> Option<T> {
        self.routes.as_ref().map(|r| r.iter().fold(T::zero(), |acc, r| acc + r.length))
    }
}

/// Joint allocation and routing of all cities of `inst`.
pub fn solve_mtsp<T: Scalar>(inst: &Instance<T>, limit: Limit) -> Result<MtspSolve<T>, RoutingError> {
    solve_mtsp_on(inst.dist(), inst.m(), limit)
}

/// Joint allocation and routing for `m >= 1` salesmen over every city of
/// `dist`. Each salesman visits at least one city; routes are handed to
/// salesmen in order of their smallest city.
pub fn solve_mtsp_on<T: Scalar>(dist: &DistanceMatrix<T>, m: usize, limit: Limit) -> Result<MtspSolve<T>, RoutingError> {
    let n = dist.len();
    if m == 0 || n < m + 1 {
        return Err(RoutingError::TooFewCities { n, m });
    }
    if limit_is_empty(limit) {
        return Ok(MtspSolve {
            allocation: None,
            routes: None,
            status: SolveStatus::NoIncumbent,
            effort: Effort::default(),
        });
    }
    let cities: Vec<usize> = (0..n).collect();
    let mut model = MilpModel::new();
    let x = arc_vars(&mut model, dist, &cities);
    let m_t = T::from_usize(m).expect("salesman count fits the scalar");
    model.add_constraint("depot_out", out_terms(&x, 0), Relation::Equal, m_t);
    for i in 1..n {
        model.add_constraint(format!("out_{i}"), out_terms(&x, i), Relation::Equal, T::one());
        model.add_constraint(format!("in_{i}"), in_terms(&x, i), Relation::Equal, T::one());
    }
    model.add_constraint("depot_in", in_terms(&x, 0), Relation::Equal, m_t);
    mtz_rows(&mut model, &x, &cities, n - 1);
    let sol = solve(&model, limit).expect("well-formed mtsp model");
    let effort = Effort::of(&sol);
    if !sol.status.has_solution() {
        return Ok(MtspSolve {
            allocation: None,
            routes: None,
            status: sol.status,
            effort,
        });
    }
    let succ = successors(&sol, &x);
    let mut routes: Vec<Route<T>> = succ[0]
        .iter()
        .map(|&first| Route::from_order(&walk(&succ, first, &cities), dist))
        .collect();
    routes.sort_by_key(|r| r.interior().iter().copied().min());
    let allocation = Allocation::new(routes.iter().map(Route::city_set).collect());
    Ok(MtspSolve {
        allocation: Some(allocation),
        routes: Some(routes),
        status: sol.status,
        effort,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refusal {
    /// Every candidate was already offered to this counterpart.
    Memory,
    /// The budget ran out before any drop candidate was found.
    Budget,
}

#[derive(Debug, Clone)]
pub enum DropDecision<T> {
    Drop {
        city: usize,
        /// Current length minus the length of the tour without `city`.
        saving: T,
        /// Tour over the remaining cities.
        base: Route<T>,
    },
    Refuse(Refusal),
}

#[derive(Debug, Clone)]
pub struct DropSolve<T> {
    pub decision: DropDecision<T>,
    pub status: SolveStatus,
    pub effort: Effort,
}

/// Chooses the city whose removal leaves the shortest tour, never one in
/// `memory` (cities already offered to the current counterpart).
///
/// `current_length` is the length of the agent's current tour over `cities`;
/// the saving is measured against it.
pub fn select_city_to_drop<T: Scalar>(
    dist: &DistanceMatrix<T>,
    cities: &[usize],
    current_length: T,
    memory: &BTreeSet<usize>,
    limit: Limit,
) -> Result<DropSolve<T>, RoutingError> {
    let cities = normalise(dist.len(), cities)?;
    let n = cities.len();
    let candidates: Vec<usize> = (1..n).filter(|&i| !memory.contains(&cities[i])).collect();
    if candidates.is_empty() {
        return Ok(DropSolve {
            decision: DropDecision::Refuse(Refusal::Memory),
            status: SolveStatus::Optimal,
            effort: Effort::default(),
        });
    }
    if limit_is_empty(limit) {
        return Ok(DropSolve {
            decision: DropDecision::Refuse(Refusal::Budget),
            status: SolveStatus::NoIncumbent,
            effort: Effort::default(),
        });
    }
    if n <= 4 {
        // the remaining tour has at most two cities and is unique
        let mut best: Option<(usize, Route<T>)> = None;
        for &i in &candidates {
            let rest: Vec<usize> = cities[1..].iter().copied().filter(|&c| c != cities[i]).collect();
            let route = Route::from_order(&rest, dist);
            if best.as_ref().is_none_or(|(_, b)| route.length < b.length) {
                best = Some((cities[i], route));
            }
        }
        let (city, base) = best.expect("at least one candidate");
        return Ok(DropSolve {
            decision: DropDecision::Drop {
                city,
                saving: current_length - base.length,
                base,
            },
            status: SolveStatus::Optimal,
            effort: Effort::default(),
        });
    }

    let mut model = MilpModel::new();
    let x = arc_vars(&mut model, dist, &cities);
    let kept: Vec<Option<VarId>> = (0..n)
        .map(|i| {
            (i != 0).then(|| {
                let k = model.add_binary(format!("kept_{}", cities[i]));
                if memory.contains(&cities[i]) {
                    model.set_bounds(k, T::one(), T::one());
                }
                k
            })
        })
        .collect();
    for i in 0..n {
        let mut out = out_terms(&x, i);
        let mut inn = in_terms(&x, i);
        let rhs = match kept[i] {
            Some(k) => {
                out.push((k, -T::one()));
                inn.push((k, -T::one()));
                T::zero()
            }
            None => T::one(),
        };
        model.add_constraint(format!("out_{}", cities[i]), out, Relation::Equal, rhs);
        model.add_constraint(format!("in_{}", cities[i]), inn, Relation::Equal, rhs);
    }
    let n_t = T::from_usize(n).expect("city count fits the scalar");
    model.add_constraint(
        "kept_count",
        kept.iter().flatten().map(|&k| (k, T::one())).collect(),
        Relation::Equal,
        n_t - T::from_f64_lossy(2.0),
    );
    mtz_rows(&mut model, &x, &cities, n);
    let sol = solve(&model, limit).expect("well-formed drop model");
    let effort = Effort::of(&sol);
    if !sol.status.has_solution() {
        return Ok(DropSolve {
            decision: DropDecision::Refuse(Refusal::Budget),
            status: sol.status,
            effort,
        });
    }
    let half = T::from_f64_lossy(0.5);
    let dropped = (1..n)
        .find(|&i| sol.value(kept[i].unwrap()) < half)
        .expect("exactly one city is dropped");
    let succ = successors(&sol, &x);
    let base = Route::from_order(&walk(&succ, succ[0][0], &cities), dist);
    Ok(DropSolve {
        decision: DropDecision::Drop {
            city: cities[dropped],
            saving: current_length - base.length,
            base,
        },
        status: sol.status,
        effort,
    })
}

#[derive(Debug, Clone)]
pub struct CostSolve<T> {
    /// Extra tour length for visiting the bundle; `None` if a solve had no incumbent.
    pub cost: Option<T>,
    /// Tour over base and bundle.
    pub route: Option<Route<T>>,
    pub status: SolveStatus,
    pub effort: Effort,
}

/// Optimal tour length over `base ∪ bundle` minus the tour length over
/// `base`. `base_length` skips the base solve when already known.
pub fn bundle_cost<T: Scalar>(
    dist: &DistanceMatrix<T>,
    base: &[usize],
    base_length: Option<T>,
    bundle: &[usize],
    limit: Limit,
) -> Result<CostSolve<T>, RoutingError> {
    let base = normalise(dist.len(), base)?;
    if let Some(&c) = bundle.iter().find(|c| base.contains(c)) {
        return Err(RoutingError::BundleOverlap(c));
    }
    let mut effort = Effort::default();
    let mut status = SolveStatus::Optimal;
    let base_length = match base_length {
        Some(l) => l,
        None => {
            let s = solve_tsp(dist, &base, limit)?;
            effort.add(s.effort);
            status = s.status;
            match s.route {
                Some(r) => r.length,
                None => {
                    return Ok(CostSolve {
                        cost: None,
                        route: None,
                        status,
                        effort,
                    })
                }
            }
        }
    };
    let mut all = base.clone();
    all.extend_from_slice(bundle);
    let s = solve_tsp(dist, &all, remaining_limit(limit, effort))?;
    effort.add(s.effort);
    status = combine_status(status, s.status);
    let cost = s.route.as_ref().map(|r| r.length - base_length);
    Ok(CostSolve {
        cost,
        route: s.route,
        status,
        effort,
    })
}

/// Exact tour length by dynamic programming over subsets.
pub fn held_karp_oracle<T: Scalar>(dist: &DistanceMatrix<T>, cities: &[usize]) -> Result<T, RoutingError> {
    let cities = normalise(dist.len(), cities)?;
    if cities.len() > HELD_KARP_MAX {
        return Err(RoutingError::TooLarge(cities.len()));
    }
    let k = cities.len() - 1;
    if k == 0 {
        return Ok(T::zero());
    }
    let others = &cities[1..];
    let full = 1usize << k;
    // best[mask * k + last]: shortest depot path visiting `mask`, ending at `last`
    let mut best = vec![T::infinity(); full * k];
    for j in 0..k {
        best[(1 << j) * k + j] = dist.get(DEPOT, others[j]);
    }
    for mask in 1..full {
        for last in 0..k {
            let cur = best[mask * k + last];
            if mask & (1 << last) == 0 || !cur.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = cur + dist.get(others[last], others[next]);
                if cand < best[nm * k + next] {
                    best[nm * k + next] = cand;
                }
            }
        }
    }
    Ok((0..k).fold(T::infinity(), |acc, last| {
        acc.min(best[(full - 1) * k + last] + dist.get(others[last], DEPOT))
    }))
}
