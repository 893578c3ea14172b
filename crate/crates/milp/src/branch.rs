//! Branch-and-bound over LP relaxations.
//!
//! Node selection is best-bound with plunging: after a node branches, the
//! child on the rounding side of the branching variable is processed next on
//! the warm tableau; when a plunge ends the open node with the smallest
//! bound is restored from its parent's basis. Branching picks the most
//! fractional binary, lowest index first on ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::model::{MilpModel, ModelError, VarKind};
use crate::simplex::{BasisSnapshot, LpOutcome, Tableau};
use crate::Scalar;

/// Search limit handed to [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Unlimited,
    /// Maximum number of branch-and-bound nodes whose LP gets solved.
    Nodes(u64),
    Wall(Duration),
}

impl Limit {
    fn is_empty(&self) -> bool {
        matches!(self, Limit::Nodes(0)) || matches!(self, Limit::Wall(d) if d.is_zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Limit reached with an incumbent that is not proven optimal.
    Feasible,
    Infeasible,
    Unbounded,
    /// Limit reached before any integer-feasible point was found.
    NoIncumbent,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution<T> {
    pub status: SolveStatus,
    /// Variable assignment; empty unless `status.has_solution()`.
    pub values: Vec<T>,
    /// Objective of `values`; `+inf` without a solution.
    pub objective: T,
    /// Proven lower bound on the optimum.
    pub bound: T,
    /// Nodes whose LP relaxation was solved.
    pub nodes: u64,
    pub elapsed: Duration,
}

impl<T: Scalar> MilpSolution<T> {
    fn empty(status: SolveStatus, bound: T, nodes: u64, started: Instant) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: T::infinity(),
            bound,
            nodes,
            elapsed: started.elapsed(),
        }
    }

    pub fn value(&self, var: crate::VarId) -> T {
        self.values[var.0]
    }
}

struct OpenNode<T> {
    bound: T,
    seq: u64,
    fixings: Vec<(usize, T)>,
    basis: Rc<BasisSnapshot>,
}

impl<T: Scalar> PartialEq for OpenNode<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for OpenNode<T> {}
impl<T: Scalar> PartialOrd for OpenNode<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for OpenNode<T> {
    // reversed: BinaryHeap is a max-heap, we pop the smallest bound first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn iteration_cap(rows: usize, cols: usize) -> usize {
    50 * (rows + cols) + 1_000
}

fn gap_tol<T: Scalar>(incumbent: T) -> T {
    T::feas_tol() * T::one().max(incumbent.abs())
}

/// Solves the continuous relaxation (integrality marks ignored).
pub fn lp_relax_solve<T: Scalar>(model: &MilpModel<T>) -> Result<MilpSolution<T>, ModelError> {
    model.validate()?;
    let started = Instant::now();
    let mut tab = Tableau::new(model);
    let cap = iteration_cap(model.num_constraints(), model.num_vars());
    let mut outcome = tab.solve_from_scratch(cap);
    if outcome == LpOutcome::IterationLimit && tab.refresh() {
        outcome = tab.primal(cap);
    }
    Ok(match outcome {
        LpOutcome::Optimal => {
            let obj = tab.objective();
            MilpSolution {
                status: SolveStatus::Optimal,
                values: tab.values().to_vec(),
                objective: obj,
                bound: obj,
                nodes: 1,
                elapsed: started.elapsed(),
            }
        }
        LpOutcome::Infeasible => MilpSolution::empty(SolveStatus::Infeasible, T::infinity(), 1, started),
        LpOutcome::Unbounded => MilpSolution::empty(SolveStatus::Unbounded, T::neg_infinity(), 1, started),
        LpOutcome::IterationLimit => MilpSolution::empty(SolveStatus::NoIncumbent, T::neg_infinity(), 1, started),
    })
}

/// Exact branch-and-bound within `limit`.
///
/// With [`Limit::Nodes`] the search is fully deterministic: the same model
/// and limit always give the same solution.
pub fn solve<T: Scalar>(model: &MilpModel<T>, limit: Limit) -> Result<MilpSolution<T>, ModelError> {
    model.validate()?;
    if limit.is_empty() {
        return Err(ModelError::EmptyBudget);
    }
    let started = Instant::now();
    let mut tab = Tableau::new(model);
    let n = tab.num_structural();
    let cap = iteration_cap(model.num_constraints(), n);
    let binaries: Vec<usize> = (0..n)
        .filter(|&j| model.vars()[j].kind == VarKind::Binary)
        .collect();
    let root_bounds: Vec<(T, T)> = (0..n).map(|j| tab.bounds(j)).collect();

    let mut open: BinaryHeap<OpenNode<T>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0u64;
    let mut incumbent: Option<(T, Vec<T>)> = None;
    let mut pruned_floor = T::infinity();
    // (fixings, bound inherited from the parent, warm)
    let mut plunge: Option<(Vec<(usize, T)>, T)> = Some((Vec::new(), T::neg_infinity()));
    let mut root = true;
    let mut hit_limit = false;
    let mut pending_bound = T::infinity();

    loop {
        let (fixings, parent_bound, warm, basis) = match plunge.take() {
            Some((f, b)) => (f, b, true, None),
            None => match open.pop() {
                Some(node) => (node.fixings, node.bound, false, Some(node.basis)),
                None => break,
            },
        };
        if let Some((inc, _)) = &incumbent {
            if parent_bound >= *inc - gap_tol(*inc) {
                pruned_floor = pruned_floor.min(parent_bound);
                if warm {
                    continue;
                }
                // everything left in the heap is at least as large
                open.clear();
                break;
            }
        }
        let exhausted = match limit {
            Limit::Unlimited => false,
            Limit::Nodes(k) => nodes >= k,
            Limit::Wall(d) => started.elapsed() >= d,
        };
        if exhausted {
            hit_limit = true;
            pending_bound = pending_bound.min(parent_bound);
            break;
        }
        nodes += 1;

        let mut outcome = if root {
            root = false;
            tab.solve_from_scratch(cap)
        } else if warm {
            let &(j, v) = fixings.last().expect("plunge child carries its fixing");
            tab.set_bounds(j, v, v);
            tab.reoptimize(cap)
        } else {
            for (j, &(lo, hi)) in root_bounds.iter().enumerate() {
                tab.set_bounds(j, lo, hi);
            }
            for &(j, v) in &fixings {
                tab.set_bounds(j, v, v);
            }
            let basis = basis.expect("open nodes carry a basis");
            if tab.restore(&basis) {
                tab.reoptimize(cap)
            } else {
                tab.primal(cap)
            }
        };
        if outcome == LpOutcome::IterationLimit && tab.refresh() {
            outcome = tab.primal(cap);
        }
        match outcome {
            LpOutcome::Optimal => {}
            LpOutcome::Infeasible | LpOutcome::IterationLimit => continue,
            LpOutcome::Unbounded => {
                if nodes == 1 {
                    return Ok(MilpSolution::empty(
                        SolveStatus::Unbounded,
                        T::neg_infinity(),
                        nodes,
                        started,
                    ));
                }
                continue;
            }
        }

        let obj = tab.objective();
        if let Some((inc, _)) = &incumbent {
            if obj >= *inc - gap_tol(*inc) {
                pruned_floor = pruned_floor.min(obj);
                continue;
            }
        }

        let values = tab.values();
        let mut branch: Option<(usize, T)> = None;
        let half = T::from_f64_lossy(0.5);
        for &j in &binaries {
            let v = values[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > T::int_tol() {
                let dist = (v - v.floor() - half).abs();
                if branch.is_none_or(|(b, _)| dist < (values[b] - values[b].floor() - half).abs()) {
                    branch = Some((j, v));
                }
            }
        }

        match branch {
            None => {
                let mut candidate = values.to_vec();
                for &j in &binaries {
                    candidate[j] = candidate[j].round();
                }
                let cand_obj = model.objective_value(&candidate);
                let scale = T::one().max(
                    model
                        .constraints()
                        .iter()
                        .fold(T::zero(), |acc, c| acc.max(c.rhs.abs())),
                );
                if model.max_violation(&candidate) > T::feas_tol() * scale {
                    // rounding broke a row; keep the LP point itself
                    candidate = values.to_vec();
                }
                if incumbent.as_ref().is_none_or(|(inc, _)| cand_obj < *inc) {
                    incumbent = Some((cand_obj, candidate));
                }
            }
            Some((j, v)) => {
                let up_first = v >= half;
                let (first, second) = if up_first {
                    (T::one(), T::zero())
                } else {
                    (T::zero(), T::one())
                };
                let snap = Rc::new(tab.snapshot());
                let mut other = fixings.clone();
                other.push((j, second));
                seq += 1;
                open.push(OpenNode {
                    bound: obj,
                    seq,
                    fixings: other,
                    basis: snap,
                });
                let mut next = fixings;
                next.push((j, first));
                plunge = Some((next, obj));
            }
        }
    }

    let open_floor = open.iter().fold(pending_bound, |acc, n| acc.min(n.bound));
    match incumbent {
        Some((obj, values)) => {
            let (status, bound) = if hit_limit {
                (SolveStatus::Feasible, open_floor.min(pruned_floor).min(obj))
            } else {
                (SolveStatus::Optimal, pruned_floor.min(obj))
            };
            Ok(MilpSolution {
                status,
                values,
                objective: obj,
                bound,
                nodes,
                elapsed: started.elapsed(),
            })
        }
        None if hit_limit => Ok(MilpSolution::empty(
            SolveStatus::NoIncumbent,
            open_floor,
            nodes,
            started,
        )),
        None => Ok(MilpSolution::empty(SolveStatus::Infeasible, T::infinity(), nodes, started)),
    }
}
