//! Partition of the non-depot cities into `m` clusters by integer
//! programming; the depot is then added to every cluster.
//!
//! Two formulations are offered. [`ClusterFormulation::Median`] is a
//! p-median model (minimise the total city-to-median distance).
//! [`ClusterFormulation::Center`] is a p-center model (minimise the largest
//! city-to-median distance, with the total as a small secondary term).

use std::collections::BTreeSet;

use mtsp_milp::{solve, Limit, MilpModel, Relation, Scalar, SolveStatus, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DistanceMatrix;
use crate::instance::{Allocation, DEPOT};
use crate::routing::{limit_is_empty, Effort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterFormulation {
    Median,
    Center,
}

/// Weight of the total-distance term in the p-center objective.
const CENTER_TIEBREAK: f64 = 1e-3;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("cannot form {m} non-empty clusters from {k} cities")]
    Infeasible { m: usize, k: usize },
}

#[derive(Debug, Clone)]
pub struct ClusterSolve {
    /// Present when the solver found a partition.
    pub allocation: Option<Allocation>,
    pub status: SolveStatus,
    pub effort: Effort,
}

fn assemble(mut clusters: Vec<BTreeSet<usize>>) -> Allocation {
    clusters.sort_by_key(|c| c.iter().next().copied());
    for c in &mut clusters {
        c.insert(DEPOT);
    }
    Allocation::new(clusters)
}

/// Clusters cities `1..dist.len()` into `m` groups. Salesman `k` receives
/// the cluster with the `k`-th smallest lowest city index.
pub fn cluster<T: Scalar>(
    dist: &DistanceMatrix<T>,
    m: usize,
    formulation: ClusterFormulation,
    limit: Limit,
) -> Result<ClusterSolve, ClusterError> {
    let cities: Vec<usize> = (1..dist.len()).collect();
    let k = cities.len();
    if m == 0 || m > k {
        return Err(ClusterError::Infeasible { m, k });
    }
    if limit_is_empty(limit) {
        return Ok(ClusterSolve {
            allocation: None,
            status: SolveStatus::NoIncumbent,
            effort: Effort::default(),
        });
    }
    if m == 1 || m == k {
        let clusters = if m == 1 {
            vec![cities.iter().copied().collect()]
        } else {
            cities.iter().map(|&c| BTreeSet::from([c])).collect()
        };
        return Ok(ClusterSolve {
            allocation: Some(assemble(clusters)),
            status: SolveStatus::Optimal,
            effort: Effort::default(),
        });
    }

    let mut model = MilpModel::new();
    let y: Vec<VarId> = cities.iter().map(|c| model.add_binary(format!("median_{c}"))).collect();
    let x: Vec<Vec<VarId>> = cities
        .iter()
        .map(|i| cities.iter().map(|j| model.add_binary(format!("assign_{i}_{j}"))).collect())
        .collect();
    let weight = match formulation {
        ClusterFormulation::Median => T::one(),
        ClusterFormulation::Center => T::from_f64_lossy(CENTER_TIEBREAK),
    };
    for i in 0..k {
        for j in 0..k {
            model.set_objective(x[i][j], weight * dist.get(cities[i], cities[j]));
        }
    }
    for i in 0..k {
        let terms = x[i].iter().map(|&v| (v, T::one())).collect();
        model.add_constraint(format!("assign_{}", cities[i]), terms, Relation::Equal, T::one());
        for j in 0..k {
            if i == j {
                // an open median serves itself, so no cluster is empty
                model.add_constraint(
                    format!("self_{}", cities[j]),
                    vec![(x[j][j], T::one()), (y[j], -T::one())],
                    Relation::Equal,
                    T::zero(),
                );
            } else {
                model.add_constraint(
                    format!("open_{}_{}", cities[i], cities[j]),
                    vec![(x[i][j], T::one()), (y[j], -T::one())],
                    Relation::LessEq,
                    T::zero(),
                );
            }
        }
    }
    let m_t = T::from_usize(m).expect("cluster count fits the scalar");
    model.add_constraint("medians", y.iter().map(|&v| (v, T::one())).collect(), Relation::Equal, m_t);
    if formulation == ClusterFormulation::Center {
        let z = model.add_continuous("radius", T::zero(), T::infinity());
        model.set_objective(z, T::one());
        for i in 0..k {
            let mut terms: Vec<(VarId, T)> = (0..k).map(|j| (x[i][j], dist.get(cities[i], cities[j]))).collect();
            terms.push((z, -T::one()));
            model.add_constraint(format!("radius_{}", cities[i]), terms, Relation::LessEq, T::zero());
        }
    }

    let sol = solve(&model, limit).expect("well-formed clustering model");
    let effort = Effort {
        nodes: sol.nodes,
        elapsed: sol.elapsed,
        solver_calls: 1,
    };
    if !sol.status.has_solution() {
        return Ok(ClusterSolve {
            allocation: None,
            status: sol.status,
            effort,
        });
    }
    let half = T::from_f64_lossy(0.5);
    let mut groups: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for i in 0..k {
        let j = (0..k).find(|&j| sol.value(x[i][j]) > half).expect("every city is assigned");
        groups[j].insert(cities[i]);
    }
    let clusters: Vec<BTreeSet<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    debug_assert_eq!(clusters.len(), m);
    Ok(ClusterSolve {
        allocation: Some(assemble(clusters)),
        status: sol.status,
        effort,
    })
}
