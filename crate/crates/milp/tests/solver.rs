use mtsp_milp::{lp_relax_solve, solve, Limit, MilpModel, Model, Relation, SolveStatus, VarId};
use proptest::prelude::*;

/// Binary model `min c.x` with `<=`/`>=` rows, as plain data so the oracle
/// can enumerate it without touching the solver.
#[derive(Debug, Clone)]
struct BinaryProblem {
    cost: Vec<i32>,
    rows: Vec<(Vec<i32>, bool, i32)>,
}

impl BinaryProblem {
    fn model(&self) -> Model {
        let mut m = MilpModel::new();
        let xs: Vec<VarId> = (0..self.cost.len()).map(|i| m.add_binary(format!("x{i}"))).collect();
        for (&x, &c) in xs.iter().zip(&self.cost) {
            m.set_objective(x, c as f64);
        }
        for (k, (coefs, le, rhs)) in self.rows.iter().enumerate() {
            let terms = xs.iter().zip(coefs).map(|(&x, &a)| (x, a as f64)).collect();
            let rel = if *le { Relation::LessEq } else { Relation::GreaterEq };
            m.add_constraint(format!("r{k}"), terms, rel, *rhs as f64);
        }
        m
    }

    fn brute_force(&self) -> Option<i64> {
        let n = self.cost.len();
        (0u32..1 << n)
            .filter(|mask| {
                self.rows.iter().all(|(coefs, le, rhs)| {
                    let lhs: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| coefs[i] as i64).sum();
                    if *le { lhs <= *rhs as i64 } else { lhs >= *rhs as i64 }
                })
            })
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| self.cost[i] as i64).sum())
            .min()
    }
}

fn knapsack() -> (Vec<f64>, Vec<f64>, f64) {
    (vec![4.0, 2.0, 6.0, 7.0, 3.0], vec![12.0, 5.0, 14.0, 16.0, 7.0], 10.0)
}

fn knapsack_model(w: &[f64], v: &[f64], cap: f64) -> Model {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..w.len()).map(|i| m.add_binary(format!("take{i}"))).collect();
    for (i, &x) in xs.iter().enumerate() {
        m.set_objective(x, -v[i]);
    }
    m.add_constraint("capacity", xs.iter().zip(w).map(|(&x, &w)| (x, w)).collect(), Relation::LessEq, cap);
    m
}

#[test]
fn bound_tight_lp() {
    let mut m = Model::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY);
    m.set_objective(x, 1.0);
    m.add_constraint("floor", vec![(x, 1.0)], Relation::GreaterEq, 3.0);
    let s = solve(&m, Limit::Unlimited).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-9);
    let r = lp_relax_solve(&m).unwrap();
    assert!((r.objective - s.objective).abs() < 1e-12);
}

#[test]
fn knapsack_matches_enumeration_of_all_32_subsets() {
    let (w, v, cap) = knapsack();
    let mut best = 0.0f64;
    for mask in 0u32..32 {
        let (mut tw, mut tv) = (0.0, 0.0);
        for i in 0..5 {
            if mask >> i & 1 == 1 {
                tw += w[i];
                tv += v[i];
            }
        }
        if tw <= cap {
            best = best.max(tv);
        }
    }
    let m = knapsack_model(&w, &v, cap);
    let s = solve(&m, Limit::Unlimited).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((-s.objective - best).abs() < 1e-9, "solver {} oracle {best}", -s.objective);
    assert!((s.objective - s.bound).abs() <= 1e-6);
    assert!(m.max_violation(&s.values) <= 1e-6);

    let relaxed = lp_relax_solve(&m).unwrap();
    assert!(-relaxed.objective >= best - 1e-9);
}

#[test]
fn knapsack_in_single_precision() {
    let (w, v, cap) = knapsack();
    let mut m = MilpModel::<f32>::new();
    let xs: Vec<_> = (0..5).map(|i| m.add_binary(format!("x{i}"))).collect();
    for i in 0..5 {
        m.set_objective(xs[i], -(v[i] as f32));
    }
    m.add_constraint("cap", xs.iter().zip(&w).map(|(&x, &w)| (x, w as f32)).collect(), Relation::LessEq, cap as f32);
    let s = solve(&m, Limit::Unlimited).unwrap();
    let reference = solve(&knapsack_model(&w, &v, cap), Limit::Unlimited).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective as f64 - reference.objective).abs() < 1e-3);
    assert!((reference.objective + 26.0).abs() < 1e-9);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut m = Model::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY);
    m.add_constraint("lo", vec![(x, 1.0)], Relation::GreaterEq, 1.0);
    m.add_constraint("hi", vec![(x, 1.0)], Relation::LessEq, 0.0);
    assert_eq!(solve(&m, Limit::Unlimited).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(lp_relax_solve(&m).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn empty_objective_gives_zero() {
    let mut m = Model::new();
    let x = m.add_continuous("x", 0.0, 5.0);
    m.add_constraint("r", vec![(x, 1.0)], Relation::GreaterEq, 2.0);
    let s = lp_relax_solve(&m).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert_eq!(s.objective, 0.0);
    assert!(s.values[0] >= 2.0 - 1e-9);
}

#[test]
fn unbounded_is_reported() {
    let mut m = Model::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY);
    let b = m.add_binary("b");
    m.set_objective(x, -1.0);
    m.set_objective(b, 1.0);
    assert_eq!(solve(&m, Limit::Unlimited).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn zero_budget_is_a_model_error() {
    let (w, v, cap) = knapsack();
    let m = knapsack_model(&w, &v, cap);
    assert!(solve(&m, Limit::Nodes(0)).is_err());
}

#[test]
fn node_limit_yields_incumbent_or_nothing_and_is_deterministic() {
    let (w, v, cap) = knapsack();
    let m = knapsack_model(&w, &v, cap);
    let full = solve(&m, Limit::Unlimited).unwrap();
    for k in 1..=full.nodes {
        let a = solve(&m, Limit::Nodes(k)).unwrap();
        let b = solve(&m, Limit::Nodes(k)).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.values, b.values);
        assert!(a.nodes <= k);
        match a.status {
            SolveStatus::Feasible => {
                assert!(a.bound <= a.objective + 1e-9);
                assert!(a.objective >= full.objective - 1e-9);
            }
            SolveStatus::NoIncumbent => assert!(a.values.is_empty()),
            SolveStatus::Optimal => assert!((a.objective - full.objective).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }
}

fn binary_problem() -> impl Strategy<Value = BinaryProblem> {
    (2usize..=7).prop_flat_map(|n| {
        (
            proptest::collection::vec(-9i32..=9, n),
            proptest::collection::vec((proptest::collection::vec(-5i32..=6, n), any::<bool>(), -4i32..=10), 1..=4),
        )
            .prop_map(|(cost, rows)| BinaryProblem { cost, rows })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branch_and_bound_matches_enumeration(p in binary_problem()) {
        let m = p.model();
        let s = solve(&m, Limit::Unlimited).unwrap();
        match p.brute_force() {
            None => prop_assert_eq!(s.status, SolveStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, SolveStatus::Optimal);
                prop_assert!((s.objective - best as f64).abs() < 1e-6);
                prop_assert!(m.max_violation(&s.values) <= 1e-6);
                let relaxed = lp_relax_solve(&m).unwrap();
                prop_assert_eq!(relaxed.status, SolveStatus::Optimal);
                prop_assert!(relaxed.objective <= s.objective + 1e-6);
                let again = solve(&m, Limit::Unlimited).unwrap();
                prop_assert_eq!(again.objective, s.objective);
            }
        }
    }
}
