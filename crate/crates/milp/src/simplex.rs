//! Dense bounded-variable simplex.
//!
//! Every row `i` gets a logical (slack) column `s_i` with `a_i.x + s_i = b_i`,
//! so the slack basis is always available as a starting point. The tableau
//! keeps `B^-1 [A | I]` explicitly together with the reduced-cost row. Primal
//! simplex (composite phase 1/phase 2) is used from scratch; dual simplex is
//! used after bound changes, where the previous basis stays dual feasible.

use crate::model::{MilpModel, Relation};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic variable held at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Basis header sufficient to rebuild a tableau.
#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

const BLAND_AFTER: usize = 40;

pub(crate) struct Tableau<T> {
    m: usize,
    n: usize,
    cols: usize,
    a_rows: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    t: Vec<T>,
    beta: Vec<T>,
    d: Vec<T>,
    cost: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    x: Vec<T>,
    basis: Vec<usize>,
    status: Vec<Status>,
    pub(crate) iterations: u64,
}

impl<T: Scalar> Tableau<T> {
    pub(crate) fn new(model: &MilpModel<T>) -> Self {
        let m = model.num_constraints();
        let n = model.num_vars();
        let cols = n + m;
        let mut a_rows = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(cols);
        let mut upper = Vec::with_capacity(cols);
        let mut cost = vec![T::zero(); cols];
        for (j, v) in model.vars().iter().enumerate() {
            lower.push(v.lower);
            upper.push(v.upper);
            cost[j] = model.objective().get(j).copied().unwrap_or_else(T::zero);
        }
        for c in model.constraints() {
            // merge duplicate references to the same variable
            let mut row: Vec<(usize, T)> = Vec::with_capacity(c.terms.len());
            for &(v, a) in &c.terms {
                match row.iter_mut().find(|(j, _)| *j == v.0) {
                    Some(e) => e.1 += a,
                    None => row.push((v.0, a)),
                }
            }
            row.retain(|&(_, a)| a != T::zero());
            a_rows.push(row);
            b.push(c.rhs);
            let (lo, hi) = match c.relation {
                Relation::LessEq => (T::zero(), T::infinity()),
                Relation::GreaterEq => (T::neg_infinity(), T::zero()),
                Relation::Equal => (T::zero(), T::zero()),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut tab = Self {
            m,
            n,
            cols,
            a_rows,
            b,
            t: vec![T::zero(); m * cols],
            beta: vec![T::zero(); m],
            d: vec![T::zero(); cols],
            cost,
            lower,
            upper,
            x: vec![T::zero(); cols],
            basis: (n..cols).collect(),
            status: vec![Status::AtLower; cols],
            iterations: 0,
        };
        tab.load_slack_basis();
        tab
    }

    pub(crate) fn num_structural(&self) -> usize {
        self.n
    }

    pub(crate) fn bounds(&self, j: usize) -> (T, T) {
        (self.lower[j], self.upper[j])
    }

    pub(crate) fn values(&self) -> &[T] {
        &self.x[..self.n]
    }

    pub(crate) fn objective(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, j| acc + self.cost[j] * self.x[j])
    }

    fn load_slack_basis(&mut self) {
        let cols = self.cols;
        self.t.iter_mut().for_each(|v| *v = T::zero());
        for (i, row) in self.a_rows.iter().enumerate() {
            for &(j, a) in row {
                self.t[i * cols + j] = a;
            }
            self.t[i * cols + self.n + i] = T::one();
        }
        self.beta.copy_from_slice(&self.b);
        self.d.copy_from_slice(&self.cost);
        for j in 0..self.n {
            if let Status::Basic(_) = self.status[j] {
                self.status[j] = Status::AtLower;
            }
        }
        for i in 0..self.m {
            self.basis[i] = self.n + i;
            self.status[self.n + i] = Status::Basic(i);
        }
    }

    fn default_status(&self, j: usize, prefer_upper: bool) -> Status {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if prefer_upper {
                    Status::AtUpper
                } else {
                    Status::AtLower
                }
            }
            (true, false) => Status::AtLower,
            (false, true) => Status::AtUpper,
            (false, false) => Status::Zero,
        }
    }

    fn nonbasic_value(&self, j: usize) -> T {
        match self.status[j] {
            Status::AtLower => self.lower[j],
            Status::AtUpper => self.upper[j],
            Status::Zero | Status::Basic(_) => T::zero(),
        }
    }

    /// Recomputes every variable value from the nonbasic statuses.
    fn recompute_primal(&mut self) {
        let cols = self.cols;
        for j in 0..cols {
            if !matches!(self.status[j], Status::Basic(_)) {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        for i in 0..self.m {
            let row = &self.t[i * cols..(i + 1) * cols];
            let mut v = self.beta[i];
            for j in 0..cols {
                let a = row[j];
                if a != T::zero() && !matches!(self.status[j], Status::Basic(_)) {
                    v -= a * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn recompute_duals(&mut self) {
        let cols = self.cols;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.t[i * cols..(i + 1) * cols];
            for (dj, &a) in self.d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let inv = T::one() / piv;
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        self.beta[r] *= inv;
        self.t[r * cols + q] = T::one();
        let nz: Vec<usize> = (0..cols)
            .filter(|&j| self.t[r * cols + j] != T::zero())
            .collect();
        let prow: Vec<T> = nz.iter().map(|&j| self.t[r * cols + j]).collect();
        let pbeta = self.beta[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + q];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for (&j, &a) in nz.iter().zip(&prow) {
                row[j] -= f * a;
            }
            row[q] = T::zero();
            self.beta[i] -= f * pbeta;
        }
        let f = self.d[q];
        if f != T::zero() {
            for (&j, &a) in nz.iter().zip(&prow) {
                self.d[j] -= f * a;
            }
            self.d[q] = T::zero();
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.status[q] = Status::Basic(r);
        if let Status::Basic(_) = self.status[leaving] {
            // caller overrides when it knows the bound the variable left at
            self.status[leaving] = Status::AtLower;
        }
        self.iterations += 1;
    }

    /// Changes the bounds of a column, keeping basic values consistent.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: T, hi: T) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if let Status::Basic(_) = self.status[j] {
            return;
        }
        let prefer_upper = self.status[j] == Status::AtUpper;
        self.status[j] = self.default_status(j, prefer_upper);
        let new = self.nonbasic_value(j);
        let delta = new - self.x[j];
        if delta != T::zero() {
            let cols = self.cols;
            for i in 0..self.m {
                let a = self.t[i * cols + j];
                if a != T::zero() {
                    let bv = self.basis[i];
                    self.x[bv] -= a * delta;
                }
            }
            self.x[j] = new;
        }
    }

    pub(crate) fn snapshot(&self) -> BasisSnapshot {
        let mut basic = self.basis.clone();
        basic.sort_unstable();
        BasisSnapshot {
            basic,
            at_upper: self.status.iter().map(|s| *s == Status::AtUpper).collect(),
        }
    }

    /// Pivots the columns of `snap` into the basis, replacing basic columns
    /// that `snap` does not want. Returns `false` if some wanted column has
    /// no usable pivot.
    fn pivot_towards(&mut self, snap: &BasisSnapshot) -> bool {
        let cols = self.cols;
        let mut wanted = vec![false; cols];
        for &j in &snap.basic {
            wanted[j] = true;
        }
        for &j in &snap.basic {
            if let Status::Basic(_) = self.status[j] {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.m {
                if wanted[self.basis[i]] {
                    continue;
                }
                let a = self.t[i * cols + j].abs();
                if a > T::pivot_tol() && best.is_none_or(|(_, b)| a > b) {
                    best = Some((i, a));
                }
            }
            match best {
                Some((i, _)) => self.pivot(i, j),
                None => return false,
            }
        }
        true
    }

    /// Rebuilds the tableau for `snap` under the current bounds by pivoting
    /// its columns into the slack basis. The slack tableau is sparse, so this
    /// is cheaper than pivoting from an arbitrary dense basis. Returns
    /// `false` when the stored basis is numerically singular, in which case
    /// the slack basis is left loaded.
    pub(crate) fn restore(&mut self, snap: &BasisSnapshot) -> bool {
        self.load_slack_basis();
        let ok = self.pivot_towards(snap);
        if !ok {
            self.load_slack_basis();
        }
        for j in 0..self.cols {
            if matches!(self.status[j], Status::Basic(_)) {
                continue;
            }
            let up = ok && snap.at_upper.get(j).copied().unwrap_or(false);
            self.status[j] = self.default_status(j, up);
        }
        self.recompute_primal();
        self.recompute_duals();
        ok
    }

    /// Loads the slack basis with nonbasic columns at the bound that makes
    /// their reduced cost dual feasible where possible.
    pub(crate) fn start_from_slack_basis(&mut self) -> bool {
        self.load_slack_basis();
        let mut dual_feasible = true;
        for j in 0..self.n {
            let up = self.cost[j] < T::zero();
            let st = self.default_status(j, up);
            dual_feasible &= match st {
                Status::AtLower => self.cost[j] >= T::zero() || self.lower[j] == self.upper[j],
                Status::AtUpper => self.cost[j] <= T::zero() || self.lower[j] == self.upper[j],
                Status::Zero => self.cost[j] == T::zero(),
                Status::Basic(_) => true,
            };
            self.status[j] = st;
        }
        self.recompute_primal();
        dual_feasible
    }

    /// Solves from the slack basis.
    pub(crate) fn solve_from_scratch(&mut self, max_iter: usize) -> LpOutcome {
        if self.start_from_slack_basis() {
            match self.dual(max_iter) {
                LpOutcome::Optimal | LpOutcome::IterationLimit => self.primal(max_iter),
                other => other,
            }
        } else {
            self.primal(max_iter)
        }
    }

    /// Reoptimises after bound changes: dual simplex, polished by primal.
    pub(crate) fn reoptimize(&mut self, max_iter: usize) -> LpOutcome {
        match self.dual(max_iter) {
            LpOutcome::Infeasible => LpOutcome::Infeasible,
            _ => self.primal(max_iter),
        }
    }

    fn violation(&self, j: usize) -> T {
        let tol = T::feas_tol();
        let v = self.x[j];
        if v < self.lower[j] - tol {
            self.lower[j] - v
        } else if v > self.upper[j] + tol {
            v - self.upper[j]
        } else {
            T::zero()
        }
    }

    fn phase_one_duals(&self) -> Option<Vec<T>> {
        let cols = self.cols;
        let tol = T::feas_tol();
        let mut d1 = vec![T::zero(); cols];
        let mut any = false;
        for i in 0..self.m {
            let bv = self.basis[i];
            let c = if self.x[bv] < self.lower[bv] - tol {
                -T::one()
            } else if self.x[bv] > self.upper[bv] + tol {
                T::one()
            } else {
                continue;
            };
            any = true;
            let row = &self.t[i * cols..(i + 1) * cols];
            for (dj, &a) in d1.iter_mut().zip(row) {
                *dj -= c * a;
            }
        }
        any.then_some(d1)
    }

    pub(crate) fn primal(&mut self, max_iter: usize) -> LpOutcome {
        let tol = T::feas_tol();
        let ptol = T::pivot_tol();
        let cols = self.cols;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let phase_one = self.phase_one_duals();
            let d: &[T] = phase_one.as_deref().unwrap_or(&self.d);
            let bland = degenerate > BLAND_AFTER;

            let mut entering: Option<(usize, T, T)> = None;
            for j in 0..cols {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let dj = d[j];
                let dir = match self.status[j] {
                    Status::Basic(_) => continue,
                    Status::AtLower if dj < -tol => T::one(),
                    Status::AtUpper if dj > tol => -T::one(),
                    Status::Zero if dj.abs() > tol => {
                        if dj < T::zero() {
                            T::one()
                        } else {
                            -T::one()
                        }
                    }
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, dj.abs()));
                    break;
                }
                if entering.is_none_or(|(_, _, s)| dj.abs() > s) {
                    entering = Some((j, dir, dj.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                return if phase_one.is_some() {
                    LpOutcome::Infeasible
                } else {
                    LpOutcome::Optimal
                };
            };

            // ratio test: None as the row means a bound flip of q
            let mut theta = T::infinity();
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = T::zero();
            if self.lower[q].is_finite() && self.upper[q].is_finite() {
                theta = self.upper[q] - self.lower[q];
            }
            for i in 0..self.m {
                let a = self.t[i * cols + q];
                if a.abs() <= ptol {
                    continue;
                }
                let rate = -dir * a;
                let bv = self.basis[i];
                let (x, lo, hi) = (self.x[bv], self.lower[bv], self.upper[bv]);
                let (lim, to_upper) = if rate > T::zero() {
                    if x < lo - tol {
                        ((lo - x) / rate, false)
                    } else if hi.is_finite() && x <= hi + tol {
                        ((hi - x).max(T::zero()) / rate, true)
                    } else {
                        continue;
                    }
                } else if x > hi + tol {
                    ((x - hi) / -rate, true)
                } else if lo.is_finite() && x >= lo - tol {
                    ((x - lo).max(T::zero()) / -rate, false)
                } else {
                    continue;
                };
                let eps = T::pivot_tol();
                let better = if lim < theta - eps {
                    true
                } else if lim <= theta + eps {
                    match leave {
                        None => false,
                        Some((r, _)) => {
                            if bland {
                                bv < self.basis[r]
                            } else {
                                a.abs() > leave_alpha
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                    leave_alpha = a.abs();
                }
            }
            if theta.is_infinite() {
                return if phase_one.is_some() {
                    LpOutcome::IterationLimit
                } else {
                    LpOutcome::Unbounded
                };
            }
            if theta <= tol * T::from_f64_lossy(1e-3) {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            if theta != T::zero() {
                for i in 0..self.m {
                    let a = self.t[i * cols + q];
                    if a != T::zero() {
                        let bv = self.basis[i];
                        self.x[bv] -= dir * a * theta;
                    }
                }
                self.x[q] += dir * theta;
            }
            match leave {
                None => {
                    self.status[q] = if dir > T::zero() {
                        self.x[q] = self.upper[q];
                        Status::AtUpper
                    } else {
                        self.x[q] = self.lower[q];
                        Status::AtLower
                    };
                    self.iterations += 1;
                }
                Some((r, to_upper)) => {
                    let bv = self.basis[r];
                    self.pivot(r, q);
                    if to_upper {
                        self.x[bv] = self.upper[bv];
                        self.status[bv] = Status::AtUpper;
                    } else {
                        self.x[bv] = self.lower[bv];
                        self.status[bv] = Status::AtLower;
                    }
                }
            }
        }
        LpOutcome::IterationLimit
    }

    pub(crate) fn dual(&mut self, max_iter: usize) -> LpOutcome {
        let cols = self.cols;
        let ptol = T::pivot_tol();
        for _ in 0..max_iter {
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let viol = self.violation(self.basis[i]);
                if viol > T::zero() && leave.is_none_or(|(_, v)| viol > v) {
                    leave = Some((i, viol));
                }
            }
            let Some((r, _)) = leave else {
                return LpOutcome::Optimal;
            };
            let bv = self.basis[r];
            let increase = self.x[bv] < self.lower[bv];
            let target = if increase { self.lower[bv] } else { self.upper[bv] };

            let mut entering: Option<(usize, T, T)> = None;
            for j in 0..cols {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.t[r * cols + j];
                if a.abs() <= ptol {
                    continue;
                }
                let eligible = match (self.status[j], increase) {
                    (Status::Basic(_), _) => false,
                    (Status::Zero, _) => true,
                    (Status::AtLower, true) => a < T::zero(),
                    (Status::AtUpper, true) => a > T::zero(),
                    (Status::AtLower, false) => a > T::zero(),
                    (Status::AtUpper, false) => a < T::zero(),
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, alpha)) => {
                        ratio < best - ptol || (ratio <= best + ptol && a.abs() > alpha)
                    }
                };
                if better {
                    entering = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, _, _)) = entering else {
                return LpOutcome::Infeasible;
            };
            let delta = (self.x[bv] - target) / self.t[r * cols + q];
            for i in 0..self.m {
                let a = self.t[i * cols + q];
                if a != T::zero() {
                    let b = self.basis[i];
                    self.x[b] -= a * delta;
                }
            }
            self.x[q] += delta;
            self.pivot(r, q);
            self.x[bv] = target;
            self.status[bv] = if increase {
                Status::AtLower
            } else {
                Status::AtUpper
            };
        }
        LpOutcome::IterationLimit
    }

    /// Throws away accumulated round-off by rebuilding the current basis.
    pub(crate) fn refresh(&mut self) -> bool {
        let snap = self.snapshot();
        self.restore(&snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MilpModel;

    fn lp(model: &MilpModel<f64>) -> (LpOutcome, f64, Vec<f64>) {
        let mut t = Tableau::new(model);
        let out = t.solve_from_scratch(10_000);
        (out, t.objective(), t.values().to_vec())
    }

    #[test]
    fn classic_two_variable_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        m.set_objective(x, -3.0);
        m.set_objective(y, -5.0);
        m.add_constraint("a", vec![(x, 1.0)], Relation::LessEq, 4.0);
        m.add_constraint("b", vec![(y, 2.0)], Relation::LessEq, 12.0);
        m.add_constraint("c", vec![(x, 3.0), (y, 2.0)], Relation::LessEq, 18.0);
        let (out, obj, v) = lp(&m);
        assert_eq!(out, LpOutcome::Optimal);
        assert!((obj + 36.0).abs() < 1e-9);
        assert!((v[0] - 2.0).abs() < 1e-9 && (v[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn phase_one_handles_equalities_and_ge_rows() {
        // min x + y s.t. x + y = 5, x - y >= 1, y >= 1
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 1.0, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.set_objective(y, 2.0);
        m.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Equal, 5.0);
        m.add_constraint("gap", vec![(x, 1.0), (y, -1.0)], Relation::GreaterEq, 1.0);
        let (out, obj, v) = lp(&m);
        assert_eq!(out, LpOutcome::Optimal);
        assert!((obj - 6.0).abs() < 1e-9, "obj {obj} at {v:?}");
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.set_objective(x, -1.0);
        assert_eq!(lp(&m).0, LpOutcome::Unbounded);

        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("lo", vec![(x, 1.0)], Relation::GreaterEq, 1.0);
        m.add_constraint("hi", vec![(x, 1.0)], Relation::LessEq, 0.0);
        assert_eq!(lp(&m).0, LpOutcome::Infeasible);
    }

    #[test]
    fn dual_reoptimisation_after_fixing_matches_cold_solve() {
        // fractional knapsack relaxation, then fix the fractional item to 0
        let w = [5.0, 4.0, 3.0, 2.0];
        let v = [10.0, 40.0, 30.0, 50.0];
        let mut m = MilpModel::new();
        let ids: Vec<_> = (0..4).map(|i| m.add_binary(format!("x{i}"))).collect();
        for i in 0..4 {
            m.set_objective(ids[i], -v[i]);
        }
        m.add_constraint("cap", ids.iter().zip(w).map(|(&i, w)| (i, w)).collect(), Relation::LessEq, 10.0);
        let mut t = Tableau::new(&m);
        assert_eq!(t.solve_from_scratch(1000), LpOutcome::Optimal);
        let frac = (0..4).find(|&j| t.values()[j] > 1e-9 && t.values()[j] < 1.0 - 1e-9).unwrap();
        t.set_bounds(frac, 0.0, 0.0);
        assert_eq!(t.reoptimize(1000), LpOutcome::Optimal);
        let warm = t.objective();

        let mut fixed = m.clone();
        fixed.set_bounds(ids[frac], 0.0, 0.0);
        let (_, cold, _) = lp(&fixed);
        assert!((warm - cold).abs() < 1e-9, "{warm} vs {cold}");

        let snap = t.snapshot();
        assert!(t.restore(&snap));
        assert!((t.objective() - warm).abs() < 1e-9);
    }
}
