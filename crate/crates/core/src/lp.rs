//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Problems are `min c·x` subject to linear rows and `x ≥ 0`. The sizes met
//! in practice (a few hundred rows and columns) make a dense tableau the
//! simplest robust choice.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-8;
/// Primal infeasibility tolerated by the ratio test in exchange for larger
/// pivots.
const HARRIS_DELTA: f64 = 1e-10;
/// Leaving candidates must carry at least this share of the largest
/// eligible pivot.
const PIVOT_SHARE: f64 = 1e-2;
/// Smallest entry accepted when pivoting a zero-level artificial out.
const DRIVE_OUT_EPS: f64 = 1e-7;
/// Largest constraint violation accepted in a returned solution.
const ACCEPT_EPS: f64 = 1e-7;
/// Consecutive degenerate pivots before pricing falls back to Bland's rule.
const BLAND_AFTER: usize = 50;
/// Pivots between refactorizations of the basis.
const REINVERT_EVERY: usize = 100;
pub const DEFAULT_MAX_ITERATIONS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row; `objective = Σ rhs·dual` at an optimum.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase one residual {0:.3e})")]
    Infeasible(f64),
    #[error("linear program is unbounded along column {0}")]
    Unbounded(usize),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("simplex lost accuracy: final point violates a constraint by {0:.3e}")]
    Numerical(f64),
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    /// Adds a row; repeated indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.n_vars));
        self.rows.push(Row { coeffs, relation, rhs });
        self.rows.len() - 1
    }

    pub fn row_value(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0_f64, |m, &v| m.max(-v));
        for (r, row) in self.rows.iter().enumerate() {
            let lhs = self.row_value(r, x);
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        self.solve_with_limit(DEFAULT_MAX_ITERATIONS)
    }

    pub fn solve_with_limit(&self, max_iterations: usize) -> Result<Solution, LpError> {
        Tableau::build(self).run(self, max_iterations)
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m × (width + 1)`, last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Column that formed the identity in each row at the start.
    unit_col: Vec<usize>,
    /// Factor each original row was multiplied by: `±1 / max|coeff|`, the
    /// sign making the rhs nonnegative.
    row_factor: Vec<f64>,
    first_artificial: usize,
    /// Copy of the initial tableau, for refactorizing the final basis.
    initial: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n = lp.n_vars;
        let mut factor = vec![1.0; m];
        let mut rel = Vec::with_capacity(m);
        for (r, row) in lp.rows.iter().enumerate() {
            let mut relation = row.relation;
            let scale = row.coeffs.iter().fold(0.0_f64, |a, &(_, v)| a.max(v.abs()));
            if scale > 0.0 {
                factor[r] = 1.0 / scale;
            }
            if row.rhs < 0.0 {
                factor[r] = -factor[r];
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rel.push(relation);
        }
        let n_slack = rel.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rel.iter().filter(|r| **r != Relation::Le).count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art;
        let stride = width + 1;
        let mut a = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let (mut s, mut art) = (n, first_artificial);
        for (r, row) in lp.rows.iter().enumerate() {
            let line = &mut a[r * stride..(r + 1) * stride];
            for &(j, v) in &row.coeffs {
                line[j] += factor[r] * v;
            }
            line[width] = factor[r] * row.rhs;
            match rel[r] {
                Relation::Le => {
                    line[s] = 1.0;
                    basis[r] = s;
                    unit_col[r] = s;
                    s += 1;
                }
                Relation::Ge => {
                    line[s] = -1.0;
                    s += 1;
                    line[art] = 1.0;
                    basis[r] = art;
                    unit_col[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    line[art] = 1.0;
                    basis[r] = art;
                    unit_col[r] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            m,
            width,
            initial: a.clone(),
            a,
            basis,
            unit_col,
            row_factor: factor,
            first_artificial,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.width + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let stride = self.width + 1;
        let p = self.at(pr, pc);
        for v in &mut self.a[pr * stride..(pr + 1) * stride] {
            *v /= p;
        }
        let prow: Vec<f64> = self.a[pr * stride..(pr + 1) * stride].to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                let line = &mut self.a[r * stride..(r + 1) * stride];
                for (v, &q) in line.iter_mut().zip(&prow) {
                    *v -= f * q;
                }
                line[pc] = 0.0;
                if line[self.width] < 0.0 && line[self.width] > -FEAS_EPS {
                    line[self.width] = 0.0;
                }
            }
        }
        let f = cost[pc];
        if f != 0.0 {
            for (v, &q) in cost.iter_mut().zip(&prow) {
                *v -= f * q;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Reduced-cost row (last entry is minus the objective value).
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        d.resize(self.width + 1, 0.0);
        for r in 0..self.m {
            let cb = c.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..=self.width {
                    d[j] -= cb * self.at(r, j);
                }
            }
        }
        d
    }

    /// Minimizes `c` over columns `< enterable` and returns the final
    /// reduced-cost row. Pricing is Dantzig's most negative reduced cost;
    /// after a run of degenerate pivots it switches to Bland's smallest-index
    /// rule, which cannot cycle, until the objective moves again.
    fn optimize(&mut self, c: &[f64], enterable: usize, budget: &mut usize) -> Result<Vec<f64>, LpError> {
        let mut cost = self.reduced_costs(c);
        let mut since_inversion = 0;
        let mut degenerate_run = 0;
        loop {
            if since_inversion == REINVERT_EVERY {
                if self.reinvert() {
                    cost = self.reduced_costs(c);
                }
                since_inversion = 0;
            }
            let bland = degenerate_run >= BLAND_AFTER;
            let entering = if bland {
                (0..enterable).find(|&j| cost[j] < -COST_EPS)
            } else {
                (0..enterable)
                    .filter(|&j| cost[j] < -COST_EPS)
                    .min_by(|&i, &j| cost[i].total_cmp(&cost[j]).then(i.cmp(&j)))
            };
            let Some(pc) = entering else {
                return Ok(cost);
            };
            // Harris two-pass ratio test: bound the step allowing a small
            // infeasibility, then choose among the rows within the bound.
            let mut bound = f64::INFINITY;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    bound = bound.min((self.rhs(r).max(0.0) + HARRIS_DELTA) / a);
                }
            }
            let eligible: Vec<(usize, f64)> = (0..self.m)
                .map(|r| (r, self.at(r, pc)))
                .filter(|&(r, a)| a > PIVOT_EPS && self.rhs(r).max(0.0) / a <= bound)
                .collect();
            let largest = eligible.iter().fold(0.0_f64, |m, &(_, a)| m.max(a));
            let best = if bland {
                eligible
                    .into_iter()
                    .filter(|&(_, a)| a >= PIVOT_SHARE * largest)
                    .min_by_key(|&(r, _)| self.basis[r])
            } else {
                eligible
                    .into_iter()
                    .max_by(|x, y| x.1.total_cmp(&y.1).then(self.basis[y.0].cmp(&self.basis[x.0])))
            };
            let Some((pr, _)) = best else {
                return Err(LpError::Unbounded(pc));
            };
            if *budget == 0 {
                return Err(LpError::IterationLimit(DEFAULT_MAX_ITERATIONS));
            }
            *budget -= 1;
            since_inversion += 1;
            let step = self.rhs(pr).max(0.0) / self.at(pr, pc);
            if step * -cost[pc] > COST_EPS {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            self.pivot(pr, pc, &mut cost);
        }
    }

    fn basis_matrix(&self) -> Vec<Vec<f64>> {
        let stride = self.width + 1;
        (0..self.m)
            .map(|r| self.basis.iter().map(|&j| self.initial[r * stride + j]).collect())
            .collect()
    }

    /// Rebuilds the tableau as `B⁻¹·[A | b]` from the initial data by
    /// Gauss-Jordan elimination. Returns `false` (tableau untouched) if `B` is
    /// numerically singular.
    fn reinvert(&mut self) -> bool {
        let (m, stride) = (self.m, self.width + 1);
        let mut b = self.basis_matrix();
        let mut t: Vec<Vec<f64>> = (0..m).map(|r| self.initial[r * stride..(r + 1) * stride].to_vec()).collect();
        for c in 0..m {
            let Some(p) = (c..m).max_by(|&i, &j| b[i][c].abs().total_cmp(&b[j][c].abs())) else {
                return false;
            };
            if b[p][c].abs() < 1e-11 {
                return false;
            }
            b.swap(c, p);
            t.swap(c, p);
            let inv = 1.0 / b[c][c];
            b[c].iter_mut().for_each(|v| *v *= inv);
            t[c].iter_mut().for_each(|v| *v *= inv);
            let (brow, trow) = (b[c].clone(), t[c].clone());
            for r in (0..m).filter(|&r| r != c) {
                let f = b[r][c];
                if f != 0.0 {
                    b[r].iter_mut().zip(&brow).for_each(|(v, &q)| *v -= f * q);
                    t[r].iter_mut().zip(&trow).for_each(|(v, &q)| *v -= f * q);
                }
            }
        }
        for (r, row) in t.into_iter().enumerate() {
            self.a[r * stride..(r + 1) * stride].copy_from_slice(&row);
            let basic = self.basis[r];
            for (rr, v) in (0..m).map(|rr| (rr, if rr == r { 1.0 } else { 0.0 })) {
                self.a[rr * stride + basic] = v;
            }
        }
        true
    }

    /// Re-solves `B x_B = b` and `Bᵀ y = c_B` from the initial data to shed
    /// the round-off accumulated by pivoting. `None` if `B` is numerically
    /// singular.
    fn refactor(&self, objective: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (m, stride) = (self.m, self.width + 1);
        let col = |r: usize, j: usize| self.initial[r * stride + j];
        let basis_matrix = self.basis_matrix();
        let transposed: Vec<Vec<f64>> = (0..m).map(|c| (0..m).map(|r| basis_matrix[r][c]).collect()).collect();
        let b: Vec<f64> = (0..m).map(|r| col(r, self.width)).collect();
        let cb: Vec<f64> = self.basis.iter().map(|&j| objective.get(j).copied().unwrap_or(0.0)).collect();
        Some((solve_dense(basis_matrix, b)?, solve_dense(transposed, cb)?))
    }

    fn run(mut self, lp: &LinearProgram, max_iterations: usize) -> Result<Solution, LpError> {
        let mut budget = max_iterations;
        let limit = |e: LpError| match e {
            LpError::IterationLimit(_) => LpError::IterationLimit(max_iterations),
            other => other,
        };
        if self.first_artificial < self.width {
            let mut phase1 = vec![0.0; self.width];
            for c in &mut phase1[self.first_artificial..] {
                *c = 1.0;
            }
            let mut cost = self.optimize(&phase1, self.width, &mut budget).map_err(limit)?;
            let residual = -cost[self.width];
            if residual > FEAS_EPS * (1.0 + self.m as f64) {
                return Err(LpError::Infeasible(residual));
            }
            // Drive zero-level artificials out where the row allows it.
            for r in 0..self.m {
                if self.basis[r] >= self.first_artificial {
                    let pc = (0..self.first_artificial)
                        .max_by(|&i, &j| self.at(r, i).abs().total_cmp(&self.at(r, j).abs()));
                    if let Some(pc) = pc.filter(|&j| self.at(r, j).abs() > DRIVE_OUT_EPS) {
                        self.pivot(r, pc, &mut cost);
                    }
                }
            }
        }
        self.reinvert();
        let cost = self.optimize(&lp.objective, self.first_artificial, &mut budget).map_err(limit)?;

        let (x_basic, duals) = self.refactor(&lp.objective).unwrap_or_else(|| {
            let x = (0..self.m).map(|r| self.rhs(r)).collect();
            let y = (0..self.m).map(|r| -cost[self.unit_col[r]]).collect();
            (x, y)
        });
        let mut x = vec![0.0; lp.n_vars];
        for r in 0..self.m {
            if self.basis[r] < lp.n_vars {
                x[self.basis[r]] = x_basic[r].max(0.0);
            }
        }
        let duals = (0..self.m).map(|r| self.row_factor[r] * duals[r]).collect();
        let violation = lp.max_violation(&x);
        if violation > ACCEPT_EPS {
            return Err(LpError::Numerical(violation));
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Solution {
            x,
            objective,
            duals,
            iterations: max_iterations - budget,
        })
    }
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-13 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        let pivot_row = a[c].clone();
        for r in c + 1..n {
            let f = a[r][c] / pivot_row[c];
            if f != 0.0 {
                for (v, &q) in a[r][c..].iter_mut().zip(&pivot_row[c..]) {
                    *v -= f * q;
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 -> (2, 6), 36.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -5.0);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        let dual_obj: f64 = lp.rows().iter().zip(&s.duals).map(|(r, y)| r.rhs * y).sum();
        assert!((dual_obj - s.objective).abs() < 1e-9);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + y s.t. x + y = 2, x - y ≤ -1 -> objective 2, x ≤ 0.5.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Le, -1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));

        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Unbounded(_))));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!(s.objective.abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_guard() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_row(vec![(1, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve_with_limit(1), Err(LpError::IterationLimit(1)));
    }
}
