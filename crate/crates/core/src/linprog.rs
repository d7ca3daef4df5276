//! Dense two-phase primal simplex for box-bounded linear programs.
//!
//! Problems have the form
//!
//! ```text
//! maximize cᵀx  subject to  A_eq x = b_eq,  A_ub x ≤ b_ub,  lo ≤ x ≤ hi
//! ```
//!
//! with finite bounds. Variables are shifted to a zero lower bound and handled
//! with the bounded-variable ratio test, so box constraints never become rows.
//! Inequality rows get slacks; equality rows and rows with a negative
//! right-hand side get phase-one artificials. Entering variables are chosen by
//! largest reduced cost, falling back to Bland's rule after a run of
//! degenerate pivots.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<(Vec<f64>, f64)>,
    pub ub_rows: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `[0, 1]` boxes with no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_rows: Vec::new(),
            ub_rows: Vec::new(),
            bounds: vec![(0.0, 1.0); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push((row, rhs));
        self
    }

    pub fn ub(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub_rows.push((row, rhs));
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, rhs) in &self.eq_rows {
            worst = worst.max((dot(row, x) - rhs).abs());
        }
        for (row, rhs) in &self.ub_rows {
            worst = worst.max(dot(row, x) - rhs);
        }
        for (&xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::Invalid(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (row, rhs) in self.eq_rows.iter().chain(&self.ub_rows) {
            if row.len() != n {
                return Err(Error::Invalid(format!(
                    "row of length {} for {n} variables",
                    row.len()
                )));
            }
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite row entry".into()));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Invalid(format!(
                    "bad bounds [{lo}, {hi}] on variable {j}"
                )));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite objective".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Bounded-variable tableau. Every variable has lower bound 0.
struct Tableau {
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    enterable: Vec<bool>,
    iterations: usize,
    limit: usize,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(self.row(i)) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let nc = self.ncols;
        let p = self.t[r * nc + q];
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f != 0.0 {
                for (v, pr) in self.t[i * nc..(i + 1) * nc].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.t[i * nc + q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for (dj, pr) in d.iter_mut().zip(&pivot_row) {
                *dj -= f * pr;
            }
            d[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// Maximizes `cost·z` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64]) -> Result<Outcome> {
        let mut d = self.reduced_costs(cost);
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        let degenerate_limit = 5 * (self.m + self.ncols);
        let mut degenerate_run = 0usize;

        loop {
            let bland = degenerate_run >= degenerate_limit;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if is_basic[j] || !self.enterable[j] || self.upper[j] == 0.0 {
                    continue;
                }
                let gain = if self.at_upper[j] { -d[j] } else { d[j] };
                if gain > COST_TOL {
                    if bland {
                        entering = Some((j, gain));
                        break;
                    }
                    if entering.map_or(true, |(_, g)| gain > g) {
                        entering = Some((j, gain));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(Outcome::Optimal);
            };
            if self.iterations >= self.limit {
                return Err(Error::IterationLimit(self.limit));
            }
            self.iterations += 1;

            let sigma = if self.at_upper[q] { -1.0 } else { 1.0 };
            let mut best: Option<(usize, bool)> = None;
            let mut best_limit = f64::INFINITY;
            let mut best_mag = 0.0;
            for i in 0..self.m {
                let rate = -sigma * self.t[i * self.ncols + q];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if rate < 0.0 {
                    (self.beta[i].max(0.0) / -rate, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let replace = match best {
                    None => true,
                    Some(_) if limit < best_limit - 1e-12 => true,
                    Some((li, _)) if limit <= best_limit + 1e-12 => {
                        if bland {
                            b < self.basis[li]
                        } else {
                            rate.abs() > best_mag
                        }
                    }
                    _ => false,
                };
                if replace {
                    best = Some((i, to_upper));
                    best_limit = best_limit.min(limit);
                    best_mag = rate.abs();
                }
            }
            let (theta, leave) = if self.upper[q] <= best_limit {
                (self.upper[q], None)
            } else {
                (best_limit, best)
            };
            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }
            if theta > 1e-12 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }

            for i in 0..self.m {
                let tiq = self.t[i * self.ncols + q];
                if tiq != 0.0 {
                    self.beta[i] -= sigma * theta * tiq;
                }
            }
            let entering_value = if self.at_upper[q] {
                self.upper[q] - theta
            } else {
                theta
            };
            match leave {
                None => {
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.at_upper[out] = to_upper;
                    is_basic[out] = false;
                    self.pivot(r, q, &mut d);
                    is_basic[q] = true;
                    self.at_upper[q] = false;
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility or unboundedness.
///
/// `tol` is the phase-one threshold: a program whose minimal total
/// artificial mass exceeds it is declared infeasible.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    lp.validate()?;
    let n = lp.num_vars();
    let lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();
    let width: Vec<f64> = lp.bounds.iter().map(|b| b.1 - b.0).collect();

    // Rows shifted to y = x − lo, then scaled up when their entries are tiny.
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, rhs, is_ub) in lp
        .eq_rows
        .iter()
        .map(|(r, b)| (r, b, false))
        .chain(lp.ub_rows.iter().map(|(r, b)| (r, b, true)))
    {
        let rhs = rhs - dot(row, &lo);
        let maxabs = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if maxabs > 0.0 {
            (1.0 / maxabs).max(1.0)
        } else {
            1.0
        };
        rows.push((row.iter().map(|v| v * scale).collect(), rhs * scale, is_ub));
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.2).count();
    let needs_art: Vec<bool> = rows.iter().map(|(_, rhs, ub)| !*ub || *rhs < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let ncols = n + n_slack + n_art;

    let mut t = vec![0.0; m * ncols];
    let mut beta = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut upper = width.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(n_slack + n_art));
    let mut slack = n;
    let mut art = n + n_slack;
    for (i, (row, rhs, is_ub)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * ncols + j] = sign * row[j];
        }
        beta[i] = sign * rhs;
        if *is_ub {
            t[i * ncols + slack] = sign;
            if !needs_art[i] {
                basis[i] = slack;
            }
            slack += 1;
        }
        if needs_art[i] {
            t[i * ncols + art] = 1.0;
            basis[i] = art;
            art += 1;
        }
    }
    let original = t.clone();
    let rhs0 = beta.clone();

    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta,
        basis,
        upper,
        at_upper: vec![false; ncols],
        enterable: vec![true; ncols],
        iterations: 0,
        limit: 50 * (m + ncols) + 10_000,
    };

    let first_art = n + n_slack;
    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        for c in &mut cost[first_art..] {
            *c = -1.0;
        }
        tab.optimize(&cost)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_art)
            .map(|i| tab.beta[i].max(0.0))
            .sum();
        if infeasibility > tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective: f64::NAN,
                iterations: tab.iterations,
            });
        }
        for j in first_art..ncols {
            tab.upper[j] = 0.0;
            tab.enterable[j] = false;
        }
    }

    let cmax = lp.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cscale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = lp.objective[j] * cscale;
    }
    if let Outcome::Unbounded = tab.optimize(&cost)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            values: Vec::new(),
            objective: f64::INFINITY,
            iterations: tab.iterations,
        });
    }

    let mut z: Vec<f64> = (0..ncols).map(|j| tab.nonbasic_value(j)).collect();
    for i in 0..m {
        z[tab.basis[i]] = tab.beta[i];
    }
    polish(&tab, &original, &rhs0, &mut z);

    let values: Vec<f64> = (0..n)
        .map(|j| (lo[j] + z[j]).clamp(lp.bounds[j].0, lp.bounds[j].1))
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.value(&values),
        values,
        iterations: tab.iterations,
    })
}

/// Recomputes basic values from the original columns to shed pivot round-off.
fn polish(tab: &Tableau, original: &[f64], rhs0: &[f64], z: &mut [f64]) {
    let m = tab.m;
    if m == 0 {
        return;
    }
    let nc = tab.ncols;
    let mut is_basic = vec![false; nc];
    for &b in &tab.basis {
        is_basic[b] = true;
    }
    let b = DMatrix::from_fn(m, m, |i, k| original[i * nc + tab.basis[k]]);
    let rhs = DVector::from_fn(m, |i, _| {
        let nonbasic: f64 = (0..nc)
            .filter(|&j| !is_basic[j] && z[j] != 0.0)
            .map(|j| original[i * nc + j] * z[j])
            .sum();
        rhs0[i] - nonbasic
    });
    let Some(xb) = b.lu().solve(&rhs) else {
        return;
    };
    // Keep the polished point only if it stays within the box it came from.
    let close = (0..m).all(|k| (xb[k] - tab.beta[k]).abs() <= 1e-6);
    if close && xb.iter().all(|v| v.is_finite()) {
        for k in 0..m {
            let j = tab.basis[k];
            z[j] = xb[k].clamp(0.0, tab.upper[j].max(0.0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        let s = solve(lp, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(lp.max_violation(&s.values) <= 1e-9, "{:?}", s);
        s
    }

    #[test]
    fn box_maximum() {
        let s = optimal(&LinearProgram::new(vec![1.0]));
        assert_eq!(s.values, [1.0]);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn two_variable_budget() {
        let lp = LinearProgram::new(vec![0.5, -0.5]).ub(vec![0.5, 0.5], 0.3);
        let s = optimal(&lp);
        assert!((s.values[0] - 0.6).abs() < 1e-12);
        assert!(s.values[1].abs() < 1e-12);
        assert!((s.objective - 0.3).abs() < 1e-12);
    }

    #[test]
    fn equality_outside_box_is_infeasible() {
        let lp = LinearProgram::new(vec![1.0]).eq(vec![1.0], 2.0);
        assert_eq!(
            solve(&lp, DEFAULT_TOL).unwrap().status,
            LpStatus::Infeasible
        );
    }

    #[test]
    fn shifted_bounds_and_negative_rhs() {
        // maximize x + y with x ∈ [-2, 3], y ∈ [1, 4], x + y ≤ 5, -x ≤ -1 (x ≥ 1)
        let lp = LinearProgram::new(vec![1.0, 2.0])
            .with_bounds(vec![(-2.0, 3.0), (1.0, 4.0)])
            .ub(vec![1.0, 1.0], 5.0)
            .ub(vec![-1.0, 0.0], -1.0);
        let s = optimal(&lp);
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!((s.values[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::new(vec![1.0, 1.0, 1.0])
            .eq(vec![1.0, -1.0, 0.0], 0.0)
            .eq(vec![2.0, -2.0, 0.0], 0.0)
            .eq(vec![0.0, 1.0, -1.0], 0.0)
            .ub(vec![1.0, 1.0, 1.0], 1.5);
        let s = optimal(&lp);
        for v in s.values {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn beale_cycling_example_terminates() {
        let lp = LinearProgram::new(vec![0.75, -20.0, 0.5, -6.0])
            .with_bounds(vec![(0.0, 10.0); 4])
            .ub(vec![0.25, -8.0, -1.0, 9.0], 0.0)
            .ub(vec![0.5, -12.0, -0.5, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = optimal(&lp);
        assert!((s.objective - 1.25).abs() < 1e-9);
    }

    #[test]
    fn tiny_coefficients_are_scaled() {
        let lp = LinearProgram::new(vec![1e-6, 2e-6])
            .eq(vec![1e-6, -1e-6], 0.0)
            .ub(vec![1e-3, 1e-3], 1e-3);
        let s = optimal(&lp);
        assert!((s.values[0] - 0.5).abs() < 1e-9);
        assert!((s.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let lp = LinearProgram::new(vec![1.0, 1.0]).ub(vec![1.0], 1.0);
        assert!(solve(&lp, DEFAULT_TOL).is_err());
        assert!(solve(&LinearProgram::new(vec![1.0]), 0.0).is_err());
    }
}
