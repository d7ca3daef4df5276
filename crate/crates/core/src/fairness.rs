//! Fairness definitions compiled to linear rows over policy variables `d_i`,
//! and the constrained utility maximization built on them.
//!
//! Conditional-independence constraints `D ⫫ A | S` are emitted as
//!
//! ```text
//! Σ_i d_i · [Pr(X=x_i, A=a, S=s)·Pr(S=s) − Pr(X=x_i, S=s)·Pr(A=a, S=s)] = 0
//! ```
//!
//! i.e. the conditional form multiplied through by its denominators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{FiniteJointDistribution, UtilityTable};
use crate::error::{Error, Result};
use crate::linprog::{self, LinearProgram, LpSolution, LpStatus};

pub const DEFAULT_GRID_STEP: f64 = 0.01;
pub const CPP_FEASIBILITY_TOL: f64 = 1e-7;

/// Reduced covariates `W = ω(X)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Omega {
    Constant,
    Identity,
    /// Explicit stratum label per support point.
    Strata(Vec<usize>),
}

impl Omega {
    fn labels(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            Omega::Constant => Ok(vec![0; n]),
            Omega::Identity => Ok((0..n).collect()),
            Omega::Strata(s) if s.len() == n => Ok(s.clone()),
            Omega::Strata(s) => Err(Error::Invalid(format!(
                "omega has {} labels for {n} support points",
                s.len()
            ))),
        }
    }
}

/// Source of realized outcomes for equalized odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StatusQuo {
    /// `Y = Y(1)`.
    #[default]
    AlwaysTreat,
    /// `Y = Y(0)`.
    NeverTreat,
    /// `Y = Y(1)` with probability `d_i`, else `Y(0)`.
    Policy(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FairnessKind {
    None,
    /// Counterfactual predictive parity, searched over a simplex grid.
    Cpp {
        #[serde(default = "default_grid_step")]
        grid_step: f64,
    },
    /// Counterfactual equalized odds.
    Ceo,
    /// Conditional principal fairness.
    Cpf {
        #[serde(default = "constant_omega")]
        omega: Omega,
    },
    /// Counterfactual fairness. Expects a distribution whose counterfactuals
    /// propagate along every path.
    Cf,
    /// Path-specific fairness.
    Psf {
        #[serde(default = "identity_omega")]
        omega: Omega,
    },
    /// Equalized odds on realized outcomes.
    Eo {
        #[serde(default)]
        status_quo: StatusQuo,
    },
}

fn default_grid_step() -> f64 {
    DEFAULT_GRID_STEP
}

fn constant_omega() -> Omega {
    Omega::Constant
}

fn identity_omega() -> Omega {
    Omega::Identity
}

impl FairnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            FairnessKind::None => "none",
            FairnessKind::Cpp { .. } => "cpp",
            FairnessKind::Ceo => "ceo",
            FairnessKind::Cpf { .. } => "cpf",
            FairnessKind::Cf => "cf",
            FairnessKind::Psf { .. } => "psf",
            FairnessKind::Eo { .. } => "eo",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FairnessKind::Cpp { grid_step } = self {
            if !(*grid_step > 0.0 && *grid_step <= 1.0) {
                return Err(Error::Invalid(format!(
                    "grid_step must lie in (0, 1], got {grid_step}"
                )));
            }
        }
        Ok(())
    }
}

/// `coefs · d = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub label: String,
    pub coefs: Vec<f64>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn residual(&self, d: &[f64]) -> f64 {
        (self.coefs.iter().zip(d).map(|(c, x)| c * x).sum::<f64>() - self.rhs).abs()
    }

    pub fn is_vacuous(&self) -> bool {
        self.rhs == 0.0 && self.coefs.iter().all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub name: String,
    pub rows: Vec<LinearRow>,
    /// Conditioning cells with zero mass, for which no row is emitted.
    pub skipped: Vec<String>,
}

impl ConstraintSet {
    pub fn max_residual(&self, d: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.residual(d)).fold(0.0, f64::max)
    }

    pub fn report(&self, d: &[f64]) -> ResidualReport {
        ResidualReport {
            definition: self.name.clone(),
            rows: self.rows.len(),
            max_residual: self.max_residual(d),
            skipped_cells: self.skipped.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub definition: String,
    pub rows: usize,
    pub max_residual: f64,
    pub skipped_cells: Vec<String>,
}

/// Zeroes coefficients that are rounding residue of cancelling terms of
/// magnitude up to `scale`.
fn chop(coefs: &mut [f64], scale: f64) {
    let eps = 1e-13 * scale;
    for c in coefs {
        if c.abs() <= eps {
            *c = 0.0;
        }
    }
}

/// `Σ_i p_i d_i ≤ b`, returned as `(coefs, b)`.
pub fn budget_row(dist: &FiniteJointDistribution, b: f64) -> Result<(Vec<f64>, f64)> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("budget must lie in [0, 1], got {b}")));
    }
    Ok((dist.mass().to_vec(), b))
}

/// Rows for `D ⫫ A | S`, given `cell[s][i] = Pr(X = x_i, S = s)`.
fn independence_rows(
    dist: &FiniteJointDistribution,
    name: &str,
    cells: &[(String, Vec<f64>)],
) -> ConstraintSet {
    let n = dist.len();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (label, m) in cells {
        let ps: f64 = m.iter().sum();
        if !(ps > 0.0) {
            skipped.push(format!("{label}: Pr(S=s)=0"));
            continue;
        }
        for a in 0..dist.num_groups() {
            let pas: f64 = (0..n).filter(|&i| dist.group(i) == a).map(|i| m[i]).sum();
            let group = &dist.group_values()[a];
            if !(pas > 0.0) {
                skipped.push(format!("A={group}, {label}: Pr(A=a,S=s)=0"));
                continue;
            }
            let mut coefs: Vec<f64> = (0..n)
                .map(|i| {
                    let own = if dist.group(i) == a { m[i] } else { 0.0 };
                    own * ps - m[i] * pas
                })
                .collect();
            let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())) * ps;
            chop(&mut coefs, scale);
            rows.push(LinearRow {
                label: format!("A={group}, {label}"),
                coefs,
                rhs: 0.0,
            });
        }
    }
    ConstraintSet {
        name: name.into(),
        rows,
        skipped,
    }
}

fn y1_cells(dist: &FiniteJointDistribution) -> Vec<(String, Vec<f64>)> {
    (0..dist.outcomes().len())
        .map(|y| {
            (
                format!("Y(1)={}", dist.outcomes()[y]),
                (0..dist.len()).map(|i| dist.y1_mass(i, y)).collect(),
            )
        })
        .collect()
}

/// Counterfactual equalized odds: `D ⫫ A | Y(1)`.
pub fn ceo_rows(dist: &FiniteJointDistribution) -> ConstraintSet {
    independence_rows(dist, "ceo", &y1_cells(dist))
}

/// Conditional principal fairness: `D ⫫ A | Y(0), Y(1), W`.
pub fn cpf_rows(dist: &FiniteJointDistribution, omega: &Omega) -> Result<ConstraintSet> {
    let w = omega.labels(dist.len())?;
    let mut strata: Vec<usize> = w.clone();
    strata.sort_unstable();
    strata.dedup();
    let ys = dist.outcomes();
    let mut cells = Vec::new();
    for y0 in 0..ys.len() {
        for y1 in 0..ys.len() {
            for &s in &strata {
                let m: Vec<f64> = (0..dist.len())
                    .map(|i| {
                        if w[i] == s {
                            dist.outcome_mass(i, y0, y1)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                // Cells absent from the data carry no information; skip quietly.
                if m.iter().all(|&v| v == 0.0) {
                    continue;
                }
                cells.push((format!("Y(0)={}, Y(1)={}, W={s}", ys[y0], ys[y1]), m));
            }
        }
    }
    Ok(independence_rows(dist, "cpf", &cells))
}

/// Equalized odds on outcomes realized under `status_quo`: `D ⫫ A | Y`.
pub fn eo_rows(dist: &FiniteJointDistribution, status_quo: &StatusQuo) -> Result<ConstraintSet> {
    let n = dist.len();
    let treat: Vec<f64> = match status_quo {
        StatusQuo::AlwaysTreat => vec![1.0; n],
        StatusQuo::NeverTreat => vec![0.0; n],
        StatusQuo::Policy(d) if d.len() == n => d.clone(),
        StatusQuo::Policy(d) => {
            return Err(Error::Invalid(format!(
                "status-quo policy has {} entries for {n} support points",
                d.len()
            )))
        }
    };
    let cells: Vec<(String, Vec<f64>)> = (0..dist.outcomes().len())
        .map(|y| {
            let m = (0..n)
                .map(|i| {
                    let t = treat[i];
                    match t {
                        t if t == 1.0 => dist.y1_mass(i, y),
                        t if t == 0.0 => dist.y0_mass(i, y),
                        t => t * dist.y1_mass(i, y) + (1.0 - t) * dist.y0_mass(i, y),
                    }
                })
                .collect();
            (format!("Y={}", dist.outcomes()[y]), m)
        })
        .collect();
    Ok(independence_rows(dist, "eo", &cells))
}

/// Path-specific fairness, one row per `(a′, w)`:
/// `Σ_i d_i·[Pr(X=x_i, W=w) − Pr(X_{Π,A,a′}=x_i, W=w)] = 0`.
pub fn psf_rows(dist: &FiniteJointDistribution, omega: &Omega) -> Result<ConstraintSet> {
    psf_rows_named(dist, omega, "psf")
}

/// Counterfactual fairness: path-specific fairness with `W = X`, applied to a
/// distribution whose counterfactuals follow every path.
pub fn cf_rows(dist: &FiniteJointDistribution) -> Result<ConstraintSet> {
    psf_rows_named(dist, &Omega::Identity, "cf")
}

fn psf_rows_named(
    dist: &FiniteJointDistribution,
    omega: &Omega,
    name: &str,
) -> Result<ConstraintSet> {
    if !dist.has_counterfactuals() {
        return Err(Error::Invalid(
            "path-specific constraints need counterfactual masses".into(),
        ));
    }
    let n = dist.len();
    let w = omega.labels(n)?;
    let mut strata = w.clone();
    strata.sort_unstable();
    strata.dedup();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for a in 0..dist.num_groups() {
        for &s in &strata {
            let members: Vec<usize> = (0..n).filter(|&i| w[i] == s).collect();
            let pw: f64 = members.iter().map(|&i| dist.mass()[i]).sum();
            if !(pw > 0.0) {
                skipped.push(format!("A'={}, W={s}: Pr(W=w)=0", dist.group_values()[a]));
                continue;
            }
            let mut coefs = vec![0.0; n];
            for &i in &members {
                coefs[i] += dist.mass()[i];
                for &(j, m) in dist.cf_row(a, i).expect("checked above") {
                    coefs[j] -= m;
                }
            }
            let scale = members.iter().map(|&i| dist.mass()[i]).fold(0.0, f64::max);
            chop(&mut coefs, scale);
            rows.push(LinearRow {
                label: format!("A'={}, W={s}", dist.group_values()[a]),
                coefs,
                rhs: 0.0,
            });
        }
    }
    Ok(ConstraintSet {
        name: name.into(),
        rows,
        skipped,
    })
}

/// Counterfactual predictive parity at a fixed `C`: for each `(a, y)`,
/// `Σ_i (1 − d_i)·Pr(Y(1)=y, A=a, X=x_i) = C_y·Σ_i (1 − d_i)·Pr(A=a, X=x_i)`,
/// rearranged to `Σ_i d_i·[C_y·Pr(A=a, X=x_i) − Pr(Y(1)=y, A=a, X=x_i)]
/// = C_y·Pr(A=a) − Pr(Y(1)=y, A=a)`.
pub fn cpp_rows(dist: &FiniteJointDistribution, c: &[f64]) -> Result<ConstraintSet> {
    let k = dist.outcomes().len();
    if c.len() != k {
        return Err(Error::Invalid(format!(
            "C has {} entries for {k} outcomes",
            c.len()
        )));
    }
    if c.iter().any(|&v| v < 0.0) || (c.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("C = {c:?} is not in the simplex")));
    }
    let n = dist.len();
    let mut rows = Vec::new();
    for a in 0..dist.num_groups() {
        for (y, &cy) in c.iter().enumerate() {
            let mut coefs = vec![0.0; n];
            let mut pa = 0.0;
            let mut pay = 0.0;
            for i in (0..n).filter(|&i| dist.group(i) == a) {
                let q = dist.mass()[i];
                let m = dist.y1_mass(i, y);
                coefs[i] = cy * q - m;
                pa += q;
                pay += m;
            }
            let scale = dist.mass().iter().fold(0.0f64, |s, &v| s.max(v));
            chop(&mut coefs, scale);
            rows.push(LinearRow {
                label: format!("A={}, Y(1)={}", dist.group_values()[a], dist.outcomes()[y]),
                coefs,
                rhs: cy * pa - pay,
            });
        }
    }
    Ok(ConstraintSet {
        name: "cpp".into(),
        rows,
        skipped: Vec::new(),
    })
}

/// `Pr(Y(1) = y | D = 0)` under `d`, the natural `C` for auditing a given
/// policy against predictive parity. `None` when `d` admits everyone.
pub fn rejected_outcome_rates(
    dist: &FiniteJointDistribution,
    d: &[f64],
) -> Result<Option<Vec<f64>>> {
    if d.len() != dist.len() {
        return Err(Error::Invalid(format!(
            "policy has {} entries for {} support points",
            d.len(),
            dist.len()
        )));
    }
    let k = dist.outcomes().len();
    let mut num = vec![0.0; k];
    let mut den = 0.0;
    for i in 0..dist.len() {
        let w = 1.0 - d[i];
        den += w * dist.mass()[i];
        for (y, v) in num.iter_mut().enumerate() {
            *v += w * dist.y1_mass(i, y);
        }
    }
    if !(den > 1e-15) {
        return Ok(None);
    }
    let c: Vec<f64> = num.iter().map(|v| v / den).collect();
    let s: f64 = c.iter().sum();
    Ok(Some(c.iter().map(|v| v / s).collect()))
}

/// Lattice points of the `(k−1)`-simplex with denominator `round(1/step)`.
pub fn simplex_grid(k: usize, step: f64) -> Vec<Vec<f64>> {
    let n = (1.0 / step).round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut parts = vec![0usize; k];
    fn rec(pos: usize, left: usize, parts: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<f64>>) {
        let k = parts.len();
        if pos == k - 1 {
            parts[pos] = left;
            out.push(parts.iter().map(|&p| p as f64 / n as f64).collect());
            return;
        }
        for v in (0..=left).rev() {
            parts[pos] = v;
            rec(pos + 1, left - v, parts, n, out);
        }
    }
    if k == 0 {
        return out;
    }
    rec(0, n, &mut parts, n, &mut out);
    out
}

/// Maximizes `Σ_i d_i u_i p_i` subject to the budget and the given row sets.
pub fn solve_constrained(
    dist: &FiniteJointDistribution,
    utility: &UtilityTable,
    sets: &[&ConstraintSet],
    b: f64,
    tol: f64,
) -> Result<LpSolution> {
    let (budget, rhs) = budget_row(dist, b)?;
    let objective = utility
        .u
        .iter()
        .zip(dist.mass())
        .map(|(u, p)| u * p)
        .collect();
    let mut lp = LinearProgram::new(objective).ub(budget, rhs);
    for set in sets {
        for row in &set.rows {
            if !row.is_vacuous() {
                lp = lp.eq(row.coefs.clone(), row.rhs);
            }
        }
    }
    linprog::solve(&lp, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FairStatus {
    Optimal,
    NoFeasiblePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairPolicyResult {
    pub definition: String,
    pub status: FairStatus,
    pub policy: Vec<f64>,
    pub objective: f64,
    pub budget_used: f64,
    pub residuals: Vec<ResidualReport>,
    /// The `C` at which the returned policy is optimal (predictive parity only).
    pub grid_point: Option<Vec<f64>>,
}

impl FairPolicyResult {
    fn infeasible(definition: &str) -> Self {
        Self {
            definition: definition.into(),
            status: FairStatus::NoFeasiblePolicy,
            policy: Vec::new(),
            objective: f64::NAN,
            budget_used: f64::NAN,
            residuals: Vec::new(),
            grid_point: None,
        }
    }
}

/// Utility-maximizing policy under the budget `b` and the constraint `kind`,
/// with utilities `u_i = r_i + λ·1{group(x_i) = target}`.
pub fn solve_fair(
    dist: &FiniteJointDistribution,
    kind: &FairnessKind,
    lambda: f64,
    b: f64,
) -> Result<FairPolicyResult> {
    kind.validate()?;
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("budget must lie in (0, 1), got {b}")));
    }
    let utility = dist.utility_table(lambda)?;
    let name = kind.name();

    if let FairnessKind::Cpp { grid_step } = kind {
        let grid = simplex_grid(dist.outcomes().len(), *grid_step);
        let solved: Vec<(Vec<f64>, ConstraintSet, LpSolution)> = grid
            .into_par_iter()
            .map(|c| -> Result<_> {
                let set = cpp_rows(dist, &c)?;
                let sol = solve_constrained(dist, &utility, &[&set], b, CPP_FEASIBILITY_TOL)?;
                Ok((c, set, sol))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<&(Vec<f64>, ConstraintSet, LpSolution)> = None;
        for cand in solved.iter().filter(|s| s.2.status == LpStatus::Optimal) {
            let replace = match best {
                None => true,
                Some(cur) => {
                    let (o, p) = (cand.2.objective, cur.2.objective);
                    o > p + 1e-12 || (o >= p - 1e-12 && cand.0 < cur.0)
                }
            };
            if replace {
                best = Some(cand);
            }
        }
        return Ok(match best {
            None => FairPolicyResult::infeasible(name),
            Some((c, set, sol)) => finish(dist, name, sol, &[set], Some(c.clone())),
        });
    }

    let set = match kind {
        FairnessKind::None => None,
        FairnessKind::Ceo => Some(ceo_rows(dist)),
        FairnessKind::Cpf { omega } => Some(cpf_rows(dist, omega)?),
        FairnessKind::Cf => Some(cf_rows(dist)?),
        FairnessKind::Psf { omega } => Some(psf_rows(dist, omega)?),
        FairnessKind::Eo { status_quo } => Some(eo_rows(dist, status_quo)?),
        FairnessKind::Cpp { .. } => unreachable!(),
    };
    let sets: Vec<&ConstraintSet> = set.iter().collect();
    let sol = solve_constrained(dist, &utility, &sets, b, linprog::DEFAULT_TOL)?;
    Ok(match sol.status {
        LpStatus::Optimal => finish(dist, name, &sol, &sets, None),
        _ => FairPolicyResult::infeasible(name),
    })
}

fn finish(
    dist: &FiniteJointDistribution,
    name: &str,
    sol: &LpSolution,
    sets: &[&ConstraintSet],
    grid_point: Option<Vec<f64>>,
) -> FairPolicyResult {
    let d = sol.values.clone();
    let budget_used = d.iter().zip(dist.mass()).map(|(x, p)| x * p).sum();
    FairPolicyResult {
        definition: name.into(),
        status: FairStatus::Optimal,
        objective: sol.objective,
        budget_used,
        residuals: sets.iter().map(|s| s.report(&d)).collect(),
        policy: d,
        grid_point,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{PointMass, SupportPoint, TransitionMass};

    fn pt(group: usize, bin: i64) -> SupportPoint {
        SupportPoint {
            group,
            covariates: vec![bin],
        }
    }

    fn groups() -> Vec<String> {
        vec!["a0".into(), "a1".into()]
    }

    /// Four points, two per group, with distinct outcome rates.
    fn four_point() -> FiniteJointDistribution {
        let mut rows = Vec::new();
        for (g, bin, r, m) in [
            (0, 0, 0.2, 0.3),
            (0, 1, 0.7, 0.2),
            (1, 0, 0.4, 0.25),
            (1, 1, 0.9, 0.25),
        ] {
            rows.push(PointMass {
                point: pt(g, bin),
                y0: 0.0,
                y1: 1.0,
                mass: m * r,
            });
            rows.push(PointMass {
                point: pt(g, bin),
                y0: 0.0,
                y1: 0.0,
                mass: m * (1.0 - r),
            });
        }
        FiniteJointDistribution::from_points(groups(), &rows, None).unwrap()
    }

    #[test]
    fn budget_row_uniform() {
        let d = FiniteJointDistribution::from_points(
            groups(),
            &[
                PointMass {
                    point: pt(0, 0),
                    y0: 0.0,
                    y1: 1.0,
                    mass: 1.0,
                },
                PointMass {
                    point: pt(1, 0),
                    y0: 0.0,
                    y1: 1.0,
                    mass: 1.0,
                },
            ],
            None,
        )
        .unwrap();
        assert_eq!(budget_row(&d, 0.5).unwrap(), (vec![0.5, 0.5], 0.5));
    }

    #[test]
    fn ceo_row_count_and_rank() {
        let d = four_point();
        let set = ceo_rows(&d);
        assert_eq!(set.rows.len(), 4);
        // Within each outcome stratum the two group rows sum to zero.
        for y in 0..2 {
            let (r0, r1) = (&set.rows[2 * y], &set.rows[2 * y + 1]);
            for i in 0..4 {
                assert!((r0.coefs[i] + r1.coefs[i]).abs() < 1e-15);
            }
        }
        let c = vec![0.3; 4];
        assert!(set.max_residual(&c) < 1e-15);
    }

    #[test]
    fn ceo_hand_row() {
        // Stratum Y(1)=1: masses m = (0.06, 0.14, 0.10, 0.225), Pr(S)=0.525,
        // Pr(A=a0,S)=0.20. Row for a0: own·0.525 − m·0.20.
        let d = four_point();
        let set = ceo_rows(&d);
        let row = set.rows.iter().find(|r| r.label == "A=a0, Y(1)=1").unwrap();
        let m = [0.06, 0.14, 0.10, 0.225];
        let ps: f64 = m.iter().sum();
        let pa = 0.20;
        let expect = [
            m[0] * ps - m[0] * pa,
            m[1] * ps - m[1] * pa,
            -m[2] * pa,
            -m[3] * pa,
        ];
        for (a, b) in row.coefs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn psf_uniform_chain_row() {
        // x0 in a0 maps uniformly onto x1, x2 in a1 under A := a1.
        let rows: Vec<PointMass> = [pt(0, 0), pt(1, 1), pt(1, 2)]
            .into_iter()
            .map(|p| PointMass {
                point: p,
                y0: 0.0,
                y1: 1.0,
                mass: 1.0,
            })
            .collect();
        let ts = vec![
            TransitionMass {
                aprime: 1,
                from: pt(0, 0),
                to: pt(1, 1),
                mass: 0.5,
            },
            TransitionMass {
                aprime: 1,
                from: pt(0, 0),
                to: pt(1, 2),
                mass: 0.5,
            },
            TransitionMass {
                aprime: 0,
                from: pt(1, 1),
                to: pt(0, 0),
                mass: 1.0,
            },
            TransitionMass {
                aprime: 0,
                from: pt(1, 2),
                to: pt(0, 0),
                mass: 1.0,
            },
        ];
        let d = FiniteJointDistribution::from_points(groups(), &rows, Some(&ts)).unwrap();
        let set = psf_rows(&d, &Omega::Identity).unwrap();
        let row = set.rows.iter().find(|r| r.label == "A'=a1, W=0").unwrap();
        let third = 1.0 / 3.0;
        assert!((row.coefs[0] - third).abs() < 1e-15);
        assert!((row.coefs[1] + third / 2.0).abs() < 1e-15);
        assert!((row.coefs[2] + third / 2.0).abs() < 1e-15);
        // Rows for a point's own group are vacuous.
        assert!(set
            .rows
            .iter()
            .find(|r| r.label == "A'=a0, W=0")
            .unwrap()
            .is_vacuous());
    }

    #[test]
    fn cpf_identity_rows_are_vacuous() {
        let d = four_point();
        let set = cpf_rows(&d, &Omega::Identity).unwrap();
        assert!(!set.rows.is_empty());
        assert!(set
            .rows
            .iter()
            .all(|r| r.coefs.iter().all(|c| c.abs() < 1e-15)));
    }

    #[test]
    fn eo_always_treat_matches_ceo() {
        let d = four_point();
        let eo = eo_rows(&d, &StatusQuo::AlwaysTreat).unwrap();
        let ceo = ceo_rows(&d);
        for (a, b) in eo.rows.iter().zip(&ceo.rows) {
            assert_eq!(a.coefs, b.coefs);
        }
        let never = eo_rows(&d, &StatusQuo::NeverTreat).unwrap();
        // Y(0) ≡ 0 here, so only the Y=0 stratum exists.
        assert_eq!(never.rows.len(), 2);
    }

    #[test]
    fn cpp_binary_row_count() {
        let d = four_point();
        assert_eq!(cpp_rows(&d, &[0.4, 0.6]).unwrap().rows.len(), 4);
        assert!(cpp_rows(&d, &[0.4, 0.7]).is_err());
    }

    #[test]
    fn simplex_grid_sizes() {
        assert_eq!(simplex_grid(2, 0.01).len(), 101);
        assert_eq!(simplex_grid(3, 0.5).len(), 6);
        for c in simplex_grid(3, 0.25) {
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unconstrained_admits_best_points() {
        let d = four_point();
        let res = solve_fair(&d, &FairnessKind::None, 0.0, 0.5).unwrap();
        // Best r: x3 (0.9, mass .25) then x1 (0.7, mass .2), then x2 gets 0.05/0.25.
        let expect = [0.0, 1.0, 0.2, 1.0];
        for (a, b) in res.policy.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{:?}", res.policy);
        }
    }

    #[test]
    fn ceo_objective_at_least_constant_policy() {
        let d = four_point();
        let res = solve_fair(&d, &FairnessKind::Ceo, 0.25, 0.5).unwrap();
        let ut = d.utility_table(0.25).unwrap();
        let lower: f64 = 0.5 * ut.u.iter().zip(d.mass()).map(|(u, p)| u * p).sum::<f64>();
        assert!(res.objective >= lower - 1e-12);
        assert!(res.residuals[0].max_residual < 1e-9);
    }

    #[test]
    fn grid_step_validation() {
        let d = four_point();
        let bad = FairnessKind::Cpp { grid_step: 0.0 };
        assert!(solve_fair(&d, &bad, 0.0, 0.5).is_err());
        assert!(solve_fair(&d, &FairnessKind::None, 0.0, 1.0).is_err());
    }
}
