//! Finite joint distributions over covariates, potential outcomes and
//! path-specific counterfactual covariates.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::{draw_worlds, potential_outcomes, PathSet, Scm, WorldDraw};

const SUM_TOL: f64 = 1e-12;

/// One point `x_i` of the finite support. `group` is `α(x_i)`, an index into
/// the distribution's group symbol table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportPoint {
    pub group: usize,
    pub covariates: Vec<i64>,
}

/// Sparse counterfactual row: `(j, Pr(X = x_i, X_{Π,A,a′} = x_j))`, sorted by `j`.
pub type CfRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJointDistribution {
    group_values: Vec<String>,
    target_group: usize,
    support: Vec<SupportPoint>,
    mass: Vec<f64>,
    outcomes: Vec<f64>,
    /// Row `i` is a `k×k` table flattened as `y0_index * k + y1_index`.
    outcome_mass: Vec<Vec<f64>>,
    /// Indexed `[a′][i]`.
    cf_mass: Option<Vec<Vec<CfRow>>>,
}

/// Bins for covariates: `floor((clip(t, lo, hi) − lo) / width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub width: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            width: 1.0,
            lo: 0.0,
            hi: 100.0,
        }
    }
}

impl Binning {
    pub fn bin(&self, t: f64) -> i64 {
        ((t.clamp(self.lo, self.hi) - self.lo) / self.width).floor() as i64
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !(self.lo < self.hi) {
            return Err(Error::Invalid(format!(
                "binning needs width > 0 and lo < hi, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-point utilities `u_i = r_i + λ·1{group(x_i) = target}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
}

/// Input row for [`FiniteJointDistribution::from_points`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub point: SupportPoint,
    pub y0: f64,
    pub y1: f64,
    pub mass: f64,
}

/// Counterfactual input row: mass moving from `from` to `to` under `A := aprime`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMass {
    pub aprime: usize,
    pub from: SupportPoint,
    pub to: SupportPoint,
    pub mass: f64,
}

/// Row of the single-covariate explicit table format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub group: String,
    pub bin: i64,
    pub y0: f64,
    pub y1: f64,
    pub mass: f64,
}

/// Row of the companion counterfactual table format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfTableRow {
    pub aprime: String,
    pub i_group: String,
    pub i_bin: i64,
    pub j_group: String,
    pub j_bin: i64,
    pub mass: f64,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn position(values: &[f64], y: f64) -> usize {
    values
        .binary_search_by(|v| v.total_cmp(&y))
        .expect("outcome value present")
}

impl FiniteJointDistribution {
    /// Builds a distribution from point masses and optional counterfactual
    /// masses, normalizing by the total point mass and dropping zero-mass
    /// support points.
    ///
    /// Counterfactual masses use the same scale as point masses. When any are
    /// given, every `(a′, i)` row must be present and sum to the mass of
    /// `x_i`, except `a′ = group(x_i)`, which defaults to the identity.
    pub fn from_points(
        group_values: Vec<String>,
        rows: &[PointMass],
        transitions: Option<&[TransitionMass]>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let k_groups = group_values.len();
        if k_groups < 2 {
            return Err(Error::Invalid("need at least two group values".into()));
        }
        for (row, r) in rows.iter().enumerate() {
            if r.mass < 0.0 || r.mass.is_nan() {
                return Err(Error::NegativeMass { row, mass: r.mass });
            }
            if r.point.group >= k_groups {
                return Err(Error::Invalid(format!(
                    "group index {} out of range",
                    r.point.group
                )));
            }
        }
        let total: f64 = rows.iter().map(|r| r.mass).sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }

        let outcomes = sorted_unique(rows.iter().flat_map(|r| [r.y0, r.y1]).collect());
        let k = outcomes.len();
        let mut points: BTreeMap<&SupportPoint, Vec<f64>> = BTreeMap::new();
        for r in rows {
            let cell = points.entry(&r.point).or_insert_with(|| vec![0.0; k * k]);
            cell[position(&outcomes, r.y0) * k + position(&outcomes, r.y1)] += r.mass;
        }
        points.retain(|_, cell| cell.iter().sum::<f64>() > 0.0);

        let support: Vec<SupportPoint> = points.keys().map(|p| (*p).clone()).collect();
        let raw_mass: Vec<f64> = points.values().map(|c| c.iter().sum()).collect();
        let outcome_mass: Vec<Vec<f64>> = points
            .values()
            .map(|c| c.iter().map(|m| m / total).collect())
            .collect();
        let mass: Vec<f64> = outcome_mass.iter().map(|c| c.iter().sum()).collect();
        let index: BTreeMap<&SupportPoint, usize> =
            support.iter().enumerate().map(|(i, p)| (p, i)).collect();

        let cf_mass = match transitions {
            None => None,
            Some(ts) => {
                let mut acc: Vec<Vec<BTreeMap<usize, f64>>> =
                    vec![vec![BTreeMap::new(); support.len()]; k_groups];
                let mut given = vec![vec![false; support.len()]; k_groups];
                for (row, t) in ts.iter().enumerate() {
                    if t.mass < 0.0 || t.mass.is_nan() {
                        return Err(Error::NegativeMass { row, mass: t.mass });
                    }
                    if t.aprime >= k_groups {
                        return Err(Error::Invalid(format!("aprime {} out of range", t.aprime)));
                    }
                    if t.mass == 0.0 {
                        continue;
                    }
                    let i = *index.get(&t.from).ok_or_else(|| {
                        Error::Invalid(format!("counterfactual source {:?} not in support", t.from))
                    })?;
                    let j = *index.get(&t.to).ok_or_else(|| {
                        Error::Invalid(format!("counterfactual target {:?} not in support", t.to))
                    })?;
                    if t.to.group != t.aprime {
                        return Err(Error::Invalid(format!(
                            "counterfactual target {:?} is not in group {}",
                            t.to, t.aprime
                        )));
                    }
                    *acc[t.aprime][i].entry(j).or_insert(0.0) += t.mass;
                    given[t.aprime][i] = true;
                }
                let mut cf = Vec::with_capacity(k_groups);
                for a in 0..k_groups {
                    let mut rows_a = Vec::with_capacity(support.len());
                    for i in 0..support.len() {
                        if !given[a][i] {
                            if support[i].group == a {
                                rows_a.push(vec![(i, mass[i])]);
                                continue;
                            }
                            return Err(Error::Invalid(format!(
                                "no counterfactual row for {:?} under group {a}",
                                support[i]
                            )));
                        }
                        let s: f64 = acc[a][i].values().sum();
                        if (s - raw_mass[i]).abs() > 1e-9 * raw_mass[i].max(1.0) {
                            return Err(Error::Invalid(format!(
                                "counterfactual row for {:?} under group {a} sums to {s}, expected {}",
                                support[i], raw_mass[i]
                            )));
                        }
                        // Rescale so the row matches p_i to rounding.
                        let scale = mass[i] / s;
                        rows_a.push(acc[a][i].iter().map(|(&j, &m)| (j, m * scale)).collect());
                    }
                    cf.push(rows_a);
                }
                Some(cf)
            }
        };

        let dist = Self {
            target_group: 1,
            group_values,
            support,
            mass,
            outcomes,
            outcome_mass,
            cf_mass,
        };
        Ok(dist)
    }

    /// Builds a distribution from the single-covariate CSV-style tables.
    pub fn from_table(rows: &[TableRow], cf_rows: Option<&[CfTableRow]>) -> Result<Self> {
        let mut groups: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
        if let Some(cf) = cf_rows {
            for r in cf {
                groups.extend([r.aprime.clone(), r.i_group.clone(), r.j_group.clone()]);
            }
        }
        groups.sort();
        groups.dedup();
        let gi = |g: &str| groups.iter().position(|x| x == g).unwrap();
        let points: Vec<PointMass> = rows
            .iter()
            .map(|r| PointMass {
                point: SupportPoint {
                    group: gi(&r.group),
                    covariates: vec![r.bin],
                },
                y0: r.y0,
                y1: r.y1,
                mass: r.mass,
            })
            .collect();
        let transitions: Option<Vec<TransitionMass>> = cf_rows.map(|cf| {
            cf.iter()
                .map(|r| TransitionMass {
                    aprime: gi(&r.aprime),
                    from: SupportPoint {
                        group: gi(&r.i_group),
                        covariates: vec![r.i_bin],
                    },
                    to: SupportPoint {
                        group: gi(&r.j_group),
                        covariates: vec![r.j_bin],
                    },
                    mass: r.mass,
                })
                .collect()
        });
        if groups.len() < 2 {
            groups.push(if groups.first().map(String::as_str) == Some("a0") {
                "a1".into()
            } else {
                "a0".into()
            });
            groups.sort();
        }
        Self::from_points(groups, &points, transitions.as_deref())
    }

    /// Exports the masses in the single-covariate table formats.
    pub fn to_tables(&self) -> (Vec<TableRow>, Vec<CfTableRow>) {
        let k = self.outcomes.len();
        let bin = |i: usize| self.support[i].covariates.first().copied().unwrap_or(0);
        let mut rows = Vec::new();
        for (i, cell) in self.outcome_mass.iter().enumerate() {
            for (c, &m) in cell.iter().enumerate() {
                if m > 0.0 {
                    rows.push(TableRow {
                        group: self.group_values[self.support[i].group].clone(),
                        bin: bin(i),
                        y0: self.outcomes[c / k],
                        y1: self.outcomes[c % k],
                        mass: m,
                    });
                }
            }
        }
        let mut cf_rows = Vec::new();
        if let Some(cf) = &self.cf_mass {
            for (a, rows_a) in cf.iter().enumerate() {
                for (i, row) in rows_a.iter().enumerate() {
                    for &(j, m) in row {
                        cf_rows.push(CfTableRow {
                            aprime: self.group_values[a].clone(),
                            i_group: self.group_values[self.support[i].group].clone(),
                            i_bin: bin(i),
                            j_group: self.group_values[self.support[j].group].clone(),
                            j_bin: bin(j),
                            mass: m,
                        });
                    }
                }
            }
        }
        (rows, cf_rows)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn group_values(&self) -> &[String] {
        &self.group_values
    }

    pub fn num_groups(&self) -> usize {
        self.group_values.len()
    }

    /// Group whose admitted mass counts as diversity and which receives the
    /// `λ` bonus in [`FiniteJointDistribution::utility_table`].
    pub fn target_group(&self) -> usize {
        self.target_group
    }

    pub fn with_target_group(mut self, group: usize) -> Result<Self> {
        if group >= self.group_values.len() {
            return Err(Error::Invalid(format!("target group {group} out of range")));
        }
        self.target_group = group;
        Ok(self)
    }

    pub fn support(&self) -> &[SupportPoint] {
        &self.support
    }

    pub fn group(&self, i: usize) -> usize {
        self.support[i].group
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    /// `Pr(X = x_i, Y(0) = outcomes[y0], Y(1) = outcomes[y1])`.
    pub fn outcome_mass(&self, i: usize, y0: usize, y1: usize) -> f64 {
        self.outcome_mass[i][y0 * self.outcomes.len() + y1]
    }

    /// `Pr(X = x_i, Y(1) = outcomes[y])`.
    pub fn y1_mass(&self, i: usize, y: usize) -> f64 {
        (0..self.outcomes.len())
            .map(|y0| self.outcome_mass(i, y0, y))
            .sum()
    }

    /// `Pr(X = x_i, Y(0) = outcomes[y])`.
    pub fn y0_mass(&self, i: usize, y: usize) -> f64 {
        (0..self.outcomes.len())
            .map(|y1| self.outcome_mass(i, y, y1))
            .sum()
    }

    pub fn group_mass(&self, a: usize) -> f64 {
        (0..self.len())
            .filter(|&i| self.group(i) == a)
            .map(|i| self.mass[i])
            .sum()
    }

    pub fn has_counterfactuals(&self) -> bool {
        self.cf_mass.is_some()
    }

    /// Sparse row `Pr(X = x_i, X_{Π,A,a′} = x_j)` over `j`.
    pub fn cf_row(&self, aprime: usize, i: usize) -> Option<&CfRow> {
        self.cf_mass.as_ref().map(|cf| &cf[aprime][i])
    }

    /// `P_{a′}` with entries `Pr(X_{Π,A,a′} = x_j | X = x_i)`.
    pub fn transition_matrix(&self, aprime: usize) -> Result<DMatrix<f64>> {
        let cf = self
            .cf_mass
            .as_ref()
            .ok_or_else(|| Error::Invalid("distribution has no counterfactual masses".into()))?;
        if aprime >= self.num_groups() {
            return Err(Error::Invalid(format!("group {aprime} out of range")));
        }
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            if !(self.mass[i] > 0.0) {
                return Err(Error::ZeroRow(i));
            }
            for &(j, m) in &cf[aprime][i] {
                p[(i, j)] = m / self.mass[i];
            }
        }
        Ok(p)
    }

    /// `r_i = E[Y(1) | X = x_i]` and `u_i = r_i + λ·1{group(x_i) = target}`.
    pub fn utility_table(&self, lambda: f64) -> Result<UtilityTable> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        let k = self.outcomes.len();
        let mut r = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            if !(self.mass[i] > 0.0) {
                return Err(Error::ZeroRow(i));
            }
            let e: f64 = (0..k).map(|y| self.outcomes[y] * self.y1_mass(i, y)).sum();
            r.push(e / self.mass[i]);
        }
        let u = r
            .iter()
            .enumerate()
            .map(|(i, &ri)| {
                if self.group(i) == self.target_group {
                    ri + lambda
                } else {
                    ri
                }
            })
            .collect();
        Ok(UtilityTable { lambda, u, r })
    }

    /// Checks the marginal consistency invariants; returns the largest violation.
    pub fn consistency_error(&self) -> f64 {
        let mut worst = (self.mass.iter().sum::<f64>() - 1.0).abs();
        for i in 0..self.len() {
            let s: f64 = self.outcome_mass[i].iter().sum();
            worst = worst.max((s - self.mass[i]).abs());
        }
        if let Some(cf) = &self.cf_mass {
            for rows in cf {
                for (i, row) in rows.iter().enumerate() {
                    let s: f64 = row.iter().map(|(_, m)| m).sum();
                    worst = worst.max((s - self.mass[i]).abs());
                }
            }
        }
        worst
    }

    pub fn is_consistent(&self) -> bool {
        self.consistency_error() <= SUM_TOL
    }
}

/// Bins the covariates of each draw and tabulates empirical frequencies.
///
/// Covariates are the decision parents other than the group node, in the
/// order they are listed on the model. Every draw contributes its potential
/// outcomes and, for each counterfactual target it carries, one transition
/// from its factual point to its counterfactual point. A counterfactual point
/// never observed factually is replaced by the nearest observed point of the
/// same group (L1 distance over bins; ties go to the smaller point).
pub fn discretize(
    scm: &Scm,
    draws: &[WorldDraw],
    binning: Binning,
) -> Result<FiniteJointDistribution> {
    if draws.is_empty() {
        return Err(Error::EmptyInput);
    }
    binning.validate()?;
    let g = scm.group_node();
    let covs: Vec<usize> = scm
        .decision_parents()
        .iter()
        .copied()
        .filter(|&k| k != g)
        .collect();
    let point_of = |values: &[f64]| SupportPoint {
        group: values[g] as usize,
        covariates: covs.iter().map(|&k| binning.bin(values[k])).collect(),
    };

    // Unit counts; normalization happens once, in `from_points`.
    let factual: Vec<SupportPoint> = draws.iter().map(|d| point_of(&d.factual)).collect();
    let rows: Vec<PointMass> = draws
        .iter()
        .zip(&factual)
        .map(|(d, point)| {
            let (y0, y1) = potential_outcomes(scm, d);
            PointMass {
                point: point.clone(),
                y0,
                y1,
                mass: 1.0,
            }
        })
        .collect();

    let mut observed: Vec<&SupportPoint> = factual.iter().collect();
    observed.sort();
    observed.dedup();

    let nearest = |p: &SupportPoint| -> Result<SupportPoint> {
        if observed.binary_search(&p).is_ok() {
            return Ok(p.clone());
        }
        observed
            .iter()
            .filter(|q| q.group == p.group)
            .min_by_key(|q| {
                q.covariates
                    .iter()
                    .zip(&p.covariates)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<i64>()
            })
            .map(|q| (*q).clone())
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "no factual draws in group {} to receive counterfactuals",
                    p.group
                ))
            })
    };

    let has_cf = draws.iter().any(|d| !d.counterfactual.is_empty());
    let transitions = if has_cf {
        let mut ts = Vec::new();
        for (d, from) in draws.iter().zip(&factual) {
            for (a, values) in &d.counterfactual {
                let mut to = point_of(values);
                to.group = *a;
                ts.push(TransitionMass {
                    aprime: *a,
                    from: from.clone(),
                    to: nearest(&to)?,
                    mass: 1.0,
                });
            }
        }
        Some(ts)
    } else {
        None
    };

    FiniteJointDistribution::from_points(scm.group_values().to_vec(), &rows, transitions.as_deref())
}

/// Samples `n` worlds with counterfactuals toward every group and discretizes them.
pub fn simulate(
    scm: &Scm,
    pi: &PathSet,
    n: usize,
    seed: u64,
    binning: Binning,
) -> Result<FiniteJointDistribution> {
    let targets: Vec<usize> = (0..scm.group_values().len()).collect();
    let draws = draw_worlds(scm, pi, &targets, n, seed)?;
    discretize(scm, &draws, binning)
}
