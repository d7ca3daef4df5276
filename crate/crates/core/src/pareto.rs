//! Multiple-threshold policies, the diversity/graduation frontier, and
//! strong Pareto dominance.

use serde::{Deserialize, Serialize};

use crate::dist::{FiniteJointDistribution, UtilityTable};
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 200;

/// Per-group thresholds `t_a` with admission probability `c_a` at the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub thresholds: Vec<f64>,
    pub at_threshold: Vec<f64>,
}

impl ThresholdPolicy {
    /// `d_i = 1` above the group threshold, `c_a` at it, `0` below.
    pub fn policy(&self, dist: &FiniteJointDistribution, utility: &[f64]) -> Vec<f64> {
        (0..dist.len())
            .map(|i| {
                let a = dist.group(i);
                let (t, c) = (self.thresholds[a], self.at_threshold[a]);
                if utility[i] > t {
                    1.0
                } else if utility[i] == t {
                    c
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Maps per-group quantiles `q_a` to the threshold policy admitting exactly a
/// `q_a` fraction of each group, ranking by `utility.u`.
///
/// `t_a = inf{s : Pr(u(X) > s | A=a) < q_a}` and
/// `c_a = (q_a − Pr(u(X) > t_a | A=a)) / Pr(u(X) = t_a | A=a)`. For `q_a = 0`
/// the set is empty; the threshold is then the group maximum with `c_a = 0`.
pub fn threshold_policy(
    dist: &FiniteJointDistribution,
    utility: &UtilityTable,
    quantiles: &[f64],
) -> Result<ThresholdPolicy> {
    let k = dist.num_groups();
    if quantiles.len() != k {
        return Err(Error::Invalid(format!(
            "{} quantiles for {k} groups",
            quantiles.len()
        )));
    }
    let mut thresholds = Vec::with_capacity(k);
    let mut at_threshold = Vec::with_capacity(k);
    for (a, &q) in quantiles.iter().enumerate() {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile {q} outside [0, 1]")));
        }
        let levels = group_levels(dist, &utility.u, a)?;
        let pa: f64 = levels.iter().map(|l| l.1).sum();
        let mut above = 0.0;
        let mut t = levels[0].0;
        let mut at = levels[0].1;
        let mut c = 0.0;
        if q > 0.0 {
            for &(v, m) in &levels {
                if above / pa >= q {
                    break;
                }
                t = v;
                at = m;
                above += m;
            }
            let strictly_above = (above - at) / pa;
            c = ((q - strictly_above) / (at / pa)).clamp(0.0, 1.0);
        }
        thresholds.push(t);
        at_threshold.push(c);
    }
    Ok(ThresholdPolicy {
        thresholds,
        at_threshold,
    })
}

/// Distinct utility values of group `a`, descending, with their masses.
fn group_levels(dist: &FiniteJointDistribution, u: &[f64], a: usize) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = (0..dist.len())
        .filter(|&i| dist.group(i) == a)
        .map(|i| (u[i], dist.mass()[i]))
        .collect();
    if pts.iter().map(|p| p.1).sum::<f64>() <= 0.0 {
        return Err(Error::GroupMassZero(dist.group_values()[a].clone()));
    }
    pts.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (v, m) in pts {
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => levels.push((v, m)),
        }
    }
    Ok(levels)
}

/// `(diversity, graduation)` = `(Σ_{i∈target} p_i d_i, Σ_i p_i d_i r_i)`.
pub fn evaluate(dist: &FiniteJointDistribution, r: &[f64], d: &[f64]) -> (f64, f64) {
    let target = dist.target_group();
    let mut div = 0.0;
    let mut grad = 0.0;
    for i in 0..dist.len() {
        let w = dist.mass()[i] * d[i];
        if dist.group(i) == target {
            div += w;
        }
        grad += w * r[i];
    }
    (div, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    /// Share of the budget offered to the target group.
    pub share: f64,
    /// `q_a` per group index.
    pub quantiles: Vec<f64>,
    pub diversity: f64,
    pub graduation: f64,
    pub budget_used: f64,
    pub on_frontier: bool,
}

/// Sweeps standardized two-group threshold policies ranked by `r = E[Y(1)|X]`.
///
/// Share `s` gives `q_target = min(1, s·b/Pr(A=target))` and
/// `q_other = min(1, (1−s)·b/Pr(A=other))`. Shares are `k/m` for `k = 0..=m`
/// together with every share at which either group's admitted mass reaches
/// a cumulative utility level, so the sweep contains the exact maximizers of
/// every nonnegative mix of the two coordinates.
pub fn frontier(
    dist: &FiniteJointDistribution,
    b: f64,
    resolution: usize,
) -> Result<Vec<FrontierPoint>> {
    if dist.num_groups() != 2 {
        return Err(Error::MultiGroupUnsupported(dist.num_groups()));
    }
    if resolution < 2 {
        return Err(Error::Invalid(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::Domain(format!("budget must lie in (0, 1], got {b}")));
    }
    let ut = dist.utility_table(0.0)?;
    let target = dist.target_group();
    let other = 1 - target;
    let p_t = dist.group_mass(target);
    let p_o = dist.group_mass(other);
    for (g, p) in [(target, p_t), (other, p_o)] {
        if !(p > 0.0) {
            return Err(Error::GroupMassZero(dist.group_values()[g].clone()));
        }
    }

    let mut shares: Vec<f64> = (0..=resolution)
        .map(|k| k as f64 / resolution as f64)
        .collect();
    let mut cum = 0.0;
    for (_, m) in group_levels(dist, &ut.r, target)? {
        cum += m;
        shares.push(cum / b);
    }
    cum = 0.0;
    for (_, m) in group_levels(dist, &ut.r, other)? {
        cum += m;
        shares.push(1.0 - cum / b);
    }
    shares.retain(|s| (0.0..=1.0).contains(s));
    shares.sort_by(f64::total_cmp);
    shares.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);

    let mut points = Vec::with_capacity(shares.len());
    for s in shares {
        let mut q = vec![0.0; 2];
        q[target] = (s * b / p_t).min(1.0);
        q[other] = ((1.0 - s) * b / p_o).min(1.0);
        let tp = threshold_policy(dist, &ut, &q)?;
        let d = tp.policy(dist, &ut.r);
        let (diversity, graduation) = evaluate(dist, &ut.r, &d);
        let budget_used = d.iter().zip(dist.mass()).map(|(x, p)| x * p).sum();
        points.push(FrontierPoint {
            share: s,
            quantiles: q,
            diversity,
            graduation,
            budget_used,
            on_frontier: false,
        });
    }

    let best = max_graduation_index(&points);
    let div_star = points[best].diversity;
    for p in &mut points {
        p.on_frontier = p.diversity >= div_star;
    }
    Ok(points)
}

/// Index of the sweep point with the highest graduation, preferring higher
/// diversity among ties.
pub fn max_graduation_index(points: &[FrontierPoint]) -> usize {
    let top = points
        .iter()
        .map(|p| p.graduation)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    let mut best_div = f64::NEG_INFINITY;
    for (k, p) in points.iter().enumerate() {
        if p.graduation >= top - 1e-12 && p.diversity > best_div {
            best = k;
            best_div = p.diversity;
        }
    }
    best
}

/// Largest value of `graduation + λ·diversity` over the sweep.
pub fn max_weighted(points: &[FrontierPoint], lambda: f64) -> f64 {
    points
        .iter()
        .map(|p| p.graduation + lambda * p.diversity)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceGap {
    pub diversity_gain: f64,
    pub graduation_gain: f64,
    /// Share of the dominating sweep point.
    pub share: f64,
    pub diversity: f64,
    pub graduation: f64,
}

/// Searches the frontier sweep for a policy strictly better in both
/// coordinates, returning the one whose smaller improvement is largest.
pub fn dominance_gap(
    policy: &[f64],
    dist: &FiniteJointDistribution,
    b: f64,
    resolution: usize,
) -> Result<Option<DominanceGap>> {
    if policy.len() != dist.len() {
        return Err(Error::Invalid(format!(
            "policy has {} entries for {} support points",
            policy.len(),
            dist.len()
        )));
    }
    let r = dist.utility_table(0.0)?.r;
    let (div, grad) = evaluate(dist, &r, policy);
    let points = frontier(dist, b, resolution)?;
    let mut best: Option<DominanceGap> = None;
    for p in &points {
        let (dd, dg) = (p.diversity - div, p.graduation - grad);
        if dd > 1e-12 && dg > 1e-12 {
            let score = dd.min(dg);
            if best
                .as_ref()
                .map_or(true, |g| score > g.diversity_gain.min(g.graduation_gain))
            {
                best = Some(DominanceGap {
                    diversity_gain: dd,
                    graduation_gain: dg,
                    share: p.share,
                    diversity: p.diversity,
                    graduation: p.graduation,
                });
            }
        }
    }
    Ok(best)
}
