//! Beta conditional tail means `E[Z | Z < t]` and the tail-mean ordering
//! behind the predictive-parity impossibility for beta-distributed outcome
//! probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "need alpha, beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// `α = μv`, `β = (1 − μ)v`.
    pub fn from_mean_size(mu: f64, v: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain(format!("mean must lie in (0, 1), got {mu}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("size must be positive, got {v}")));
        }
        Self::new(mu * v, (1.0 - mu) * v)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn size(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Both shape parameters exceed one, so the density is smooth and
    /// vanishes at both ends.
    pub fn is_regular(&self) -> bool {
        self.alpha > 1.0 && self.beta > 1.0
    }

    pub fn mode(&self) -> Option<f64> {
        self.is_regular()
            .then(|| (self.alpha - 1.0) / (self.alpha + self.beta - 2.0))
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on `[a, b]`: `(integral, error estimate)`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod over the given breakpoints.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    let mut pieces: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..4000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (k, _) =
            pieces.iter().enumerate().fold(
                (0, -1.0),
                |best, (k, p)| if p.3 > best.1 { (k, p.3) } else { best },
            );
        let (a, b, _, _) = pieces[k];
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        pieces[k] = (a, m, v1, e1);
        pieces.push((m, b, v2, e2));
    }
    pieces.iter().map(|p| p.2).sum()
}

/// `∫₀ᵗ x^{α−1+k} (1−x)^{β−1} dx`.
pub fn lower_moment(t: f64, params: BetaParams, k: u32) -> Result<f64> {
    check_t(t)?;
    let (a, b) = (params.alpha - 1.0 + k as f64, params.beta - 1.0);
    let f = move |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        (a * x.ln() + b * (-x).ln_1p()).exp()
    };
    let mut breaks = vec![0.0];
    if let Some(m) = params.mode() {
        if m > 0.0 && m < t {
            breaks.push(m);
        }
    }
    breaks.push(t);
    Ok(integrate(f, &breaks, 1e-300, 1e-13))
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("t must lie in (0, 1], got {t}")));
    }
    Ok(())
}

/// `E[Z | Z < t]` for `Z ~ Beta(α, β)`.
pub fn conditional_tail_mean(t: f64, params: BetaParams) -> Result<f64> {
    let num = lower_moment(t, params, 1)?;
    let den = lower_moment(t, params, 0)?;
    if !(den > 0.0) {
        return Err(Error::Domain(format!("no mass below t = {t}")));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailGap {
    pub t: f64,
    pub mean_a0: f64,
    pub mean_a1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop4Report {
    pub mu0: f64,
    pub mu1: f64,
    pub v: f64,
    pub params_a0: BetaParams,
    pub params_a1: BetaParams,
    pub gaps: Vec<TailGap>,
    pub min_gap: f64,
    /// Every gap is strictly positive.
    pub holds: bool,
}

/// Tail means of `Beta(μ₀v, (1−μ₀)v)` and `Beta(μ₁v, (1−μ₁)v)` at each `t`,
/// requiring `v > 2` and `1 > μ₀ > μ₁ > 1/v`.
pub fn prop4_check(mu0: f64, mu1: f64, v: f64, t_grid: &[f64]) -> Result<Prop4Report> {
    if !(v > 2.0) {
        return Err(Error::HypothesisViolation(format!("need v > 2, got {v}")));
    }
    if !(mu0 > mu1) {
        return Err(Error::HypothesisViolation(format!(
            "need mu0 > mu1, got {mu0} <= {mu1}"
        )));
    }
    if !(mu1 > 1.0 / v) {
        return Err(Error::HypothesisViolation(format!(
            "need mu1 > 1/v, got {mu1} <= {}",
            1.0 / v
        )));
    }
    if !(mu0 < 1.0) {
        return Err(Error::HypothesisViolation(format!(
            "need mu0 < 1, got {mu0}"
        )));
    }
    let p0 = BetaParams::from_mean_size(mu0, v)?;
    let p1 = BetaParams::from_mean_size(mu1, v)?;
    let gaps = t_grid
        .iter()
        .map(|&t| {
            let m0 = conditional_tail_mean(t, p0)?;
            let m1 = conditional_tail_mean(t, p1)?;
            Ok(TailGap {
                t,
                mean_a0: m0,
                mean_a1: m1,
                gap: m0 - m1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_gap = gaps.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    Ok(Prop4Report {
        mu0,
        mu1,
        v,
        params_a0: p0,
        params_a1: p1,
        holds: !gaps.is_empty() && min_gap > 0.0,
        gaps,
        min_gap,
    })
}
