#![allow(dead_code)]

use causalfair::dist::{FiniteJointDistribution, PointMass, SupportPoint, TransitionMass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn pt(group: usize, bin: i64) -> SupportPoint {
    SupportPoint {
        group,
        covariates: vec![bin],
    }
}

pub fn groups() -> Vec<String> {
    vec!["a0".into(), "a1".into()]
}

/// Two groups with one to four points each, binary potential outcomes, and
/// (optionally) random counterfactual transitions between the groups.
pub fn random_dist(seed: u64, with_cf: bool) -> FiniteJointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [rng.gen_range(1..=4i64), rng.gen_range(1..=4i64)];
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for (g, &k) in sizes.iter().enumerate() {
        for bin in 0..k {
            let mut total = 0.0;
            for y0 in [0.0, 1.0] {
                for y1 in [0.0, 1.0] {
                    let mass = if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.05..1.0)
                    };
                    total += mass;
                    rows.push(PointMass {
                        point: pt(g, bin),
                        y0,
                        y1,
                        mass,
                    });
                }
            }
            if total == 0.0 {
                rows.push(PointMass {
                    point: pt(g, bin),
                    y0: 0.0,
                    y1: 1.0,
                    mass: 0.5,
                });
                total = 0.5;
            }
            totals.push((g, bin, total));
        }
    }
    let transitions = with_cf.then(|| {
        let mut ts = Vec::new();
        for &(g, bin, total) in &totals {
            let other = 1 - g;
            let w: Vec<f64> = (0..sizes[other]).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            for (j, wj) in w.iter().enumerate() {
                ts.push(TransitionMass {
                    aprime: other,
                    from: pt(g, bin),
                    to: pt(other, j as i64),
                    mass: total * wj / s,
                });
            }
        }
        ts
    });
    FiniteJointDistribution::from_points(groups(), &rows, transitions.as_deref()).unwrap()
}

/// Point masses with `Pr(Y(1) = 1 | x) = r` and `Y(0) = 0`.
pub fn rate_rows(points: &[(usize, i64, f64, f64)]) -> Vec<PointMass> {
    let mut rows = Vec::new();
    for &(g, bin, r, m) in points {
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
    rows
}
