use causalfair::betafair::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

#[test]
fn lower_moments_match_monte_carlo() {
    // Normalized moments E[Z^k 1(Z < t)] against 10^6 draws, within 3 standard errors.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (alpha, beta) in [(6.0, 4.0), (4.0, 6.0), (2.5, 7.5), (1.5, 1.5)] {
        let params = BetaParams::new(alpha, beta).unwrap();
        let norm = lower_moment(1.0, params, 0).unwrap();
        let dist = Beta::new(alpha, beta).unwrap();
        let draws: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let n = draws.len() as f64;
        for t in [0.3, 0.5, 0.8, 1.0] {
            for k in 0..=1u32 {
                let vals: Vec<f64> = draws
                    .iter()
                    .map(|&z| if z < t { z.powi(k as i32) } else { 0.0 })
                    .collect();
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt().max(1e-12);
                let exact = lower_moment(t, params, k).unwrap() / norm;
                assert!(
                    (mean - exact).abs() <= 3.0 * se,
                    "Beta({alpha}, {beta}) t={t} k={k}: mc {mean} exact {exact} se {se}"
                );
            }
        }
    }
}

#[test]
fn uniform_tail_mean_is_half_t() {
    let u = BetaParams::new(1.0, 1.0).unwrap();
    for t in [0.1, 0.37, 0.9, 1.0] {
        assert!((conditional_tail_mean(t, u).unwrap() - t / 2.0).abs() < 1e-12);
    }
}

#[test]
fn hypotheses_are_enforced() {
    assert!(prop4_check(0.4, 0.6, 10.0, &[0.5]).is_err());
    assert!(prop4_check(0.6, 0.4, 2.0, &[0.5]).is_err());
    assert!(prop4_check(0.6, 0.05, 10.0, &[0.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_interval_gives_the_mean(alpha in 1.01f64..30.0, beta in 1.01f64..30.0) {
        let p = BetaParams::new(alpha, beta).unwrap();
        let mu = alpha / (alpha + beta);
        prop_assert!((conditional_tail_mean(1.0, p).unwrap() - mu).abs() < 1e-12);
    }

    #[test]
    fn higher_mean_has_higher_tail_mean(mu1 in 0.15f64..0.8, dm in 0.01f64..0.15, v in 10.0f64..40.0) {
        let mu0 = mu1 + dm;
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
        let rep = prop4_check(mu0, mu1, v, &grid).unwrap();
        prop_assert!(rep.holds, "min gap {}", rep.min_gap);
    }

    #[test]
    fn tail_mean_is_monotone_and_bounded(alpha in 1.1f64..20.0, beta in 1.1f64..20.0, t in 0.05f64..0.95) {
        let h = 0.05;
        let m = |a: f64, b: f64, t: f64| conditional_tail_mean(t, BetaParams::new(a, b).unwrap()).unwrap();
        let base = m(alpha, beta, t);
        prop_assert!(m(alpha + h, beta, t) > base);
        prop_assert!(m(alpha, beta + h, t) < base);
        prop_assert!(m(alpha, beta, t + h) > base);
        prop_assert!(base < t.min(alpha / (alpha + beta)));
    }
}
