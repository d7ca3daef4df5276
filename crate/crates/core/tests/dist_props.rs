mod common;

use std::collections::BTreeMap;

use causalfair::dist::*;
use causalfair::scm::*;
use common::*;
use proptest::prelude::*;

fn admissions_dist(n: usize, seed: u64) -> FiniteJointDistribution {
    let scm = admissions_scm(&BTreeMap::new()).unwrap();
    let pi = admissions_test_score_path(&scm).unwrap();
    simulate(&scm, &pi, n, seed, Binning::default()).unwrap()
}

#[test]
fn simulated_masses_are_consistent() {
    let d = admissions_dist(100_000, 0);
    let total: f64 = d.mass().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    for a in 0..2 {
        for i in 0..d.len() {
            let s: f64 = d.cf_row(a, i).unwrap().iter().map(|e| e.1).sum();
            assert!(
                (s - d.mass()[i]).abs() < 1e-12,
                "row ({a}, {i}) sums to {s}"
            );
        }
        let p = d.transition_matrix(a).unwrap();
        for i in 0..d.len() {
            assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
    assert!(d.consistency_error() < 1e-12);
}

#[test]
fn counterfactual_targets_lie_in_target_group() {
    let d = admissions_dist(20_000, 4);
    for a in 0..2 {
        for i in 0..d.len() {
            for &(j, _) in d.cf_row(a, i).unwrap() {
                assert_eq!(d.group(j), a);
            }
        }
    }
}

#[test]
fn own_group_transition_is_identity() {
    let d = admissions_dist(20_000, 8);
    for i in 0..d.len() {
        let row = d.cf_row(d.group(i), i).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].0, i);
    }
}

#[test]
fn group_masses_match_mu_a() {
    let d = admissions_dist(100_000, 1);
    assert!((d.group_mass(1) - 1.0 / 3.0).abs() < 0.01);
    assert!((d.group_mass(0) + d.group_mass(1) - 1.0).abs() < 1e-12);
}

#[test]
fn outcome_rate_rises_with_score() {
    // Pr(Y(1)=1 | T) is increasing in T through M; compare the bottom and
    // top deciles of the support within the larger group.
    let d = admissions_dist(100_000, 2);
    let r = d.utility_table(0.0).unwrap().r;
    let g0: Vec<usize> = (0..d.len()).filter(|&i| d.group(i) == 0).collect();
    let avg = |s: &[usize]| {
        let m: f64 = s.iter().map(|&i| d.mass()[i]).sum();
        s.iter().map(|&i| d.mass()[i] * r[i]).sum::<f64>() / m
    };
    let k = g0.len() / 10;
    assert!(avg(&g0[g0.len() - k..]) > avg(&g0[..k]) + 0.3);
}

#[test]
fn table_round_trip() {
    let d = admissions_dist(5_000, 3);
    let (rows, cf) = d.to_tables();
    let back = FiniteJointDistribution::from_table(&rows, Some(&cf)).unwrap();
    assert_eq!(back.support(), d.support());
    for i in 0..d.len() {
        assert!((back.mass()[i] - d.mass()[i]).abs() < 1e-12);
    }
    for a in 0..2 {
        let (p, q) = (
            d.transition_matrix(a).unwrap(),
            back.transition_matrix(a).unwrap(),
        );
        assert!((p - q).abs().max() < 1e-12);
    }
}

#[test]
fn rows_summing_to_two_normalize_to_halves() {
    let rows = vec![
        TableRow {
            group: "a0".into(),
            bin: 3,
            y0: 0.0,
            y1: 1.0,
            mass: 1.0,
        },
        TableRow {
            group: "a1".into(),
            bin: 3,
            y0: 0.0,
            y1: 1.0,
            mass: 1.0,
        },
    ];
    let d = FiniteJointDistribution::from_table(&rows, None).unwrap();
    assert_eq!(d.mass(), &[0.5, 0.5]);
}

#[test]
fn zero_total_mass_rejected() {
    let rows = vec![TableRow {
        group: "a0".into(),
        bin: 0,
        y0: 0.0,
        y1: 0.0,
        mass: 0.0,
    }];
    assert!(FiniteJointDistribution::from_table(&rows, None).is_err());
}

#[test]
fn binning_clips_and_floors() {
    let b = Binning::default();
    assert_eq!(b.bin(59.4), 59);
    assert_eq!(b.bin(-3.0), 0);
    assert_eq!(b.bin(250.0), b.bin(100.0));
    let w = Binning {
        width: 2.5,
        lo: 10.0,
        hi: 20.0,
    };
    assert_eq!(w.bin(14.9), 1);
}

proptest! {
    #[test]
    fn random_distributions_are_normalized(seed in any::<u64>()) {
        let d = random_dist(seed, true);
        prop_assert!((d.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.consistency_error() < 1e-12);
        for a in 0..2 {
            let p = d.transition_matrix(a).unwrap();
            for i in 0..d.len() {
                prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
                prop_assert!(p.row(i).iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn utilities_shift_only_the_target_group(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let d = random_dist(seed, false);
        let base = d.utility_table(0.0).unwrap();
        let t = d.utility_table(lambda).unwrap();
        for i in 0..d.len() {
            let bump = if d.group(i) == d.target_group() { lambda } else { 0.0 };
            prop_assert!((t.u[i] - base.u[i] - bump).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&t.r[i]));
        }
    }

    #[test]
    fn outcome_marginals_sum_to_point_mass(seed in any::<u64>()) {
        let d = random_dist(seed, false);
        let k = d.outcomes().len();
        for i in 0..d.len() {
            let y1: f64 = (0..k).map(|y| d.y1_mass(i, y)).sum();
            let y0: f64 = (0..k).map(|y| d.y0_mass(i, y)).sum();
            prop_assert!((y1 - d.mass()[i]).abs() < 1e-12);
            prop_assert!((y0 - d.mass()[i]).abs() < 1e-12);
        }
    }
}
