use causalfair::markov::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed blocks with dense positive rows, followed by transient states that
/// leak into every block with positive probability.
fn block_chain(seed: u64) -> (DMatrix<f64>, Vec<Vec<usize>>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
    let n_rec: usize = sizes.iter().sum();
    let n_tr = rng.gen_range(0..=3);
    let n = n_rec + n_tr;
    let mut p = DMatrix::zeros(n, n);
    let mut classes = Vec::new();
    let mut start = 0;
    for &s in &sizes {
        let members: Vec<usize> = (start..start + s).collect();
        for &i in &members {
            let w: Vec<f64> = (0..s).map(|_| rng.gen_range(0.1..1.0)).collect();
            let t: f64 = w.iter().sum();
            for (j, wj) in members.iter().zip(&w) {
                p[(i, *j)] = wj / t;
            }
        }
        classes.push(members);
        start += s;
    }
    for i in n_rec..n {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let t: f64 = w.iter().sum();
        for j in 0..n {
            p[(i, j)] = w[j] / t;
        }
    }
    (p, classes, n_tr)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn recovers_planted_classes(seed in any::<u64>()) {
        let (p, classes, n_tr) = block_chain(seed);
        let a = analyze(&[p], DEFAULT_EDGE_TOL).unwrap();
        let mut found = a.classes.clone();
        found.iter_mut().for_each(|c| c.sort());
        found.sort();
        prop_assert_eq!(found, classes);
        prop_assert_eq!(a.transient.len(), n_tr);
        for i in 0..a.absorption.nrows() {
            prop_assert!((a.absorption.row(i).sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_is_harmonic(seed in any::<u64>(), vals in prop::collection::vec(0.0f64..1.0, 3)) {
        let (p, _, _) = block_chain(seed);
        let a = analyze(&[p.clone()], DEFAULT_EDGE_TOL).unwrap();
        let d = a.reconstruct(&vals[..a.classes.len()]).unwrap();
        for i in 0..d.len() {
            let pd: f64 = (0..d.len()).map(|j| p[(i, j)] * d[j]).sum();
            prop_assert!((pd - d[i]).abs() < 1e-10);
        }
        let rep = check_pi_fair_structure(&d, &a).unwrap();
        prop_assert!(rep.max_class_deviation < 1e-12);
        prop_assert!(rep.reconstruction_deviation < 1e-10);
    }

    #[test]
    fn averaging_is_order_free(seed in any::<u64>()) {
        let (p, _, _) = block_chain(seed);
        let q = DMatrix::identity(p.nrows(), p.ncols());
        let a = analyze(&[p.clone(), q.clone()], DEFAULT_EDGE_TOL).unwrap();
        let b = analyze(&[q, p], DEFAULT_EDGE_TOL).unwrap();
        prop_assert_eq!(a.classes, b.classes);
        prop_assert_eq!(a.transient, b.transient);
    }
}

#[test]
fn absorbing_cycle_and_transient_state() {
    let p = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.2, 0.3, 0.1, 0.4,
        ],
    );
    let a = analyze(&[p], DEFAULT_EDGE_TOL).unwrap();
    assert_eq!(a.classes.len(), 2);
    assert_eq!(a.transient, vec![3]);
    let k0 = a.classes.iter().position(|c| c == &vec![0]).unwrap();
    assert!((a.absorption[(3, k0)] - 1.0 / 3.0).abs() < 1e-12);
    assert!((a.absorption[(3, 1 - k0)] - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn non_constant_class_is_reported() {
    let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
    let a = analyze(&[p], DEFAULT_EDGE_TOL).unwrap();
    let rep = check_pi_fair_structure(&[0.2, 0.6], &a).unwrap();
    assert!((rep.max_class_deviation - 0.2).abs() < 1e-12);
}
