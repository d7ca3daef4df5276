use causalfair::linprog::{solve, LinearProgram, LpStatus, DEFAULT_TOL};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Best objective over all vertices of the polytope, or `None` if it is empty.
/// Each vertex is the solution of `n` independent active constraints drawn
/// from equality rows (always active), inequality rows, and bound faces.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut faces: Vec<(Vec<f64>, f64)> = lp.ub_rows.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        faces.push((e.clone(), lp.bounds[j].0));
        faces.push((e, lp.bounds[j].1));
    }
    let need = n.checked_sub(lp.eq_rows.len())?;
    let mut best: Option<f64> = None;
    let mut pick = Vec::new();
    fn rec(
        start: usize,
        need: usize,
        faces: &[(Vec<f64>, f64)],
        pick: &mut Vec<usize>,
        lp: &LinearProgram,
        best: &mut Option<f64>,
    ) {
        if pick.len() == need {
            let n = lp.num_vars();
            let rows: Vec<&(Vec<f64>, f64)> = lp
                .eq_rows
                .iter()
                .chain(pick.iter().map(|&k| &faces[k]))
                .collect();
            let a = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
            let b = DVector::from_fn(n, |i, _| rows[i].1);
            if a.determinant().abs() < 1e-9 {
                return;
            }
            if let Some(x) = a.lu().solve(&b) {
                let x: Vec<f64> = x.iter().copied().collect();
                if lp.max_violation(&x) <= 1e-9 {
                    let v = lp.value(&x);
                    if best.map_or(true, |b| v > b) {
                        *best = Some(v);
                    }
                }
            }
            return;
        }
        for k in start..faces.len() {
            pick.push(k);
            rec(k + 1, need, faces, pick, lp, best);
            pick.pop();
        }
    }
    rec(0, need, &faces, &mut pick, lp, &mut best);
    best
}

fn coef() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), (-3i32..=3).prop_map(|k| k as f64), -2.0f64..2.0]
}

fn small_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(coef(), n),
                prop::collection::vec((prop::collection::vec(coef(), n), -1.0f64..2.0), 0..=2),
                prop::collection::vec((prop::collection::vec(coef(), n), -1.0f64..2.0), 0..=3),
                prop::collection::vec((-1.0f64..0.5, 0.0f64..1.5), n),
            )
        })
        .prop_map(|(c, eq, ub, bounds)| {
            let n = c.len();
            let mut lp = LinearProgram::new(c)
                .with_bounds(bounds.into_iter().map(|(lo, w)| (lo, lo + w)).collect());
            for (row, rhs) in eq.into_iter().take(n) {
                lp = lp.eq(row, rhs);
            }
            for (row, rhs) in ub {
                lp = lp.ub(row, rhs);
            }
            lp
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_vertex_enumeration(lp in small_lp()) {
        let sol = solve(&lp, DEFAULT_TOL).unwrap();
        match vertex_oracle(&lp) {
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!(lp.max_violation(&sol.values) <= 1e-7);
                prop_assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                    "solver {} vs oracle {}", sol.objective, best);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn reported_objective_is_value_of_point(lp in small_lp()) {
        let sol = solve(&lp, DEFAULT_TOL).unwrap();
        if sol.status == LpStatus::Optimal {
            prop_assert!((lp.value(&sol.values) - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()));
        }
    }

    #[test]
    fn objective_scaling_keeps_optimal_value_proportional(lp in small_lp(), k in 0.1f64..10.0) {
        let a = solve(&lp, DEFAULT_TOL).unwrap();
        let mut scaled = lp.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= k);
        let b = solve(&scaled, DEFAULT_TOL).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!((b.objective - k * a.objective).abs() <= 1e-7 * (1.0 + b.objective.abs()));
        }
    }
}

#[test]
fn degenerate_transportation_problem() {
    // 2x3 transportation with equal supplies and demands: many tied vertices.
    let cost = [4.0, 6.0, 9.0, 5.0, 3.0, 8.0];
    let mut lp =
        LinearProgram::new(cost.iter().map(|c| -c).collect()).with_bounds(vec![(0.0, 10.0); 6]);
    for i in 0..2 {
        let mut row = vec![0.0; 6];
        row[3 * i..3 * i + 3].iter_mut().for_each(|v| *v = 1.0);
        lp = lp.eq(row, 3.0);
    }
    for j in 0..3 {
        let mut row = vec![0.0; 6];
        row[j] = 1.0;
        row[3 + j] = 1.0;
        lp = lp.eq(row, 2.0);
    }
    let sol = solve(&lp, DEFAULT_TOL).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    // The last demand row is implied by the others; the oracle needs full rank.
    let mut reduced = lp.clone();
    reduced.eq_rows.pop();
    assert!((sol.objective - vertex_oracle(&reduced).unwrap()).abs() < 1e-9);
}
