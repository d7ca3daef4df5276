//! Class structure of the averaged counterfactual transition chain.
//!
//! With `P = (1/|A|)·Σ_{a′} P_{a′}`, a policy satisfying `P_{a′} d = d` for
//! every `a′` also satisfies `P d = d`, so it is constant on each recurrent
//! class of `P` and, on transient states, equals the absorption-weighted mix
//! of those constants.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis {
    pub p: DMatrix<f64>,
    /// Recurrent classes, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    /// `absorption[(i, k)]`: probability that the chain started at `i` is
    /// absorbed into class `k`.
    pub absorption: DMatrix<f64>,
    /// Max-norm residual of the absorption linear solve.
    pub solve_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub num_classes: usize,
    pub class_sizes: Vec<usize>,
    pub transient_count: usize,
}

impl ChainAnalysis {
    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            num_classes: self.classes.len(),
            class_sizes: self.classes.iter().map(Vec::len).collect(),
            transient_count: self.transient.len(),
        }
    }

    /// Extends per-class values to all states: `d_i = Σ_k absorption(i,k)·v_k`.
    pub fn reconstruct(&self, class_values: &[f64]) -> Result<Vec<f64>> {
        if class_values.len() != self.classes.len() {
            return Err(Error::Invalid(format!(
                "{} values for {} classes",
                class_values.len(),
                self.classes.len()
            )));
        }
        let v = DVector::from_column_slice(class_values);
        Ok((&self.absorption * v).iter().copied().collect())
    }
}

/// Iterative Tarjan; returns the component id of every vertex.
fn strongly_connected(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut n_comp = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(&(v, child)) = call.last() {
            if child < adj[v].len() {
                call.last_mut().unwrap().1 += 1;
                let w = adj[v][child];
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = n_comp;
                        if w == v {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
    }
    (comp, n_comp)
}

/// Averages the matrices and finds recurrent classes (sink strongly connected
/// components of the graph with an edge wherever `P_ij > tol`) and absorption
/// probabilities.
pub fn analyze(matrices: &[DMatrix<f64>], tol: f64) -> Result<ChainAnalysis> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::NonStochastic("no matrices given".into()))?;
    let n = first.nrows();
    let mut p = DMatrix::zeros(n, n);
    for (k, m) in matrices.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::NonStochastic(format!(
                "matrix {k} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            let row = m.row(i);
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol || row.iter().any(|&v| v < -tol || !v.is_finite()) {
                return Err(Error::NonStochastic(format!(
                    "matrix {k} row {i} sums to {s}"
                )));
            }
        }
        p += m;
    }
    p /= matrices.len() as f64;

    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p[(i, j)] > tol).collect())
        .collect();
    let (comp, n_comp) = strongly_connected(&adj);
    let mut is_sink = vec![true; n_comp];
    for i in 0..n {
        if adj[i].iter().any(|&j| comp[j] != comp[i]) {
            is_sink[comp[i]] = false;
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of_comp = vec![usize::MAX; n_comp];
    let mut transient = Vec::new();
    for i in 0..n {
        let c = comp[i];
        if is_sink[c] {
            if class_of_comp[c] == usize::MAX {
                class_of_comp[c] = classes.len();
                classes.push(Vec::new());
            }
            classes[class_of_comp[c]].push(i);
        } else {
            transient.push(i);
        }
    }

    let k = classes.len();
    let mut absorption = DMatrix::zeros(n, k);
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            absorption[(i, c)] = 1.0;
        }
    }
    let mut solve_residual = 0.0;
    if !transient.is_empty() {
        let t = transient.len();
        let mut class_of = vec![usize::MAX; n];
        for (c, members) in classes.iter().enumerate() {
            for &i in members {
                class_of[i] = c;
            }
        }
        let iq = DMatrix::from_fn(t, t, |a, b| {
            let delta = if a == b { 1.0 } else { 0.0 };
            delta - p[(transient[a], transient[b])]
        });
        let mut r = DMatrix::zeros(t, k);
        for (a, &i) in transient.iter().enumerate() {
            for j in 0..n {
                if class_of[j] != usize::MAX {
                    r[(a, class_of[j])] += p[(i, j)];
                }
            }
        }
        let x = iq
            .clone()
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NonStochastic("transient block is singular".into()))?;
        solve_residual = (&iq * &x - &r).abs().max();
        for (a, &i) in transient.iter().enumerate() {
            for c in 0..k {
                absorption[(i, c)] = x[(a, c)];
            }
        }
    }

    Ok(ChainAnalysis {
        p,
        classes,
        transient,
        absorption,
        solve_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub class_means: Vec<f64>,
    /// Per class, `max_i |d_i − class mean|`.
    pub class_deviation: Vec<f64>,
    pub max_class_deviation: f64,
    /// `max_i |d_i − Σ_k absorption(i,k)·mean_k|`.
    pub reconstruction_deviation: f64,
}

/// Measures how far `policy` is from being constant on recurrent classes and
/// from the absorption-weighted reconstruction on transient states.
pub fn check_pi_fair_structure(
    policy: &[f64],
    analysis: &ChainAnalysis,
) -> Result<StructureReport> {
    let n = analysis.p.nrows();
    if policy.len() != n {
        return Err(Error::Invalid(format!(
            "policy has {} entries for {n} states",
            policy.len()
        )));
    }
    let class_means: Vec<f64> = analysis
        .classes
        .iter()
        .map(|c| c.iter().map(|&i| policy[i]).sum::<f64>() / c.len() as f64)
        .collect();
    let class_deviation: Vec<f64> = analysis
        .classes
        .iter()
        .zip(&class_means)
        .map(|(c, m)| c.iter().map(|&i| (policy[i] - m).abs()).fold(0.0, f64::max))
        .collect();
    let rebuilt = analysis.reconstruct(&class_means)?;
    let reconstruction_deviation = rebuilt
        .iter()
        .zip(policy)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(StructureReport {
        max_class_deviation: class_deviation.iter().copied().fold(0.0, f64::max),
        class_means,
        class_deviation,
        reconstruction_deviation,
    })
}
