//! Structural causal models and path-specific counterfactual sampling.
//!
//! A model is a DAG over named nodes, one structural equation per node drawn
//! from a small closed family of parameterized forms, and one independent
//! exogenous variable per node. Sampling follows the two-pass construction for
//! path-specific counterfactuals: a factual pass in topological order, then a
//! counterfactual pass per target group in which a parent's counterfactual
//! value is used only when the edge into the child lies on some path of the
//! chosen [`PathSet`]. Both passes reuse the same exogenous draws.
//!
//! Exogenous noise comes from a counter-based stream keyed by
//! `(seed, node index, draw index)`, so every draw is reproducible on its own
//! and parallel sampling matches sequential sampling bit for bit.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed acyclic graph given as a node list plus a parent map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalDag {
    nodes: Vec<String>,
    parents: BTreeMap<String, Vec<String>>,
}

impl CausalDag {
    /// Builds a graph without validating it; see [`CausalDag::validate_and_order`].
    pub fn new(nodes: Vec<String>, parents: BTreeMap<String, Vec<String>>) -> Self {
        Self { nodes, parents }
    }

    /// Convenience constructor from `(child, [parents])` pairs in node order.
    pub fn from_edges(spec: &[(&str, &[&str])]) -> Self {
        let nodes = spec.iter().map(|(n, _)| n.to_string()).collect();
        let parents = spec
            .iter()
            .map(|(n, ps)| (n.to_string(), ps.iter().map(|p| p.to_string()).collect()))
            .collect();
        Self { nodes, parents }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn parents(&self, node: &str) -> &[String] {
        self.parents.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.parents(to).iter().any(|p| p == from)
    }

    pub fn index_of(&self, node: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == node)
    }

    /// Checks the graph and returns it with nodes in a topological order.
    ///
    /// The order is stable: among nodes whose parents are all placed, the one
    /// appearing earliest in the input list goes first.
    pub fn validate_and_order(self) -> Result<CausalDag> {
        if self.nodes.is_empty() {
            return Err(Error::Invalid("graph has no nodes".into()));
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.as_str()) {
                return Err(Error::Invalid(format!("duplicate node {n:?}")));
            }
        }
        for (child, ps) in &self.parents {
            if !seen.contains(child.as_str()) {
                return Err(Error::Invalid(format!(
                    "parent list for unknown node {child:?}"
                )));
            }
            for p in ps {
                if !seen.contains(p.as_str()) {
                    return Err(Error::UnknownNode {
                        node: child.clone(),
                        parent: p.clone(),
                    });
                }
            }
            if ps.iter().any(|p| p == child) {
                return Err(Error::Cycle(vec![child.clone()]));
            }
        }

        let mut placed: HashSet<&str> = HashSet::new();
        let mut order = Vec::with_capacity(self.nodes.len());
        while order.len() < self.nodes.len() {
            let next = self.nodes.iter().find(|n| {
                !placed.contains(n.as_str())
                    && self.parents(n).iter().all(|p| placed.contains(p.as_str()))
            });
            match next {
                Some(n) => {
                    placed.insert(n.as_str());
                    order.push(n.clone());
                }
                None => {
                    let stuck = self
                        .nodes
                        .iter()
                        .filter(|n| !placed.contains(n.as_str()))
                        .cloned()
                        .collect();
                    return Err(Error::Cycle(stuck));
                }
            }
        }
        Ok(CausalDag {
            nodes: order,
            parents: self.parents,
        })
    }
}

/// Distribution of a node's exogenous variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogenousKind {
    Uniform,
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub parent: String,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub left: String,
    pub right: String,
    pub coef: f64,
}

/// The closed family of structural equation forms.
///
/// Writing `η = intercept + Σ coef·parent (+ Σ coef·left·right)` and `u` for
/// the node's exogenous value:
///
/// * `Linear`: `η + noise_scale·u`
/// * `ThresholdIndicator`: `1{u ≤ η}`
/// * `LogisticThreshold`: `1{u ≤ logit⁻¹(η)}`
/// * `Categorical`: index of the first cumulative weight share that `u`
///   does not exceed; used for group nodes with more than two values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum Equation {
    Linear {
        intercept: f64,
        #[serde(default)]
        terms: Vec<Term>,
        #[serde(default)]
        interactions: Vec<Interaction>,
        #[serde(default = "one")]
        noise_scale: f64,
    },
    ThresholdIndicator {
        intercept: f64,
        #[serde(default)]
        terms: Vec<Term>,
    },
    LogisticThreshold {
        intercept: f64,
        #[serde(default)]
        terms: Vec<Term>,
    },
    Categorical {
        weights: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Equation {
    fn referenced_parents(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match self {
            Equation::Linear {
                terms,
                interactions,
                ..
            } => {
                out.extend(terms.iter().map(|t| t.parent.as_str()));
                for i in interactions {
                    out.push(i.left.as_str());
                    out.push(i.right.as_str());
                }
            }
            Equation::ThresholdIndicator { terms, .. }
            | Equation::LogisticThreshold { terms, .. } => {
                out.extend(terms.iter().map(|t| t.parent.as_str()));
            }
            Equation::Categorical { .. } => {}
        }
        out
    }

    fn compile(&self, dag: &CausalDag) -> CompiledEquation {
        let idx = |name: &str| dag.index_of(name).expect("validated parent");
        let lin = |terms: &[Term]| -> Vec<(usize, f64)> {
            terms.iter().map(|t| (idx(&t.parent), t.coef)).collect()
        };
        match self {
            Equation::Linear {
                intercept,
                terms,
                interactions,
                noise_scale,
            } => CompiledEquation::Linear {
                intercept: *intercept,
                terms: lin(terms),
                interactions: interactions
                    .iter()
                    .map(|i| (idx(&i.left), idx(&i.right), i.coef))
                    .collect(),
                noise_scale: *noise_scale,
            },
            Equation::ThresholdIndicator { intercept, terms } => CompiledEquation::Threshold {
                intercept: *intercept,
                terms: lin(terms),
                logistic: false,
            },
            Equation::LogisticThreshold { intercept, terms } => CompiledEquation::Threshold {
                intercept: *intercept,
                terms: lin(terms),
                logistic: true,
            },
            Equation::Categorical { weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                CompiledEquation::Categorical { cumulative }
            }
        }
    }
}

/// An equation with parent names resolved to node indices.
#[derive(Debug, Clone, PartialEq)]
enum CompiledEquation {
    Linear {
        intercept: f64,
        terms: Vec<(usize, f64)>,
        interactions: Vec<(usize, usize, f64)>,
        noise_scale: f64,
    },
    Threshold {
        intercept: f64,
        terms: Vec<(usize, f64)>,
        logistic: bool,
    },
    Categorical {
        cumulative: Vec<f64>,
    },
}

impl CompiledEquation {
    /// `value(k)` yields the value to use for parent node `k`.
    fn evaluate(&self, value: impl Fn(usize) -> f64, u: f64) -> f64 {
        let linear = |intercept: f64, terms: &[(usize, f64)]| {
            terms
                .iter()
                .fold(intercept, |acc, &(k, c)| acc + c * value(k))
        };
        match self {
            CompiledEquation::Linear {
                intercept,
                terms,
                interactions,
                noise_scale,
            } => {
                let eta = interactions
                    .iter()
                    .fold(linear(*intercept, terms), |acc, &(l, r, c)| {
                        acc + c * value(l) * value(r)
                    });
                eta + noise_scale * u
            }
            CompiledEquation::Threshold {
                intercept,
                terms,
                logistic: squash,
            } => {
                let mut eta = linear(*intercept, terms);
                if *squash {
                    eta = logistic(eta);
                }
                if u <= eta {
                    1.0
                } else {
                    0.0
                }
            }
            CompiledEquation::Categorical { cumulative } => {
                let k = cumulative
                    .iter()
                    .position(|&c| u <= c)
                    .unwrap_or(cumulative.len() - 1);
                k as f64
            }
        }
    }
}

/// Serializable description of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub equation: Equation,
    pub exogenous: ExogenousKind,
}

/// Serializable description of a whole model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSpec {
    pub nodes: Vec<NodeSpec>,
    pub group_node: String,
    /// Symbol table for the group node: value `k` means `group_values[k]`.
    pub group_values: Vec<String>,
    pub decision_node: String,
    pub decision_parents: Vec<String>,
    pub outcome_node: String,
}

/// A validated structural causal model with nodes in topological order.
#[derive(Debug, Clone)]
pub struct Scm {
    dag: CausalDag,
    equations: Vec<Equation>,
    compiled: Vec<CompiledEquation>,
    parent_idx: Vec<Vec<usize>>,
    exogenous: Vec<ExogenousKind>,
    group_node: usize,
    group_values: Vec<String>,
    decision_node: usize,
    decision_parents: Vec<usize>,
    outcome_node: usize,
}

impl Scm {
    pub fn new(spec: ScmSpec) -> Result<Scm> {
        let dag = CausalDag::new(
            spec.nodes.iter().map(|n| n.name.clone()).collect(),
            spec.nodes
                .iter()
                .map(|n| (n.name.clone(), n.parents.clone()))
                .collect(),
        )
        .validate_and_order()?;

        let by_name: BTreeMap<&str, &NodeSpec> =
            spec.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
        let mut equations = Vec::with_capacity(dag.nodes.len());
        let mut exogenous = Vec::with_capacity(dag.nodes.len());
        for name in &dag.nodes {
            let node = by_name[name.as_str()];
            for p in node.equation.referenced_parents() {
                if !node.parents.iter().any(|q| q == p) {
                    return Err(Error::Invalid(format!(
                        "equation of {name:?} uses {p:?}, which is not one of its parents"
                    )));
                }
            }
            equations.push(node.equation.clone());
            exogenous.push(node.exogenous);
        }

        let find = |name: &str, what: &str| {
            dag.index_of(name)
                .ok_or_else(|| Error::Invalid(format!("{what} {name:?} is not a node")))
        };
        let group_node = find(&spec.group_node, "group node")?;
        let decision_node = find(&spec.decision_node, "decision node")?;
        let outcome_node = find(&spec.outcome_node, "outcome node")?;
        let decision_parents = spec
            .decision_parents
            .iter()
            .map(|p| find(p, "decision parent"))
            .collect::<Result<Vec<_>>>()?;
        if !decision_parents.contains(&group_node) {
            return Err(Error::Invalid(
                "decision parents must include the group node".into(),
            ));
        }
        if spec.group_values.len() < 2 {
            return Err(Error::Invalid("need at least two group values".into()));
        }
        match &equations[group_node] {
            Equation::ThresholdIndicator { .. } if spec.group_values.len() == 2 => {}
            Equation::Categorical { weights } if weights.len() == spec.group_values.len() => {}
            _ => {
                return Err(Error::Invalid(
                    "group node needs a threshold_indicator (two groups) or categorical equation \
                     with one weight per group value"
                        .into(),
                ))
            }
        }

        let compiled = equations.iter().map(|e| e.compile(&dag)).collect();
        let parent_idx = dag
            .nodes
            .iter()
            .map(|n| {
                dag.parents(n)
                    .iter()
                    .map(|p| dag.index_of(p).unwrap())
                    .collect()
            })
            .collect();
        Ok(Scm {
            dag,
            equations,
            compiled,
            parent_idx,
            exogenous,
            group_node,
            group_values: spec.group_values,
            decision_node,
            decision_parents,
            outcome_node,
        })
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn nodes(&self) -> &[String] {
        &self.dag.nodes
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.dag.index_of(name)
    }

    pub fn equation(&self, node: usize) -> &Equation {
        &self.equations[node]
    }

    pub fn exogenous_kind(&self, node: usize) -> ExogenousKind {
        self.exogenous[node]
    }

    pub fn parent_indices(&self, node: usize) -> &[usize] {
        &self.parent_idx[node]
    }

    pub fn group_node(&self) -> usize {
        self.group_node
    }

    pub fn group_values(&self) -> &[String] {
        &self.group_values
    }

    pub fn decision_node(&self) -> usize {
        self.decision_node
    }

    pub fn decision_parents(&self) -> &[usize] {
        &self.decision_parents
    }

    pub fn outcome_node(&self) -> usize {
        self.outcome_node
    }

    /// Evaluates the structural equation of `node`; `value(k)` supplies the
    /// value of parent node `k`.
    pub fn evaluate(&self, node: usize, value: impl Fn(usize) -> f64, u: f64) -> f64 {
        self.compiled[node].evaluate(value, u)
    }

    /// Draws the exogenous vector for draw number `draw`.
    pub fn sample_exogenous(&self, seed: u64, draw: u64) -> Vec<f64> {
        (0..self.nodes().len())
            .map(|node| {
                let mut rng = stream(seed, node as u64, draw);
                match self.exogenous[node] {
                    ExogenousKind::Uniform => rng.gen::<f64>(),
                    ExogenousKind::StandardNormal => rng.sample(StandardNormal),
                }
            })
            .collect()
    }

    /// Factual pass. With `group = Some(a)` the group node is set to `a`
    /// instead of being computed from its equation.
    pub fn factual(&self, exogenous: &[f64], group: Option<usize>) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes().len()];
        for j in 0..v.len() {
            v[j] = match group {
                Some(a) if j == self.group_node => a as f64,
                _ => self.evaluate(j, |k| v[k], exogenous[j]),
            };
        }
        v
    }

    /// Counterfactual pass: the group node is set to `target`, and each
    /// node reads the counterfactual value of a parent only along edges of `pi`.
    pub fn counterfactual(
        &self,
        pi: &PathSet,
        exogenous: &[f64],
        factual: &[f64],
        target: usize,
    ) -> Vec<f64> {
        let mut bar = vec![0.0; self.nodes().len()];
        for j in 0..bar.len() {
            bar[j] = if j == self.group_node {
                target as f64
            } else {
                self.evaluate(
                    j,
                    |k| {
                        if pi.contains_edge(k, j) {
                            bar[k]
                        } else {
                            factual[k]
                        }
                    },
                    exogenous[j],
                )
            };
        }
        bar
    }
}

/// Counter-based stream for one `(seed, node, draw)` triple.
fn stream(seed: u64, node: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((node << 48) ^ draw);
    rng
}

/// A collection of directed paths starting at the group node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    paths: Vec<Vec<String>>,
    edges: BTreeSet<(usize, usize)>,
}

impl PathSet {
    pub fn new(scm: &Scm, paths: Vec<Vec<String>>) -> Result<PathSet> {
        let group = &scm.nodes()[scm.group_node];
        let mut edges = BTreeSet::new();
        for path in &paths {
            if path.first() != Some(group) {
                return Err(Error::Invalid(format!(
                    "path {path:?} does not start at group node {group:?}"
                )));
            }
            for w in path.windows(2) {
                if !scm.dag.has_edge(&w[0], &w[1]) {
                    return Err(Error::Invalid(format!(
                        "{} -> {} in path {path:?} is not an edge",
                        w[0], w[1]
                    )));
                }
                let from = scm.node_index(&w[0]).unwrap();
                let to = scm.node_index(&w[1]).unwrap();
                edges.insert((from, to));
            }
        }
        Ok(PathSet { paths, edges })
    }

    /// Every directed path from the group node to `target`.
    pub fn all_paths_to(scm: &Scm, target: &str) -> Result<PathSet> {
        let target_idx = scm
            .node_index(target)
            .ok_or_else(|| Error::Invalid(format!("unknown node {target:?}")))?;
        let n = scm.nodes().len();
        let mut children = vec![Vec::new(); n];
        for (j, ps) in scm.parent_idx.iter().enumerate() {
            for &p in ps {
                children[p].push(j);
            }
        }
        let mut paths = Vec::new();
        let mut stack = vec![vec![scm.group_node]];
        while let Some(path) = stack.pop() {
            let last = *path.last().unwrap();
            if last == target_idx {
                paths.push(path.iter().map(|&k| scm.nodes()[k].clone()).collect());
                continue;
            }
            for &c in children[last].iter().rev() {
                let mut next = path.clone();
                next.push(c);
                stack.push(next);
            }
        }
        PathSet::new(scm, paths)
    }

    pub fn paths(&self) -> &[Vec<String>] {
        &self.paths
    }

    pub fn contains_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }
}

/// One sampled world: exogenous noise, factual values, and one counterfactual
/// vector per requested target group. All vectors are indexed by node position
/// in [`Scm::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct WorldDraw {
    pub exogenous: Vec<f64>,
    pub factual: Vec<f64>,
    pub counterfactual: Vec<(usize, Vec<f64>)>,
}

impl WorldDraw {
    pub fn counterfactual_for(&self, target: usize) -> Option<&[f64]> {
        self.counterfactual
            .iter()
            .find(|(a, _)| *a == target)
            .map(|(_, v)| v.as_slice())
    }
}

/// Samples `n` worlds with factual values and path-specific counterfactuals
/// for every group in `targets`, baseline group being the factual one.
pub fn draw_worlds(
    scm: &Scm,
    pi: &PathSet,
    targets: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<WorldDraw>> {
    if n == 0 {
        return Err(Error::Invalid("draw count must be at least 1".into()));
    }
    if let Some(&bad) = targets.iter().find(|&&a| a >= scm.group_values.len()) {
        return Err(Error::Invalid(format!("target group {bad} out of range")));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| {
            let exogenous = scm.sample_exogenous(seed, k);
            let factual = scm.factual(&exogenous, None);
            let counterfactual = targets
                .iter()
                .map(|&a| (a, scm.counterfactual(pi, &exogenous, &factual, a)))
                .collect();
            WorldDraw {
                exogenous,
                factual,
                counterfactual,
            }
        })
        .collect())
}

/// Path-specific counterfactual with both levels fixed: the factual pass sets
/// the group node to `baseline` rather than computing it. Returns the
/// `(factual, counterfactual)` vectors.
pub fn counterfactual_fixed(
    scm: &Scm,
    pi: &PathSet,
    exogenous: &[f64],
    baseline: usize,
    target: usize,
) -> (Vec<f64>, Vec<f64>) {
    let factual = scm.factual(exogenous, Some(baseline));
    let cf = scm.counterfactual(pi, exogenous, &factual, target);
    (factual, cf)
}

/// `(Y(0), Y(1))`: the outcome equation evaluated with the decision set to 0
/// and to 1, all other inputs and the exogenous value held fixed.
pub fn potential_outcomes(scm: &Scm, draw: &WorldDraw) -> (f64, f64) {
    let y = scm.outcome_node;
    let eval = |delta: f64| {
        scm.evaluate(
            y,
            |k| {
                if k == scm.decision_node {
                    delta
                } else {
                    draw.factual[k]
                }
            },
            draw.exogenous[y],
        )
    };
    (eval(0.0), eval(1.0))
}

/// Constants of the built-in admissions model.
pub const ADMISSIONS_CONSTANTS: [(&str, f64); 12] = [
    ("mu_A", 1.0 / 3.0),
    ("beta_E0", 1.0),
    ("beta_EA", -1.0),
    ("beta_M0", 0.0),
    ("beta_ME", 1.0),
    ("beta_T0", 50.0),
    ("beta_TE", 4.0),
    ("beta_TM", 4.0),
    ("beta_TB", 1.0),
    ("beta_Tu", 7.0),
    ("beta_Y0", -0.5),
    ("beta_YD", 0.5),
];

/// Status-quo admission rate used by the decision node when sampling. The
/// fairness machinery never reads factual decisions; only potential outcomes.
pub const ADMISSIONS_STATUS_QUO_RATE: f64 = 0.5;

pub fn admissions_defaults() -> BTreeMap<String, f64> {
    ADMISSIONS_CONSTANTS
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}

/// The college-admissions model: race `A`, education `E`, preparation `M`,
/// test score `T`, decision `D`, graduation `Y`, with `X = (A, T)`.
///
/// An empty map selects the default constants; otherwise every constant must
/// be present.
pub fn admissions_scm(constants: &BTreeMap<String, f64>) -> Result<Scm> {
    let c = if constants.is_empty() {
        admissions_defaults()
    } else {
        let missing: Vec<String> = ADMISSIONS_CONSTANTS
            .iter()
            .map(|(k, _)| k.to_string())
            .filter(|k| !constants.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingConstant(missing));
        }
        if let Some(k) = constants
            .keys()
            .find(|k| !ADMISSIONS_CONSTANTS.iter().any(|(n, _)| n == k))
        {
            return Err(Error::Invalid(format!("unknown constant {k:?}")));
        }
        constants.clone()
    };
    Scm::new(admissions_spec(&c))
}

/// Default constants with the given entries replaced.
pub fn admissions_scm_with_overrides(overrides: &BTreeMap<String, f64>) -> Result<Scm> {
    let mut c = admissions_defaults();
    for (k, v) in overrides {
        if !c.contains_key(k) {
            return Err(Error::Invalid(format!("unknown constant {k:?}")));
        }
        c.insert(k.clone(), *v);
    }
    admissions_scm(&c)
}

pub fn admissions_spec(c: &BTreeMap<String, f64>) -> ScmSpec {
    let t = |parent: &str, coef: &str| Term {
        parent: parent.into(),
        coef: c[coef],
    };
    let node = |name: &str, parents: &[&str], equation, exogenous| NodeSpec {
        name: name.into(),
        parents: parents.iter().map(|p| p.to_string()).collect(),
        equation,
        exogenous,
    };
    ScmSpec {
        nodes: vec![
            node(
                "A",
                &[],
                Equation::ThresholdIndicator {
                    intercept: c["mu_A"],
                    terms: vec![],
                },
                ExogenousKind::Uniform,
            ),
            node(
                "E",
                &["A"],
                Equation::Linear {
                    intercept: c["beta_E0"],
                    terms: vec![t("A", "beta_EA")],
                    interactions: vec![],
                    noise_scale: 1.0,
                },
                ExogenousKind::StandardNormal,
            ),
            node(
                "M",
                &["E"],
                Equation::Linear {
                    intercept: c["beta_M0"],
                    terms: vec![t("E", "beta_ME")],
                    interactions: vec![],
                    noise_scale: 1.0,
                },
                ExogenousKind::StandardNormal,
            ),
            node(
                "T",
                &["E", "M"],
                Equation::Linear {
                    intercept: c["beta_T0"],
                    terms: vec![t("E", "beta_TE"), t("M", "beta_TM")],
                    interactions: vec![Interaction {
                        left: "E".into(),
                        right: "M".into(),
                        coef: c["beta_TB"],
                    }],
                    noise_scale: c["beta_Tu"],
                },
                ExogenousKind::StandardNormal,
            ),
            node(
                "D",
                &["A", "T"],
                Equation::ThresholdIndicator {
                    intercept: ADMISSIONS_STATUS_QUO_RATE,
                    terms: vec![],
                },
                ExogenousKind::Uniform,
            ),
            node(
                "Y",
                &["M", "D"],
                Equation::LogisticThreshold {
                    intercept: c["beta_Y0"],
                    terms: vec![
                        Term {
                            parent: "M".into(),
                            coef: 1.0,
                        },
                        t("D", "beta_YD"),
                    ],
                },
                ExogenousKind::Uniform,
            ),
        ],
        group_node: "A".into(),
        group_values: vec!["a0".into(), "a1".into()],
        decision_node: "D".into(),
        decision_parents: vec!["A".into(), "T".into()],
        outcome_node: "Y".into(),
    }
}

/// The single red path `A → E → T → D`.
pub fn admissions_test_score_path(scm: &Scm) -> Result<PathSet> {
    PathSet::new(
        scm,
        vec![vec!["A".into(), "E".into(), "T".into(), "D".into()]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn admissions() -> Scm {
        admissions_scm(&BTreeMap::new()).unwrap()
    }

    #[test]
    fn single_node_orders_to_itself() {
        let dag = CausalDag::from_edges(&[("A", &[])])
            .validate_and_order()
            .unwrap();
        assert_eq!(dag.nodes(), ["A"]);
    }

    #[test]
    fn admissions_dag_orders_topologically() {
        let dag = CausalDag::from_edges(&[
            ("Y", &["M", "D"]),
            ("D", &["A", "T"]),
            ("T", &["E", "M"]),
            ("M", &["E"]),
            ("E", &["A"]),
            ("A", &[]),
        ])
        .validate_and_order()
        .unwrap();
        assert_eq!(dag.nodes(), ["A", "E", "M", "T", "D", "Y"]);
    }

    #[test]
    fn stable_among_incomparable_nodes() {
        let dag = CausalDag::from_edges(&[("C", &[]), ("B", &[]), ("A", &["C"])])
            .validate_and_order()
            .unwrap();
        assert_eq!(dag.nodes(), ["C", "B", "A"]);
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = CausalDag::from_edges(&[("A", &["B"]), ("B", &["A"])])
            .validate_and_order()
            .unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
    }

    #[test]
    fn self_loop_and_dangling_parent() {
        let err = CausalDag::from_edges(&[("A", &["A"])])
            .validate_and_order()
            .unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
        let err = CausalDag::from_edges(&[("A", &["Z"])])
            .validate_and_order()
            .unwrap_err();
        assert!(matches!(err, Error::UnknownNode { .. }));
    }

    #[test]
    fn default_constants() {
        let scm = admissions();
        match scm.equation(scm.node_index("A").unwrap()) {
            Equation::ThresholdIndicator { intercept, .. } => assert_eq!(*intercept, 1.0 / 3.0),
            e => panic!("unexpected {e:?}"),
        }
        let c = admissions_defaults();
        assert_eq!(c["beta_EA"], -1.0);
        assert_eq!(c["beta_T0"], 50.0);
        assert_eq!(c["beta_YD"], 0.5);
        assert_eq!(scm.nodes(), ["A", "E", "M", "T", "D", "Y"]);
    }

    #[test]
    fn partial_constant_map_lists_missing_names() {
        let mut c = BTreeMap::new();
        c.insert("mu_A".to_string(), 0.5);
        match admissions_scm(&c).unwrap_err() {
            Error::MissingConstant(names) => {
                assert_eq!(names.len(), 11);
                assert!(names.contains(&"beta_YD".to_string()));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_noise_worked_example() {
        let scm = admissions();
        let pi = admissions_test_score_path(&scm).unwrap();
        let (f, cf) = counterfactual_fixed(&scm, &pi, &[0.0; 6], 0, 1);
        let [e, m, t] = ["E", "M", "T"].map(|n| scm.node_index(n).unwrap());
        assert_eq!((f[e], f[m], f[t]), (1.0, 1.0, 59.0));
        assert_eq!((cf[e], cf[m], cf[t]), (0.0, 1.0, 54.0));
    }

    #[test]
    fn same_target_reproduces_factual() {
        let scm = admissions();
        let pi = admissions_test_score_path(&scm).unwrap();
        let draws = draw_worlds(&scm, &pi, &[0, 1], 200, 7).unwrap();
        for d in &draws {
            let a = d.factual[scm.group_node()] as usize;
            assert_eq!(d.counterfactual_for(a).unwrap(), d.factual.as_slice());
        }
    }

    #[test]
    fn potential_outcome_hand_values() {
        let scm = admissions();
        let mut draw = WorldDraw {
            exogenous: vec![0.0; 6],
            factual: vec![0.0; 6],
            counterfactual: vec![],
        };
        let (m, y) = (scm.node_index("M").unwrap(), scm.outcome_node());
        draw.factual[m] = 1.0;
        draw.exogenous[y] = 0.5;
        assert_eq!(potential_outcomes(&scm, &draw), (1.0, 1.0));
        draw.factual[m] = 0.0;
        draw.exogenous[y] = 0.99;
        assert_eq!(potential_outcomes(&scm, &draw), (0.0, 0.0));
    }

    #[test]
    fn paths_must_follow_edges() {
        let scm = admissions();
        let err = PathSet::new(&scm, vec![vec!["A".into(), "T".into()]]).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        let err = PathSet::new(&scm, vec![vec!["E".into(), "T".into()]]).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn all_paths_to_decision() {
        let scm = admissions();
        let pi = PathSet::all_paths_to(&scm, "D").unwrap();
        let mut paths: Vec<String> = pi.paths().iter().map(|p| p.join("")).collect();
        paths.sort();
        assert_eq!(paths, ["AD", "AEMTD", "AETD"]);
    }

    #[test]
    fn equation_must_use_declared_parents() {
        let mut spec = admissions_spec(&admissions_defaults());
        spec.nodes[2].parents.clear();
        assert!(matches!(Scm::new(spec).unwrap_err(), Error::Invalid(_)));
    }
}
