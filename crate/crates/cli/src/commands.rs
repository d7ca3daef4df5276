use std::path::{Path, PathBuf};

use causalfair::betafair::{prop4_check, Prop4Report};
use causalfair::dist::{simulate, FiniteJointDistribution, TableRow};
use causalfair::fairness::{
    ceo_rows, cf_rows, cpf_rows, cpp_rows, eo_rows, psf_rows, rejected_outcome_rates, solve_fair,
    ConstraintSet, FairPolicyResult, FairStatus, FairnessKind, ResidualReport,
};
use causalfair::markov::{self, ChainAnalysis, DEFAULT_EDGE_TOL};
use causalfair::pareto::{self, DominanceGap, FrontierPoint};
use causalfair::scm::{admissions_test_score_path, PathSet};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{
    load_distribution, out_dir, read_csv, transition_records, write_csv, write_json, PolicyRecord,
    TransitionRecord, ALL_PATHS, TEST_SCORE_PATHS,
};

/// The same factual draws with counterfactuals along the test-score path
/// and along every path into the decision.
pub struct Distributions {
    pub reduced: FiniteJointDistribution,
    pub full: Option<FiniteJointDistribution>,
}

impl Distributions {
    pub fn simulate(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let scm = cfg.build_scm()?;
        let s = &cfg.simulation;
        let red = admissions_test_score_path(&scm)?;
        let all = PathSet::all_paths_to(&scm, &scm.nodes()[scm.decision_node()])?;
        Ok(Self {
            reduced: simulate(&scm, &red, s.n, s.seed, cfg.binning())?,
            full: Some(simulate(&scm, &all, s.n, s.seed, cfg.binning())?),
        })
    }

    pub fn load(distribution: &Path, transitions: Option<&Path>) -> Result<Self, CliError> {
        let table: Vec<TableRow> = read_csv(distribution)?;
        let ts: Option<Vec<TransitionRecord>> = transitions.map(read_csv).transpose()?;
        let reduced = match load_distribution(&table, ts.as_deref(), TEST_SCORE_PATHS)? {
            Some(d) => d,
            None => load_distribution(&table, None, TEST_SCORE_PATHS)?.expect("table given"),
        };
        let full = match &ts {
            Some(ts) => load_distribution(&table, Some(ts), ALL_PATHS)?,
            None => None,
        };
        Ok(Self { reduced, full })
    }

    pub fn obtain(cfg: &ExperimentConfig, input: &InputFiles) -> Result<Self, CliError> {
        match &input.distribution {
            Some(p) => Self::load(p, input.transitions.as_deref()),
            None => Self::simulate(cfg),
        }
    }

    pub fn for_kind(&self, kind: &FairnessKind) -> Result<&FiniteJointDistribution, CliError> {
        match kind {
            FairnessKind::Cf => self.full.as_ref().ok_or_else(|| {
                CliError::Input("counterfactual fairness needs all-paths transitions".into())
            }),
            _ => Ok(&self.reduced),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InputFiles {
    pub distribution: Option<PathBuf>,
    pub transitions: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub diversity_gain: f64,
    pub graduation_gain: f64,
    pub diversity_gain_n: f64,
    pub graduation_gain_n: f64,
    pub share: f64,
    pub diversity_n: f64,
    pub graduation_n: f64,
}

impl GapSummary {
    fn new(g: &DominanceGap, scale: f64) -> Self {
        Self {
            diversity_gain: g.diversity_gain,
            graduation_gain: g.graduation_gain,
            diversity_gain_n: g.diversity_gain * scale,
            graduation_gain_n: g.graduation_gain * scale,
            share: g.share,
            diversity_n: g.diversity * scale,
            graduation_n: g.graduation * scale,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinitionSummary {
    pub definition: String,
    pub status: FairStatus,
    pub objective: Option<f64>,
    pub budget_used: Option<f64>,
    pub diversity: Option<f64>,
    pub graduation: Option<f64>,
    pub diversity_n: Option<f64>,
    pub graduation_n: Option<f64>,
    /// `max_i |d_i − b|`; zero for the uniform lottery.
    pub max_deviation_from_budget: Option<f64>,
    pub max_residual: Option<f64>,
    pub grid_point: Option<Vec<f64>>,
    pub strongly_dominated: bool,
    pub dominance_gap: Option<GapSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierSummary {
    pub points: usize,
    pub frontier_points: usize,
    pub max_graduation: FrontierExtreme,
    /// Largest `graduation + λ·diversity` over the sweep.
    pub max_weighted_utility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierExtreme {
    pub share: f64,
    pub diversity_n: f64,
    pub graduation_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub paths: String,
    pub num_classes: usize,
    pub class_sizes: Vec<usize>,
    pub transient_count: usize,
    pub solve_residual: f64,
    pub policy_definition: Option<String>,
    /// Distance of the policy from the class-constant structure forced by
    /// the transition chain.
    pub max_policy_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencySummary {
    pub test_score_paths: f64,
    pub all_paths: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub groups: Vec<String>,
    pub support_size: usize,
    pub consistency_error: ConsistencySummary,
    pub definitions: Vec<DefinitionSummary>,
    pub frontier: FrontierSummary,
    pub markov: Vec<ChainReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub definition: String,
    pub reports: Vec<ResidualReport>,
}

pub struct Solved {
    pub kind: FairnessKind,
    pub result: FairPolicyResult,
}

fn bin_of(dist: &FiniteJointDistribution, i: usize) -> i64 {
    dist.support()[i].covariates.first().copied().unwrap_or(0)
}

pub fn solve_all(cfg: &ExperimentConfig, dists: &Distributions) -> Result<Vec<Solved>, CliError> {
    let p = &cfg.policy;
    p.definitions
        .iter()
        .map(|kind| {
            let dist = dists.for_kind(kind)?;
            Ok(Solved {
                kind: kind.clone(),
                result: solve_fair(dist, kind, p.lambda, p.budget)?,
            })
        })
        .collect()
}

fn summarize(
    cfg: &ExperimentConfig,
    dists: &Distributions,
    s: &Solved,
) -> Result<DefinitionSummary, CliError> {
    let r = &s.result;
    let scale = cfg.output.population_scale;
    let b = cfg.policy.budget;
    if r.status != FairStatus::Optimal {
        return Ok(DefinitionSummary {
            definition: r.definition.clone(),
            status: r.status,
            objective: None,
            budget_used: None,
            diversity: None,
            graduation: None,
            diversity_n: None,
            graduation_n: None,
            max_deviation_from_budget: None,
            max_residual: None,
            grid_point: None,
            strongly_dominated: false,
            dominance_gap: None,
        });
    }
    let dist = dists.for_kind(&s.kind)?;
    let rates = dist.utility_table(0.0)?.r;
    let (div, grad) = pareto::evaluate(dist, &rates, &r.policy);
    let gap = pareto::dominance_gap(&r.policy, dist, b, cfg.policy.frontier_resolution)?;
    Ok(DefinitionSummary {
        definition: r.definition.clone(),
        status: r.status,
        objective: Some(r.objective),
        budget_used: Some(r.budget_used),
        diversity: Some(div),
        graduation: Some(grad),
        diversity_n: Some(div * scale),
        graduation_n: Some(grad * scale),
        max_deviation_from_budget: Some(r.policy.iter().map(|d| (d - b).abs()).fold(0.0, f64::max)),
        max_residual: Some(
            r.residuals
                .iter()
                .map(|x| x.max_residual)
                .fold(0.0, f64::max),
        ),
        grid_point: r.grid_point.clone(),
        strongly_dominated: gap.is_some(),
        dominance_gap: gap.as_ref().map(|g| GapSummary::new(g, scale)),
    })
}

fn policy_records(dists: &Distributions, solved: &[Solved]) -> Vec<PolicyRecord> {
    let mut out = Vec::new();
    for s in solved
        .iter()
        .filter(|s| s.result.status == FairStatus::Optimal)
    {
        let dist = &dists.reduced;
        let groups = dist.group_values();
        for (i, &d) in s.result.policy.iter().enumerate() {
            out.push(PolicyRecord {
                definition: Some(s.result.definition.clone()),
                group: groups[dist.group(i)].clone(),
                bin: bin_of(dist, i),
                d,
            });
        }
    }
    out
}

fn residual_entries(solved: &[Solved]) -> Vec<ResidualEntry> {
    solved
        .iter()
        .map(|s| ResidualEntry {
            definition: s.result.definition.clone(),
            reports: s.result.residuals.clone(),
        })
        .collect()
}

fn write_frontier(
    path: &Path,
    dist: &FiniteJointDistribution,
    points: &[FrontierPoint],
    scale: f64,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["share".to_string()];
    header.extend(dist.group_values().iter().map(|g| format!("quantile_{g}")));
    header.extend(
        [
            "diversity",
            "graduation",
            "diversity_n",
            "graduation_n",
            "budget_used",
            "on_frontier",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for p in points {
        let mut rec = vec![p.share.to_string()];
        rec.extend(p.quantiles.iter().map(f64::to_string));
        rec.extend([
            p.diversity.to_string(),
            p.graduation.to_string(),
            (p.diversity * scale).to_string(),
            (p.graduation * scale).to_string(),
            p.budget_used.to_string(),
            p.on_frontier.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn frontier_summary(points: &[FrontierPoint], lambda: f64, scale: f64) -> FrontierSummary {
    let top = &points[pareto::max_graduation_index(points)];
    FrontierSummary {
        points: points.len(),
        frontier_points: points.iter().filter(|p| p.on_frontier).count(),
        max_graduation: FrontierExtreme {
            share: top.share,
            diversity_n: top.diversity * scale,
            graduation_n: top.graduation * scale,
        },
        max_weighted_utility: pareto::max_weighted(points, lambda),
    }
}

fn analyze_chain(dist: &FiniteJointDistribution) -> Result<Option<ChainAnalysis>, CliError> {
    if !dist.has_counterfactuals() {
        return Ok(None);
    }
    let mats = (0..dist.num_groups())
        .map(|a| dist.transition_matrix(a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(markov::analyze(&mats, DEFAULT_EDGE_TOL)?))
}

fn chain_report(
    paths: &str,
    analysis: &ChainAnalysis,
    policy: Option<(&str, &[f64])>,
) -> Result<ChainReport, CliError> {
    let summary = analysis.summary();
    let deviation = match policy {
        Some((_, d)) => {
            let s = markov::check_pi_fair_structure(d, analysis)?;
            Some(s.max_class_deviation.max(s.reconstruction_deviation))
        }
        None => None,
    };
    Ok(ChainReport {
        paths: paths.into(),
        num_classes: summary.num_classes,
        class_sizes: summary.class_sizes,
        transient_count: summary.transient_count,
        solve_residual: analysis.solve_residual,
        policy_definition: policy.map(|(n, _)| n.to_string()),
        max_policy_deviation: deviation,
    })
}

fn optimal_policy<'a>(solved: &'a [Solved], name: &str) -> Option<(&'a str, &'a [f64])> {
    solved
        .iter()
        .find(|s| s.result.definition == name && s.result.status == FairStatus::Optimal)
        .map(|s| (s.result.definition.as_str(), s.result.policy.as_slice()))
}

fn all_transitions(dists: &Distributions) -> Vec<TransitionRecord> {
    let mut ts = transition_records(&dists.reduced, TEST_SCORE_PATHS);
    if let Some(full) = &dists.full {
        ts.extend(transition_records(full, ALL_PATHS));
    }
    ts
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let dir = out_dir(out)?;
    let dists = Distributions::simulate(cfg)?;
    let solved = solve_all(cfg, &dists)?;
    let scale = cfg.output.population_scale;

    let definitions = solved
        .iter()
        .map(|s| summarize(cfg, &dists, s))
        .collect::<Result<Vec<_>, _>>()?;
    let points = pareto::frontier(
        &dists.reduced,
        cfg.policy.budget,
        cfg.policy.frontier_resolution,
    )?;

    let mut chains = Vec::new();
    if let Some(a) = analyze_chain(&dists.reduced)? {
        chains.push(chain_report(
            TEST_SCORE_PATHS,
            &a,
            optimal_policy(&solved, "psf"),
        )?);
    }
    if let Some(full) = &dists.full {
        if let Some(a) = analyze_chain(full)? {
            chains.push(chain_report(ALL_PATHS, &a, optimal_policy(&solved, "cf"))?);
        }
    }

    let summary = RunSummary {
        config: cfg.clone(),
        groups: dists.reduced.group_values().to_vec(),
        support_size: dists.reduced.len(),
        consistency_error: ConsistencySummary {
            test_score_paths: dists.reduced.consistency_error(),
            all_paths: dists.full.as_ref().map(|d| d.consistency_error()),
        },
        definitions,
        frontier: frontier_summary(&points, cfg.policy.lambda, scale),
        markov: chains,
    };

    write_csv(&dir.join("policy.csv"), &policy_records(&dists, &solved))?;
    write_frontier(&dir.join("frontier.csv"), &dists.reduced, &points, scale)?;
    write_csv(&dir.join("transitions.csv"), &all_transitions(&dists))?;
    write_json(&dir.join("residuals.json"), &residual_entries(&solved))?;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub config: ExperimentConfig,
    pub groups: Vec<String>,
    pub group_mass: Vec<f64>,
    pub support_size: usize,
    pub consistency_error: ConsistencySummary,
}

pub fn simulate_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let dir = out_dir(out)?;
    let dists = Distributions::simulate(cfg)?;
    let d = &dists.reduced;
    let (table, _) = d.to_tables();
    write_csv(&dir.join("distribution.csv"), &table)?;
    write_csv(&dir.join("transitions.csv"), &all_transitions(&dists))?;
    write_json(
        &dir.join("simulation.json"),
        &SimulationSummary {
            config: cfg.clone(),
            groups: d.group_values().to_vec(),
            group_mass: (0..d.num_groups()).map(|a| d.group_mass(a)).collect(),
            support_size: d.len(),
            consistency_error: ConsistencySummary {
                test_score_paths: d.consistency_error(),
                all_paths: dists.full.as_ref().map(|f| f.consistency_error()),
            },
        },
    )?;
    Ok(())
}

pub fn optimize(cfg: &ExperimentConfig, input: &InputFiles, out: &Path) -> Result<(), CliError> {
    let dir = out_dir(out)?;
    let dists = Distributions::obtain(cfg, input)?;
    let solved = solve_all(cfg, &dists)?;
    let definitions = solved
        .iter()
        .map(|s| summarize(cfg, &dists, s))
        .collect::<Result<Vec<_>, _>>()?;
    write_csv(&dir.join("policy.csv"), &policy_records(&dists, &solved))?;
    write_json(&dir.join("residuals.json"), &residual_entries(&solved))?;
    write_json(&dir.join("optimize.json"), &definitions)?;
    Ok(())
}

pub fn frontier_cmd(
    cfg: &ExperimentConfig,
    input: &InputFiles,
    out: &Path,
) -> Result<(), CliError> {
    let dir = out_dir(out)?;
    let dists = Distributions::obtain(cfg, input)?;
    let points = pareto::frontier(
        &dists.reduced,
        cfg.policy.budget,
        cfg.policy.frontier_resolution,
    )?;
    write_frontier(
        &dir.join("frontier.csv"),
        &dists.reduced,
        &points,
        cfg.output.population_scale,
    )
}

/// Matches policy rows to support points by `(group, bin)`.
fn policy_vector(
    dist: &FiniteJointDistribution,
    records: &[PolicyRecord],
    definition: Option<&str>,
) -> Result<Vec<f64>, CliError> {
    let chosen: Vec<&PolicyRecord> = records
        .iter()
        .filter(|r| match definition {
            Some(name) => r.definition.as_deref() == Some(name),
            None => true,
        })
        .collect();
    let groups = dist.group_values();
    (0..dist.len())
        .map(|i| {
            let g = &groups[dist.group(i)];
            let b = bin_of(dist, i);
            let hits: Vec<&&PolicyRecord> = chosen
                .iter()
                .filter(|r| &r.group == g && r.bin == b)
                .collect();
            match hits.as_slice() {
                [r] if (0.0..=1.0).contains(&r.d) => Ok(r.d),
                [r] => Err(CliError::Input(format!(
                    "policy value {} for ({g}, {b}) outside [0, 1]",
                    r.d
                ))),
                [] => Err(CliError::Input(format!("policy has no row for ({g}, {b})"))),
                _ => Err(CliError::Input(format!(
                    "policy has several rows for ({g}, {b}); select one with --definition"
                ))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub budget_used: f64,
    pub diversity_n: f64,
    pub graduation_n: f64,
    pub residuals: Vec<ResidualReport>,
    pub strongly_dominated: bool,
    pub dominance_gap: Option<GapSummary>,
}

fn audit_rows(
    dists: &Distributions,
    kind: &FairnessKind,
    d: &[f64],
) -> Result<Option<ConstraintSet>, CliError> {
    let dist = &dists.reduced;
    Ok(match kind {
        FairnessKind::None => None,
        FairnessKind::Ceo => Some(ceo_rows(dist)),
        FairnessKind::Cpf { omega } => Some(cpf_rows(dist, omega)?),
        FairnessKind::Psf { omega } => Some(psf_rows(dist, omega)?),
        FairnessKind::Eo { status_quo } => Some(eo_rows(dist, status_quo)?),
        FairnessKind::Cf => match &dists.full {
            Some(full) => Some(cf_rows(full)?),
            None => None,
        },
        FairnessKind::Cpp { .. } => match rejected_outcome_rates(dist, d)? {
            Some(c) => Some(cpp_rows(dist, &c)?),
            None => None,
        },
    })
}

pub fn audit(
    cfg: &ExperimentConfig,
    input: &InputFiles,
    policy: &Path,
    definition: Option<&str>,
    out: &Path,
) -> Result<AuditReport, CliError> {
    let dir = out_dir(out)?;
    let dists = Distributions::obtain(cfg, input)?;
    let dist = &dists.reduced;
    let records: Vec<PolicyRecord> = read_csv(policy)?;
    let d = policy_vector(dist, &records, definition)?;
    let mut residuals = Vec::new();
    for kind in &cfg.policy.definitions {
        if let Some(set) = audit_rows(&dists, kind, &d)? {
            residuals.push(set.report(&d));
        }
    }
    let rates = dist.utility_table(0.0)?.r;
    let (div, grad) = pareto::evaluate(dist, &rates, &d);
    let gap = pareto::dominance_gap(&d, dist, cfg.policy.budget, cfg.policy.frontier_resolution)?;
    let scale = cfg.output.population_scale;
    let report = AuditReport {
        budget_used: d.iter().zip(dist.mass()).map(|(x, p)| x * p).sum(),
        diversity_n: div * scale,
        graduation_n: grad * scale,
        residuals,
        strongly_dominated: gap.is_some(),
        dominance_gap: gap.as_ref().map(|g| GapSummary::new(g, scale)),
    };
    write_json(&dir.join("audit.json"), &report)?;
    Ok(report)
}

/// Class structure of each path set in an exported transitions file.
pub fn markov_cmd(
    transitions: &Path,
    policy: Option<(&Path, &str)>,
    out: &Path,
) -> Result<Vec<ChainReport>, CliError> {
    let dir = out_dir(out)?;
    let records: Vec<TransitionRecord> = read_csv(transitions)?;
    let policy_rows: Option<(Vec<PolicyRecord>, &str)> = match policy {
        Some((p, name)) => Some((read_csv(p)?, name)),
        None => None,
    };
    let mut path_sets: Vec<&str> = records.iter().map(|r| r.paths.as_str()).collect();
    path_sets.sort();
    path_sets.dedup();
    let mut reports = Vec::new();
    for paths in path_sets {
        let rows: Vec<&TransitionRecord> = records.iter().filter(|r| r.paths == paths).collect();
        let mut states: Vec<(String, i64)> = rows
            .iter()
            .flat_map(|r| {
                [
                    (r.from_group.clone(), r.from_bin),
                    (r.to_group.clone(), r.to_bin),
                ]
            })
            .collect();
        states.sort();
        states.dedup();
        let index = |g: &str, b: i64| {
            states
                .binary_search_by(|s| (s.0.as_str(), s.1).cmp(&(g, b)))
                .expect("state indexed")
        };
        let mut targets: Vec<&str> = rows.iter().map(|r| r.aprime.as_str()).collect();
        targets.sort();
        targets.dedup();
        let n = states.len();
        let mats: Vec<DMatrix<f64>> = targets
            .iter()
            .map(|&a| {
                let mut m = DMatrix::zeros(n, n);
                for r in rows.iter().filter(|r| r.aprime == a) {
                    m[(
                        index(&r.from_group, r.from_bin),
                        index(&r.to_group, r.to_bin),
                    )] += r.probability;
                }
                m
            })
            .collect();
        let analysis = markov::analyze(&mats, DEFAULT_EDGE_TOL)?;
        let d = match &policy_rows {
            Some((recs, name)) => {
                let chosen: Vec<&PolicyRecord> = recs
                    .iter()
                    .filter(|r| r.definition.as_deref() == Some(*name))
                    .collect();
                let d = states
                    .iter()
                    .map(|(g, b)| {
                        chosen
                            .iter()
                            .find(|r| &r.group == g && r.bin == *b)
                            .map(|r| r.d)
                            .ok_or_else(|| {
                                CliError::Input(format!("policy {name} has no row for ({g}, {b})"))
                            })
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                Some((name.to_string(), d))
            }
            None => None,
        };
        reports.push(chain_report(
            paths,
            &analysis,
            d.as_ref().map(|(n, d)| (n.as_str(), d.as_slice())),
        )?);
    }
    write_json(&dir.join("markov.json"), &reports)?;
    Ok(reports)
}

pub fn beta_check(
    mu0: f64,
    mu1: f64,
    v: f64,
    t_step: f64,
    out: &Path,
) -> Result<Prop4Report, CliError> {
    if !(t_step > 0.0 && t_step <= 1.0) {
        return Err(CliError::Config(format!(
            "t-step must lie in (0, 1], got {t_step}"
        )));
    }
    let k = (1.0 / t_step).round() as usize;
    let grid: Vec<f64> = (1..=k).map(|j| j as f64 / k as f64).collect();
    let report = prop4_check(mu0, mu1, v, &grid)?;
    let dir = out_dir(out)?;
    write_json(&dir.join("beta_check.json"), &report)?;
    Ok(report)
}
