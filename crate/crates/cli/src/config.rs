use std::collections::BTreeMap;
use std::path::Path;

use causalfair::dist::Binning;
use causalfair::fairness::{FairnessKind, Omega, StatusQuo, DEFAULT_GRID_STEP};
use causalfair::pareto::DEFAULT_RESOLUTION;
use causalfair::scm::{admissions_defaults, admissions_scm, Scm};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scm: ScmBlock,
    pub simulation: SimulationBlock,
    pub policy: PolicyBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScmBlock {
    /// Full constant set of the admissions model.
    pub constants: BTreeMap<String, f64>,
    /// Entries replacing individual constants.
    pub overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub n: usize,
    pub seed: u64,
    pub bin_width: f64,
    pub score_lo: f64,
    pub score_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyBlock {
    pub budget: f64,
    pub lambda: f64,
    pub definitions: Vec<FairnessKind>,
    pub frontier_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Not echoed into outputs, so runs into different directories stay
    /// byte-identical.
    #[serde(skip_serializing)]
    pub directory: String,
    pub population_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scm: ScmBlock::default(),
            simulation: SimulationBlock::default(),
            policy: PolicyBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

impl Default for ScmBlock {
    fn default() -> Self {
        Self {
            constants: admissions_defaults(),
            overrides: BTreeMap::new(),
        }
    }
}

impl Default for SimulationBlock {
    fn default() -> Self {
        let b = Binning::default();
        Self {
            n: 100_000,
            seed: 0,
            bin_width: b.width,
            score_lo: b.lo,
            score_hi: b.hi,
        }
    }
}

impl Default for PolicyBlock {
    fn default() -> Self {
        Self {
            budget: 0.5,
            lambda: 0.25,
            definitions: vec![
                FairnessKind::None,
                FairnessKind::Ceo,
                FairnessKind::Cpf {
                    omega: Omega::Constant,
                },
                FairnessKind::Cpp {
                    grid_step: DEFAULT_GRID_STEP,
                },
                FairnessKind::Cf,
                FairnessKind::Psf {
                    omega: Omega::Identity,
                },
                FairnessKind::Eo {
                    status_quo: StatusQuo::AlwaysTreat,
                },
            ],
            frontier_resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            population_scale: 100_000.0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: Self = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let p = &self.policy;
        if !(p.budget > 0.0 && p.budget < 1.0) {
            return bad(format!(
                "policy.budget must lie in (0, 1), got {}",
                p.budget
            ));
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return bad(format!(
                "policy.lambda must be a finite value >= 0, got {}",
                p.lambda
            ));
        }
        if p.frontier_resolution < 2 {
            return bad(format!(
                "policy.frontier_resolution must be at least 2, got {}",
                p.frontier_resolution
            ));
        }
        let mut seen = Vec::new();
        for k in &p.definitions {
            k.validate()?;
            if seen.contains(&k.name()) {
                return bad(format!("definition {:?} listed twice", k.name()));
            }
            seen.push(k.name());
        }
        let s = &self.simulation;
        if s.n < 1 {
            return bad("simulation.n must be at least 1".into());
        }
        if !(s.bin_width > 0.0) || !(s.score_lo < s.score_hi) {
            return bad(format!(
                "simulation needs bin_width > 0 and score_lo < score_hi, got {}, [{}, {}]",
                s.bin_width, s.score_lo, s.score_hi
            ));
        }
        if !(self.output.population_scale > 0.0) {
            return bad(format!(
                "output.population_scale must be positive, got {}",
                self.output.population_scale
            ));
        }
        self.build_scm()?;
        Ok(())
    }

    pub fn build_scm(&self) -> Result<Scm, CliError> {
        let mut c = self.scm.constants.clone();
        if c.is_empty() {
            c = admissions_defaults();
        }
        for (k, v) in &self.scm.overrides {
            if !admissions_defaults().contains_key(k) {
                return Err(CliError::Config(format!(
                    "scm.overrides: unknown constant {k:?}"
                )));
            }
            c.insert(k.clone(), *v);
        }
        Ok(admissions_scm(&c)?)
    }

    pub fn binning(&self) -> Binning {
        Binning {
            width: self.simulation.bin_width,
            lo: self.simulation.score_lo,
            hi: self.simulation.score_hi,
        }
    }
}
