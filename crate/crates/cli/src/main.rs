//! `causalfair`: simulate the admissions model, solve fairness-constrained
//! policies, and report their position against the diversity/graduation
//! frontier.

mod commands;
mod config;
mod error;
mod io;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::InputFiles;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "causalfair",
    version,
    about = "Causal fairness policy experiments"
)]
struct Cli {
    /// JSON experiment config; omitted blocks and fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Distribution table (group, bin, y0, y1, mass) instead of simulating.
    #[arg(long)]
    distribution: Option<PathBuf>,
    /// Transition table exported by `simulate` or `run`.
    #[arg(long, requires = "distribution")]
    transitions: Option<PathBuf>,
}

impl From<Inputs> for InputFiles {
    fn from(i: Inputs) -> Self {
        InputFiles {
            distribution: i.distribution,
            transitions: i.transitions,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: simulate, solve every definition, sweep the frontier,
    /// measure dominance, analyze the transition chains.
    Run,
    /// Sample and discretize; writes distribution.csv and transitions.csv.
    Simulate,
    /// Solve every configured definition; writes policy.csv and residuals.json.
    Optimize(Inputs),
    /// Sweep threshold policies; writes frontier.csv.
    Frontier(Inputs),
    /// Fairness residuals and dominance gap of an external policy.
    Audit {
        #[command(flatten)]
        inputs: Inputs,
        /// Policy CSV with columns group, bin, d (and optionally definition).
        #[arg(long)]
        policy: PathBuf,
        /// Selects rows of a multi-definition policy CSV.
        #[arg(long)]
        definition: Option<String>,
    },
    /// Recurrent classes of the averaged transition chain.
    Markov {
        #[arg(long)]
        transitions: PathBuf,
        /// Policy CSV to compare against the class structure.
        #[arg(long, requires = "definition")]
        policy: Option<PathBuf>,
        #[arg(long)]
        definition: Option<String>,
    },
    /// Beta conditional tail-mean ordering.
    BetaCheck {
        #[arg(long)]
        mu0: f64,
        #[arg(long)]
        mu1: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 0.05)]
        t_step: f64,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(Into::into),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    cfg.validate()?;
    let out = PathBuf::from(&cfg.output.directory);
    match cli.command {
        Command::Run => commands::run(&cfg, &out),
        Command::Simulate => commands::simulate_cmd(&cfg, &out),
        Command::Optimize(i) => commands::optimize(&cfg, &i.into(), &out),
        Command::Frontier(i) => commands::frontier_cmd(&cfg, &i.into(), &out),
        Command::Audit {
            inputs,
            policy,
            definition,
        } => print_json(&commands::audit(
            &cfg,
            &inputs.into(),
            &policy,
            definition.as_deref(),
            &out,
        )?),
        Command::Markov {
            transitions,
            policy,
            definition,
        } => {
            let sel = policy.as_deref().zip(definition.as_deref());
            print_json(&commands::markov_cmd(&transitions, sel, &out)?)
        }
        Command::BetaCheck {
            mu0,
            mu1,
            v,
            t_step,
        } => print_json(&commands::beta_check(mu0, mu1, v, t_step, &out)?),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
