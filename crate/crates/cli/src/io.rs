use std::fs;
use std::path::{Path, PathBuf};

use causalfair::dist::{CfTableRow, FiniteJointDistribution, TableRow};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TEST_SCORE_PATHS: &str = "test_score";
pub const ALL_PATHS: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    #[serde(default)]
    pub definition: Option<String>,
    pub group: String,
    pub bin: i64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub paths: String,
    pub aprime: String,
    pub from_group: String,
    pub from_bin: i64,
    pub to_group: String,
    pub to_bin: i64,
    pub mass: f64,
    pub probability: f64,
}

pub fn out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rows = r
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(rows)
}

pub fn transition_records(dist: &FiniteJointDistribution, paths: &str) -> Vec<TransitionRecord> {
    let groups = dist.group_values();
    let bin = |i: usize| dist.support()[i].covariates.first().copied().unwrap_or(0);
    let mut out = Vec::new();
    for a in 0..dist.num_groups() {
        for i in 0..dist.len() {
            let Some(row) = dist.cf_row(a, i) else {
                continue;
            };
            for &(j, m) in row {
                out.push(TransitionRecord {
                    paths: paths.into(),
                    aprime: groups[a].clone(),
                    from_group: groups[dist.group(i)].clone(),
                    from_bin: bin(i),
                    to_group: groups[dist.group(j)].clone(),
                    to_bin: bin(j),
                    mass: m,
                    probability: m / dist.mass()[i],
                });
            }
        }
    }
    out
}

/// Rebuilds a distribution from the exported tables, keeping the
/// counterfactual rows of one path set.
pub fn load_distribution(
    table: &[TableRow],
    transitions: Option<&[TransitionRecord]>,
    paths: &str,
) -> Result<Option<FiniteJointDistribution>, CliError> {
    let cf: Option<Vec<CfTableRow>> = match transitions {
        None => None,
        Some(ts) => {
            let rows: Vec<CfTableRow> = ts
                .iter()
                .filter(|t| t.paths == paths)
                .map(|t| CfTableRow {
                    aprime: t.aprime.clone(),
                    i_group: t.from_group.clone(),
                    i_bin: t.from_bin,
                    j_group: t.to_group.clone(),
                    j_bin: t.to_bin,
                    mass: t.mass,
                })
                .collect();
            if rows.is_empty() {
                return Ok(None);
            }
            Some(rows)
        }
    };
    Ok(Some(FiniteJointDistribution::from_table(
        table,
        cf.as_deref(),
    )?))
}
