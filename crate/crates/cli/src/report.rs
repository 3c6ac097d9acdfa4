use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cadpu_model::TrainConfig;
use serde::Serialize;

use crate::{CliError, Result};

/// Distances are point-set Chamfer and Hausdorff, no surface reconstruction.
pub const EVAL_MODE: &str = "direct point-set";
/// Reported distances are multiplied by 1e3.
pub const UNITS: &str = "1e-3";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub name: String,
    pub cd: f64,
    pub hd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: &'static str,
    pub units: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub objects: Vec<EvalRow>,
    pub mean_cd: f64,
    pub mean_hd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub patches: usize,
    pub cd: f64,
    pub hd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub mode: &'static str,
    pub units: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// What `value` holds in each row: "std" or "size".
    pub parameter: &'static str,
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub fn config_echo(config: &TrainConfig) -> BTreeMap<String, String> {
    config
        .to_text()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl EvalReport {
    pub fn new(seed: u64, config: &TrainConfig, objects: Vec<EvalRow>, wall_time_s: Option<f64>) -> Self {
        Self {
            mode: EVAL_MODE,
            units: UNITS,
            seed,
            config: config_echo(config),
            mean_cd: mean(objects.iter().map(|r| r.cd)),
            mean_hd: mean(objects.iter().map(|r| r.hd)),
            objects,
            wall_time_s,
        }
    }

    pub fn table(&self) -> String {
        let mut s = format!("# {EVAL_MODE} distances, x{UNITS}\n");
        let _ = writeln!(s, "{:<24} {:>12} {:>12}", "object", "CD", "HD");
        for r in &self.objects {
            let _ = writeln!(s, "{:<24} {:>12.4} {:>12.4}", r.name, r.cd, r.hd);
        }
        let _ = writeln!(s, "{:<24} {:>12.4} {:>12.4}", "mean", self.mean_cd, self.mean_hd);
        s
    }
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut s = format!("# {EVAL_MODE} distances, x{UNITS}\n");
        let _ = writeln!(s, "{:>10} {:>8} {:>12} {:>12}", self.parameter, "patches", "CD", "HD");
        for r in &self.rows {
            let _ = writeln!(s, "{:>10} {:>8} {:>12.4} {:>12.4}", r.value, r.patches, r.cd, r.hd);
        }
        s
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
