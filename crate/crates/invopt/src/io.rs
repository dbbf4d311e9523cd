//! File formats: JSON schemas for models, parameter spaces, datasets,
//! streams, and networks, plus deterministic report emission (`result.json`,
//! `losses.csv`, `trajectory.csv`). Floats in reports are rounded to 12
//! significant digits so repeated runs produce byte-identical artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{EstStatus, EstimationResult};
use crate::online::OnlineReport;

/// Round to 12 significant digits through a decimal round-trip; the result
/// is a double that serializes identically on every run.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// 12-significant-digit decimal text for CSV cells.
pub fn fmt_sig(v: f64) -> String {
    format!("{:?}", round_sig(v))
}

fn round_vec(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round_sig).collect()
}

/// Schema of `result.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultDoc {
    pub method: String,
    pub status: EstStatus,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub per_obs_loss: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub versions: BTreeMap<String, String>,
}

fn versions() -> BTreeMap<String, String> {
    let mut v = BTreeMap::new();
    v.insert("invopt".into(), env!("CARGO_PKG_VERSION").into());
    v.insert("format".into(), "1".into());
    v
}

impl ResultDoc {
    pub fn from_estimation(method: &str, res: &EstimationResult) -> Self {
        ResultDoc {
            method: method.into(),
            status: res.status,
            theta: round_vec(&res.theta),
            objective: round_sig(res.objective),
            per_obs_loss: round_vec(&res.per_obs_loss),
            diagnostics: res
                .diagnostics
                .iter()
                .map(|(k, &v)| (k.clone(), round_sig(v)))
                .collect(),
            versions: versions(),
        }
    }

    /// A result document for operations without an estimation payload
    /// (validation, forward solves).
    pub fn bare(method: &str, status: EstStatus, theta: Vec<f64>, objective: f64) -> Self {
        ResultDoc {
            method: method.into(),
            status,
            theta: round_vec(&theta),
            objective: round_sig(objective),
            per_obs_loss: vec![],
            diagnostics: BTreeMap::new(),
            versions: versions(),
        }
    }

    pub fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.into(), round_sig(value));
        self
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `losses.csv`: one row per observation.
pub fn losses_csv(losses: &[f64]) -> String {
    let mut out = String::from("index,loss\n");
    for (i, &l) in losses.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_sig(l)));
    }
    out
}

/// `trajectory.csv`: per-round iterate, instantaneous loss, and the average
/// regret at the recorded horizons (blank elsewhere).
pub fn trajectory_csv(report: &OnlineReport) -> String {
    let dim = report.thetas.first().map_or(0, |t| t.len());
    let mut out = String::from("t,loss,avg_regret");
    for k in 0..dim {
        out.push_str(&format!(",theta_{k}"));
    }
    out.push('\n');
    let regret: BTreeMap<usize, f64> = report.regret_curve.iter().copied().collect();
    for (i, loss) in report.losses.iter().enumerate() {
        let t = i + 1;
        out.push_str(&format!("{t},{}", fmt_sig(*loss)));
        match regret.get(&t) {
            Some(&r) => out.push_str(&format!(",{}", fmt_sig(r))),
            None => out.push(','),
        }
        for v in &report.thetas[i] {
            out.push_str(&format!(",{}", fmt_sig(*v)));
        }
        out.push('\n');
    }
    out
}

/// Plot-data emission: an (x, y) series as two-column CSV.
pub fn series_csv(name: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("x,{name}\n");
    for &(x, y) in points {
        out.push_str(&format!("{},{}\n", fmt_sig(x), fmt_sig(y)));
    }
    out
}

/// The stream format for online estimation: observations arrive in file
/// order; `models[observations[t].instance]` is round t's forward model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamFile {
    pub dataset: crate::model::Dataset<crate::model::LinearForwardModel>,
    pub space: crate::model::ParameterSpace,
}

/// Input for pathway benchmarks: reference (clinical) paths plus optional
/// outcome-labelled patient paths.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct PathsFile {
    pub reference: Vec<Vec<f64>>,
    #[serde(default)]
    pub survived: Vec<Vec<f64>>,
    #[serde(default)]
    pub died: Vec<Vec<f64>>,
}

/// Input for traffic benchmarks: the instance and observed per-period flows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficFile {
    pub instance: crate::apps::TrafficInstance,
    pub observed: Vec<Vec<f64>>,
}
