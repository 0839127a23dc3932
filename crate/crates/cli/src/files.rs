//! On-disk artifacts: the result file and the plot-ready CSV tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use specoex::scenario::ScenarioConfig;
use specoex::C64;

/// Fixed round-trip float format, 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_pairs(v: &DVector<C64>) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub label: String,
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything needed to re-evaluate, audit and re-plot a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    /// `design` or the initializer name for `init-only`.
    pub kind: String,
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub best_start: String,
    pub chi: f64,
    pub chi_db: f64,
    pub power: f64,
    pub phases: Vec<f64>,
    pub code: Vec<[f64; 2]>,
    pub filter: Vec<[f64; 2]>,
    pub iterations: usize,
    pub converged: bool,
    pub energy: f64,
    pub band_energies: Vec<f64>,
    pub caps: Vec<f64>,
    pub band_slacks: Vec<f64>,
    pub par: f64,
    pub per_start: Vec<StartRecord>,
    /// Objective trajectory of the selected start.
    pub trajectory: Vec<f64>,
}

impl ResultFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn code(&self) -> DVector<C64> {
        from_pairs(&self.code)
    }

    pub fn filter(&self) -> DVector<C64> {
        from_pairs(&self.filter)
    }
}

/// Write a CSV file with a header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// A starting code read from disk: a result file, an object with a `code` field,
/// or a bare list of `[re, im]` pairs.
pub fn load_start_code(path: &Path) -> Result<DVector<C64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let pairs = match value {
        serde_json::Value::Object(mut map) => map.remove("code").context("start file has no `code` field")?,
        other => other,
    };
    let pairs: Vec<[f64; 2]> = serde_json::from_value(pairs).context("start code must be a list of [re, im] pairs")?;
    Ok(from_pairs(&pairs))
}
