//! Machine-readable run artifacts: the sweep CSV, the aggregate JSON
//! report, and the run manifest written alongside every output.

use crate::metrics::PowerReport;
use crate::synth::TableParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// CSV schema: `config,stages,rows,width,eps_max,meps,pof`, one row per
/// configuration, config rendered as `w1+w2+...`.
pub fn render_csv(reports: &[PowerReport]) -> String {
    let mut out = String::from("config,stages,rows,width,eps_max,meps,pof\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.config, r.stages, r.rows, r.width, r.eps_max, r.meps, r.pof
        );
    }
    out
}

/// Where a table or trace came from, for reproducibility.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    File { path: String },
    Generated { seed: u64, params: serde_json::Value },
}

/// Aggregate sweep/run report: all measurements plus the inputs that
/// produced them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateReport {
    pub table: Provenance,
    pub trace: Provenance,
    pub strict: bool,
    pub width: u32,
    pub rows_before: usize,
    pub rows_after: usize,
    pub minimization_pof: f64,
    pub reports: Vec<PowerReport>,
}

/// Everything needed to reproduce a run byte-for-byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub inputs: BTreeMap<String, String>,
    pub width: u32,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub stage_configs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub strict: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen_params: Option<TableParams>,
}

impl RunManifest {
    pub fn new(subcommand: &str, width: u32, strict: bool) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            inputs: BTreeMap::new(),
            width,
            stage_configs: Vec::new(),
            seed: None,
            strict,
            outputs: BTreeMap::new(),
            gen_params: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// The manifest path for a given output file.
    pub fn path_for(output: &std::path::Path) -> std::path::PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}
