//! Power metrics and the stage-configuration sweep harness.
//!
//! EPS is the number of ternary cells enabled for one search; MEPS its
//! mean over a trace. POF, the power optimization factor, is the saving
//! relative to a single-stage array that enables every cell of every row:
//! `POF = (1 - MEPS / EPS_max) * 100`. Per-cell wattage cancels out of the
//! ratio; [`NOMINAL_CELL_WATTS`] exists only for reports.

use crate::compact::MinimizedTable;
use crate::engine::{EngineError, MstcamEngine, StageConfig};
use crate::table::RoutingTable;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal per-cell power draw; POF is invariant to it.
pub const NOMINAL_CELL_WATTS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("MEPS of an empty sample set is undefined")]
    EmptySamples,
    #[error("EPS_max must be positive")]
    ZeroEpsMax,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Worst-case enabled cells per search: all `rows` rows at full `width`.
pub fn eps_max(rows: usize, width: u32) -> u64 {
    rows as u64 * width as u64
}

/// Arithmetic mean of EPS samples.
pub fn meps(samples: &[u64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    Ok(samples.iter().sum::<u64>() as f64 / samples.len() as f64)
}

/// Power optimization factor in percent.
pub fn pof(meps: f64, eps_max: u64) -> Result<f64, MetricsError> {
    if eps_max == 0 {
        return Err(MetricsError::ZeroEpsMax);
    }
    Ok((1.0 - meps / eps_max as f64) * 100.0)
}

/// Composes a row-reduction POF with an enabling POF: the savings multiply
/// on the remaining power, so the totals combine as
/// `100 * (1 - (1 - a/100) * (1 - b/100))`.
pub fn total_pof(minimization_pof: f64, enabling_pof: f64) -> f64 {
    100.0 * (1.0 - (1.0 - minimization_pof / 100.0) * (1.0 - enabling_pof / 100.0))
}

/// Row-reduction saving of the minimizer, in percent.
pub fn minimization_pof(rows_before: usize, rows_after: usize) -> f64 {
    if rows_before == 0 {
        return 0.0;
    }
    100.0 * (1.0 - rows_after as f64 / rows_before as f64)
}

/// Power measurement of one stage configuration over one trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerReport {
    /// Stage widths rendered as `w1+w2+...`.
    pub config: String,
    pub stages: usize,
    pub rows: usize,
    pub width: u32,
    pub trace_len: usize,
    pub eps_max: u64,
    pub meps: f64,
    pub pof: f64,
    /// Raw per-search EPS values, when histogram collection is requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_samples: Option<Vec<u64>>,
}

/// Runs every trace address through the engine, returning per-search EPS.
pub fn run_trace(engine: &MstcamEngine, trace: &[u64]) -> Vec<u64> {
    trace.iter().map(|&a| engine.lookup(a).eps).collect()
}

/// Measures one engine over a trace.
pub fn measure(
    engine: &MstcamEngine,
    trace: &[u64],
    keep_samples: bool,
) -> Result<PowerReport, MetricsError> {
    let samples = run_trace(engine, trace);
    let eps_max = engine.eps_max();
    let meps_v = meps(&samples)?;
    let pof_v = pof(meps_v, eps_max)?;
    Ok(PowerReport {
        config: engine.config().render(),
        stages: engine.config().stage_count(),
        rows: engine.row_count(),
        width: engine.width(),
        trace_len: trace.len(),
        eps_max,
        meps: meps_v,
        pof: pof_v,
        eps_samples: keep_samples.then_some(samples),
    })
}

/// Measures each stage configuration over the same minimized table and
/// trace. The table is compacted once by the caller; every configuration
/// sees identical rows, so the sweep isolates the enabling effect.
pub fn sweep_stage_configs(
    minimized: &MinimizedTable,
    table: &RoutingTable,
    configs: &[StageConfig],
    trace: &[u64],
    strict: bool,
    keep_samples: bool,
) -> Result<Vec<PowerReport>, MetricsError> {
    for c in configs {
        if c.word_width() != minimized.width {
            return Err(MetricsError::Engine(EngineError::InvalidStageConfig {
                widths: c.widths().to_vec(),
                word_width: minimized.width,
            }));
        }
    }
    configs
        .par_iter()
        .map(|config| {
            let engine =
                MstcamEngine::build(minimized, config.clone(), table.clone(), strict)?;
            measure(&engine, trace, keep_samples)
        })
        .collect()
}

/// The configurations of a sweep mode.
pub fn sweep_configs(mode: &str, width: u32) -> Result<Vec<StageConfig>, EngineError> {
    match mode {
        "two-stage" => (1..width)
            .map(|w1| StageConfig::new(vec![w1, width - w1], width))
            .collect(),
        "three-stage" => {
            // all integer completions at small widths, stride 4 at width > 16
            let step = if width > 16 { 4 } else { 1 };
            let mut out = Vec::new();
            for w1 in (1..width - 1).step_by(step) {
                for w2 in (1..width - w1).step_by(step) {
                    out.push(StageConfig::new(vec![w1, w2, width - w1 - w2], width)?);
                }
            }
            Ok(out)
        }
        "four-stage" => {
            let step = if width > 16 { 4 } else { 1 };
            let mut out = Vec::new();
            for w1 in (1..width - 2).step_by(step) {
                for w2 in (1..width - w1 - 1).step_by(step) {
                    for w3 in (1..width - w1 - w2).step_by(step) {
                        out.push(StageConfig::new(
                            vec![w1, w2, w3, width - w1 - w2 - w3],
                            width,
                        )?);
                    }
                }
            }
            Ok(out)
        }
        "powers-of-two" => {
            let mut out = Vec::new();
            let mut k = 1;
            while k <= width {
                if width % k == 0 {
                    out.push(StageConfig::equal_split(width, k)?);
                }
                k *= 2;
            }
            Ok(out)
        }
        other => Err(EngineError::BadStageList(format!(
            "unknown sweep mode {other:?}"
        ))),
    }
}
