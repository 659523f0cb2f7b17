//! JSON output documents. Every document echoes the effective
//! configuration under `config` so a result can be reproduced from the
//! file alone; none carry timestamps, so reruns are byte-identical.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleTable;
use crate::ingest::IngestReport;
use crate::mfcore::{Analysis, AnalysisGrid, ScaleRange, ScalingResult};
use crate::pmodel::{PHistogram, PModelFit};
use crate::stats::BootstrapReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub instrument_id: String,
    pub grid: AnalysisGrid,
    pub zero_box_counts: Vec<usize>,
    /// ln chi indexed [q][s]; null marks undefined cells.
    pub ln_chi: Vec<Vec<Option<f64>>>,
    pub scaling_ranges: Vec<Option<ScaleRange>>,
    #[serde(flatten)]
    pub scaling: ScalingResult,
}

impl AnalysisDocument {
    pub fn new(config: serde_json::Value, instrument_id: &str, analysis: Analysis) -> Self {
        let Analysis { table, scaling } = analysis;
        Self {
            version: VERSION.to_string(),
            config,
            instrument_id: instrument_id.to_string(),
            grid: table.grid,
            zero_box_counts: table.zero_box_counts,
            ln_chi: table.ln_chi,
            scaling_ranges: table.scaling_ranges,
            scaling,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub instrument_id: String,
    #[serde(flatten)]
    pub report: BootstrapReport,
}

impl BootstrapDocument {
    pub fn new(config: serde_json::Value, instrument_id: &str, report: BootstrapReport) -> Self {
        Self {
            version: VERSION.to_string(),
            config,
            instrument_id: instrument_id.to_string(),
            report,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PModelDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub instrument_id: String,
    pub q_values: Vec<f64>,
    #[serde(flatten)]
    pub fit: PModelFit,
}

impl PModelDocument {
    pub fn new(
        config: serde_json::Value,
        instrument_id: &str,
        q_values: Vec<f64>,
        fit: PModelFit,
    ) -> Self {
        Self {
            version: VERSION.to_string(),
            config,
            instrument_id: instrument_id.to_string(),
            q_values,
            fit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PModelBatchEntry {
    pub instrument_id: String,
    #[serde(flatten)]
    pub fit: PModelFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PModelBatchDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub fits: Vec<PModelBatchEntry>,
    pub failures: Vec<BatchFailure>,
    pub histogram: PHistogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub member_ids: Vec<String>,
    pub member_lengths: Vec<usize>,
    pub q_values: Vec<f64>,
    pub box_sizes: Vec<usize>,
    pub quorum: f64,
    pub quorum_count: usize,
    /// Defined-member count per [q][s] cell.
    pub member_count_per_cell: Vec<Vec<usize>>,
    pub quenched: EnsembleSideDocument,
    pub annealed: EnsembleSideDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSideDocument {
    pub ln_chi: Vec<Vec<Option<f64>>>,
    pub scaling_ranges: Vec<Option<ScaleRange>>,
    #[serde(flatten)]
    pub scaling: ScalingResult,
}

impl EnsembleDocument {
    pub fn new(
        config: serde_json::Value,
        table: EnsembleTable,
        quenched: crate::ensemble::EnsembleSide,
        annealed: crate::ensemble::EnsembleSide,
    ) -> Self {
        Self {
            version: VERSION.to_string(),
            config,
            member_ids: table.member_ids,
            member_lengths: table.member_lengths,
            q_values: table.q_values,
            box_sizes: table.box_sizes,
            quorum: table.quorum,
            quorum_count: table.quorum_count,
            member_count_per_cell: table.member_count_per_cell,
            quenched: EnsembleSideDocument {
                ln_chi: table.quenched_ln_chi,
                scaling_ranges: quenched.scaling_ranges,
                scaling: quenched.scaling,
            },
            annealed: EnsembleSideDocument {
                ln_chi: table.annealed_ln_chi,
                scaling_ranges: annealed.scaling_ranges,
                scaling: annealed.scaling,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub instrument_id: String,
    pub input: String,
    pub delta_alpha: Option<f64>,
    #[serde(rename = "F")]
    pub f_stat: Option<f64>,
    pub p_fit: Option<f64>,
    pub rss: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub input: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummaryDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub rows: Vec<BatchRow>,
    pub failures: Vec<BatchFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestMetaDocument {
    pub version: String,
    pub config: serde_json::Value,
    pub instrument_id: String,
    #[serde(flatten)]
    pub report: IngestReport,
}

pub fn to_json_pretty<T: Serialize>(doc: &T) -> crate::error::Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}
