//! Measure construction, partition functions, scaling fits and spectra.
//!
//! The pipeline: a non-negative series is cut into N = T/s boxes at each
//! box size s, box sums are normalized into a measure, moments
//! χ_q(s) = Σ μ^q are evaluated in log space, τ(q) is the log-log slope of
//! χ_q over a per-q scaling range, and (α, f(α)) follows by Legendre
//! transform of τ.

mod grid;
mod legendre;
mod measure;
mod partition;
mod scaling;

pub use grid::AnalysisGrid;
pub use legendre::{legendre_spectrum, Spectrum};
pub use measure::{build_measure, BoxMeasure};
pub use partition::{ln_partition, PartitionTable};
pub use scaling::{estimate_tau, select_scaling_range, ScaleRange, TauEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeParams {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    /// Minimum number of box sizes a scaling range must retain.
    pub min_scales: usize,
    /// Multiple of the median upper-scale increment that flags a jump.
    pub jump_threshold: f64,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        Self { q_min: -3.0, q_max: 5.0, q_step: 0.2, min_scales: 5, jump_threshold: 5.0 }
    }
}

impl AnalyzeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_step > 0.0) || !self.q_step.is_finite() {
            return Err(MfError::InvalidParameter {
                name: "q_step",
                reason: format!("must be positive and finite, got {}", self.q_step),
            });
        }
        if !self.q_min.is_finite() || !self.q_max.is_finite() || self.q_min >= self.q_max {
            return Err(MfError::InvalidParameter {
                name: "q_range",
                reason: format!("need finite q_min < q_max, got [{}, {}]", self.q_min, self.q_max),
            });
        }
        if self.min_scales < 2 {
            return Err(MfError::InvalidParameter {
                name: "min_scales",
                reason: format!("regression needs at least 2 scales, got {}", self.min_scales),
            });
        }
        if !(self.jump_threshold > 0.0) || !self.jump_threshold.is_finite() {
            return Err(MfError::InvalidParameter {
                name: "jump_threshold",
                reason: format!("must be positive and finite, got {}", self.jump_threshold),
            });
        }
        Ok(())
    }
}

/// Everything derived from one series: partition table plus scaling fits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Analysis {
    pub table: PartitionTable,
    pub scaling: ScalingResult,
}

/// τ(q) with fit diagnostics and the Legendre spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub tau: Vec<Option<f64>>,
    pub fit_stderr: Vec<Option<f64>>,
    pub fit_r2: Vec<Option<f64>>,
    pub alpha: Vec<Option<f64>>,
    pub f_alpha: Vec<Option<f64>>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub delta_alpha: f64,
    /// F = [f(α_min) + f(α_max)] / 2, the spectrum-endpoint statistic.
    #[serde(rename = "F")]
    pub f_stat: f64,
    pub warnings: Vec<String>,
}

pub fn analyze(values: &[f64], params: &AnalyzeParams) -> Result<Analysis> {
    params.validate()?;
    let grid = AnalysisGrid::from_length(values.len(), params)?;
    analyze_with_grid(values, grid, params)
}

/// Run the pipeline on a pre-built grid (bootstrap replicates and ensembles
/// reuse one grid across many series).
pub fn analyze_with_grid(values: &[f64], grid: AnalysisGrid, params: &AnalyzeParams) -> Result<Analysis> {
    params.validate()?;
    let mut table = PartitionTable::compute(values, grid)?;
    let (ranges, scaling) = scaling_from_rows(
        &table.grid.q_values,
        &table.grid.box_sizes,
        &table.ln_chi,
        params,
    )?;
    table.scaling_ranges = ranges;
    Ok(Analysis { table, scaling })
}

/// Scaling-range selection, τ regression and Legendre spectrum over a
/// ln χ matrix. Shared by single-series analysis and ensemble averages.
pub fn scaling_from_rows(
    q_values: &[f64],
    box_sizes: &[usize],
    ln_chi: &[Vec<Option<f64>>],
    params: &AnalyzeParams,
) -> Result<(Vec<Option<ScaleRange>>, ScalingResult)> {
    let mut warnings = Vec::new();
    let mut ranges = Vec::with_capacity(q_values.len());
    for (qi, &q) in q_values.iter().enumerate() {
        match select_scaling_range(&ln_chi[qi], box_sizes, q, params.min_scales, params.jump_threshold) {
            Ok(r) => ranges.push(Some(r)),
            Err(e) => {
                warnings.push(format!("q = {q}: {e}"));
                ranges.push(None);
            }
        }
    }
    let est = estimate_tau(q_values, box_sizes, ln_chi, &ranges);
    let spectrum = legendre_spectrum(q_values, &est.tau)?;
    if !spectrum.concave {
        warnings.push("spectrum concavity violated beyond tolerance (alpha increases with q)".into());
    }
    let scaling = ScalingResult {
        tau: est.tau,
        fit_stderr: est.stderr,
        fit_r2: est.r2,
        alpha: spectrum.alpha,
        f_alpha: spectrum.f_alpha,
        alpha_min: spectrum.alpha_min,
        alpha_max: spectrum.alpha_max,
        delta_alpha: spectrum.delta_alpha,
        f_stat: spectrum.f_stat,
        warnings,
    };
    Ok((ranges, scaling))
}

pub(crate) fn validate_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(MfError::EmptyInput("volatility series is empty".into()));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(MfError::InvalidParameter {
                name: "values",
                reason: format!("value at index {i} is {v}; series must be finite and non-negative"),
            });
        }
    }
    Ok(())
}
