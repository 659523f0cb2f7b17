//! Shuffle surrogates and bootstrap significance tests.
//!
//! Two null hypotheses are tested against n shuffled replicates of the
//! series. H1: the spectrum width of the real series does not exceed the
//! shuffled width; p1 is the fraction of replicates with
//! Δα_real ≤ Δα_rnd. H2: the spectrum-endpoint statistic F of the real
//! series is not below the shuffled one; p2 is the fraction with
//! F_real ≥ F_rnd. Small p means the real ordering matters, i.e. genuine
//! multifractality rather than a fat-tailed value distribution.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};
use crate::mfcore::{analyze_with_grid, AnalysisGrid, AnalyzeParams};

/// SplitMix64 finalizer: replicate k gets a seed that is a pure function
/// of (master, k), so replicates can run in any order on any schedule.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut z = master ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fisher-Yates permutation under a seeded generator; the value multiset
/// is preserved exactly.
pub fn shuffle(values: &[f64], seed: u64) -> Vec<f64> {
    let mut out = values.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.shuffle(&mut rng);
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub n: usize,
    pub level: f64,
    pub master_seed: u64,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        Self { n: 1000, level: 0.01, master_seed: 42 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub n: usize,
    /// Replicates that completed the pipeline; the p-value denominator.
    pub n_effective: usize,
    pub failed_replicates: usize,
    pub delta_alpha_real: f64,
    #[serde(rename = "F_real")]
    pub f_real: f64,
    /// Per-replicate statistics in replicate order; None marks a failed
    /// replicate.
    pub delta_alpha_rnd: Vec<Option<f64>>,
    #[serde(rename = "F_rnd")]
    pub f_rnd: Vec<Option<f64>>,
    pub p1: f64,
    pub p2: f64,
    pub significant_1: bool,
    pub significant_2: bool,
    pub level: f64,
    pub master_seed: u64,
    pub warnings: Vec<String>,
}

/// Run the full pipeline on the real series and on n shuffled replicates,
/// each with its own scaling-range selection on the shared grid.
pub fn bootstrap_test(
    values: &[f64],
    grid: &AnalysisGrid,
    params: &AnalyzeParams,
    bparams: &BootstrapParams,
) -> Result<BootstrapReport> {
    if bparams.n == 0 {
        return Err(MfError::InvalidParameter {
            name: "n",
            reason: "at least one replicate is required".into(),
        });
    }
    if !(bparams.level > 0.0 && bparams.level < 1.0) {
        return Err(MfError::InvalidParameter {
            name: "level",
            reason: format!("significance level must be in (0, 1), got {}", bparams.level),
        });
    }
    if values.len() < 2 {
        return Err(MfError::EmptyInput("need at least 2 values to shuffle".into()));
    }

    let real = analyze_with_grid(values, grid.clone(), params)?;
    let delta_alpha_real = real.scaling.delta_alpha;
    let f_real = real.scaling.f_stat;

    let replicates: Vec<Option<(f64, f64)>> = (0..bparams.n as u64)
        .into_par_iter()
        .map(|k| {
            let surrogate = shuffle(values, derive_seed(bparams.master_seed, k));
            analyze_with_grid(&surrogate, grid.clone(), params)
                .ok()
                .map(|a| (a.scaling.delta_alpha, a.scaling.f_stat))
        })
        .collect();

    let failed = replicates.iter().filter(|r| r.is_none()).count();
    let n_effective = bparams.n - failed;
    if failed * 10 > bparams.n {
        return Err(MfError::UnreliableTest { failed, requested: bparams.n });
    }
    let mut warnings = Vec::new();
    if failed > 0 {
        warnings.push(format!(
            "{failed} of {} replicates failed analysis and were excluded from the denominator",
            bparams.n
        ));
    }

    let hits1 = replicates
        .iter()
        .flatten()
        .filter(|(da, _)| delta_alpha_real <= *da)
        .count();
    let hits2 = replicates
        .iter()
        .flatten()
        .filter(|(_, f)| f_real >= *f)
        .count();
    let p1 = hits1 as f64 / n_effective as f64;
    let p2 = hits2 as f64 / n_effective as f64;

    Ok(BootstrapReport {
        n: bparams.n,
        n_effective,
        failed_replicates: failed,
        delta_alpha_real,
        f_real,
        delta_alpha_rnd: replicates.iter().map(|r| r.map(|(da, _)| da)).collect(),
        f_rnd: replicates.iter().map(|r| r.map(|(_, f)| f)).collect(),
        p1,
        p2,
        significant_1: p1 <= bparams.level,
        significant_2: p2 <= bparams.level,
        level: bparams.level,
        master_seed: bparams.master_seed,
        warnings,
    })
}
