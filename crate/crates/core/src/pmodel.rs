//! Binomial-cascade mass exponents: τ(q) = -ln(p^q + (1-p)^q) / ln 2,
//! least-squares fitting of p to an estimated τ grid, and the
//! cross-sectional g(p) histogram.

use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};
use crate::numerics::{kahan_sum, KahanSum};

/// Fits report p on the canonical branch; τ is symmetric under p <-> 1-p.
pub const P_MAX: f64 = 0.5;
/// Bin width of the cross-sectional g(p) histogram.
pub const HIST_BIN_WIDTH: f64 = 0.01;
/// Grid-scan resolution that brackets the golden-section refinement.
const SCAN_STEP: f64 = 0.005;
/// Optimizer output tolerance in p.
const FIT_TOL: f64 = 1e-8;

/// τ(q) of the binomial cascade with weight p.
///
/// Evaluated via the dominant branch: ln(p^q + o^q) = q ln m + ln(1 + (o/m)^q)
/// with m the larger of the two terms, so no intermediate overflows even
/// at large |q|.
pub fn pmodel_tau(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(MfError::InvalidParameter {
            name: "p",
            reason: format!("weight must lie strictly inside (0, 1), got {p}"),
        });
    }
    Ok(tau_unchecked(p, q))
}

fn tau_unchecked(p: f64, q: f64) -> f64 {
    let a = p.min(1.0 - p);
    let b = p.max(1.0 - p);
    // b^q dominates for q <= 0, a^q for large positive q; pick per sign of
    // the exponent difference
    let (m, o) = if q >= 0.0 { (b, a) } else { (a, b) };
    // m^q is the larger term by construction
    let ln_sum = q * m.ln() + (o / m).powf(q).ln_1p();
    -ln_sum / std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PModelFit {
    /// Canonical-branch weight, 0 < p <= 0.5.
    pub p: f64,
    pub rss: f64,
    /// τ(q) − τ_model(q) aligned to the input q grid; None where τ was
    /// undefined and excluded from the objective.
    pub per_q_residuals: Vec<Option<f64>>,
    pub n_points: usize,
    /// Set when the optimizer ran against the p -> 0 boundary.
    pub boundary_warning: bool,
}

/// Least-squares fit of the cascade weight to an estimated τ(q) grid.
pub fn fit_pmodel(q_values: &[f64], tau: &[Option<f64>]) -> Result<PModelFit> {
    assert_eq!(q_values.len(), tau.len());
    let points: Vec<(f64, f64)> = q_values
        .iter()
        .zip(tau)
        .filter_map(|(&q, t)| t.map(|t| (q, t)))
        .collect();
    if points.len() < 5 {
        return Err(MfError::InvalidParameter {
            name: "tau",
            reason: format!("need at least 5 defined tau values, got {}", points.len()),
        });
    }

    let rss = |p: f64| -> f64 {
        let mut acc = KahanSum::new();
        for &(q, t) in &points {
            let r = t - tau_unchecked(p, q);
            acc.add(r * r);
        }
        acc.value()
    };

    // coarse scan brackets the minimum; golden section refines inside the
    // bracketing cells
    let mut best_i = 0;
    let mut best_val = f64::INFINITY;
    let scan: Vec<f64> = {
        let mut v: Vec<f64> = (1..)
            .map(|i| i as f64 * SCAN_STEP)
            .take_while(|&p| p < P_MAX)
            .collect();
        v.push(P_MAX);
        v
    };
    for (i, &p) in scan.iter().enumerate() {
        let v = rss(p);
        if v < best_val {
            best_val = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { SCAN_STEP / 64.0 } else { scan[best_i - 1] };
    let hi = if best_i + 1 == scan.len() { P_MAX } else { scan[best_i + 1] };

    let (mut p_star, refined) = golden_section(&rss, lo, hi, FIT_TOL);
    let mut rss_star = refined;
    // the refinement never loses to the scan on a unimodal objective; keep
    // the scan point if numerics say otherwise
    if best_val < rss_star {
        p_star = scan[best_i];
        rss_star = best_val;
    }

    let per_q_residuals = q_values
        .iter()
        .zip(tau)
        .map(|(&q, t)| t.map(|t| t - tau_unchecked(p_star, q)))
        .collect();
    Ok(PModelFit {
        p: p_star,
        rss: rss_star,
        per_q_residuals,
        n_points: points.len(),
        boundary_warning: p_star < SCAN_STEP,
    })
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PHistogram {
    /// len = bins + 1; bins are integer multiples of the bin width.
    pub bin_edges: Vec<f64>,
    /// Relative frequencies g(p), summing to 1.
    pub frequencies: Vec<f64>,
    pub mean_p: f64,
    /// Population standard deviation (denominator n).
    pub std_p: f64,
    pub n: usize,
}

/// Relative-frequency histogram of fitted p values on a fixed-width grid.
pub fn build_histogram(p_values: &[f64], bin_width: f64) -> Result<PHistogram> {
    if p_values.is_empty() {
        return Err(MfError::EmptyInput("no p values to bin".into()));
    }
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(MfError::InvalidParameter {
            name: "bin_width",
            reason: format!("must be positive, got {bin_width}"),
        });
    }
    let min = p_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = p_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo_idx = (min / bin_width).floor() as i64;
    let hi_idx = (max / bin_width).floor() as i64;
    let bins = (hi_idx - lo_idx + 1) as usize;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| (lo_idx + i as i64) as f64 * bin_width).collect();

    let mut counts = vec![0usize; bins];
    for &p in p_values {
        let idx = (((p / bin_width).floor() as i64) - lo_idx) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let n = p_values.len();
    let frequencies = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let mean_p = kahan_sum(p_values.iter().cloned()) / n as f64;
    let var = kahan_sum(p_values.iter().map(|&p| (p - mean_p) * (p - mean_p))) / n as f64;
    Ok(PHistogram { bin_edges, frequencies, mean_p, std_p: var.sqrt(), n })
}
