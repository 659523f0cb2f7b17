//! Scaling-range selection and τ(q) regression.
//!
//! Negative moments blow up on scales where some box holds almost no mass:
//! ln χ_q(s) is either undefined there (a truly empty box) or shows a
//! sudden jump off the power law. Fits for q < 0 therefore run on the
//! largest scales only, above the last undefined entry and the last
//! anomalous increment.

use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};
use crate::numerics::{median, ols};

/// Jump detection needs at least this many defined scales to say anything.
const MIN_DEFINED_FOR_SELECTION: usize = 6;
/// Floor on the increment scale, guarding the threshold against exactly
/// power-law data where the median increment deviation is pure noise.
const INCREMENT_FLOOR: f64 = 1e-12;

/// Contiguous fitted range, in box-size units (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub s_lo: usize,
    pub s_hi: usize,
    /// Largest excluded scale, when any scale was cut below the range.
    pub s_c: Option<usize>,
}

/// Pick the fitted range for one q row.
///
/// q >= 0 uses the full grid. For q < 0, the range starts above the
/// largest undefined scale; within the remaining suffix, the largest s
/// whose backward increment |Δ ln χ| exceeds `jump_threshold` times the
/// median increment over the upper half of scales becomes the cut point
/// s_c, and the range lies strictly above it. If that leaves fewer than
/// `min_scales` sizes, the widest jump-free window wins instead.
pub fn select_scaling_range(
    ln_chi_q: &[Option<f64>],
    box_sizes: &[usize],
    q: f64,
    min_scales: usize,
    jump_threshold: f64,
) -> Result<ScaleRange> {
    assert_eq!(ln_chi_q.len(), box_sizes.len());
    let n = box_sizes.len();
    if q >= 0.0 {
        return Ok(ScaleRange { s_lo: box_sizes[0], s_hi: box_sizes[n - 1], s_c: None });
    }

    let defined_total = ln_chi_q.iter().filter(|c| c.is_some()).count();
    if defined_total < MIN_DEFINED_FOR_SELECTION {
        return Err(MfError::InsufficientScalingRange {
            q,
            reason: format!(
                "only {defined_total} defined scales (need {MIN_DEFINED_FOR_SELECTION})"
            ),
        });
    }

    // contiguous defined suffix above the last undefined scale
    let first = ln_chi_q.iter().rposition(|c| c.is_none()).map_or(0, |i| i + 1);
    let ys: Vec<f64> = ln_chi_q[first..].iter().map(|c| c.unwrap()).collect();
    if ys.len() < min_scales.max(2) {
        return Err(MfError::InsufficientScalingRange {
            q,
            reason: format!("only {} scales above the last undefined entry", ys.len()),
        });
    }

    let incs: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let upper = &incs[incs.len() / 2..];
    let threshold = jump_threshold * median(upper).max(INCREMENT_FLOOR);
    // incs[j] is the increment "at" box_sizes[first + j + 1]
    let last_jump = incs.iter().rposition(|&d| d > threshold);

    let start = match last_jump {
        Some(j) => first + j + 2,
        None => first,
    };
    if n - start >= min_scales {
        let s_c = if start > 0 { Some(box_sizes[start - 1]) } else { None };
        return Ok(ScaleRange { s_lo: box_sizes[start], s_hi: box_sizes[n - 1], s_c });
    }

    // fallback: widest maximal run without an anomalous internal increment,
    // ties to the larger scales
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = first;
    for j in 0..=incs.len() {
        let broken = j < incs.len() && incs[j] > threshold;
        if broken || j == incs.len() {
            let run_end = first + j;
            let width = run_end - run_start + 1;
            if best.map_or(true, |(a, b)| width >= b - a + 1) {
                best = Some((run_start, run_end));
            }
            run_start = first + j + 1;
        }
    }
    match best {
        Some((a, b)) if b - a + 1 >= min_scales => {
            let s_c = if a > 0 { Some(box_sizes[a - 1]) } else { None };
            Ok(ScaleRange { s_lo: box_sizes[a], s_hi: box_sizes[b], s_c })
        }
        _ => Err(MfError::InsufficientScalingRange {
            q,
            reason: format!("no jump-free window of {min_scales} scales"),
        }),
    }
}

#[derive(Clone, Debug)]
pub struct TauEstimate {
    pub tau: Vec<Option<f64>>,
    pub stderr: Vec<Option<f64>>,
    pub r2: Vec<Option<f64>>,
}

/// Unweighted OLS slope of ln χ_q against ln s over each selected range.
pub fn estimate_tau(
    q_values: &[f64],
    box_sizes: &[usize],
    ln_chi: &[Vec<Option<f64>>],
    ranges: &[Option<ScaleRange>],
) -> TauEstimate {
    let nq = q_values.len();
    let mut tau = vec![None; nq];
    let mut stderr = vec![None; nq];
    let mut r2 = vec![None; nq];
    for qi in 0..nq {
        let Some(range) = ranges[qi] else { continue };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (si, &s) in box_sizes.iter().enumerate() {
            if s < range.s_lo || s > range.s_hi {
                continue;
            }
            if let Some(y) = ln_chi[qi][si] {
                xs.push((s as f64).ln());
                ys.push(y);
            }
        }
        if xs.len() < 2 {
            continue;
        }
        let fit = ols(&xs, &ys);
        tau[qi] = Some(fit.slope);
        stderr[qi] = Some(fit.stderr);
        r2[qi] = Some(fit.r2);
    }
    TauEstimate { tau, stderr, r2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes() -> Vec<usize> {
        (0..=10).map(|k| 1usize << k).collect()
    }

    #[test]
    fn positive_q_takes_full_range() {
        let row: Vec<Option<f64>> = (0..11).map(|i| Some(i as f64)).collect();
        let r = select_scaling_range(&row, &sizes(), 2.0, 5, 5.0).unwrap();
        assert_eq!(r, ScaleRange { s_lo: 1, s_hi: 1024, s_c: None });
    }

    #[test]
    fn clean_power_law_keeps_full_range_at_negative_q() {
        // ln chi = -3 ln s: every increment equals the median, no jump
        let row: Vec<Option<f64>> = sizes()
            .iter()
            .map(|&s| Some(-3.0 * (s as f64).ln()))
            .collect();
        let r = select_scaling_range(&row, &sizes(), -3.0, 5, 5.0).unwrap();
        assert_eq!(r, ScaleRange { s_lo: 1, s_hi: 1024, s_c: None });
    }

    #[test]
    fn undefined_prefix_is_cut() {
        let row: Vec<Option<f64>> = sizes()
            .iter()
            .map(|&s| if s <= 8 { None } else { Some(-2.0 * (s as f64).ln()) })
            .collect();
        let r = select_scaling_range(&row, &sizes(), -1.0, 5, 5.0).unwrap();
        assert_eq!(r.s_lo, 16);
        assert_eq!(r.s_hi, 1024);
        assert_eq!(r.s_c, Some(8));
    }

    #[test]
    fn jump_is_cut_with_sc_at_jump_scale() {
        // smooth slope -2 except a +40 offset on the three smallest scales:
        // the increment between s = 4 and s = 8 is anomalous
        let row: Vec<Option<f64>> = sizes()
            .iter()
            .map(|&s| {
                let base = -2.0 * (s as f64).ln();
                Some(if s <= 4 { base + 40.0 } else { base })
            })
            .collect();
        let r = select_scaling_range(&row, &sizes(), -3.0, 5, 5.0).unwrap();
        // increment "at" s = 8 violates; range strictly above
        assert_eq!(r.s_c, Some(8));
        assert_eq!(r.s_lo, 16);
    }

    #[test]
    fn too_few_defined_scales_errors() {
        let row: Vec<Option<f64>> = sizes()
            .iter()
            .map(|&s| if s <= 64 { None } else { Some(1.0) })
            .collect();
        let err = select_scaling_range(&row, &sizes(), -2.0, 5, 5.0).unwrap_err();
        assert!(matches!(err, MfError::InsufficientScalingRange { .. }));
    }

    #[test]
    fn fallback_picks_widest_clean_window() {
        // jump near the top: strictly-above rule would leave 1 scale, the
        // fallback keeps the wide clean window below instead
        let row: Vec<Option<f64>> = sizes()
            .iter()
            .map(|&s| {
                let base = -2.0 * (s as f64).ln();
                Some(if s >= 512 { base - 50.0 } else { base })
            })
            .collect();
        let r = select_scaling_range(&row, &sizes(), -3.0, 5, 5.0).unwrap();
        assert_eq!(r.s_lo, 1);
        assert_eq!(r.s_hi, 256);
    }

    #[test]
    fn estimate_recovers_exact_slope() {
        let szs = sizes();
        let qv = [0.0, 2.0];
        let rows: Vec<Vec<Option<f64>>> = vec![
            szs.iter().map(|&s| Some(2.0 * (s as f64).ln())).collect(),
            szs.iter().map(|&s| Some(2.0 * (s as f64).ln() + 1.0)).collect(),
        ];
        let ranges = vec![
            Some(ScaleRange { s_lo: 1, s_hi: 1024, s_c: None }),
            Some(ScaleRange { s_lo: 4, s_hi: 256, s_c: Some(2) }),
        ];
        let est = estimate_tau(&qv, &szs, &rows, &ranges);
        for qi in 0..2 {
            assert!((est.tau[qi].unwrap() - 2.0).abs() < 1e-12);
            assert!(est.stderr[qi].unwrap() < 1e-12);
            assert!((est.r2[qi].unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn undefined_range_yields_undefined_tau() {
        let szs = sizes();
        let rows: Vec<Vec<Option<f64>>> = vec![szs.iter().map(|_| Some(0.0)).collect()];
        let est = estimate_tau(&[-3.0], &szs, &rows, &[None]);
        assert!(est.tau[0].is_none());
        assert!(est.stderr[0].is_none());
    }
}
