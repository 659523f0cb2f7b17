//! Partition function χ_q(s) in log space.
//!
//! Direct evaluation of Σ μ^q overflows f64 long before the interesting
//! range of q is reached (a 2^20-point series has μ down to ~1e-12, and
//! q = -3 cubes that). Every moment is therefore computed as
//!
//!   ln χ_q = ln Σ_n (u_n / u_ref)^q + q ln(u_ref / Σu)
//!
//! with u_ref the dominant branch for the sign of q (max u for q >= 0,
//! smallest nonzero u for q < 0), which keeps every exponentiated term in
//! (0, 1]. The two reference choices are algebraically identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{build_measure, BoxMeasure};
use super::scaling::ScaleRange;
use super::AnalysisGrid;
use crate::error::{MfError, Result};
use crate::numerics::KahanSum;

/// Per-scale cache of box-sum logarithms.
struct LogMeasure {
    /// ln u over nonzero boxes only.
    ln_u: Vec<f64>,
    ln_max: f64,
    ln_min: f64,
    ln_total: f64,
    zero_boxes: usize,
}

impl LogMeasure {
    fn from_measure(m: &BoxMeasure) -> Self {
        let ln_u: Vec<f64> = m.u.iter().filter(|&&x| x > 0.0).map(|&x| x.ln()).collect();
        let ln_max = m.max_u.ln();
        let ln_min = ln_u.iter().cloned().fold(f64::INFINITY, f64::min);
        Self { ln_u, ln_max, ln_min, ln_total: m.total_u.ln(), zero_boxes: m.zero_box_count }
    }

    /// ln χ_q, or None when q < 0 meets an empty box (negative moments of
    /// a zero measure diverge). Zero boxes contribute nothing for q >= 0,
    /// with 0^0 := 0 so q = 0 counts nonempty boxes.
    fn ln_chi(&self, q: f64) -> Option<f64> {
        if q < 0.0 && self.zero_boxes > 0 {
            return None;
        }
        let ln_ref = if q >= 0.0 { self.ln_max } else { self.ln_min };
        let mut acc = KahanSum::new();
        for &lu in &self.ln_u {
            acc.add((q * (lu - ln_ref)).exp());
        }
        Some(acc.value().ln() + q * (ln_ref - self.ln_total))
    }
}

/// ln χ_q(s) for a single measure, or None where undefined.
pub fn ln_partition(measure: &BoxMeasure, q: f64) -> Option<f64> {
    LogMeasure::from_measure(measure).ln_chi(q)
}

/// ln χ over the full (q, s) grid, plus per-q fitted scaling ranges once
/// selection has run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionTable {
    pub grid: AnalysisGrid,
    /// Indexed [q][s]; None marks undefined negative-q moments.
    pub ln_chi: Vec<Vec<Option<f64>>>,
    /// Zero-box count per box size.
    pub zero_box_counts: Vec<usize>,
    /// Per-q fitted range; None where no usable range exists.
    pub scaling_ranges: Vec<Option<ScaleRange>>,
}

impl PartitionTable {
    /// Evaluate the moment grid. Scales are independent and computed in
    /// parallel; output is identical for any worker count.
    pub fn compute(values: &[f64], grid: AnalysisGrid) -> Result<Self> {
        if values.len() < grid.analyzed_length {
            return Err(MfError::InvalidParameter {
                name: "grid",
                reason: format!(
                    "grid wants {} points but the series has {}",
                    grid.analyzed_length,
                    values.len()
                ),
            });
        }
        let v = &values[..grid.analyzed_length];
        super::validate_values(v)?;

        let per_scale: Vec<(Vec<Option<f64>>, usize)> = grid
            .box_sizes
            .par_iter()
            .map(|&s| {
                let m = build_measure(v, s)?;
                let logm = LogMeasure::from_measure(&m);
                let col: Vec<Option<f64>> = grid.q_values.iter().map(|&q| logm.ln_chi(q)).collect();
                Ok((col, m.zero_box_count))
            })
            .collect::<Result<_>>()?;

        let nq = grid.q_values.len();
        let ns = grid.box_sizes.len();
        let mut ln_chi = vec![vec![None; ns]; nq];
        let mut zero_box_counts = Vec::with_capacity(ns);
        for (si, (col, zeros)) in per_scale.into_iter().enumerate() {
            for (qi, cell) in col.into_iter().enumerate() {
                ln_chi[qi][si] = cell;
            }
            zero_box_counts.push(zeros);
        }
        Ok(Self { grid, ln_chi, zero_box_counts, scaling_ranges: Vec::new() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfcore::AnalyzeParams;
    use crate::numerics::kahan_sum;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn measure_from(values: &[f64]) -> BoxMeasure {
        build_measure(values, 1).unwrap()
    }

    #[test]
    fn q1_is_zero_q0_counts_boxes() {
        let m = measure_from(&[0.3, 0.7]);
        assert!(ln_partition(&m, 1.0).unwrap().abs() <= 1e-10);
        assert!((ln_partition(&m, 0.0).unwrap() - 2f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn known_second_moment() {
        // mu = [0.3, 0.7], q = 2: ln(0.09 + 0.49)
        let m = measure_from(&[0.3, 0.7]);
        let got = ln_partition(&m, 2.0).unwrap();
        assert!((got - 0.58f64.ln()).abs() < 1e-12, "got {got}");
        assert!((got + 0.544727).abs() < 1e-6);
    }

    #[test]
    fn zero_boxes_undefined_only_for_negative_q() {
        let m = measure_from(&[0.0, 0.5, 0.5, 0.0]);
        assert!(ln_partition(&m, -0.2).is_none());
        assert!(ln_partition(&m, -3.0).is_none());
        // q = 0 counts the two nonempty boxes
        assert!((ln_partition(&m, 0.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(ln_partition(&m, 3.0).is_some());
    }

    #[test]
    fn matches_direct_sum_when_representable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let qs: Vec<f64> = (0..41).map(|i| -3.0 + 0.2 * i as f64).collect();
        for _ in 0..1000 {
            let values: Vec<f64> = (0..64).map(|_| rng.random_range(1.0..2.0)).collect();
            let m = measure_from(&values);
            assert!(m.mu.iter().all(|&x| x >= 1e-3));
            for &q in &qs {
                let direct = kahan_sum(m.mu.iter().map(|&x| x.powf(q))).ln();
                let log_form = ln_partition(&m, q).unwrap();
                assert!(
                    (direct - log_form).abs() <= 1e-10,
                    "q = {q}: direct {direct} vs log-form {log_form}"
                );
            }
        }
    }

    #[test]
    fn survives_extreme_dynamic_range() {
        // measure spanning ~600 orders of magnitude in mu^q at q = -3;
        // direct summation would overflow
        let values = [1e-200, 1.0, 1e-100, 0.5];
        let m = measure_from(&values);
        for q in [-3.0, -1.0, 2.0, 5.0] {
            let v = ln_partition(&m, q).unwrap();
            assert!(v.is_finite(), "q = {q} gave {v}");
        }
        // q = -3 is dominated by the smallest box: mu ~ 1e-200/1.5
        let got = ln_partition(&m, -3.0).unwrap();
        let expect = -3.0 * (1e-200f64 / 1.5).ln();
        assert!((got - expect).abs() / expect.abs() < 1e-10);
    }

    #[test]
    fn table_matches_per_measure_calls() {
        let values: Vec<f64> = (1..=256).map(|i| (i % 17 + 1) as f64).collect();
        let grid = AnalysisGrid::from_length(values.len(), &AnalyzeParams::default()).unwrap();
        let table = PartitionTable::compute(&values, grid.clone()).unwrap();
        for (si, &s) in grid.box_sizes.iter().enumerate() {
            let m = build_measure(&values[..grid.analyzed_length], s).unwrap();
            for (qi, &q) in grid.q_values.iter().enumerate() {
                assert_eq!(table.ln_chi[qi][si], ln_partition(&m, q), "q = {q}, s = {s}");
            }
        }
    }

    #[test]
    fn normalization_row_is_zero_for_every_scale() {
        let values: Vec<f64> =
            (0..4096).map(|i| ((i * 131 % 997) as f64 / 100.0).exp() * 1e-3 + 0.1).collect();
        let grid = AnalysisGrid::from_length(values.len(), &AnalyzeParams::default()).unwrap();
        let table = PartitionTable::compute(&values, grid.clone()).unwrap();
        let q1 = grid.q_index(1.0).unwrap();
        for (si, cell) in table.ln_chi[q1].iter().enumerate() {
            let v = cell.unwrap();
            assert!(v.abs() <= 1e-10, "s = {}: ln chi_1 = {v}", grid.box_sizes[si]);
        }
        let q0 = grid.q_index(0.0).unwrap();
        for (si, cell) in table.ln_chi[q0].iter().enumerate() {
            let n = (grid.analyzed_length / grid.box_sizes[si]) as f64;
            assert!((cell.unwrap() - n.ln()).abs() <= 1e-10);
        }
    }

    #[test]
    fn rejects_negative_values() {
        let mut values = vec![1.0; 4096];
        values[7] = -0.5;
        let grid = AnalysisGrid::from_length(values.len(), &AnalyzeParams::default()).unwrap();
        assert!(PartitionTable::compute(&values, grid).is_err());
    }

    proptest! {
        // merging adjacent boxes preserves total mass: the measure at 2s is
        // the pairwise-merged measure at s
        #[test]
        fn nesting_consistency(values in proptest::collection::vec(0.0f64..10.0, 64)) {
            prop_assume!(values.iter().sum::<f64>() > 0.0);
            let fine = build_measure(&values, 2).unwrap();
            let coarse = build_measure(&values, 4).unwrap();
            prop_assert!((fine.total_u - coarse.total_u).abs() <= 1e-12 * fine.total_u.max(1.0));
            for (n, pair) in fine.u.chunks_exact(2).enumerate() {
                let merged = pair[0] + pair[1];
                prop_assert!((merged - coarse.u[n]).abs() <= 1e-12 * merged.max(1.0));
            }
        }

        // chi is invariant under uniform rescaling of the series
        #[test]
        fn scale_invariance(c in 1e-6f64..1e6, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..128).map(|_| rng.random_range(0.01..1.0)).collect();
            let scaled: Vec<f64> = values.iter().map(|&v| v * c).collect();
            let m1 = build_measure(&values, 4).unwrap();
            let m2 = build_measure(&scaled, 4).unwrap();
            for q in [-3.0, -1.0, 0.0, 0.6, 1.0, 2.0, 5.0] {
                let a = ln_partition(&m1, q).unwrap();
                let b = ln_partition(&m2, q).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "q = {q}: {a} vs {b}");
            }
        }
    }
}
