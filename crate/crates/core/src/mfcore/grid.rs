//! (q, s) grid policy.
//!
//! Box sizes must divide the analyzed length exactly, so the usable scales
//! are the divisors of T. A series whose raw length is divisor-poor (prime,
//! say) is truncated to the most divisor-rich length within 5% of the
//! original; the scales are then the divisors closest to logarithmically
//! spaced targets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalyzeParams;
use crate::error::{MfError, Result};

/// Candidate density for the box-size grid.
const SCALES_PER_DECADE: f64 = 16.0;
/// Largest box size considered: T / 4, so every scale keeps >= 4 boxes.
const MAX_BOX_FRACTION: usize = 4;
/// A length is accepted untruncated when it yields at least this many scales...
const RICH_MIN_SCALES: usize = 10;
/// ...spanning this many decades (or as many as the length permits).
const RICH_SPAN_DECADES: f64 = 2.5;
/// Truncation searches lengths within this fraction below the raw length.
const TRUNCATION_WINDOW: f64 = 0.05;
/// Hard floor on the number of box sizes for any analysis.
const MIN_USABLE_SCALES: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisGrid {
    pub q_values: Vec<f64>,
    pub box_sizes: Vec<usize>,
    pub analyzed_length: usize,
}

impl AnalysisGrid {
    pub fn from_length(len: usize, params: &AnalyzeParams) -> Result<Self> {
        params.validate()?;
        let t = choose_analyzed_length(len);
        let box_sizes = choose_box_sizes(t);
        Self::new(q_grid(params.q_min, params.q_max, params.q_step)?, box_sizes, t)
    }

    pub fn new(q_values: Vec<f64>, box_sizes: Vec<usize>, analyzed_length: usize) -> Result<Self> {
        if q_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MfError::InvalidParameter {
                name: "q_values",
                reason: "must be strictly increasing".into(),
            });
        }
        for anchor in [0.0, 1.0] {
            if !q_values.iter().any(|&q| q == anchor) {
                return Err(MfError::InvalidParameter {
                    name: "q_values",
                    reason: format!("grid must include q = {anchor} (normalization anchor)"),
                });
            }
        }
        if box_sizes.is_empty() || box_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MfError::InvalidParameter {
                name: "box_sizes",
                reason: "must be non-empty and strictly increasing".into(),
            });
        }
        if let Some(&s) = box_sizes.iter().find(|&&s| s == 0 || analyzed_length % s != 0) {
            return Err(MfError::InvalidParameter {
                name: "box_sizes",
                reason: format!("{s} does not divide the analyzed length {analyzed_length}"),
            });
        }
        if box_sizes.len() < MIN_USABLE_SCALES {
            return Err(MfError::DegenerateSeries(format!(
                "length {analyzed_length} yields only {} usable box sizes (need >= {MIN_USABLE_SCALES})",
                box_sizes.len()
            )));
        }
        let span = (*box_sizes.last().unwrap() as f64 / box_sizes[0] as f64).log10();
        let permitted = ((analyzed_length / MAX_BOX_FRACTION).max(1) as f64).log10();
        if span + 1e-9 < RICH_SPAN_DECADES.min(permitted) {
            return Err(MfError::DegenerateSeries(format!(
                "box sizes span only {span:.2} decades of the {permitted:.2} the length permits"
            )));
        }
        Ok(Self { q_values, box_sizes, analyzed_length })
    }

    pub fn q_index(&self, q: f64) -> Option<usize> {
        self.q_values.iter().position(|&x| x == q)
    }
}

/// Uniform q grid from min to max inclusive; values landing within 1e-9 of
/// the anchors 0 and 1 are snapped exactly so moment identities hold.
pub(crate) fn q_grid(q_min: f64, q_max: f64, q_step: f64) -> Result<Vec<f64>> {
    let span = q_max - q_min;
    let n = (span / q_step).round();
    if n < 1.0 || (n * q_step - span).abs() > 1e-6 * span.max(1.0) {
        return Err(MfError::InvalidParameter {
            name: "q_step",
            reason: format!("step {q_step} does not evenly partition [{q_min}, {q_max}]"),
        });
    }
    let n = n as usize;
    let qs: Vec<f64> = (0..=n)
        .map(|i| {
            let q = q_min + (i as f64 * span) / n as f64;
            if q.abs() < 1e-9 {
                0.0
            } else if (q - 1.0).abs() < 1e-9 {
                1.0
            } else {
                q
            }
        })
        .collect();
    Ok(qs)
}

/// Divisors of t that are <= cap, ascending.
fn divisors_within(t: usize, cap: usize) -> Vec<usize> {
    let mut divs = Vec::new();
    let mut d = 1usize;
    while d * d <= t {
        if t % d == 0 {
            if d <= cap {
                divs.push(d);
            }
            let e = t / d;
            if e != d && e <= cap {
                divs.push(e);
            }
        }
        d += 1;
    }
    divs.sort_unstable();
    divs
}

fn is_rich(t: usize) -> bool {
    let cap = (t / MAX_BOX_FRACTION).max(1);
    let divs = divisors_within(t, cap);
    if divs.len() < RICH_MIN_SCALES {
        return false;
    }
    let span = (*divs.last().unwrap() as f64).log10();
    span + 1e-9 >= RICH_SPAN_DECADES.min((cap as f64).log10())
}

/// Largest prefix length with a rich divisor structure: the raw length if
/// already rich, otherwise the divisor-count maximizer within the
/// truncation window (ties to the longer prefix).
pub(crate) fn choose_analyzed_length(len: usize) -> usize {
    if len < 4 * MIN_USABLE_SCALES || is_rich(len) {
        return len;
    }
    let lo = (((len as f64) * (1.0 - TRUNCATION_WINDOW)).ceil() as usize).clamp(1, len);
    let mut counts = vec![0u32; len - lo + 1];
    // Sieve usable-divisor counts over the window: d counts for t when 4d <= t.
    for d in 1..=len / MAX_BOX_FRACTION {
        let start = lo.max(MAX_BOX_FRACTION * d).div_ceil(d) * d;
        let mut m = start;
        while m <= len {
            counts[m - lo] += 1;
            m += d;
        }
    }
    let mut best = lo;
    let mut best_count = 0u32;
    for (i, &c) in counts.iter().enumerate() {
        if c >= best_count {
            best_count = c;
            best = lo + i;
        }
    }
    best
}

/// Divisors of t nearest (in log space) to geometric targets between 1 and
/// t / 4, deduplicated.
pub(crate) fn choose_box_sizes(t: usize) -> Vec<usize> {
    let cap = (t / MAX_BOX_FRACTION).max(1);
    let divs = divisors_within(t, cap);
    let s_max = *divs.last().unwrap();
    let ln_max = (s_max as f64).ln();
    let n_targets = ((s_max as f64).log10() * SCALES_PER_DECADE).ceil().max(1.0) as usize;
    let ln_divs: Vec<f64> = divs.iter().map(|&d| (d as f64).ln()).collect();

    let mut picked = BTreeSet::new();
    for k in 0..=n_targets {
        let target = ln_max * k as f64 / n_targets as f64;
        let idx = match ln_divs.binary_search_by(|x| x.partial_cmp(&target).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == ln_divs.len() => i - 1,
            Err(i) => {
                if target - ln_divs[i - 1] <= ln_divs[i] - target {
                    i - 1
                } else {
                    i
                }
            }
        };
        picked.insert(divs[idx]);
    }
    picked.into_iter().collect()
}
