use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};
use crate::numerics::KahanSum;

/// Box sums u(n; s) and the normalized measure μ(n; s) = u(n)/Σu at one
/// box size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxMeasure {
    pub s: usize,
    pub u: Vec<f64>,
    pub mu: Vec<f64>,
    pub max_u: f64,
    pub zero_box_count: usize,
    pub total_u: f64,
}

/// Sum `values` (length T, T mod s = 0) into T/s boxes and normalize.
pub fn build_measure(values: &[f64], s: usize) -> Result<BoxMeasure> {
    let t = values.len();
    if s == 0 || t == 0 || t % s != 0 {
        return Err(MfError::InvalidParameter {
            name: "s",
            reason: format!("box size {s} does not partition length {t}"),
        });
    }
    let n = t / s;
    let mut u = Vec::with_capacity(n);
    let mut total = KahanSum::new();
    let mut max_u = 0.0f64;
    let mut zero_box_count = 0usize;
    for box_values in values.chunks_exact(s) {
        let mut acc = KahanSum::new();
        for &v in box_values {
            acc.add(v);
        }
        let sum = acc.value();
        if sum == 0.0 {
            zero_box_count += 1;
        }
        if sum > max_u {
            max_u = sum;
        }
        total.add(sum);
        u.push(sum);
    }
    let total = total.value();
    if total <= 0.0 {
        return Err(MfError::DegenerateSeries(
            "series sums to zero; no measure can be constructed".into(),
        ));
    }
    let mu = u.iter().map(|&x| x / total).collect();
    Ok(BoxMeasure { s, u, mu, max_u, zero_box_count, total_u: total })
}
