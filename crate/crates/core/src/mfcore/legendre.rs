//! Legendre transform of τ(q): α = dτ/dq, f(α) = qα − τ.

use crate::error::{MfError, Result};

/// Tolerance for the concavity check: α may rise by at most this much
/// between adjacent q before the spectrum is flagged.
const CONCAVITY_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub alpha: Vec<Option<f64>>,
    pub f_alpha: Vec<Option<f64>>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub delta_alpha: f64,
    /// (f(α_min) + f(α_max)) / 2.
    pub f_stat: f64,
    pub concave: bool,
}

/// Differentiate τ on the longest contiguous run of defined values:
/// central differences inside, one-sided at the run's endpoints.
pub fn legendre_spectrum(q_values: &[f64], tau: &[Option<f64>]) -> Result<Spectrum> {
    assert_eq!(q_values.len(), tau.len());
    let (lo, hi) = longest_defined_run(tau).ok_or_else(|| {
        MfError::SpectrumUndefined("no defined tau values".into())
    })?;
    if hi - lo + 1 < 3 {
        return Err(MfError::SpectrumUndefined(format!(
            "tau defined on only {} consecutive q values (need 3)",
            hi - lo + 1
        )));
    }

    let t = |i: usize| tau[i].unwrap();
    let nq = q_values.len();
    let mut alpha = vec![None; nq];
    let mut f_alpha = vec![None; nq];
    for i in lo..=hi {
        let a = if i == lo {
            (t(i + 1) - t(i)) / (q_values[i + 1] - q_values[i])
        } else if i == hi {
            (t(i) - t(i - 1)) / (q_values[i] - q_values[i - 1])
        } else {
            (t(i + 1) - t(i - 1)) / (q_values[i + 1] - q_values[i - 1])
        };
        alpha[i] = Some(a);
        f_alpha[i] = Some(q_values[i] * a - t(i));
    }

    let mut concave = true;
    let mut imin = lo;
    let mut imax = lo;
    for i in lo..=hi {
        let a = alpha[i].unwrap();
        if a < alpha[imin].unwrap() {
            imin = i;
        }
        if a > alpha[imax].unwrap() {
            imax = i;
        }
        if i > lo && a > alpha[i - 1].unwrap() + CONCAVITY_SLACK {
            concave = false;
        }
    }
    let alpha_min = alpha[imin].unwrap();
    let alpha_max = alpha[imax].unwrap();
    let f_stat = 0.5 * (f_alpha[imin].unwrap() + f_alpha[imax].unwrap());
    Ok(Spectrum {
        alpha,
        f_alpha,
        alpha_min,
        alpha_max,
        delta_alpha: alpha_max - alpha_min,
        f_stat,
        concave,
    })
}

fn longest_defined_run(tau: &[Option<f64>]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=tau.len() {
        match (i < tau.len() && tau[i].is_some(), start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                let run = (a, i - 1);
                if best.map_or(true, |(x, y)| run.1 - run.0 > y - x) {
                    best = Some(run);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}
