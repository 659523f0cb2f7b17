//! Synthetic series with exactly known scaling structure.
//!
//! The binomial measure built here is the reference input for everything
//! downstream: at dyadic box sizes its partition function is a pure power
//! law with exponent tau(q) = -ln(p^q + (1-p)^q) / ln 2, so the whole
//! analysis chain can be checked against closed forms instead of against
//! itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};

/// Depth cap keeps the series length (2^depth) within addressable memory
/// and the box-sum dynamic range well inside f64 exponent territory.
pub const MAX_CASCADE_DEPTH: u32 = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeMode {
    /// The weight p always multiplies the left half: a deterministic,
    /// perfectly ordered measure.
    Deterministic,
    /// Each split assigns {p, 1-p} to (left, right) or (right, left) with
    /// equal probability. Box-mass multisets at dyadic scales are identical
    /// to the deterministic case; only spatial arrangement is randomized.
    Randomized,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CascadeSpec {
    /// Binary-split weight, 0 < p < 1. p and 1-p generate the same measure
    /// up to reflection.
    pub p: f64,
    /// Number of halvings; output length is 2^depth.
    pub depth: u32,
    pub mode: CascadeMode,
    /// Consumed only in randomized mode.
    pub seed: u64,
}

/// Multiplicative binary cascade of total mass 1 over 2^depth cells.
pub fn generate_cascade(spec: &CascadeSpec) -> Result<Vec<f64>> {
    if !(spec.p > 0.0 && spec.p < 1.0) || !spec.p.is_finite() {
        return Err(MfError::InvalidParameter {
            name: "p",
            reason: format!("weight must lie strictly inside (0, 1), got {}", spec.p),
        });
    }
    if spec.depth == 0 || spec.depth > MAX_CASCADE_DEPTH {
        return Err(MfError::InvalidParameter {
            name: "depth",
            reason: format!("depth must be in 1..={MAX_CASCADE_DEPTH}, got {}", spec.depth),
        });
    }

    let len = 1usize << spec.depth;
    let mut v = vec![0.0f64; len];
    v[0] = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let hi = spec.p.max(1.0 - spec.p);
    let lo = spec.p.min(1.0 - spec.p);

    for level in 0..spec.depth {
        let parents = 1usize << level;
        // Children are written at indices 2i and 2i+1; walking parents in
        // reverse lets the split happen in place without clobbering.
        for i in (0..parents).rev() {
            let mass = v[i];
            let left = match spec.mode {
                CascadeMode::Deterministic => spec.p,
                CascadeMode::Randomized => {
                    if rng.random::<bool>() {
                        hi
                    } else {
                        lo
                    }
                }
            };
            v[2 * i] = mass * left;
            v[2 * i + 1] = mass * (1.0 - left);
        }
    }
    Ok(v)
}

/// iid lognormal noise: a monofractal null series for calibration work.
pub fn generate_iid_lognormal(len: usize, mu_log: f64, sigma_log: f64, seed: u64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(MfError::InvalidParameter {
            name: "length",
            reason: "length must be positive".into(),
        });
    }
    if !sigma_log.is_finite() || sigma_log < 0.0 || !mu_log.is_finite() {
        return Err(MfError::InvalidParameter {
            name: "sigma_log",
            reason: format!("need finite mu and sigma >= 0, got mu={mu_log}, sigma={sigma_log}"),
        });
    }
    let dist = LogNormal::new(mu_log, sigma_log).map_err(|e| MfError::InvalidParameter {
        name: "sigma_log",
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| dist.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::kahan_sum;

    #[test]
    fn cascade_conserves_mass_and_positivity() {
        for depth in [1, 4, 10, 14] {
            let v = generate_cascade(&CascadeSpec {
                p: 0.4,
                depth,
                mode: CascadeMode::Randomized,
                seed: 7,
            })
            .unwrap();
            assert_eq!(v.len(), 1usize << depth);
            assert!(v.iter().all(|&x| x > 0.0));
            let total = kahan_sum(v.iter().cloned());
            assert!((total - 1.0).abs() < 1e-12, "mass drift {}", (total - 1.0).abs());
        }
    }

    #[test]
    fn deterministic_cascade_assigns_p_to_the_left() {
        let v = generate_cascade(&CascadeSpec {
            p: 0.4,
            depth: 2,
            mode: CascadeMode::Deterministic,
            seed: 0,
        })
        .unwrap();
        let want = [0.16, 0.24, 0.24, 0.36];
        for (a, b) in v.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15, "{v:?}");
        }
        let v = generate_cascade(&CascadeSpec {
            p: 0.3,
            depth: 8,
            mode: CascadeMode::Deterministic,
            seed: 0,
        })
        .unwrap();
        let half = v.len() / 2;
        let left: f64 = v[..half].iter().sum();
        assert!((left - 0.3).abs() < 1e-12);
    }

    #[test]
    fn randomized_cascade_reproducible_and_seed_sensitive() {
        let spec = CascadeSpec { p: 0.4, depth: 10, mode: CascadeMode::Randomized, seed: 42 };
        let a = generate_cascade(&spec).unwrap();
        let b = generate_cascade(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_cascade(&CascadeSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn randomized_cascade_mass_multiset_matches_deterministic() {
        // Randomization permutes cell masses without changing their values.
        let det = generate_cascade(&CascadeSpec {
            p: 0.4,
            depth: 8,
            mode: CascadeMode::Deterministic,
            seed: 0,
        })
        .unwrap();
        let rnd = generate_cascade(&CascadeSpec {
            p: 0.4,
            depth: 8,
            mode: CascadeMode::Randomized,
            seed: 5,
        })
        .unwrap();
        let mut det_sorted = det;
        let mut rnd_sorted = rnd;
        det_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rnd_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in det_sorted.iter().zip(&rnd_sorted) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(*b));
        }
    }

    #[test]
    fn cascade_rejects_bad_parameters() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            let r = generate_cascade(&CascadeSpec {
                p,
                depth: 4,
                mode: CascadeMode::Deterministic,
                seed: 0,
            });
            assert!(r.is_err(), "p = {p} accepted");
        }
        assert!(generate_cascade(&CascadeSpec {
            p: 0.4,
            depth: 0,
            mode: CascadeMode::Deterministic,
            seed: 0
        })
        .is_err());
        assert!(generate_cascade(&CascadeSpec {
            p: 0.4,
            depth: MAX_CASCADE_DEPTH + 1,
            mode: CascadeMode::Deterministic,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn lognormal_reproducible_and_positive() {
        let a = generate_iid_lognormal(1000, 0.0, 1.0, 9).unwrap();
        let b = generate_iid_lognormal(1000, 0.0, 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x > 0.0));
        // sigma = 0 degenerates to a constant series.
        let c = generate_iid_lognormal(10, 0.5, 0.0, 1).unwrap();
        assert!(c.iter().all(|&x| (x - 0.5f64.exp()).abs() < 1e-15));
    }
}
