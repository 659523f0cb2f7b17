//! Partition-function multifractal analysis of intraday volatility.
//!
//! The pipeline: ticks -> session-filtered log returns -> 1-minute
//! volatility v(t) -> box measures mu(n;s) -> partition function
//! chi_q(s) -> tau(q) by log-log regression over a jump-aware scaling
//! range -> Legendre spectrum (alpha, f(alpha)). On top of that sit
//! shuffle bootstrap significance tests, binomial p-model fits, and
//! quenched/annealed ensemble averages. Synthetic cascades with known
//! closed-form tau(q) serve as ground truth throughout.
//!
//! All randomness flows through explicit seeds and per-replicate
//! SplitMix64 derivation, so every result is reproducible regardless
//! of thread count.

pub mod ensemble;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod mfcore;
pub mod numerics;
pub mod pmodel;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{MfError, Result};
