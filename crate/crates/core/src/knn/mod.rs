//! Continuous-alphabet estimation primitives.

mod cmi;
mod digamma;
mod points;
mod search;

pub use cmi::{estimate_cmi, estimate_cmi_with, CmiSample, CmiSamples};
pub use digamma::digamma;
pub use points::{max_norm, PointSet};
pub use search::{build_index, count_within, BruteForce, KdTree, Neighbor, NeighborSearch, SearchStrategy};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnnError {
    #[error("digamma is undefined at {0}")]
    DomainError(f64),
    #[error("point set is empty")]
    Empty,
    #[error("zero-dimensional point sets must be built with PointSet::zero_dim")]
    ZeroDimNeedsLen,
    #[error("non-finite coordinate at flat position {0}")]
    NonFinite(usize),
    #[error("expected {expected} coordinates per row, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected {expected} rows, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("k-th neighbor radius is zero at sample {sample}")]
    DegenerateGeometry { sample: usize },
}

/// Relative amplitude of the tie-breaking jitter, in units of the series' standard deviation.
pub const JITTER_SCALE: f64 = 1e-10;

/// Adds uniform noise in ±`JITTER_SCALE`·std to every value so that exact
/// duplicates no longer collide. `stream` selects an independent ChaCha stream
/// under the same seed. A constant sequence is left untouched.
pub fn jitter(values: &mut [f64], seed: u64, stream: u64) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let amplitude = JITTER_SCALE * std;
    if amplitude == 0.0 {
        return;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    for v in values.iter_mut() {
        *v += amplitude * rng.random_range(-1.0..1.0);
    }
}
