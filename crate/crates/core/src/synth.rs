//! Synthetic processes with known causal structure.
//!
//! Noise comes from ChaCha20 seeded with `seed`; series `l` of a network draws
//! from stream `l` of that generator, so per-series noise is independent and
//! reproducible on every platform. Each generator discards [`BURN_IN`] samples
//! before emitting `n_samples`.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{RawSeries, Region};

pub const BURN_IN: usize = 100;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("n_samples must be at least {MIN_SAMPLES}, got {0}")]
    TooFewSamples(usize),
    #[error("noise scale must be positive, got {0}")]
    DomainError(f64),
    #[error("generator called with the wrong network kind")]
    WrongNetwork,
    #[error("noise override series have unequal lengths")]
    RaggedNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Network {
    /// Four-node nonlinear network: X1 drives X2 (squared, lags 1 and 2) and
    /// X4 (lag 2); X2 drives X3 (lag 1).
    PaperTest,
    /// dst[n] = a·src[n−1] + w[n], w ~ N(0, sigma_w²).
    GaussianLag { a: f64, sigma_w: f64 },
    /// Two independent white-noise series.
    IidPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub seed: u64,
    pub network: Network,
}

impl SynthSpec {
    pub fn new(n_samples: usize, seed: u64, network: Network) -> Self {
        Self { n_samples, seed, network }
    }

    fn check(&self) -> Result<(), SynthError> {
        if self.n_samples < MIN_SAMPLES {
            return Err(SynthError::TooFewSamples(self.n_samples));
        }
        if let Network::GaussianLag { sigma_w, .. } = self.network {
            if !(sigma_w > 0.0) {
                return Err(SynthError::DomainError(sigma_w));
            }
        }
        Ok(())
    }
}

/// Standard normal draws from one stream of the seeded generator.
pub fn noise(seed: u64, stream: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Runs the four-node recurrence on caller-supplied noise. Lagged terms that
/// would reach before the start are dropped, so the first samples are pure noise.
pub fn test_network_from_noise(w: &[Vec<f64>; 4]) -> Result<[Vec<f64>; 4], SynthError> {
    let len = w[0].len();
    if w.iter().any(|s| s.len() != len) {
        return Err(SynthError::RaggedNoise);
    }
    let x1 = w[0].clone();
    let mut x2 = w[1].clone();
    let mut x3 = w[2].clone();
    let mut x4 = w[3].clone();
    for n in 0..len {
        if n >= 2 {
            x2[n] += x1[n - 1].powi(2) + x1[n - 2].powi(2);
            x4[n] += x1[n - 2];
        }
        if n >= 1 {
            x3[n] += x2[n - 1];
        }
    }
    Ok([x1, x2, x3, x4])
}

pub fn gen_test_network(spec: &SynthSpec) -> Result<[Vec<f64>; 4], SynthError> {
    if spec.network != Network::PaperTest {
        return Err(SynthError::WrongNetwork);
    }
    spec.check()?;
    let len = BURN_IN + spec.n_samples;
    let w = [0, 1, 2, 3].map(|l| noise(spec.seed, l, len));
    let x = test_network_from_noise(&w)?;
    Ok(x.map(|s| s[BURN_IN..].to_vec()))
}

/// Returns `(src, dst)`.
pub fn gen_gaussian_lag(spec: &SynthSpec) -> Result<(Vec<f64>, Vec<f64>), SynthError> {
    let Network::GaussianLag { a, sigma_w } = spec.network else {
        return Err(SynthError::WrongNetwork);
    };
    spec.check()?;
    let len = BURN_IN + spec.n_samples;
    let src = noise(spec.seed, 0, len);
    let w = noise(spec.seed, 1, len);
    let dst: Vec<f64> =
        (0..len).map(|n| sigma_w * w[n] + if n >= 1 { a * src[n - 1] } else { 0.0 }).collect();
    Ok((src[BURN_IN..].to_vec(), dst[BURN_IN..].to_vec()))
}

pub fn gen_iid_pair(spec: &SynthSpec) -> Result<(Vec<f64>, Vec<f64>), SynthError> {
    if spec.network != Network::IidPair {
        return Err(SynthError::WrongNetwork);
    }
    spec.check()?;
    let len = BURN_IN + spec.n_samples;
    Ok((noise(spec.seed, 0, len)[BURN_IN..].to_vec(), noise(spec.seed, 1, len)[BURN_IN..].to_vec()))
}

/// Generates any network as labeled series `X1, X2, ...`.
pub fn generate(spec: &SynthSpec) -> Result<Vec<(String, Vec<f64>)>, SynthError> {
    let series: Vec<Vec<f64>> = match spec.network {
        Network::PaperTest => gen_test_network(spec)?.into(),
        Network::GaussianLag { .. } => {
            let (s, d) = gen_gaussian_lag(spec)?;
            vec![s, d]
        }
        Network::IidPair => {
            let (s, d) = gen_iid_pair(spec)?;
            vec![s, d]
        }
    };
    Ok(series.into_iter().enumerate().map(|(i, s)| (format!("X{}", i + 1), s)).collect())
}

/// Directed information rate of the Gaussian lag channel: ½·ln(1 + a²/σw²).
pub fn analytic_gaussian_di(a: f64, sigma_w: f64) -> Result<f64, SynthError> {
    if !(sigma_w > 0.0) {
        return Err(SynthError::DomainError(sigma_w));
    }
    Ok(0.5 * (1.0 + a * a / (sigma_w * sigma_w)).ln())
}

/// Integrates stationary increments into a strictly positive price path of
/// length `len + 1` whose increments reproduce the input.
pub fn to_price_path(increments: &[f64]) -> Vec<f64> {
    let mut level = 0.0_f64;
    let mut lowest = 0.0_f64;
    for v in increments {
        level += v;
        lowest = lowest.min(level);
    }
    let base = 100.0 - lowest;
    let mut path = Vec::with_capacity(increments.len() + 1);
    let mut p = base;
    path.push(p);
    for v in increments {
        p += v;
        path.push(p);
    }
    path
}

/// `len` evenly spaced time keys starting at midnight on `start`.
pub fn synthetic_timestamps(len: usize, start: NaiveDate, step: Duration) -> Vec<NaiveDateTime> {
    let t0 = start.and_hms_opt(0, 0, 0).expect("midnight is valid");
    (0..len).map(|i| t0 + step * i as i32).collect()
}

/// Wraps stationary samples as a price series on a synthetic calendar, so the
/// increment transform reproduces `values`. The series has `values.len() + 1` samples.
pub fn as_price_series(id: &str, values: &[f64], region: Region, start: NaiveDate, step: Duration) -> RawSeries {
    let prices = to_price_path(values);
    let timestamps = synthetic_timestamps(prices.len(), start, step);
    RawSeries::new(id, region, timestamps, prices).expect("synthetic prices are positive and ordered")
}
