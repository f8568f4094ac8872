//! Pairwise directed-information rate estimation.
//!
//! Under a Markov assumption of order M on the target, the DI rate from a
//! source to a target collapses to one conditional mutual information,
//! I(src past; dst next | dst past), with both pasts M samples long. M is
//! chosen per ordered pair as the candidate whose k-NN prediction of the next
//! target sample, from the joint past of both series, has the smallest
//! leave-one-out squared error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knn::{self, CmiSample, CmiSamples, KnnError, PointSet, SearchStrategy};
use crate::preprocess::{PreprocessError, StdSeries, Transform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("series too short: need more than {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("source and target lengths differ ({src} vs {dst})")]
    LengthMismatch { src: usize, dst: usize },
    #[error("offset must be 0 or 1, got {0}")]
    InvalidDelta(usize),
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Features are the past of both target and source.
    #[default]
    JointPast,
    /// Features are the target's own past only.
    TargetOnly,
}

impl std::str::FromStr for PredictionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint_past" => Ok(Self::JointPast),
            "target_only" => Ok(Self::TargetOnly),
            other => Err(format!("unknown prediction mode `{other}` (expected joint_past or target_only)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Neighbor count for both the CMI estimate and order-selection prediction.
    pub k: usize,
    pub markov_candidates: Vec<usize>,
    pub transform: Transform,
    pub jitter_seed: u64,
    pub prediction_mode: PredictionMode,
    /// Report negative estimates as zero.
    pub clamp_negative: bool,
    /// Candidate orders whose loss is within this many standard errors of the
    /// best loss count as tied, and the smallest tied order wins. 0 gives the
    /// plain argmin.
    pub order_tie_tolerance: f64,
    #[serde(skip)]
    pub search: SearchStrategy,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k: 4,
            markov_candidates: vec![1, 2, 3, 4, 5],
            transform: Transform::Increment,
            jitter_seed: 0,
            prediction_mode: PredictionMode::JointPast,
            clamp_negative: false,
            order_tie_tolerance: 2.0,
            search: SearchStrategy::Auto,
        }
    }
}

impl EstimatorConfig {
    /// Config that skips order selection and always uses `order`.
    pub fn with_fixed_order(order: usize) -> Self {
        Self { markov_candidates: vec![order], ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.k == 0 {
            return Err(EstimatorError::InvalidConfig("k must be at least 1".into()));
        }
        if self.markov_candidates.is_empty() {
            return Err(EstimatorError::InvalidConfig("markov_candidates is empty".into()));
        }
        if self.markov_candidates.contains(&0) {
            return Err(EstimatorError::InvalidConfig("Markov orders must be at least 1".into()));
        }
        if !(self.order_tie_tolerance >= 0.0) {
            return Err(EstimatorError::InvalidConfig("order_tie_tolerance must be non-negative".into()));
        }
        Ok(())
    }

    fn sorted_candidates(&self) -> Vec<usize> {
        let mut c = self.markov_candidates.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn max_order(&self) -> usize {
        self.markov_candidates.iter().copied().max().unwrap_or(1)
    }
}

/// CMI samples for one ordered pair at a fixed order and offset.
///
/// Sample `i` targets index `n = M + i`: `x = src[n−M+δ .. n+δ]`,
/// `z = dst[n−M .. n]`, `y = dst[n]`. With δ = 1 the final target is dropped
/// so that the shifted source window stays inside the series.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPair {
    pub samples: CmiSamples,
    pub markov_order: usize,
    pub delta: usize,
    pub n_effective: usize,
}

impl EmbeddedPair {
    pub fn samples(&self) -> impl Iterator<Item = CmiSample> + '_ {
        self.samples.iter()
    }
}

fn check_pair(src: &[f64], dst: &[f64]) -> Result<(), EstimatorError> {
    if src.len() != dst.len() {
        return Err(EstimatorError::LengthMismatch { src: src.len(), dst: dst.len() });
    }
    Ok(())
}

pub fn embed_pair(src: &[f64], dst: &[f64], order: usize, delta: usize) -> Result<EmbeddedPair, EstimatorError> {
    check_pair(src, dst)?;
    if delta > 1 {
        return Err(EstimatorError::InvalidDelta(delta));
    }
    if order == 0 {
        return Err(EstimatorError::InvalidConfig("Markov order must be at least 1".into()));
    }
    let len = dst.len();
    if len <= order + delta {
        return Err(EstimatorError::TooShort { needed: order + delta, got: len });
    }
    let n_effective = len - order - delta;
    let mut x = Vec::with_capacity(n_effective * order);
    let mut y = Vec::with_capacity(n_effective);
    let mut z = Vec::with_capacity(n_effective * order);
    for n in order..order + n_effective {
        x.extend_from_slice(&src[n - order + delta..n + delta]);
        y.push(dst[n]);
        z.extend_from_slice(&dst[n - order..n]);
    }
    let samples = CmiSamples::new(PointSet::new(x, order)?, PointSet::new(y, 1)?, PointSet::new(z, order)?)?;
    Ok(EmbeddedPair { samples, markov_order: order, delta, n_effective })
}

/// Leave-one-out squared errors of k-NN prediction of `dst[n]`, one per target
/// index `n ≥ order`. The prediction averages the next values of the k nearest
/// feature vectors under the max norm, ties broken by index.
pub fn prediction_errors(
    dst: &[f64],
    src: &[f64],
    order: usize,
    k: usize,
    mode: PredictionMode,
    strategy: SearchStrategy,
) -> Result<Vec<f64>, EstimatorError> {
    check_pair(src, dst)?;
    if order == 0 || k == 0 {
        return Err(EstimatorError::InvalidConfig("order and k must be at least 1".into()));
    }
    let len = dst.len();
    if len <= order + k + 1 {
        return Err(EstimatorError::TooShort { needed: order + k + 1, got: len });
    }
    let rows = len - order;
    let dims = match mode {
        PredictionMode::JointPast => 2 * order,
        PredictionMode::TargetOnly => order,
    };
    let mut features = Vec::with_capacity(rows * dims);
    for n in order..len {
        features.extend_from_slice(&dst[n - order..n]);
        if mode == PredictionMode::JointPast {
            features.extend_from_slice(&src[n - order..n]);
        }
    }
    let features = PointSet::new(features, dims)?;
    let next = &dst[order..];
    let index = knn::build_index(&features, strategy);
    Ok((0..rows)
        .into_par_iter()
        .map(|i| {
            let neighbors = index.k_nearest(i, k);
            let prediction = neighbors.iter().map(|nb| next[nb.index]).sum::<f64>() / neighbors.len() as f64;
            (next[i] - prediction).powi(2)
        })
        .collect())
}

/// Mean of [`prediction_errors`].
pub fn knn_predict_loss(
    dst: &[f64],
    src: &[f64],
    order: usize,
    k: usize,
    mode: PredictionMode,
) -> Result<f64, EstimatorError> {
    let errors = prediction_errors(dst, src, order, k, mode, SearchStrategy::Auto)?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderLoss {
    pub order: usize,
    pub loss: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub order: usize,
    pub losses: Vec<OrderLoss>,
}

pub fn select_markov_order(dst: &[f64], src: &[f64], cfg: &EstimatorConfig) -> Result<OrderSelection, EstimatorError> {
    cfg.validate()?;
    let candidates = cfg.sorted_candidates();
    if let [only] = candidates[..] {
        return Ok(OrderSelection { order: only, losses: Vec::new() });
    }
    let mut losses = Vec::with_capacity(candidates.len());
    for &order in &candidates {
        let errors = prediction_errors(dst, src, order, cfg.k, cfg.prediction_mode, cfg.search)?;
        let n = errors.len() as f64;
        let loss = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - loss).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        losses.push(OrderLoss { order, loss, std_error: (var / n).sqrt() });
    }
    let best = losses
        .iter()
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.order.cmp(&b.order)))
        .expect("at least one candidate");
    let threshold = best.loss + cfg.order_tie_tolerance * best.std_error;
    let order = losses.iter().find(|l| l.loss <= threshold).map_or(best.order, |l| l.order);
    Ok(OrderSelection { order, losses })
}

/// Selected Markov order for `dst` given `src`.
pub fn estimate_markov_order(dst: &[f64], src: &[f64], cfg: &EstimatorConfig) -> Result<usize, EstimatorError> {
    Ok(select_markov_order(dst, src, cfg)?.order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiEstimate {
    /// Reported rate in nats, clamped at zero when the config asks for it.
    pub value: f64,
    /// Estimator output before any clamping.
    pub raw: f64,
    pub markov_order: usize,
    pub n_effective: usize,
    pub delta: usize,
}

/// Estimates the DI rate src → dst on standardized, aligned series.
///
/// Both series get a reproducible tie-breaking jitter (see [`knn::jitter`])
/// before order selection and estimation.
pub fn estimate_di_rate(src: &[f64], dst: &[f64], delta: usize, cfg: &EstimatorConfig) -> Result<DiEstimate, EstimatorError> {
    cfg.validate()?;
    check_pair(src, dst)?;
    if delta > 1 {
        return Err(EstimatorError::InvalidDelta(delta));
    }
    let (src, dst) = jittered(src, dst, cfg);
    let order = estimate_markov_order(&dst, &src, cfg)?;
    let embedded = embed_pair(&src, &dst, order, delta)?;
    let raw = knn::estimate_cmi_with(&embedded.samples, cfg.k, cfg.search)?;
    let value = if cfg.clamp_negative { raw.max(0.0) } else { raw };
    Ok(DiEstimate { value, raw, markov_order: order, n_effective: embedded.n_effective, delta })
}

/// Copies of both series with the tie-breaking jitter applied (stream 0 for
/// the source, 1 for the destination).
pub fn jittered(src: &[f64], dst: &[f64], cfg: &EstimatorConfig) -> (Vec<f64>, Vec<f64>) {
    let mut src = src.to_vec();
    let mut dst = dst.to_vec();
    knn::jitter(&mut src, cfg.jitter_seed, 0);
    knn::jitter(&mut dst, cfg.jitter_seed, 1);
    (src, dst)
}

/// [`estimate_di_rate`] on two standardized series.
pub fn estimate_di_rate_series(
    src: &StdSeries,
    dst: &StdSeries,
    delta: usize,
    cfg: &EstimatorConfig,
) -> Result<DiEstimate, EstimatorError> {
    estimate_di_rate(&src.values, &dst.values, delta, cfg)
}
