//! Rank a set of time series by mutual causal influence.
//!
//! The pipeline loads price series, aligns each ordered pair on its common
//! time keys, stationarizes and standardizes the aligned values, estimates the
//! directed-information rate of every ordered pair with a k-nearest-neighbor
//! conditional mutual information estimator, and ranks the series by net flow
//! (outgoing minus incoming weight) in the resulting weighted directed graph.
//!
//! Modules, bottom-up:
//!
//! - [`knn`]: max-norm neighbor search, digamma and the CMI estimator.
//! - [`preprocess`]: increment/return transforms and standardization.
//! - [`estimator`]: embedding, Markov-order selection and the DI-rate estimate.
//! - [`ingest`]: CSV loading, pairwise calendar intersection and region offsets.
//! - [`graph`]: graph assembly, net flow, region aggregation and PageRank.
//! - [`synth`]: synthetic validation networks with known causal structure.
//! - [`analysis`]: sliding-window and calendar-block sweeps.

pub mod analysis;
pub mod estimator;
pub mod graph;
pub mod ingest;
pub mod knn;
pub mod preprocess;
pub mod synth;

pub use estimator::{DiEstimate, EstimatorConfig, PredictionMode};
pub use graph::{CausalGraph, RankingResult};
pub use ingest::{RawSeries, Region};
pub use preprocess::Transform;
