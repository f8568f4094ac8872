//! Sweeps over time: sliding windows on one pair, calendar-month blocks on a
//! whole graph.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{DiEstimate, EstimatorConfig};
use crate::graph::{build_graph, estimate_alignment, net_flow, CausalGraph, PairError, RankingResult};
use crate::ingest::{PairAlignment, RawSeries};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("window of {length} samples exceeds the {available} aligned samples")]
    WindowTooLong { length: usize, available: usize },
    #[error("window length {length} must exceed 10 × the largest Markov candidate ({max_order})")]
    WindowTooShort { length: usize, max_order: usize },
    #[error("window step must be at least 1")]
    ZeroStep,
    #[error("window starting at {start}: {source}")]
    Window { start: NaiveDateTime, source: PairError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Samples per window, counted on the aligned raw series.
    pub length: usize,
    /// Samples between consecutive window starts.
    pub step: usize,
}

/// Default step for daily data: roughly one trading month.
pub const DEFAULT_WINDOW_STEP: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub estimate: DiEstimate,
}

pub fn validate_window(spec: &WindowSpec, available: usize, cfg: &EstimatorConfig) -> Result<(), AnalysisError> {
    if spec.step == 0 {
        return Err(AnalysisError::ZeroStep);
    }
    let max_order = cfg.max_order();
    if spec.length <= 10 * max_order {
        return Err(AnalysisError::WindowTooShort { length: spec.length, max_order });
    }
    if spec.length > available {
        return Err(AnalysisError::WindowTooLong { length: spec.length, available });
    }
    Ok(())
}

/// DI estimate per window over an aligned pair. Each window is transformed and
/// standardized on its own samples.
pub fn sliding_windows(pair: &PairAlignment, spec: &WindowSpec, cfg: &EstimatorConfig) -> Result<Vec<WindowRow>, AnalysisError> {
    validate_window(spec, pair.len(), cfg)?;
    let starts: Vec<usize> = (0..=pair.len() - spec.length).step_by(spec.step).collect();
    starts
        .into_par_iter()
        .map(|start| {
            let window = pair.slice(start..start + spec.length);
            let first = window.common_keys[0];
            let estimate = estimate_alignment(&window, cfg).map_err(|source| AnalysisError::Window { start: first, source })?;
            Ok(WindowRow { start: first, end: *window.common_keys.last().expect("non-empty window"), estimate })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn of(t: &NaiveDateTime) -> Self {
        Self { year: t.year(), month: t.month() }
    }
}

impl std::fmt::Display for Month {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BlockOutcome {
    Ok { graph: CausalGraph, ranking: RankingResult },
    /// Some pair had fewer aligned samples than the minimum.
    BlockTooShort { src: String, dst: String, samples: usize, minimum: usize },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub month: Month,
    pub outcome: BlockOutcome,
}

/// Smallest per-pair sample count accepted for a block.
pub fn default_min_block_samples(cfg: &EstimatorConfig) -> usize {
    10 * cfg.max_order() + 1
}

/// Builds one graph per calendar month present in any series. Months that are
/// too short or fail are reported in their row; the sweep always continues.
pub fn monthly_blocks(series: &[RawSeries], cfg: &EstimatorConfig, min_samples: usize) -> Vec<BlockResult> {
    let months: BTreeSet<Month> = series.iter().flat_map(|s| s.timestamps.iter().map(Month::of)).collect();
    months
        .into_iter()
        .map(|month| {
            let block: Vec<RawSeries> = series.iter().map(|s| s.filter_keys(|t| Month::of(t) == month)).collect();
            BlockResult { month, outcome: block_outcome(&block, cfg, min_samples) }
        })
        .collect()
}

fn block_outcome(block: &[RawSeries], cfg: &EstimatorConfig, min_samples: usize) -> BlockOutcome {
    for a in block {
        for b in block {
            if a.id == b.id {
                continue;
            }
            let samples = PairAlignment::new(a, b).map(|p| p.len()).unwrap_or(0);
            if samples < min_samples {
                return BlockOutcome::BlockTooShort { src: a.id.clone(), dst: b.id.clone(), samples, minimum: min_samples };
            }
        }
    }
    match build_graph(block, cfg) {
        Ok(graph) => {
            let ranking = net_flow(&graph);
            BlockOutcome::Ok { graph, ranking }
        }
        Err(e) => BlockOutcome::Failed { message: e.to_string() },
    }
}
