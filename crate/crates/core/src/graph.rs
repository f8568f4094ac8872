//! Directed-information graphs and node rankings.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{estimate_di_rate, jittered, select_markov_order, DiEstimate, EstimatorConfig, EstimatorError, OrderSelection};
use crate::ingest::{IngestError, PairAlignment, RawSeries, Region};
use crate::preprocess::{standardize, PreprocessError, StdSeries};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("need at least 2 series, got {0}")]
    TooFewSeries(usize),
    #[error("weight matrix must be {0}x{0}")]
    NotSquare(usize),
    #[error("non-finite weight at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("non-zero diagonal at node {0}")]
    NonZeroDiagonal(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("node `{0}` has no region")]
    UnmappedNode(String),
    #[error("damping must lie in (0, 1), got {0}")]
    InvalidDamping(f64),
    #[error("PageRank did not converge in {0} iterations")]
    NonConvergence(usize),
    #[error("pair {src} -> {dst}: {source}")]
    Pair { src: String, dst: String, source: PairError },
    #[error("{} pairs failed:\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    PairFailures(Vec<GraphError>),
    #[error("malformed matrix CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum PairError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Per-edge diagnostics recorded while estimating a weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMeta {
    pub markov_order: usize,
    pub n_effective: usize,
    pub delta: usize,
    pub raw: f64,
}

impl From<&DiEstimate> for EdgeMeta {
    fn from(e: &DiEstimate) -> Self {
        Self { markov_order: e.markov_order, n_effective: e.n_effective, delta: e.delta, raw: e.raw }
    }
}

/// `weights[i][j]` is the estimated DI rate from node i to node j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub labels: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Vec<Vec<Option<EdgeMeta>>>>,
}

impl CausalGraph {
    pub fn new(labels: Vec<String>, weights: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        let g = Self { labels, weights, meta: None };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let l = self.labels.len();
        if self.weights.len() != l || self.weights.iter().any(|r| r.len() != l) {
            return Err(GraphError::NotSquare(l));
        }
        for (i, row) in self.weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(GraphError::NonFinite(i, j));
                }
            }
            if row[i] != 0.0 {
                return Err(GraphError::NonZeroDiagonal(i));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(GraphError::DuplicateLabel(dup.clone()));
        }
        if let Some(meta) = &self.meta {
            if meta.len() != l || meta.iter().any(|r| r.len() != l) {
                return Err(GraphError::NotSquare(l));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn to_json(&self) -> Result<String, GraphError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let g: Self = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    /// Heatmap-ready matrix: header `source,<labels…>`, one row per source node.
    /// Values use the shortest representation that parses back to the same f64.
    pub fn to_csv_matrix(&self) -> String {
        let mut out = String::from("source");
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.weights) {
            out.push_str(l);
            for w in row {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_matrix(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GraphError::Csv("empty input".into()))?;
        let labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut weights = Vec::with_capacity(labels.len());
        for (i, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let label = fields.next().unwrap_or_default().trim();
            if labels.get(i).map(String::as_str) != Some(label) {
                return Err(GraphError::Csv(format!("row {} is labeled `{label}`", i + 1)));
            }
            let row = fields
                .map(|f| f.trim().parse::<f64>().map_err(|_| GraphError::Csv(format!("bad number `{f}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            weights.push(row);
        }
        Self::new(labels, weights)
    }
}

/// Standardized aligned values and offset for one ordered pair.
pub fn prepare_pair(src: &RawSeries, dst: &RawSeries, cfg: &EstimatorConfig) -> Result<(Vec<f64>, Vec<f64>, usize), PairError> {
    let pair = PairAlignment::new(src, dst)?;
    prepare_alignment(&pair, cfg)
}

/// Transforms then standardizes both sides of an alignment over exactly its samples.
pub fn prepare_alignment(pair: &PairAlignment, cfg: &EstimatorConfig) -> Result<(Vec<f64>, Vec<f64>, usize), PairError> {
    let s = StdSeries::from_raw(&pair.src_id, &pair.src_values, cfg.transform)?;
    let d = StdSeries::from_raw(&pair.dst_id, &pair.dst_values, cfg.transform)?;
    Ok((s.values, d.values, pair.delta))
}

/// Estimates the DI rate for one aligned pair.
pub fn estimate_alignment(pair: &PairAlignment, cfg: &EstimatorConfig) -> Result<DiEstimate, PairError> {
    let (s, d, delta) = prepare_alignment(pair, cfg)?;
    Ok(estimate_di_rate(&s, &d, delta, cfg)?)
}

/// Markov-order selection for one aligned pair, on the same jittered series
/// [`estimate_alignment`] uses.
pub fn select_alignment_order(pair: &PairAlignment, cfg: &EstimatorConfig) -> Result<OrderSelection, PairError> {
    let (s, d, _) = prepare_alignment(pair, cfg)?;
    let (s, d) = jittered(&s, &d, cfg);
    Ok(select_markov_order(&d, &s, cfg)?)
}

pub(crate) fn ordered_pairs(l: usize) -> Vec<(usize, usize)> {
    (0..l).flat_map(|i| (0..l).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

fn assemble(
    labels: Vec<String>,
    estimate: impl Fn(usize, usize) -> Result<DiEstimate, GraphError> + Sync,
) -> Result<CausalGraph, GraphError> {
    let l = labels.len();
    if l < 2 {
        return Err(GraphError::TooFewSeries(l));
    }
    type Edge = ((usize, usize), DiEstimate);
    let outcomes: Vec<Result<Edge, GraphError>> =
        ordered_pairs(l).into_par_iter().map(|(i, j)| estimate(i, j).map(|e| ((i, j), e))).collect();
    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => failures.push(e),
        }
    }
    if failures.len() == 1 {
        return Err(failures.pop().expect("one failure"));
    }
    if !failures.is_empty() {
        return Err(GraphError::PairFailures(failures));
    }
    let mut weights = vec![vec![0.0; l]; l];
    let mut meta = vec![vec![None; l]; l];
    for ((i, j), e) in results {
        weights[i][j] = e.value;
        meta[i][j] = Some(EdgeMeta::from(&e));
    }
    let g = CausalGraph { labels, weights, meta: Some(meta) };
    g.validate()?;
    Ok(g)
}

/// Full pipeline over price series: per ordered pair, intersect calendars,
/// transform, standardize, apply the region offset and estimate the DI rate.
pub fn build_graph(series: &[RawSeries], cfg: &EstimatorConfig) -> Result<CausalGraph, GraphError> {
    cfg.validate().map_err(|e| GraphError::Pair {
        src: String::new(),
        dst: String::new(),
        source: PairError::Estimator(e),
    })?;
    let labels: Vec<String> = series.iter().map(|s| s.id.clone()).collect();
    assemble(labels, |i, j| {
        let pair = PairAlignment::new(&series[i], &series[j]).map_err(|e| GraphError::Pair {
            src: series[i].id.clone(),
            dst: series[j].id.clone(),
            source: e.into(),
        })?;
        estimate_alignment(&pair, cfg).map_err(|source| GraphError::Pair {
            src: series[i].id.clone(),
            dst: series[j].id.clone(),
            source,
        })
    })
}

/// Graph over equally long, already stationary series sampled simultaneously
/// (no calendar alignment, no transform, zero offset).
pub fn build_graph_stationary(labels: Vec<String>, series: &[Vec<f64>], cfg: &EstimatorConfig) -> Result<CausalGraph, GraphError> {
    if labels.len() != series.len() {
        return Err(GraphError::NotSquare(labels.len()));
    }
    let standardized = series
        .iter()
        .zip(&labels)
        .map(|(s, l)| {
            standardize(s).map(|st| st.values).map_err(|e| GraphError::Pair {
                src: l.clone(),
                dst: l.clone(),
                source: e.into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let names = labels.clone();
    assemble(labels, |i, j| {
        estimate_di_rate(&standardized[i], &standardized[j], 0, cfg).map_err(|e| GraphError::Pair {
            src: names[i].clone(),
            dst: names[j].clone(),
            source: e.into(),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub labels: Vec<String>,
    /// Score per node, in label order.
    pub scores: Vec<f64>,
    /// Node labels, best first.
    pub order: Vec<String>,
}

impl RankingResult {
    fn from_scores(labels: &[String], scores: Vec<f64>) -> Self {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        // Stable sort keeps label order among equal scores.
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        Self { labels: labels.to_vec(), order: idx.iter().map(|&i| labels[i].clone()).collect(), scores }
    }

    /// 1-based rank of every node, in label order.
    pub fn ranks(&self) -> Vec<usize> {
        self.labels.iter().map(|l| self.order.iter().position(|o| o == l).expect("order is a permutation") + 1).collect()
    }

    pub fn score_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.scores[i])
    }
}

/// Net flow per node: total outgoing weight minus total incoming weight.
pub fn net_flow(g: &CausalGraph) -> RankingResult {
    let l = g.len();
    let scores = (0..l)
        .map(|i| {
            let out: f64 = (0..l).filter(|&j| j != i).map(|j| g.weights[i][j]).sum();
            let inc: f64 = (0..l).filter(|&j| j != i).map(|j| g.weights[j][i]).sum();
            out - inc
        })
        .collect();
    RankingResult::from_scores(&g.labels, scores)
}

/// Collapses nodes into region super-nodes. The edge R1 → R2 sums all node
/// weights from R1 to R2; pairs within one region are dropped. Region nodes
/// appear in [`Region::ALL`] order.
pub fn aggregate_regions(g: &CausalGraph, region_of: &HashMap<String, Region>) -> Result<CausalGraph, GraphError> {
    let node_regions = g
        .labels
        .iter()
        .map(|l| region_of.get(l).copied().ok_or_else(|| GraphError::UnmappedNode(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let present: Vec<Region> = Region::ALL.into_iter().filter(|r| node_regions.contains(r)).collect();
    let slot = |r: Region| present.iter().position(|&p| p == r).expect("present region");
    let mut weights = vec![vec![0.0; present.len()]; present.len()];
    for i in 0..g.len() {
        for j in 0..g.len() {
            let (ri, rj) = (slot(node_regions[i]), slot(node_regions[j]));
            if ri != rj {
                weights[ri][rj] += g.weights[i][j];
            }
        }
    }
    CausalGraph::new(present.iter().map(|r| r.to_string()).collect(), weights)
}

pub const DEFAULT_DAMPING: f64 = 0.85;
const PAGERANK_TOLERANCE: f64 = 1e-10;
const PAGERANK_MAX_ITER: usize = 100_000;

/// PageRank of the walk that leaves node i along edge i → j with probability
/// proportional to the (negative-clamped) weight. Nodes without positive
/// outgoing weight teleport uniformly. Scores sum to 1.
pub fn pagerank_rank(g: &CausalGraph, damping: f64) -> Result<RankingResult, GraphError> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(GraphError::InvalidDamping(damping));
    }
    let l = g.len();
    if l == 0 {
        return Ok(RankingResult::from_scores(&g.labels, Vec::new()));
    }
    let w: Vec<Vec<f64>> = g.weights.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
    let out: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let uniform = 1.0 / l as f64;
    let mut rank = vec![uniform; l];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..l).filter(|&i| out[i] <= 0.0).map(|i| rank[i]).sum();
        let mut next = vec![(1.0 - damping) * uniform + damping * dangling * uniform; l];
        for i in (0..l).filter(|&i| out[i] > 0.0) {
            let share = damping * rank[i] / out[i];
            for j in 0..l {
                next[j] += share * w[i][j];
            }
        }
        let diff: f64 = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if diff < PAGERANK_TOLERANCE {
            return Ok(RankingResult::from_scores(&g.labels, rank));
        }
    }
    Err(GraphError::NonConvergence(PAGERANK_MAX_ITER))
}
