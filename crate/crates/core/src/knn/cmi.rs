//! Nearest-neighbor conditional mutual information.
//!
//! For each sample the max-norm distance ε to its k-th neighbor in the joint
//! (x, y, z) space fixes a ball; the estimator then counts neighbors strictly
//! inside that ball in the (x, z), (y, z) and z subspaces:
//!
//! ```text
//! I(X; Y | Z) ≈ ψ(k) − ⟨ψ(n_xz + 1) + ψ(n_yz + 1) − ψ(n_z + 1)⟩
//! ```
//!
//! This is the first KSG algorithm carried over to the conditional case. With
//! an empty z block every n_z equals N − 1 and the formula reduces to the
//! plain KSG mutual information estimate.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::digamma::digamma_unchecked;
use super::points::PointSet;
use super::search::{build_index, SearchStrategy};
use super::KnnError;

/// One (source past, target next, target past) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct CmiSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Column blocks of a CMI problem, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CmiSamples {
    pub x: PointSet,
    pub y: PointSet,
    pub z: PointSet,
}

impl CmiSamples {
    pub fn new(x: PointSet, y: PointSet, z: PointSet) -> Result<Self, KnnError> {
        for p in [&y, &z] {
            if p.len() != x.len() {
                return Err(KnnError::LengthMismatch { expected: x.len(), found: p.len() });
            }
        }
        Ok(Self { x, y, z })
    }

    pub fn from_samples(samples: &[CmiSample]) -> Result<Self, KnnError> {
        let block = |f: fn(&CmiSample) -> &Vec<f64>| {
            let rows: Vec<&[f64]> = samples.iter().map(|s| f(s).as_slice()).collect();
            PointSet::from_rows(&rows)
        };
        Self::new(block(|s| &s.x)?, block(|s| &s.y)?, block(|s| &s.z)?)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sample(&self, i: usize) -> CmiSample {
        CmiSample { x: self.x.row(i).to_vec(), y: self.y.row(i).to_vec(), z: self.z.row(i).to_vec() }
    }

    pub fn iter(&self) -> impl Iterator<Item = CmiSample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self { x: self.x.permuted(order), y: self.y.permuted(order), z: self.z.permuted(order) }
    }
}

/// Estimates I(X; Y | Z) in nats. The result may be slightly negative.
pub fn estimate_cmi(samples: &CmiSamples, k: usize) -> Result<f64, KnnError> {
    estimate_cmi_with(samples, k, SearchStrategy::Auto)
}

pub fn estimate_cmi_with(samples: &CmiSamples, k: usize, strategy: SearchStrategy) -> Result<f64, KnnError> {
    let n = samples.len();
    if k == 0 {
        return Err(KnnError::InvalidK);
    }
    if n < k + 2 {
        return Err(KnnError::TooFewSamples { needed: k + 2, got: n });
    }

    let joint = PointSet::hstack(&[&samples.x, &samples.y, &samples.z])?;
    let xz = PointSet::hstack(&[&samples.x, &samples.z])?;
    let yz = PointSet::hstack(&[&samples.y, &samples.z])?;

    let joint_index = build_index(&joint, strategy);
    let xz_index = build_index(&xz, strategy);
    let yz_index = build_index(&yz, strategy);
    let z_index = build_index(&samples.z, strategy);

    let counts: Vec<(usize, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let radius = joint_index.k_nearest(i, k).last().map_or(0.0, |nb| nb.distance);
            if radius <= 0.0 {
                return Err(KnnError::DegenerateGeometry { sample: i });
            }
            Ok((
                xz_index.count_within(i, radius),
                yz_index.count_within(i, radius),
                z_index.count_within(i, radius),
            ))
        })
        .collect::<Result<_, _>>()?;

    // Summing ψ over a count histogram makes the result independent of sample order.
    let mut histogram: BTreeMap<usize, i64> = BTreeMap::new();
    for &(n_xz, n_yz, n_z) in &counts {
        *histogram.entry(n_xz + 1).or_default() += 1;
        *histogram.entry(n_yz + 1).or_default() += 1;
        *histogram.entry(n_z + 1).or_default() -= 1;
    }
    let total: f64 = histogram
        .iter()
        .filter(|(_, &mult)| mult != 0)
        .map(|(&c, &mult)| mult as f64 * digamma_unchecked(c as f64))
        .sum();

    Ok(digamma_unchecked(k as f64) - total / n as f64)
}
