//! Exact max-norm neighbor search.
//!
//! Two backends answer the same queries: [`BruteForce`] scans every point and
//! [`KdTree`] prunes with per-node bounding boxes. Neighbors are ordered by
//! `(distance, index)`, so both return identical results on every query,
//! including ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::points::{max_norm, PointSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Queries centered on a member of the indexed point set. The center itself
/// is never reported or counted, but exact duplicates of it are.
pub trait NeighborSearch: Sync {
    fn points(&self) -> &PointSet;

    /// The `k` nearest points to `center`, ascending by `(distance, index)`.
    /// Returns fewer than `k` when the set is too small.
    fn k_nearest(&self, center: usize, k: usize) -> Vec<Neighbor>;

    /// Number of points other than `center` at distance strictly below `radius`.
    fn count_within(&self, center: usize, radius: f64) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    /// k-d tree for low-dimensional sets, brute force otherwise.
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

const AUTO_KDTREE_MAX_DIMS: usize = 6;

pub fn build_index<'a>(points: &'a PointSet, strategy: SearchStrategy) -> Box<dyn NeighborSearch + 'a> {
    let use_tree = match strategy {
        SearchStrategy::BruteForce => false,
        SearchStrategy::KdTree => true,
        SearchStrategy::Auto => points.dims() <= AUTO_KDTREE_MAX_DIMS,
    };
    if use_tree {
        Box::new(KdTree::new(points))
    } else {
        Box::new(BruteForce::new(points))
    }
}

/// Counts points in a one-off set without building an index.
pub fn count_within(points: &PointSet, center: usize, radius: f64) -> usize {
    BruteForce::new(points).count_within(center, radius)
}

/// Bounded max-heap keeping the `k` smallest neighbors seen so far.
struct Best {
    heap: BinaryHeap<Neighbor>,
    k: usize,
}

impl Best {
    fn new(k: usize) -> Self {
        Self { heap: BinaryHeap::with_capacity(k + 1), k }
    }

    #[inline]
    fn offer(&mut self, n: Neighbor) {
        if self.heap.len() < self.k {
            self.heap.push(n);
        } else if let Some(worst) = self.heap.peek() {
            if n < *worst {
                self.heap.pop();
                self.heap.push(n);
            }
        }
    }

    /// Subtrees whose lower bound exceeds this cannot improve the result.
    #[inline]
    fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |n| n.distance)
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        self.heap.into_sorted_vec()
    }
}

pub struct BruteForce<'a> {
    points: &'a PointSet,
}

impl<'a> BruteForce<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        Self { points }
    }
}

impl NeighborSearch for BruteForce<'_> {
    fn points(&self) -> &PointSet {
        self.points
    }

    fn k_nearest(&self, center: usize, k: usize) -> Vec<Neighbor> {
        let q = self.points.row(center);
        let mut best = Best::new(k);
        if k == 0 {
            return Vec::new();
        }
        for j in 0..self.points.len() {
            if j != center {
                best.offer(Neighbor { index: j, distance: max_norm(q, self.points.row(j)) });
            }
        }
        best.into_sorted()
    }

    fn count_within(&self, center: usize, radius: f64) -> usize {
        let q = self.points.row(center);
        (0..self.points.len())
            .filter(|&j| j != center && max_norm(q, self.points.row(j)) < radius)
            .count()
    }
}

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// k-d tree with axis-aligned bounding boxes per node.
pub struct KdTree<'a> {
    points: &'a PointSet,
    /// Point indices in tree order; each node owns a contiguous range.
    order: Vec<usize>,
    /// Position of each point inside `order`.
    position: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node: `dims` minima followed by `dims` maxima.
    boxes: Vec<f64>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        let n = points.len();
        let mut tree = Self {
            points,
            order: (0..n).collect(),
            position: vec![0; n],
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            boxes: Vec::new(),
        };
        tree.build(0, n);
        for (pos, &idx) in tree.order.iter().enumerate() {
            tree.position[idx] = pos;
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dims = self.points.dims();
        let id = self.nodes.len();
        self.nodes.push(Node { start, end, children: None });

        let mut lo = vec![f64::INFINITY; dims];
        let mut hi = vec![f64::NEG_INFINITY; dims];
        for &i in &self.order[start..end] {
            for (d, &v) in self.points.row(i).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        self.boxes.extend_from_slice(&lo);
        self.boxes.extend_from_slice(&hi);

        let split_dim = (0..dims).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])));
        let Some(split_dim) = split_dim else { return id };
        if end - start <= LEAF_SIZE || hi[split_dim] <= lo[split_dim] {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.get(a, split_dim).total_cmp(&points.get(b, split_dim)).then(a.cmp(&b))
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    #[inline]
    fn box_of(&self, node: usize) -> (&[f64], &[f64]) {
        let dims = self.points.dims();
        let b = &self.boxes[2 * dims * node..2 * dims * (node + 1)];
        b.split_at(dims)
    }

    /// Smallest max-norm distance from `q` to any point of the node's box.
    #[inline]
    fn min_dist(&self, node: usize, q: &[f64]) -> f64 {
        let (lo, hi) = self.box_of(node);
        q.iter().zip(lo.iter().zip(hi)).fold(0.0_f64, |acc, (&v, (&l, &h))| {
            let gap = if v < l { l - v } else if v > h { v - h } else { 0.0 };
            acc.max(gap)
        })
    }

    /// Largest max-norm distance from `q` to any point of the node's box.
    #[inline]
    fn max_dist(&self, node: usize, q: &[f64]) -> f64 {
        let (lo, hi) = self.box_of(node);
        q.iter()
            .zip(lo.iter().zip(hi))
            .fold(0.0_f64, |acc, (&v, (&l, &h))| acc.max((v - l).abs()).max((h - v).abs()))
    }

    fn knn_rec(&self, node: usize, q: &[f64], center: usize, best: &mut Best) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for &j in &self.order[n.start..n.end] {
                    if j != center {
                        best.offer(Neighbor { index: j, distance: max_norm(q, self.points.row(j)) });
                    }
                }
            }
            Some((l, r)) => {
                let dl = self.min_dist(l, q);
                let dr = self.min_dist(r, q);
                let (first, d_first, second, d_second) =
                    if dl <= dr { (l, dl, r, dr) } else { (r, dr, l, dl) };
                // Equal distances may still win on index, so prune only on strict excess.
                if d_first <= best.bound() {
                    self.knn_rec(first, q, center, best);
                }
                if d_second <= best.bound() {
                    self.knn_rec(second, q, center, best);
                }
            }
        }
    }

    fn count_rec(&self, node: usize, q: &[f64], center: usize, radius: f64) -> usize {
        if self.min_dist(node, q) >= radius {
            return 0;
        }
        let n = &self.nodes[node];
        if self.max_dist(node, q) < radius {
            let pos = self.position[center];
            let contains_center = n.start <= pos && pos < n.end;
            return n.end - n.start - usize::from(contains_center);
        }
        match n.children {
            None => self.order[n.start..n.end]
                .iter()
                .filter(|&&j| j != center && max_norm(q, self.points.row(j)) < radius)
                .count(),
            Some((l, r)) => self.count_rec(l, q, center, radius) + self.count_rec(r, q, center, radius),
        }
    }
}

impl NeighborSearch for KdTree<'_> {
    fn points(&self) -> &PointSet {
        self.points
    }

    fn k_nearest(&self, center: usize, k: usize) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let mut best = Best::new(k);
        self.knn_rec(0, self.points.row(center), center, &mut best);
        best.into_sorted()
    }

    fn count_within(&self, center: usize, radius: f64) -> usize {
        self.count_rec(0, self.points.row(center), center, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(values: &[f64]) -> PointSet {
        PointSet::new(values.to_vec(), 1).unwrap()
    }

    #[test]
    fn count_examples() {
        let p = line(&[0.0, 0.5, 2.0]);
        assert_eq!(count_within(&p, 0, 1.0), 1);
        // radius below the smallest pairwise distance
        assert_eq!(count_within(&p, 0, 0.4), 0);
        // boundary is excluded
        assert_eq!(count_within(&p, 0, 0.5), 0);
        let dup = line(&[1.0, 1.0, 1.0, 5.0]);
        assert_eq!(count_within(&dup, 0, 1e-9), 2);
        assert_eq!(KdTree::new(&dup).count_within(0, 1e-9), 2);
    }

    #[test]
    fn zero_dim_everything_is_at_distance_zero() {
        let p = PointSet::zero_dim(5).unwrap();
        for strategy in [SearchStrategy::BruteForce, SearchStrategy::KdTree] {
            let idx = build_index(&p, strategy);
            assert_eq!(idx.count_within(2, 0.1), 4);
            let nn = idx.k_nearest(2, 2);
            assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1]);
        }
    }

    #[test]
    fn ties_broken_by_index() {
        let p = line(&[0.0, 1.0, -1.0, 1.0, 2.0]);
        let nn = BruteForce::new(&p).k_nearest(0, 3);
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(KdTree::new(&p).k_nearest(0, 3), nn);
    }

    #[test]
    fn k_larger_than_set() {
        let p = line(&[0.0, 1.0]);
        assert_eq!(KdTree::new(&p).k_nearest(0, 5).len(), 1);
        assert_eq!(BruteForce::new(&p).k_nearest(0, 5).len(), 1);
    }

    fn point_sets() -> impl Strategy<Value = PointSet> {
        (1usize..5, 2usize..120).prop_flat_map(|(dims, len)| {
            // Coarse grid values force many exact ties.
            prop::collection::vec((-6i32..6).prop_map(|v| v as f64 * 0.5), dims * len)
                .prop_map(move |data| PointSet::new(data, dims).unwrap())
        })
    }

    proptest! {
        #[test]
        fn kdtree_matches_brute_force(points in point_sets(), k in 1usize..8, radius in 0.01f64..4.0) {
            let brute = BruteForce::new(&points);
            let tree = KdTree::new(&points);
            for center in 0..points.len() {
                prop_assert_eq!(tree.k_nearest(center, k), brute.k_nearest(center, k));
                prop_assert_eq!(tree.count_within(center, radius), brute.count_within(center, radius));
            }
        }

        #[test]
        fn kdtree_matches_brute_force_continuous(
            data in prop::collection::vec(-10.0f64..10.0, 3 * 200),
            k in 1usize..6,
        ) {
            let points = PointSet::new(data, 3).unwrap();
            let brute = BruteForce::new(&points);
            let tree = KdTree::new(&points);
            for center in (0..points.len()).step_by(7) {
                let nn = brute.k_nearest(center, k);
                prop_assert_eq!(&tree.k_nearest(center, k), &nn);
                let r = nn.last().unwrap().distance;
                prop_assert_eq!(tree.count_within(center, r), brute.count_within(center, r));
            }
        }
    }
}
