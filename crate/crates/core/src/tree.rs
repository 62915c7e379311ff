//! A bucketed k-d tree under the maximum norm.
//!
//! Supports the three queries the estimators need: k-th nearest neighbour
//! distance, strict fixed-radius counts, and a dual-tree traversal that bins
//! every pair distance of the cloud into a sorted set of radii.
//!
//! Box bounds are computed from the stored coordinates, and floating-point
//! subtraction is monotone, so every pruning decision agrees exactly with the
//! per-pair distances a brute-force loop would compute.

use alloc::vec;
use alloc::vec::Vec;

use crate::series::PointCloud;

const LEAF_SIZE: usize = 16;
const NO_CHILD: u32 = u32::MAX;

/// Max-norm distance between two equally long coordinate slices.
#[inline]
pub fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        d = d.max(libm::fabs(x - y));
    }
    d
}

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    extent: f64,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }

    fn len(&self) -> u64 {
        u64::from(self.end - self.start)
    }
}

/// k-d tree over a copy of a point cloud's coordinates.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    index: Vec<u32>,
    nodes: Vec<Node>,
    bounds: Vec<f64>,
}

impl KdTree {
    /// Builds the tree with median splits along the widest box side.
    ///
    /// # Panics
    /// If the cloud holds more than `u32::MAX − 1` points.
    pub fn new(cloud: &PointCloud) -> Self {
        Self::from_flat(cloud.dim(), cloud.coords())
    }

    /// Builds the tree from a flat row-major buffer of `dim`-vectors.
    pub fn from_flat(dim: usize, coords: &[f64]) -> Self {
        let n = coords.len() / dim;
        assert!(n < NO_CHILD as usize, "point cloud too large");
        let mut index: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            coords: Vec::new(),
            index: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            bounds: Vec::with_capacity(2 * dim * (2 * n / LEAF_SIZE + 1)),
        };
        if n > 0 {
            tree.build(coords, &mut index, 0, n);
        }
        let mut permuted = Vec::with_capacity(coords.len());
        for &i in &index {
            let i = i as usize;
            permuted.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        tree.coords = permuted;
        tree.index = index;
        tree
    }

    fn build(&mut self, coords: &[f64], index: &mut [u32], start: usize, end: usize) -> u32 {
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &index[start..end] {
            let p = &coords[i as usize * dim..(i as usize + 1) * dim];
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let (split_dim, extent) = (0..dim)
            .map(|k| (k, hi[k] - lo[k]))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            left: NO_CHILD,
            right: NO_CHILD,
            extent,
        });
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        if end - start <= LEAF_SIZE || extent <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a as usize * dim + split_dim].total_cmp(&coords[b as usize * dim + split_dim])
        });
        let left = self.build(coords, index, start, mid);
        let right = self.build(coords, index, mid, end);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        id
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    /// True for a tree without points.
    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    #[inline]
    fn lo(&self, node: u32) -> &[f64] {
        let o = 2 * self.dim * node as usize;
        &self.bounds[o..o + self.dim]
    }

    #[inline]
    fn hi(&self, node: u32) -> &[f64] {
        let o = 2 * self.dim * node as usize;
        &self.bounds[o + self.dim..o + 2 * self.dim]
    }

    #[inline]
    fn stored(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    #[inline]
    fn point_box_min(&self, q: &[f64], node: u32) -> f64 {
        let (lo, hi) = (self.lo(node), self.hi(node));
        let mut d = 0.0f64;
        for k in 0..self.dim {
            d = d.max(lo[k] - q[k]).max(q[k] - hi[k]);
        }
        d
    }

    #[inline]
    fn point_box_max(&self, q: &[f64], node: u32) -> f64 {
        let (lo, hi) = (self.lo(node), self.hi(node));
        let mut d = 0.0f64;
        for k in 0..self.dim {
            d = d.max(q[k] - lo[k]).max(hi[k] - q[k]);
        }
        d
    }

    #[inline]
    fn box_box_min(&self, a: u32, b: u32) -> f64 {
        let (alo, ahi, blo, bhi) = (self.lo(a), self.hi(a), self.lo(b), self.hi(b));
        let mut d = 0.0f64;
        for k in 0..self.dim {
            d = d.max(blo[k] - ahi[k]).max(alo[k] - bhi[k]);
        }
        d
    }

    #[inline]
    fn box_box_max(&self, a: u32, b: u32) -> f64 {
        let (alo, ahi, blo, bhi) = (self.lo(a), self.hi(a), self.lo(b), self.hi(b));
        let mut d = 0.0f64;
        for k in 0..self.dim {
            d = d.max(bhi[k] - alo[k]).max(ahi[k] - blo[k]);
        }
        d
    }

    /// Distance from `query` to its k-th nearest indexed point, skipping the
    /// point whose original index is `exclude`.
    ///
    /// Returns `None` when fewer than `k` candidates exist.
    pub fn kth_neighbor_distance(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Option<f64> {
        if k == 0 || self.is_empty() {
            return None;
        }
        let mut best = KBest::new(k);
        let exclude = exclude.map(|e| e as u32);
        self.knn_visit(0, query, exclude, &mut best);
        best.kth()
    }

    fn knn_visit(&self, node: u32, q: &[f64], exclude: Option<u32>, best: &mut KBest) {
        let n = self.nodes[node as usize];
        if n.is_leaf() {
            for pos in n.start as usize..n.end as usize {
                if Some(self.index[pos]) == exclude {
                    continue;
                }
                best.offer(max_dist(q, self.stored(pos)));
            }
            return;
        }
        let dl = self.point_box_min(q, n.left);
        let dr = self.point_box_min(q, n.right);
        let (first, d1, second, d2) = if dl <= dr {
            (n.left, dl, n.right, dr)
        } else {
            (n.right, dr, n.left, dl)
        };
        if d1 < best.bound() {
            self.knn_visit(first, q, exclude, best);
        }
        if d2 < best.bound() {
            self.knn_visit(second, q, exclude, best);
        }
    }

    /// Number of indexed points at max-norm distance strictly below `r`
    /// from `query` (the query itself counts if it is indexed).
    pub fn count_within(&self, query: &[f64], r: f64) -> usize {
        if self.is_empty() {
            return 0;
        }
        let mut count = 0usize;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            if self.point_box_min(query, id) >= r {
                continue;
            }
            let n = self.nodes[id as usize];
            if self.point_box_max(query, id) < r {
                count += (n.end - n.start) as usize;
            } else if n.is_leaf() {
                count += (n.start as usize..n.end as usize)
                    .filter(|&pos| max_dist(query, self.stored(pos)) < r)
                    .count();
            } else {
                stack.push(n.left);
                stack.push(n.right);
            }
        }
        count
    }

    /// Adds to `hist` the distances from `query` to every indexed point,
    /// binned as in [`pair_histogram`](Self::pair_histogram). `hist` needs
    /// `radii.len() + 1` entries; the last one is never touched. The query
    /// itself, if indexed, lands in bin 0.
    pub fn point_histogram(&self, query: &[f64], radii: &[f64], hist: &mut [u64]) {
        if self.is_empty() || radii.is_empty() {
            return;
        }
        let bins = Bins { radii };
        let top = radii.len();
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let b0 = bins.bin(self.point_box_min(query, id));
            if b0 == top {
                continue;
            }
            let n = self.nodes[id as usize];
            let b1 = bins.bin_from(self.point_box_max(query, id), b0);
            if b0 == b1 {
                hist[b0] += n.len();
            } else if n.is_leaf() {
                for pos in n.start as usize..n.end as usize {
                    let b = bins.bin_from(max_dist(query, self.stored(pos)), b0);
                    if b < top {
                        hist[b] += 1;
                    }
                }
            } else {
                stack.push(n.left);
                stack.push(n.right);
            }
        }
    }

    /// Histogram of all unordered pair distances against sorted `radii`.
    ///
    /// Entry `b` of the result counts the pairs whose distance `d` satisfies
    /// `radii[b−1] ≤ d < radii[b]` (entry 0: `d < radii[0]`). Pairs at
    /// `d ≥ radii.last()` are not counted. The result has `radii.len()`
    /// entries; its prefix sums are the pair counts below each radius.
    pub fn pair_histogram(&self, radii: &[f64]) -> Vec<u64> {
        let mut hist = vec![0u64; radii.len() + 1];
        if self.len() >= 2 && !radii.is_empty() {
            let bins = Bins { radii };
            self.self_pairs(0, &bins, &mut hist);
        }
        hist.truncate(radii.len());
        hist
    }

    /// Same as [`pair_histogram`](Self::pair_histogram), with the top-level
    /// node pairs processed on the rayon pool.
    #[cfg(feature = "parallel")]
    pub fn pair_histogram_par(&self, radii: &[f64]) -> Vec<u64> {
        use rayon::prelude::*;
        if self.len() < 2 || radii.is_empty() {
            return vec![0; radii.len()];
        }
        let mut tasks = Vec::new();
        self.split_tasks(0, None, 6, &mut tasks);
        let bins = Bins { radii };
        let mut hist = tasks
            .par_iter()
            .map(|&(a, b)| {
                let mut h = vec![0u64; radii.len() + 1];
                match b {
                    None => self.self_pairs(a, &bins, &mut h),
                    Some(b) => self.cross_pairs(a, b, &bins, &mut h),
                }
                h
            })
            .reduce(
                || vec![0u64; radii.len() + 1],
                |mut acc, h| {
                    for (x, y) in acc.iter_mut().zip(h) {
                        *x += y;
                    }
                    acc
                },
            );
        hist.truncate(radii.len());
        hist
    }

    #[cfg(feature = "parallel")]
    fn split_tasks(&self, a: u32, b: Option<u32>, depth: u32, out: &mut Vec<(u32, Option<u32>)>) {
        let na = self.nodes[a as usize];
        match b {
            None if depth > 0 && !na.is_leaf() => {
                self.split_tasks(na.left, None, depth - 1, out);
                self.split_tasks(na.right, None, depth - 1, out);
                self.split_tasks(na.left, Some(na.right), depth - 1, out);
            }
            Some(bb) if depth > 0 && !na.is_leaf() => {
                self.split_tasks(na.left, Some(bb), depth - 1, out);
                self.split_tasks(na.right, Some(bb), depth - 1, out);
            }
            _ => out.push((a, b)),
        }
    }

    fn self_pairs(&self, id: u32, bins: &Bins<'_>, hist: &mut [u64]) {
        let n = self.nodes[id as usize];
        if n.is_leaf() {
            if n.extent <= 0.0 {
                // all points coincide
                let c = n.len();
                hist[bins.bin(0.0)] += c * (c.saturating_sub(1)) / 2;
                return;
            }
            let b0 = bins.bin(0.0);
            for i in n.start as usize..n.end as usize {
                let p = self.stored(i);
                for j in i + 1..n.end as usize {
                    let d = max_dist(p, self.stored(j));
                    hist[bins.bin_from(d, b0)] += 1;
                }
            }
            return;
        }
        self.self_pairs(n.left, bins, hist);
        self.self_pairs(n.right, bins, hist);
        self.cross_pairs(n.left, n.right, bins, hist);
    }

    fn cross_pairs(&self, a: u32, b: u32, bins: &Bins<'_>, hist: &mut [u64]) {
        let dmin = self.box_box_min(a, b);
        let b0 = bins.bin(dmin);
        if b0 == bins.radii.len() {
            return;
        }
        let dmax = self.box_box_max(a, b);
        let b1 = bins.bin_from(dmax, b0);
        let (na, nb) = (self.nodes[a as usize], self.nodes[b as usize]);
        if b0 == b1 {
            hist[b0] += na.len() * nb.len();
            return;
        }
        match (na.is_leaf(), nb.is_leaf()) {
            (true, true) => {
                for i in na.start as usize..na.end as usize {
                    let p = self.stored(i);
                    for j in nb.start as usize..nb.end as usize {
                        let d = max_dist(p, self.stored(j));
                        hist[bins.bin_from(d, b0)] += 1;
                    }
                }
            }
            (false, true) => {
                self.cross_pairs(na.left, b, bins, hist);
                self.cross_pairs(na.right, b, bins, hist);
            }
            (true, false) => {
                self.cross_pairs(a, nb.left, bins, hist);
                self.cross_pairs(a, nb.right, bins, hist);
            }
            (false, false) => {
                if na.extent >= nb.extent {
                    self.cross_pairs(na.left, b, bins, hist);
                    self.cross_pairs(na.right, b, bins, hist);
                } else {
                    self.cross_pairs(a, nb.left, bins, hist);
                    self.cross_pairs(a, nb.right, bins, hist);
                }
            }
        }
    }
}

/// Maps a distance to the index of the first radius strictly above it.
struct Bins<'a> {
    radii: &'a [f64],
}

impl Bins<'_> {
    #[inline]
    fn bin(&self, d: f64) -> usize {
        self.radii.partition_point(|&r| r <= d)
    }

    /// `bin(d)` given that the answer is at least `start`.
    #[inline]
    fn bin_from(&self, d: f64, start: usize) -> usize {
        let mut b = start;
        while b < self.radii.len() && self.radii[b] <= d {
            b += 1;
        }
        b
    }
}

/// The k smallest distances seen so far, kept sorted.
struct KBest {
    k: usize,
    dists: Vec<f64>,
}

impl KBest {
    fn new(k: usize) -> Self {
        Self {
            k,
            dists: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn bound(&self) -> f64 {
        if self.dists.len() < self.k {
            f64::INFINITY
        } else {
            self.dists[self.k - 1]
        }
    }

    #[inline]
    fn offer(&mut self, d: f64) {
        if d >= self.bound() {
            return;
        }
        let pos = self.dists.partition_point(|&x| x <= d);
        self.dists.insert(pos, d);
        self.dists.truncate(self.k);
    }

    fn kth(&self) -> Option<f64> {
        (self.dists.len() == self.k).then(|| self.dists[self.k - 1])
    }
}
