//! Pair counters. Each returns, for every radius, the number of unordered
//! pairs at max-norm distance strictly below it.

use alloc::vec;
use alloc::vec::Vec;

use crate::series::PointCloud;
use crate::tree::{max_dist, KdTree};

/// Strategy used to count close pairs. All strategies give identical counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PairCounter {
    /// O(N²) double loop. Reference implementation.
    Naive,
    /// Grid boxes of side ε on the first two coordinates, one box size per
    /// decade of radii, exhaustive check of the 3×3 neighbourhood.
    BoxAssisted,
    /// Dual k-d tree traversal resolving whole node pairs at once.
    #[default]
    DualTree,
}

pub(crate) fn cumulative(hist: &[u64]) -> Vec<u64> {
    hist.iter()
        .scan(0u64, |acc, &h| {
            *acc += h;
            Some(*acc)
        })
        .collect()
}

pub(crate) fn count_pairs(cloud: &PointCloud, radii: &[f64], counter: PairCounter) -> Vec<u64> {
    match counter {
        PairCounter::Naive => naive(cloud, radii),
        PairCounter::BoxAssisted => box_assisted(cloud, radii),
        PairCounter::DualTree => {
            let tree = KdTree::new(cloud);
            #[cfg(feature = "parallel")]
            let hist = tree.pair_histogram_par(radii);
            #[cfg(not(feature = "parallel"))]
            let hist = tree.pair_histogram(radii);
            cumulative(&hist)
        }
    }
}

fn naive(cloud: &PointCloud, radii: &[f64]) -> Vec<u64> {
    let mut hist = vec![0u64; radii.len() + 1];
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        for j in i + 1..cloud.len() {
            let d = max_dist(p, cloud.point(j));
            hist[radii.partition_point(|&r| r <= d)] += 1;
        }
    }
    hist.truncate(radii.len());
    cumulative(&hist)
}

/// Counts pairs closer than `radii[j]` for all j, given the pair distances
/// of `excluded` index pairs, so callers can subtract them.
pub(crate) fn histogram_of(cloud: &PointCloud, pairs: impl Iterator<Item = (usize, usize)>, radii: &[f64]) -> Vec<u64> {
    let mut hist = vec![0u64; radii.len() + 1];
    for (i, j) in pairs {
        let d = max_dist(cloud.point(i), cloud.point(j));
        hist[radii.partition_point(|&r| r <= d)] += 1;
    }
    hist.truncate(radii.len());
    cumulative(&hist)
}

fn box_assisted(cloud: &PointCloud, radii: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; radii.len()];
    if cloud.len() < 2 || radii.is_empty() {
        return counts;
    }
    let dim = cloud.dim();
    let (mut min0, mut min1) = (f64::INFINITY, f64::INFINITY);
    for p in cloud.points() {
        min0 = min0.min(p[0]);
        if dim > 1 {
            min1 = min1.min(p[1]);
        }
    }
    let mut lo = 0;
    while lo < radii.len() {
        let mut hi = lo;
        while hi + 1 < radii.len() && radii[hi + 1] <= 10.0 * radii[lo] {
            hi += 1;
        }
        let side = radii[hi];
        let chunk = &radii[lo..=hi];
        let local = count_chunk(cloud, chunk, side, min0, min1);
        counts[lo..=hi].copy_from_slice(&local);
        lo = hi + 1;
    }
    counts
}

fn count_chunk(cloud: &PointCloud, chunk: &[f64], side: f64, min0: f64, min1: f64) -> Vec<u64> {
    let dim = cloud.dim();
    let cell_of = |p: &[f64]| -> (i64, i64) {
        let cx = libm::floor((p[0] - min0) / side) as i64;
        let cy = if dim > 1 { libm::floor((p[1] - min1) / side) as i64 } else { 0 };
        (cx, cy)
    };
    let mut order: Vec<(i64, i64, usize)> = cloud
        .points()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy) = cell_of(p);
            (cx, cy, i)
        })
        .collect();
    order.sort_unstable();
    // unique cells as (key, start, end) into `order`
    let mut cells: Vec<((i64, i64), usize, usize)> = Vec::new();
    for (pos, &(cx, cy, _)) in order.iter().enumerate() {
        match cells.last_mut() {
            Some((key, _, end)) if *key == (cx, cy) => *end = pos + 1,
            _ => cells.push(((cx, cy), pos, pos + 1)),
        }
    }
    let find = |key: (i64, i64)| cells.binary_search_by(|c| c.0.cmp(&key)).ok();
    let mut hist = vec![0u64; chunk.len() + 1];
    let mut record = |d: f64| {
        if d < side {
            hist[chunk.partition_point(|&r| r <= d)] += 1;
        }
    };
    const FORWARD: [(i64, i64); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
    for &((cx, cy), start, end) in &cells {
        for a in start..end {
            let p = cloud.point(order[a].2);
            for b in a + 1..end {
                record(max_dist(p, cloud.point(order[b].2)));
            }
        }
        for (dx, dy) in FORWARD {
            if dim == 1 && dy != 0 {
                continue;
            }
            let Some(other) = find((cx + dx, cy + dy)) else {
                continue;
            };
            let (_, ostart, oend) = cells[other];
            for a in start..end {
                let p = cloud.point(order[a].2);
                for b in ostart..oend {
                    record(max_dist(p, cloud.point(order[b].2)));
                }
            }
        }
    }
    hist.truncate(chunk.len());
    cumulative(&hist)
}

/// Reference points processed between budget checks.
const BLOCK: usize = 256;
/// Reference points always processed before a radius may close.
pub(crate) const MIN_REFERENCES: usize = 1_024;
/// Seed of the reference-point order. Fixed so that every order of an
/// analysis, and every rerun, uses the same reference sequence.
const REFERENCE_SEED: u64 = 0x7265_6665_7265_6e63;

/// How many reference points each radius uses.
pub(crate) enum Budget<'a> {
    /// Keep adding reference points to a radius until it has collected this
    /// many close ordered pairs.
    Adaptive(u64),
    /// Reuse the per-radius reference counts of an earlier run.
    Fixed(&'a [usize]),
}

/// Result of a reference-point count.
pub(crate) struct SampledCounts {
    /// Cumulative ordered-pair counts per radius.
    pub counts: Vec<u64>,
    /// Admissible ordered pairs behind each count.
    pub totals: Vec<u64>,
    /// Reference points used per radius (non-increasing in the radius).
    pub references: Vec<usize>,
}

/// Counts, for a prefix of a fixed pseudo-random ordering of the points,
/// the admissible partners closer than each radius. Large radii stop once
/// they have enough pairs; with every point as a reference the ratio
/// counts/totals equals the all-pairs correlation sum exactly.
pub(crate) fn reference_counts(
    cloud: &PointCloud,
    radii: &[f64],
    theiler: usize,
    budget: Budget<'_>,
) -> SampledCounts {
    use rand::seq::SliceRandom;

    let n = cloud.len();
    let g = radii.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::series::RngSeed(REFERENCE_SEED).rng());
    let tree = KdTree::new(cloud);
    let origin = cloud.origin_indices();

    let mut counts = vec![0u64; g];
    let mut totals = vec![0u64; g];
    let mut references = vec![n; g];
    let mut active = g;
    let mut done = 0;
    while done < n && active > 0 {
        if let Budget::Fixed(plan) = budget {
            active = plan.iter().take_while(|&&r| r > done).count();
            if active == 0 {
                break;
            }
        }
        let block = &order[done..(done + BLOCK).min(n)];
        let per_ref = |&i: &usize| {
            let mut h = vec![0u64; active + 1];
            let p = cloud.point(i);
            tree.point_histogram(p, &radii[..active], &mut h);
            h[0] -= 1;
            let t = origin[i];
            let lo = origin.partition_point(|&o| o + theiler < t);
            let hi = origin.partition_point(|&o| o <= t + theiler);
            for j in (lo..hi).filter(|&j| j != i) {
                let d = max_dist(p, cloud.point(j));
                let b = radii[..active].partition_point(|&r| r <= d);
                if b < active {
                    h[b] -= 1;
                }
            }
            h[active] = (n - 1 - (hi - lo - 1)) as u64;
            h
        };
        #[cfg(feature = "parallel")]
        let local = {
            use rayon::prelude::*;
            block.par_iter().map(per_ref).collect::<Vec<_>>()
        };
        #[cfg(not(feature = "parallel"))]
        let local = block.iter().map(per_ref).collect::<Vec<_>>();
        for h in local {
            let mut running = 0;
            for (acc, v) in counts.iter_mut().zip(&h[..active]) {
                running += v;
                *acc += running;
            }
            for t in &mut totals[..active] {
                *t += h[active];
            }
        }
        done += block.len();
        if let Budget::Adaptive(max_pairs) = budget {
            if done >= MIN_REFERENCES {
                while active > 0 && counts[active - 1] >= max_pairs {
                    active -= 1;
                    references[active] = done;
                }
            }
        }
    }
    if let Budget::Fixed(plan) = budget {
        references.copy_from_slice(plan);
    }
    SampledCounts {
        counts,
        totals,
        references,
    }
}
