//! Kraskov–Stögbauer–Grassberger mutual information (first algorithm, max
//! norm) and the scale-dependent predictive information built on it.
//!
//! For every joint point the distance `ε_i` to its k-th neighbour in the
//! joint space fixes a neighbourhood; `n_x` and `n_y` count the marginal
//! points strictly closer than `ε_i`. The estimate is
//! `ψ(k) + ψ(N) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩`.
//!
//! Scale is controlled by adding uniform noise of width `η` before
//! estimating, which makes past and future independent below `η`.

use alloc::vec::Vec;

use crate::corrsum::{CurveFamily, EpsGrid, Quantity};
use crate::math::{digamma, pairwise_sum};
use crate::series::{add_uniform_noise, delay_embed_from, EmbeddingSpec, PointCloud, RngSeed, ScalarSeries};
use crate::tree::KdTree;
use crate::{Error, Result};

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsgConfig {
    /// Neighbour count.
    pub k: usize,
    /// Width of the uniform noise added before estimating.
    pub eta: f64,
    /// Noise seed.
    pub seed: RngSeed,
}

impl KsgConfig {
    /// `k` neighbours, no noise, seed 0.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            eta: 0.0,
            seed: RngSeed(0),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be positive"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::NegativeEta(self.eta));
        }
        Ok(())
    }
}

/// One mutual-information estimate in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    /// Estimate on all points.
    pub value: f64,
    /// Estimate on the first half of the points.
    pub half_data_value: f64,
    /// Joint points used for `value`.
    pub n_used: usize,
    /// Points whose k-th neighbour coincided with them, forcing a larger
    /// local k (over both the full and the half-data run).
    pub enlarged_k: usize,
}

/// Estimates `I(X; Y)` between two aligned clouds.
///
/// With `eta > 0`, every coordinate of both clouds first receives an
/// independent U[0, η) draw (X and Y use different derived seeds).
pub fn ksg_mi(x: &PointCloud, y: &PointCloud, cfg: &KsgConfig) -> Result<MiEstimate> {
    cfg.validate()?;
    if x.origin_indices() != y.origin_indices() {
        return Err(Error::MisalignedClouds);
    }
    if x.len() <= cfg.k {
        return Err(Error::TooFewPoints(x.len()));
    }
    let (x, y) = if cfg.eta > 0.0 {
        (
            jitter(x, cfg.eta, cfg.seed.derive(0)),
            jitter(y, cfg.eta, cfg.seed.derive(1)),
        )
    } else {
        (x.clone(), y.clone())
    };
    let (value, warn_full) = estimate(&x, &y, cfg.k)?;
    let half = x.len() / 2;
    let (half_data_value, warn_half) = if half > cfg.k {
        estimate(&x.slice(0, half), &y.slice(0, half), cfg.k)?
    } else {
        (f64::NAN, 0)
    };
    Ok(MiEstimate {
        value,
        half_data_value,
        n_used: x.len(),
        enlarged_k: warn_full + warn_half,
    })
}

fn jitter(cloud: &PointCloud, eta: f64, seed: RngSeed) -> PointCloud {
    use rand::Rng;
    let mut rng = seed.rng();
    let coords = cloud.coords().iter().map(|v| v + eta * rng.random::<f64>()).collect();
    PointCloud::from_parts(cloud.dim(), coords, cloud.origin_indices().to_vec())
        .expect("jitter keeps the cloud shape")
}

/// Per-point term `ψ(k_i) − (ψ(n_x + 1) + ψ(n_y + 1))`, and whether k had
/// to be enlarged. `None` if every other point coincides with this one.
fn point_term(
    joint: &KdTree,
    xt: &KdTree,
    yt: &KdTree,
    x: &PointCloud,
    y: &PointCloud,
    z: &PointCloud,
    i: usize,
    k: usize,
) -> Option<(f64, bool)> {
    let n = z.len();
    let mut ki = k;
    let mut eps = joint.kth_neighbor_distance(z.point(i), ki, Some(i))?;
    while eps <= 0.0 {
        ki += 1;
        if ki >= n {
            return None;
        }
        eps = joint.kth_neighbor_distance(z.point(i), ki, Some(i))?;
    }
    let nx = xt.count_within(x.point(i), eps) - 1;
    let ny = yt.count_within(y.point(i), eps) - 1;
    let marginal = digamma((nx + 1) as f64) + digamma((ny + 1) as f64);
    Some((digamma(ki as f64) - marginal, ki != k))
}

fn estimate(x: &PointCloud, y: &PointCloud, k: usize) -> Result<(f64, usize)> {
    let z = x.join(y)?;
    let n = z.len();
    let joint = KdTree::new(&z);
    let xt = KdTree::new(x);
    let yt = KdTree::new(y);
    let term = |i: usize| point_term(&joint, &xt, &yt, x, y, &z, i, k);
    #[cfg(feature = "parallel")]
    let terms: Vec<Option<(f64, bool)>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(term).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let terms: Vec<Option<(f64, bool)>> = (0..n).map(term).collect();
    let mut values = Vec::with_capacity(n);
    let mut enlarged = 0;
    for t in terms {
        let (v, e) = t.ok_or(Error::TooFewPoints(n))?;
        values.push(v);
        enlarged += usize::from(e);
    }
    Ok((digamma(n as f64) + pairwise_sum(&values) / n as f64, enlarged))
}

/// Past and future blocks of order `m` at delay `tau`: the past block of
/// time `t` is `(x_t, x_{t−τ}, …, x_{t−(m−1)τ})`, the future block
/// `(x_{t+τ}, …, x_{t+mτ})`. Both clouds are labelled with the past origin.
pub fn past_future_blocks(series: &ScalarSeries, m: usize, tau: usize) -> Result<(PointCloud, PointCloud)> {
    let spec = EmbeddingSpec::new(m, tau)?;
    let shift = m * tau;
    let needed = spec.window() + shift + 2;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed,
        });
    }
    let all = delay_embed_from(series, spec, spec.window())?;
    let count = all.len() - shift;
    let past = all.slice(0, count);
    let future = all.slice(shift, shift + count);
    let future = PointCloud::from_parts(m, future.coords().to_vec(), past.origin_indices().to_vec())?;
    Ok((past, future))
}

/// Predictive information curves over a noise grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PiCurves {
    /// `PI_m(η)` on all points.
    pub full: CurveFamily,
    /// The same on the first half of the points.
    pub half: CurveFamily,
    /// Points that needed an enlarged k, summed over the whole run.
    pub enlarged_k: usize,
}

/// `PI_m(η)` for every order in `orders` and every η in `etas`.
///
/// For η index `j` the raw series receives noise seeded with
/// `cfg.seed.derive(j)`; all orders share that noisy series. `cfg.eta` is
/// ignored.
pub fn predictive_information(
    series: &ScalarSeries,
    orders: &[usize],
    tau: usize,
    cfg: &KsgConfig,
    etas: &EpsGrid,
) -> Result<PiCurves> {
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    if orders.is_empty() {
        return Err(Error::InvalidParams("no embedding orders given"));
    }
    let plain = KsgConfig { eta: 0.0, ..*cfg };
    plain.validate()?;
    let mut full = alloc::vec![alloc::vec![None; etas.len()]; orders.len()];
    let mut half = full.clone();
    let mut enlarged = 0;
    for (j, &eta) in etas.values().iter().enumerate() {
        let noisy = add_uniform_noise(series, eta, cfg.seed.derive(j as u64))?;
        for (row, &m) in orders.iter().enumerate() {
            let (past, future) = past_future_blocks(&noisy, m, tau)?;
            let est = ksg_mi(&past, &future, &plain)?;
            full[row][j] = Some(est.value);
            half[row][j] = est.half_data_value.is_finite().then_some(est.half_data_value);
            enlarged += est.enlarged_k;
        }
    }
    Ok(PiCurves {
        full: CurveFamily::new(Quantity::PI, orders.clone(), etas.clone(), full)?,
        half: CurveFamily::new(Quantity::PI, orders, etas.clone(), half)?,
        enlarged_k: enlarged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ln;
    use crate::tree::max_dist;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cloud(v: Vec<f64>) -> PointCloud {
        let n = v.len();
        PointCloud::from_parts(1, v, (0..n).collect()).unwrap()
    }

    fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (PointCloud, PointCloud) {
        let mut rng = RngSeed(seed).rng();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            xs.push(a);
            ys.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        (cloud(xs), cloud(ys))
    }

    /// Direct O(N²) evaluation of the same estimator.
    fn brute_force(x: &PointCloud, y: &PointCloud, k: usize) -> f64 {
        let n = x.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| max_dist(x.point(i), x.point(j)).max(max_dist(y.point(i), y.point(j))))
                .collect();
            d.sort_by(f64::total_cmp);
            let eps = d[k - 1];
            let nx = (0..n).filter(|&j| j != i && max_dist(x.point(i), x.point(j)) < eps).count();
            let ny = (0..n).filter(|&j| j != i && max_dist(y.point(i), y.point(j)) < eps).count();
            sum += digamma(k as f64) - digamma((nx + 1) as f64) - digamma((ny + 1) as f64);
        }
        digamma(n as f64) + sum / n as f64
    }

    #[test]
    fn tree_matches_brute_force() {
        let (x, y) = gaussian_pair(1_500, 0.6, 3);
        for k in [1, 4, 10] {
            let est = ksg_mi(&x, &y, &KsgConfig::new(k)).unwrap();
            assert!((est.value - brute_force(&x, &y, k)).abs() < 1e-10);
            assert_eq!(est.n_used, 1_500);
        }
    }

    #[test]
    fn gaussian_reference_value() {
        let (x, y) = gaussian_pair(10_000, 0.5, 7);
        let est = ksg_mi(&x, &y, &KsgConfig::new(10)).unwrap();
        let truth = -0.5 * ln(1.0 - 0.25);
        assert!((est.value - truth).abs() < 0.02, "{}", est.value);
        assert!((est.half_data_value - truth).abs() < 0.04);
    }

    #[test]
    fn independent_uniforms() {
        let mut rng = RngSeed(1).rng();
        let x = cloud((0..10_000).map(|_| rng.random::<f64>()).collect());
        let y = cloud((0..10_000).map(|_| rng.random::<f64>()).collect());
        let est = ksg_mi(&x, &y, &KsgConfig::new(10)).unwrap();
        assert!(est.value.abs() < 0.01, "{}", est.value);
    }

    #[test]
    fn symmetric_exactly() {
        let (x, y) = gaussian_pair(2_000, 0.3, 5);
        let cfg = KsgConfig::new(4);
        assert_eq!(ksg_mi(&x, &y, &cfg).unwrap(), ksg_mi(&y, &x, &cfg).unwrap());
    }

    #[test]
    fn identical_copies_need_noise() {
        let (x, _) = gaussian_pair(3_000, 0.0, 8);
        let cfg = KsgConfig {
            eta: 0.1,
            ..KsgConfig::new(5)
        };
        let est = ksg_mi(&x, &x, &cfg).unwrap();
        assert!(est.value.is_finite() && est.value > 1.0, "{}", est.value);
    }

    #[test]
    fn duplicates_enlarge_k() {
        let v: Vec<f64> = (0..200).map(|i| f64::from(i / 4)).collect();
        let x = cloud(v.clone());
        let est = ksg_mi(&x, &cloud(v), &KsgConfig::new(2)).unwrap();
        assert!(est.value.is_finite());
        assert!(est.enlarged_k > 0);
    }

    #[test]
    fn input_validation() {
        let x = cloud(vec![0.0, 1.0, 2.0]);
        let y = PointCloud::from_parts(1, vec![0.0, 1.0, 2.0], vec![1, 2, 3]).unwrap();
        assert_eq!(ksg_mi(&x, &y, &KsgConfig::new(1)), Err(Error::MisalignedClouds));
        assert_eq!(ksg_mi(&x, &x, &KsgConfig::new(3)), Err(Error::TooFewPoints(3)));
        let s = ScalarSeries::new(vec![0.0; 10], 1.0, "").unwrap();
        assert!(matches!(past_future_blocks(&s, 3, 2), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn block_layout() {
        let s = ScalarSeries::new((0..8).map(f64::from).collect(), 1.0, "").unwrap();
        let (past, future) = past_future_blocks(&s, 2, 1).unwrap();
        assert_eq!(past.len(), 5);
        assert_eq!(past.point(0), &[1.0, 0.0]);
        assert_eq!(future.point(0), &[3.0, 2.0]);
        assert_eq!(past.origin_indices(), future.origin_indices());
    }

    #[test]
    fn iid_series_has_no_predictive_information() {
        let mut rng = RngSeed(2).rng();
        let s = ScalarSeries::new((0..5_000).map(|_| rng.random::<f64>()).collect(), 1.0, "").unwrap();
        let etas = EpsGrid::geometric(0.01, 0.1, 2).unwrap();
        let pi = predictive_information(&s, &[1, 2], 1, &KsgConfig::new(8), &etas).unwrap();
        for row in pi.full.values() {
            for v in row {
                assert!(v.unwrap().abs() < 0.03);
            }
        }
        let again = predictive_information(&s, &[2, 1], 1, &KsgConfig::new(8), &etas).unwrap();
        assert_eq!(pi, again);
    }
}
