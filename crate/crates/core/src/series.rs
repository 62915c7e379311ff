//! Scalar series, delay embedding and seeded noise injection.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A uniformly sampled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    samples: Vec<f64>,
    dt: f64,
    label: String,
}

impl ScalarSeries {
    /// Validates and wraps `samples`: at least two finite values and `dt > 0`.
    pub fn new(samples: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::EmptySeries(samples.len()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidDt(dt));
        }
        Ok(Self {
            samples,
            dt,
            label: label.into(),
        })
    }

    /// The samples in time order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Sampling interval (informational).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Free-form identifier.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of samples (always ≥ 2).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Peak-to-peak amplitude `max − min`.
    pub fn amplitude(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// The first `n` samples as a new series.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.samples[..n.min(self.len())].to_vec(), self.dt, self.label.clone())
    }

    fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            dt: self.dt,
            label: self.label.clone(),
        }
    }
}

/// Delay-embedding parameters: order `m` (coordinates per vector) and delay
/// `tau` in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingSpec {
    m: usize,
    tau: usize,
}

impl EmbeddingSpec {
    /// Requires `m ≥ 1` and `tau ≥ 1`.
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 {
            return Err(Error::InvalidEmbedding { m, tau });
        }
        Ok(Self { m, tau })
    }

    /// Embedding order.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Delay in samples.
    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Samples spanned by one delay vector, minus one: `(m − 1)·tau`.
    pub fn window(&self) -> usize {
        (self.m - 1) * self.tau
    }

    /// Number of delay vectors an `n`-sample series yields.
    pub fn point_count(&self, n: usize) -> usize {
        n.saturating_sub(self.window())
    }
}

/// A set of delay vectors stored row-major in one flat buffer.
///
/// `origin_indices()[i]` is the sample index of the most recent coordinate of
/// point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    origin: Vec<usize>,
}

impl PointCloud {
    /// Builds a cloud from flat coordinates. `origin` must be strictly
    /// increasing and `coords.len() == dim · origin.len()`.
    pub fn from_parts(dim: usize, coords: Vec<f64>, origin: Vec<usize>) -> Result<Self> {
        if dim == 0 || coords.len() != dim * origin.len() {
            return Err(Error::InvalidParams("coordinate buffer does not match dimension"));
        }
        if origin.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("origin indices must be strictly increasing"));
        }
        Ok(Self { dim, coords, origin })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.origin.len()
    }

    /// True when the cloud has no points.
    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    /// Coordinates per point.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterator over all points.
    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// The flat row-major coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sample index of each point's most recent coordinate.
    pub fn origin_indices(&self) -> &[usize] {
        &self.origin
    }

    /// Points `range.start..range.end` as a new cloud.
    pub fn slice(&self, start: usize, end: usize) -> PointCloud {
        PointCloud {
            dim: self.dim,
            coords: self.coords[start * self.dim..end * self.dim].to_vec(),
            origin: self.origin[start..end].to_vec(),
        }
    }

    /// The first `⌊len/2⌋` points.
    pub fn first_half(&self) -> Result<PointCloud> {
        let half = self.len() / 2;
        if half < 2 {
            return Err(Error::TooFewPoints(half));
        }
        Ok(self.slice(0, half))
    }

    /// Concatenates the coordinates of two aligned clouds point by point.
    pub fn join(&self, other: &PointCloud) -> Result<PointCloud> {
        if self.origin != other.origin {
            return Err(Error::MisalignedClouds);
        }
        let dim = self.dim + other.dim;
        let mut coords = Vec::with_capacity(dim * self.len());
        for (a, b) in self.points().zip(other.points()) {
            coords.extend_from_slice(a);
            coords.extend_from_slice(b);
        }
        Ok(PointCloud {
            dim,
            coords,
            origin: self.origin.clone(),
        })
    }
}

/// Delay-embeds `series`: point `i` is `(y_t, y_{t−τ}, …, y_{t−(m−1)τ})` with
/// `t = (m−1)τ + i`. Coordinate 0 is the newest sample.
pub fn delay_embed(series: &ScalarSeries, spec: EmbeddingSpec) -> Result<PointCloud> {
    delay_embed_from(series, spec, spec.window())
}

/// Like [`delay_embed`] but starts at origin index `first` (≥ `(m−1)τ`), so
/// clouds of different orders can share one origin range.
pub fn delay_embed_from(
    series: &ScalarSeries,
    spec: EmbeddingSpec,
    first: usize,
) -> Result<PointCloud> {
    let n = series.len();
    let first = first.max(spec.window());
    if n < first + 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            needed: first + 2,
        });
    }
    let y = series.samples();
    let (m, tau) = (spec.m, spec.tau);
    let count = n - first;
    let mut coords = Vec::with_capacity(count * m);
    for t in first..n {
        for j in 0..m {
            coords.push(y[t - j * tau]);
        }
    }
    Ok(PointCloud {
        dim: m,
        coords,
        origin: (first..n).collect(),
    })
}

/// Multiplies every sample by `factor` (> 0, finite).
pub fn rescale(series: &ScalarSeries, factor: f64) -> Result<ScalarSeries> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidFactor(factor));
    }
    Ok(series.with_samples(series.samples.iter().map(|v| v * factor).collect()))
}

/// Seed for the crate's random streams.
///
/// Streams come from ChaCha8 (`rand_chacha::ChaCha8Rng`), keyed with
/// `seed_from_u64(seed)`. Derived seeds mix the base seed and an index with
/// SplitMix64, so related streams (one per noise level, say) are independent
/// yet reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// A fresh generator positioned at the start of this seed's stream.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Deterministic child seed for sub-task `index`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Adds an independent draw from U[0, eta) to every sample.
///
/// Noise goes onto the scalar stream, so every delay vector containing a
/// given sample sees the same perturbation. `eta = 0` returns the input.
pub fn add_uniform_noise(series: &ScalarSeries, eta: f64, seed: RngSeed) -> Result<ScalarSeries> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::NegativeEta(eta));
    }
    if eta == 0.0 {
        return Ok(series.clone());
    }
    let mut rng = seed.rng();
    let samples = series
        .samples
        .iter()
        .map(|&v| v + eta * rng.random::<f64>())
        .collect();
    Ok(series.with_samples(samples))
}
