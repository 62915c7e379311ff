//! Correlation sums and the curve families derived from them.
//!
//! For a delay-embedded series the correlation sum `C2_m(ε)` is the fraction
//! of admissible point pairs at max-norm distance strictly below `ε`. From it
//! come the block correlation entropies `H2_m = −ln C2_m`, their differences
//! `h2_m = H2_{m+1} − H2_m` (with `h2_0 = H2_1`), the second differences
//! `δh_m = h2_{m−1} − h2_m`, the scale-dependent dimension and the excess
//! entropy `E2_m = H2_m − m·h2_{m−1} = Σ_{k<m} k·δh_k`.
//!
//! Entries where a correlation sum is zero are undefined (`None`) and stay
//! undefined in every derived curve.

mod pairs;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use pairs::PairCounter;

use crate::math::{exp, ln};
use crate::series::{delay_embed_from, EmbeddingSpec, PointCloud, ScalarSeries};
use crate::{Error, Result};

/// Strictly increasing geometric grid of radii.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EpsGrid {
    values: Vec<f64>,
}

impl EpsGrid {
    /// `n` log-spaced radii from `lo` to `hi` inclusive.
    pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be positive and finite"));
        }
        if n == 1 {
            return Ok(Self { values: vec![lo] });
        }
        if hi <= lo {
            return Err(Error::InvalidGrid("upper bound must exceed lower bound"));
        }
        let step = ln(hi / lo) / (n - 1) as f64;
        let mut values: Vec<f64> = (0..n).map(|i| lo * exp(step * i as f64)).collect();
        values[0] = lo;
        values[n - 1] = hi;
        Self::from_values(values)
    }

    /// The default grid for a series of peak-to-peak amplitude `amplitude`:
    /// `n` points spanning `[1e−3·A, A]`.
    pub fn for_amplitude(amplitude: f64, n: usize) -> Result<Self> {
        Self::geometric(1e-3 * amplitude, amplitude, n)
    }

    /// Validates explicit radii: positive, strictly increasing, and with a
    /// constant consecutive ratio (relative tolerance 1e−12).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidGrid("radii must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("radii must be strictly increasing"));
        }
        if values.len() > 2 {
            let ratio = ln(values[1] / values[0]);
            let bad = values
                .windows(2)
                .any(|w| libm::fabs(ln(w[1] / w[0]) - ratio) > 1e-12 * libm::fabs(ratio).max(1.0));
            if bad {
                return Err(Error::InvalidGrid("radii are not geometrically spaced"));
            }
        }
        Ok(Self { values })
    }

    /// The radii.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Natural logarithms of the radii.
    pub fn ln_values(&self) -> Vec<f64> {
        self.values.iter().map(|&v| ln(v)).collect()
    }

    /// Number of radii.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Never true for a validated grid.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Consecutive ratio `ε_{i+1}/ε_i` (1 for a single-point grid).
    pub fn ratio(&self) -> f64 {
        if self.values.len() < 2 {
            1.0
        } else {
            self.values[1] / self.values[0]
        }
    }

    /// Grid with every radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Indices `i` with `lo ≤ ε_i ≤ hi`.
    pub fn indices_within(&self, lo: f64, hi: f64) -> core::ops::Range<usize> {
        let start = self.values.partition_point(|&v| v < lo);
        let end = self.values.partition_point(|&v| v <= hi);
        start..end.max(start)
    }
}

/// Which quantity a [`CurveFamily`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Quantity {
    /// Correlation sum (dimensionless, in [0, 1]).
    C2,
    /// Block correlation entropy `H2_m` (nats).
    H2,
    /// Conditional correlation entropy `h2_m` (nats).
    #[cfg_attr(feature = "serde", serde(rename = "h2"))]
    CondH2,
    /// `δh_m = h2_{m−1} − h2_m` (nats).
    #[cfg_attr(feature = "serde", serde(rename = "deltaH"))]
    DeltaH,
    /// Scale-dependent correlation dimension (dimensionless).
    D2,
    /// Excess entropy `E2_m` (nats).
    E2,
    /// Predictive information `PI_m` (nats).
    PI,
}

impl Quantity {
    /// Short name used in file headers.
    pub fn name(self) -> &'static str {
        match self {
            Quantity::C2 => "C2",
            Quantity::H2 => "H2",
            Quantity::CondH2 => "h2",
            Quantity::DeltaH => "deltaH",
            Quantity::D2 => "D2",
            Quantity::E2 => "E2",
            Quantity::PI => "PI",
        }
    }

    /// Inverse of [`name`](Self::name).
    pub fn from_name(name: &str) -> Option<Self> {
        [Self::C2, Self::H2, Self::CondH2, Self::DeltaH, Self::D2, Self::E2, Self::PI]
            .into_iter()
            .find(|q| q.name() == name)
    }

    /// True for quantities measured in nats.
    pub fn is_information(self) -> bool {
        !matches!(self, Quantity::C2 | Quantity::D2)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values of one quantity over a radius grid, one row per embedding order.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    quantity: Quantity,
    orders: Vec<usize>,
    grid: EpsGrid,
    values: Vec<Vec<Option<f64>>>,
    counts: Option<Vec<Vec<u64>>>,
    totals: Option<Vec<Vec<u64>>>,
}

impl CurveFamily {
    /// Builds a family; every row must have one entry per grid point and
    /// orders must be strictly increasing.
    pub fn new(
        quantity: Quantity,
        orders: Vec<usize>,
        grid: EpsGrid,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if orders.len() != values.len() || values.iter().any(|r| r.len() != grid.len()) {
            return Err(Error::InvalidParams("curve rows do not match orders and grid"));
        }
        if orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("orders must be strictly increasing"));
        }
        Ok(Self {
            quantity,
            orders,
            grid,
            values,
            counts: None,
            totals: None,
        })
    }

    /// Which quantity the family holds.
    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    /// Embedding orders, one per row.
    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// The radius (or noise-amplitude) grid.
    pub fn grid(&self) -> &EpsGrid {
        &self.grid
    }

    /// All rows.
    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    /// Row for order `m`.
    pub fn row(&self, m: usize) -> Option<&[Option<f64>]> {
        self.orders
            .iter()
            .position(|&o| o == m)
            .map(|i| self.values[i].as_slice())
    }

    /// Value at order `m`, grid index `i`.
    pub fn value(&self, m: usize, i: usize) -> Option<f64> {
        self.row(m).and_then(|r| r.get(i).copied().flatten())
    }

    /// Raw pair counts behind a correlation sum, one row per order.
    pub fn counts(&self) -> Option<&[Vec<u64>]> {
        self.counts.as_deref()
    }

    /// Admissible pairs behind each count, one row per order (correlation
    /// sums only). Rows are constant unless reference sampling was used.
    pub fn totals(&self) -> Option<&[Vec<u64>]> {
        self.totals.as_deref()
    }

    /// Largest order present.
    pub fn max_order(&self) -> Option<usize> {
        self.orders.last().copied()
    }

    fn require(&self, m: usize) -> Result<&[Option<f64>]> {
        self.row(m).ok_or(Error::MissingOrder(m))
    }

    fn derived(&self, quantity: Quantity, orders: Vec<usize>, values: Vec<Vec<Option<f64>>>) -> Self {
        Self {
            quantity,
            orders,
            grid: self.grid.clone(),
            values,
            counts: None,
            totals: None,
        }
    }
}

/// Pair-count options. The norm is always the maximum norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PairCountConfig {
    /// Pairs whose origin indices differ by at most this many samples are
    /// excluded. For flow data a window of at least `m·τ` is advisable.
    pub theiler: usize,
    /// Counting strategy for exact all-pairs counts.
    pub counter: PairCounter,
    /// Pair budget per radius. `None` counts all pairs exactly. With a
    /// budget, the points are visited in a fixed pseudo-random order and each
    /// radius stops taking new reference points once it has collected this
    /// many close pairs (but not before a few thousand references). The
    /// correlation sum is then the close fraction among the pairs seen. All
    /// orders of one block analysis share the reference set of the highest
    /// order, which keeps the sums nested.
    pub max_pairs: Option<u64>,
}

/// Correlation sum of one cloud: a single-row family whose order is the
/// cloud dimension, with raw counts attached.
pub fn correlation_sum(cloud: &PointCloud, grid: &EpsGrid, cfg: &PairCountConfig) -> Result<CurveFamily> {
    let counted = admissible_counts(cloud, grid, cfg, None)?;
    let mut family = CurveFamily::new(Quantity::C2, vec![cloud.dim()], grid.clone(), vec![counted.ratios()])?;
    family.counts = Some(vec![counted.counts]);
    family.totals = Some(vec![counted.totals]);
    Ok(family)
}

struct Counted {
    counts: Vec<u64>,
    totals: Vec<u64>,
    references: Option<Vec<usize>>,
}

impl Counted {
    fn ratios(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .zip(&self.totals)
            .map(|(&c, &t)| Some(c as f64 / t as f64))
            .collect()
    }
}

fn admissible_counts(
    cloud: &PointCloud,
    grid: &EpsGrid,
    cfg: &PairCountConfig,
    plan: Option<&[usize]>,
) -> Result<Counted> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(max_pairs) = cfg.max_pairs {
        let budget = match plan {
            Some(p) => pairs::Budget::Fixed(p),
            None => pairs::Budget::Adaptive(max_pairs.max(1)),
        };
        let sampled = pairs::reference_counts(cloud, grid.values(), cfg.theiler, budget);
        if cloud.len() < 2 || sampled.totals.iter().any(|&t| t == 0) {
            return Err(Error::TooFewPoints(cloud.len()));
        }
        return Ok(Counted {
            counts: sampled.counts,
            totals: sampled.totals,
            references: Some(sampled.references),
        });
    }
    let n = cloud.len() as u64;
    let origin = cloud.origin_indices();
    let excluded_pairs = || {
        (0..cloud.len()).flat_map(move |i| {
            (i + 1..cloud.len())
                .take_while(move |&j| origin[j] - origin[i] <= cfg.theiler)
                .map(move |j| (i, j))
        })
    };
    let excluded_total = excluded_pairs().count() as u64;
    let total = (n * n.saturating_sub(1) / 2).saturating_sub(excluded_total);
    if cloud.len() < 2 || total == 0 {
        return Err(Error::TooFewPoints(cloud.len()));
    }
    let mut counts = pairs::count_pairs(cloud, grid.values(), cfg.counter);
    if excluded_total > 0 {
        let excluded = pairs::histogram_of(cloud, excluded_pairs(), grid.values());
        for (c, e) in counts.iter_mut().zip(excluded) {
            *c -= e;
        }
    }
    Ok(Counted {
        totals: vec![total; counts.len()],
        counts,
        references: None,
    })
}

/// Correlation sums for orders `1..=max_order` at delay `tau`, all computed
/// on the common origin range of the highest order so the sums are nested.
pub fn block_correlation_sums(
    series: &ScalarSeries,
    max_order: usize,
    tau: usize,
    grid: &EpsGrid,
    cfg: &PairCountConfig,
) -> Result<CurveFamily> {
    let top = EmbeddingSpec::new(max_order, tau)?;
    let first = top.window();
    let mut values = vec![Vec::new(); max_order];
    let mut counts = vec![Vec::new(); max_order];
    let mut totals = vec![Vec::new(); max_order];
    let mut plan = None;
    // Highest order first: with a pair budget it fixes the reference plan.
    for m in (1..=max_order).rev() {
        let cloud = delay_embed_from(series, EmbeddingSpec::new(m, tau)?, first)?;
        let counted = admissible_counts(&cloud, grid, cfg, plan.as_deref())?;
        values[m - 1] = counted.ratios();
        if plan.is_none() {
            plan = counted.references;
        }
        counts[m - 1] = counted.counts;
        totals[m - 1] = counted.totals;
    }
    let mut family = CurveFamily::new(Quantity::C2, (1..=max_order).collect(), grid.clone(), values)?;
    family.counts = Some(counts);
    family.totals = Some(totals);
    Ok(family)
}

/// Recomputes a curve on the first half of the cloud's points.
pub fn half_data<F>(cloud: &PointCloud, op: F) -> Result<CurveFamily>
where
    F: FnOnce(&PointCloud) -> Result<CurveFamily>,
{
    op(&cloud.first_half()?)
}

/// `H2 = −ln C2`; undefined where `C2 = 0`.
pub fn entropy_curves(c2: &CurveFamily) -> Result<CurveFamily> {
    if c2.quantity != Quantity::C2 {
        return Err(Error::InvalidParams("entropy curves need a correlation-sum family"));
    }
    let values = c2
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.and_then(|c| (c > 0.0).then(|| -ln(c))))
                .collect()
        })
        .collect();
    Ok(c2.derived(Quantity::H2, c2.orders.clone(), values))
}

fn diff(a: &[Option<f64>], b: &[Option<f64>]) -> Vec<Option<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        })
        .collect()
}

/// `h2_m = H2_{m+1} − H2_m` for `m = 0..max_order−1`, with `h2_0 = H2_1`.
///
/// `H2` must hold orders `1..=M` without gaps.
pub fn conditional_entropy_curves(h2: &CurveFamily) -> Result<CurveFamily> {
    let max = h2.max_order().ok_or(Error::MissingOrder(1))?;
    let mut orders = Vec::with_capacity(max);
    let mut values = Vec::with_capacity(max);
    orders.push(0);
    values.push(h2.require(1)?.to_vec());
    for m in 1..max {
        values.push(diff(h2.require(m + 1)?, h2.require(m)?));
        orders.push(m);
    }
    Ok(h2.derived(Quantity::CondH2, orders, values))
}

/// `δh_m = h2_{m−1} − h2_m` for every `m ≥ 1` with both neighbours present.
pub fn delta_h_curves(cond: &CurveFamily) -> Result<CurveFamily> {
    let mut orders = Vec::new();
    let mut values = Vec::new();
    for &m in cond.orders.iter().filter(|&&m| m >= 1) {
        values.push(diff(cond.require(m - 1)?, cond.require(m)?));
        orders.push(m);
    }
    if orders.is_empty() {
        return Err(Error::MissingOrder(1));
    }
    Ok(cond.derived(Quantity::DeltaH, orders, values))
}

/// Difference quotient `ln(C(ε_{i+Δ})/C(ε_i)) / ln(ε_{i+Δ}/ε_i)` with
/// `Δ = delta_steps` grid steps. The last `Δ` entries are undefined.
pub fn dimension_curve(c2: &CurveFamily, delta_steps: usize) -> Result<CurveFamily> {
    if delta_steps == 0 {
        return Err(Error::InvalidParams("difference step must be positive"));
    }
    let n = c2.grid.len();
    if n < delta_steps + 1 {
        return Err(Error::GridTooSmall {
            points: n,
            steps: delta_steps,
        });
    }
    let eps = c2.grid.values();
    let values = c2
        .values
        .iter()
        .map(|row| {
            (0..n)
                .map(|i| {
                    let j = i + delta_steps;
                    match (row.get(i).copied().flatten(), row.get(j).copied().flatten()) {
                        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(ln(b / a) / ln(eps[j] / eps[i])),
                        _ => None,
                    }
                })
                .collect()
        })
        .collect();
    Ok(c2.derived(Quantity::D2, c2.orders.clone(), values))
}

/// `E2_m = H2_m − m·h2_{m−1}` for every order of `H2` with `h2_{m−1}`
/// available.
pub fn excess_entropy_curves(h2: &CurveFamily, cond: &CurveFamily) -> Result<CurveFamily> {
    let mut orders = Vec::new();
    let mut values = Vec::new();
    for &m in &h2.orders {
        let Some(hm1) = cond.row(m - 1) else { continue };
        let row: Vec<Option<f64>> = h2
            .require(m)?
            .iter()
            .zip(hm1)
            .map(|(big, small)| match (big, small) {
                (Some(big), Some(small)) => Some(big - m as f64 * small),
                _ => None,
            })
            .collect();
        orders.push(m);
        values.push(row);
    }
    if orders.is_empty() {
        return Err(Error::MissingOrder(0));
    }
    Ok(h2.derived(Quantity::E2, orders, values))
}

/// The same excess entropy through `E2_m = Σ_{k=1}^{m−1} k·δh_k`, for
/// `m = 1..=max(δh order)+1`.
pub fn excess_entropy_from_delta_h(dh: &CurveFamily) -> Result<CurveFamily> {
    let max = dh.max_order().ok_or(Error::MissingOrder(1))?;
    let n = dh.grid.len();
    let mut acc: Vec<Option<f64>> = vec![Some(0.0); n];
    let mut orders = vec![1];
    let mut values = vec![acc.clone()];
    for k in 1..=max {
        let row = dh.require(k)?;
        for (a, v) in acc.iter_mut().zip(row) {
            *a = match (*a, v) {
                (Some(a), Some(v)) => Some(a + k as f64 * v),
                _ => None,
            };
        }
        orders.push(k + 1);
        values.push(acc.clone());
    }
    Ok(dh.derived(Quantity::E2, orders, values))
}

/// Largest absolute difference between two families over shared orders and
/// jointly defined entries.
pub fn max_abs_difference(a: &CurveFamily, b: &CurveFamily) -> f64 {
    let mut worst = 0.0f64;
    for (m, row) in a.orders.iter().zip(&a.values) {
        if let Some(other) = b.row(*m) {
            for (x, y) in row.iter().zip(other) {
                if let (Some(x), Some(y)) = (x, y) {
                    worst = worst.max(libm::fabs(x - y));
                }
            }
        }
    }
    worst
}

/// All correlation-sum curve families of one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCurves {
    /// `C2_m`, orders `1..=M`.
    pub c2: CurveFamily,
    /// `H2_m`, orders `1..=M`.
    pub h2: CurveFamily,
    /// `h2_m`, orders `0..M`.
    pub cond: CurveFamily,
    /// `δh_m`, orders `1..M`.
    pub delta_h: CurveFamily,
    /// `D2_m`, orders `1..=M`.
    pub d2: CurveFamily,
    /// `E2_m`, orders `1..=M`.
    pub e2: CurveFamily,
}

impl BlockCurves {
    /// Derives every family from block correlation sums.
    pub fn from_correlation_sums(c2: CurveFamily, delta_steps: usize) -> Result<Self> {
        let h2 = entropy_curves(&c2)?;
        let cond = conditional_entropy_curves(&h2)?;
        let delta_h = delta_h_curves(&cond)?;
        let d2 = dimension_curve(&c2, delta_steps)?;
        let e2 = excess_entropy_curves(&h2, &cond)?;
        debug_assert!(
            max_abs_difference(&e2, &excess_entropy_from_delta_h(&delta_h)?) < 1e-9,
            "telescoping identity violated"
        );
        Ok(Self {
            c2,
            h2,
            cond,
            delta_h,
            d2,
            e2,
        })
    }

    /// Embeds `series` at orders `1..=max_order` and derives all families.
    pub fn compute(
        series: &ScalarSeries,
        max_order: usize,
        tau: usize,
        grid: &EpsGrid,
        cfg: &PairCountConfig,
        delta_steps: usize,
    ) -> Result<Self> {
        if max_order < 2 {
            return Err(Error::InvalidParams("need at least two embedding orders"));
        }
        let c2 = block_correlation_sums(series, max_order, tau, grid, cfg)?;
        Self::from_correlation_sums(c2, delta_steps)
    }

    /// Same analysis on the first half of the common-range points.
    pub fn compute_half(
        series: &ScalarSeries,
        max_order: usize,
        tau: usize,
        grid: &EpsGrid,
        cfg: &PairCountConfig,
        delta_steps: usize,
    ) -> Result<Self> {
        let first = (max_order.saturating_sub(1)) * tau;
        let points = series.len().saturating_sub(first);
        if points / 2 < 2 {
            return Err(Error::TooFewPoints(points / 2));
        }
        let half = series.truncated(first + points / 2)?;
        Self::compute(&half, max_order, tau, grid, cfg, delta_steps)
    }

    /// All families in a fixed order: C2, H2, h2, δh, D2, E2.
    pub fn families(&self) -> [&CurveFamily; 6] {
        [&self.c2, &self.h2, &self.cond, &self.delta_h, &self.d2, &self.e2]
    }
}
