//! Piecewise log-linear fitting of `δh_m(ε)` curves.
//!
//! Every run of `window` consecutive defined grid points gets a least-squares
//! fit `o − s·ln ε`. Fits with a residual sum below
//! `q_max = P25(Q) + 0.1·std(Q)` are extended towards larger ε while the
//! refitted residual stays below `q_max`; of two fits that overlap by more
//! than 30% of the shorter one, the shorter is dropped. The surviving fits
//! then replace the data on their ranges, the lowest one is extrapolated to
//! smaller ε, and the slope field `ŝ(m, ε) = dδh_m/d(−ln ε)` is read off the
//! fits (or from a five-point derivative where no fit applies).

use alloc::vec;
use alloc::vec::Vec;

use crate::corrsum::CurveFamily;
use crate::math::{fit_line, percentile, population_std};
use crate::{Error, Result};

/// Points per candidate window.
pub const DEFAULT_WINDOW: usize = 10;
/// Maximal overlap, relative to the shorter fit, two survivors may share.
pub const MAX_OVERLAP: f64 = 0.3;
/// Fitted slopes in `(−SLOPE_CLAMP, 0)` enter the slope field as 0.
pub const SLOPE_CLAMP: f64 = 0.02;
/// Residual sums at or below this always pass the quality cut, so that
/// numerically exact lines (all residuals ≈ 0) are not rejected.
const Q_FLOOR: f64 = 1e-20;

/// A fit `o − s·ln ε` over the inclusive grid-index range `i_l..=i_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentFit {
    /// Embedding order of the fitted curve.
    pub m: usize,
    /// First grid index.
    pub i_l: usize,
    /// Last grid index.
    pub i_u: usize,
    /// Offset `o`.
    pub offset: f64,
    /// Slope `s` against `−ln ε`.
    pub slope: f64,
    /// Sum of squared residuals.
    pub q: f64,
}

impl SegmentFit {
    /// Fitted value at `ln ε`.
    pub fn value_at(&self, ln_eps: f64) -> f64 {
        self.offset - self.slope * ln_eps
    }

    /// Number of grid points covered.
    pub fn len(&self) -> usize {
        self.i_u - self.i_l + 1
    }

    /// Always false.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// True if grid index `i` lies in the range.
    pub fn covers(&self, i: usize) -> bool {
        self.i_l <= i && i <= self.i_u
    }

    fn overlap(&self, other: &SegmentFit) -> usize {
        let lo = self.i_l.max(other.i_l);
        let hi = self.i_u.min(other.i_u);
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    }
}

fn fit_range(m: usize, values: &[Option<f64>], ln_eps: &[f64], i_l: usize, i_u: usize) -> Option<SegmentFit> {
    let y: Option<Vec<f64>> = values[i_l..=i_u].iter().copied().collect();
    let line = fit_line(&ln_eps[i_l..=i_u], &y?)?;
    Some(SegmentFit {
        m,
        i_l,
        i_u,
        offset: line.intercept,
        slope: -line.slope,
        q: line.ssr,
    })
}

/// Fits every window of `window` consecutive defined points.
///
/// Windows containing a missing value are skipped.
pub fn candidate_fits(m: usize, values: &[Option<f64>], ln_eps: &[f64], window: usize) -> Result<Vec<SegmentFit>> {
    if window < 2 {
        return Err(Error::InvalidParams("fit window needs at least two points"));
    }
    if values.len() != ln_eps.len() {
        return Err(Error::GridMismatch);
    }
    let defined = values.iter().filter(|v| v.is_some()).count();
    if defined < window {
        return Err(Error::CurveTooShort { defined, needed: window });
    }
    Ok((0..=values.len() - window)
        .filter_map(|start| fit_range(m, values, ln_eps, start, start + window - 1))
        .collect())
}

/// `P25(Q) + 0.1·std(Q)` over the residual sums of `fits`, with linear
/// interpolation for the percentile and the population deviation.
pub fn quality_threshold(fits: &[SegmentFit]) -> Result<f64> {
    if fits.len() < 4 {
        return Err(Error::TooFewFits(fits.len()));
    }
    let q: Vec<f64> = fits.iter().map(|f| f.q).collect();
    let p25 = percentile(&q, 0.25).ok_or(Error::TooFewFits(0))?;
    let sd = population_std(&q).ok_or(Error::TooFewFits(0))?;
    Ok(p25 + 0.1 * sd)
}

fn passes(q: f64, q_max: f64) -> bool {
    q < q_max || q <= Q_FLOOR
}

/// Keeps the fits below `q_max`, extends each towards larger ε as long as
/// the refitted residual stays below `q_max`, and prunes overlapping pairs.
/// The result is sorted by `i_l`.
pub fn extend_and_prune(
    fits: &[SegmentFit],
    q_max: f64,
    values: &[Option<f64>],
    ln_eps: &[f64],
) -> Vec<SegmentFit> {
    let mut grown: Vec<SegmentFit> = fits
        .iter()
        .filter(|f| passes(f.q, q_max))
        .map(|f| {
            let mut best = *f;
            while best.i_u + 1 < values.len() {
                match fit_range(f.m, values, ln_eps, best.i_l, best.i_u + 1) {
                    Some(next) if passes(next.q, q_max) => best = next,
                    _ => break,
                }
            }
            best
        })
        .collect();
    grown.sort_by(|a, b| a.i_l.cmp(&b.i_l).then(a.i_u.cmp(&b.i_u)).then(a.q.total_cmp(&b.q)));
    grown.dedup_by(|a, b| a.i_l == b.i_l && a.i_u == b.i_u);

    let mut pairs = Vec::new();
    for a in 0..grown.len() {
        for b in a + 1..grown.len() {
            let shorter = grown[a].len().min(grown[b].len());
            let frac = grown[a].overlap(&grown[b]) as f64 / shorter as f64;
            if frac > MAX_OVERLAP {
                pairs.push((frac, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut alive = vec![true; grown.len()];
    for (_, a, b) in pairs {
        if !(alive[a] && alive[b]) {
            continue;
        }
        let (fa, fb) = (&grown[a], &grown[b]);
        let drop_b = match fa.len().cmp(&fb.len()) {
            core::cmp::Ordering::Greater => true,
            core::cmp::Ordering::Less => false,
            // same length: the better fit stays, then the lower range
            core::cmp::Ordering::Equal => match fa.q.total_cmp(&fb.q) {
                core::cmp::Ordering::Greater => false,
                _ => true,
            },
        };
        if drop_b {
            alive[b] = false;
        } else {
            alive[a] = false;
        }
    }
    grown
        .into_iter()
        .zip(alive)
        .filter_map(|(f, keep)| keep.then_some(f))
        .collect()
}

/// Where a preprocessed value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointFlags {
    /// Value taken from a covering fit.
    pub from_fit: bool,
    /// Value extrapolated from the lowest fit.
    pub extrapolated: bool,
    /// Value below zero.
    pub negative: bool,
}

impl PointFlags {
    /// Neither fitted nor extrapolated.
    pub fn is_raw(&self) -> bool {
        !(self.from_fit || self.extrapolated)
    }
}

/// Result of the fit pipeline for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFits {
    /// Surviving fits, sorted by `i_l`.
    pub fits: Vec<SegmentFit>,
    /// Quality threshold used, if enough candidates existed.
    pub q_max: Option<f64>,
}

/// Runs candidate fitting, thresholding, extension and pruning on one curve.
/// Curves too short for the pipeline get no fits.
pub fn fit_curve(m: usize, values: &[Option<f64>], ln_eps: &[f64], window: usize) -> Result<OrderFits> {
    let candidates = match candidate_fits(m, values, ln_eps, window) {
        Ok(c) => c,
        Err(Error::CurveTooShort { .. }) => return Ok(OrderFits { fits: Vec::new(), q_max: None }),
        Err(e) => return Err(e),
    };
    let q_max = match quality_threshold(&candidates) {
        Ok(q) => q,
        Err(Error::TooFewFits(_)) => return Ok(OrderFits { fits: Vec::new(), q_max: None }),
        Err(e) => return Err(e),
    };
    Ok(OrderFits {
        fits: extend_and_prune(&candidates, q_max, values, ln_eps),
        q_max: Some(q_max),
    })
}

/// `δh_m` curves after fit substitution, with fits, slope field and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedCurves {
    /// Substituted and extrapolated curves.
    pub delta_h: CurveFamily,
    /// Fits per order (rows aligned with `delta_h.orders()`).
    pub fits: Vec<OrderFits>,
    /// `ŝ(m, ε)`, rows aligned with the orders.
    pub slope_field: Vec<Vec<Option<f64>>>,
    /// Provenance flags, rows aligned with the orders.
    pub flags: Vec<Vec<PointFlags>>,
}

impl PreprocessedCurves {
    fn row_of(&self, m: usize) -> Option<usize> {
        self.delta_h.orders().iter().position(|&o| o == m)
    }

    /// `ŝ(m, ε_i)`.
    pub fn slope(&self, m: usize, i: usize) -> Option<f64> {
        self.row_of(m).and_then(|r| self.slope_field[r][i])
    }

    /// Flags at `(m, ε_i)`; default (raw) for unknown orders.
    pub fn flag(&self, m: usize, i: usize) -> PointFlags {
        self.row_of(m).map(|r| self.flags[r][i]).unwrap_or_default()
    }

    /// Fits for order `m`.
    pub fn fits_for(&self, m: usize) -> &[SegmentFit] {
        self.row_of(m).map(|r| self.fits[r].fits.as_slice()).unwrap_or(&[])
    }
}

/// Slope against `−ln ε` from a least-squares line through the defined
/// points among `i−2..=i+2`; needs two of them.
fn local_slope(values: &[Option<f64>], ln_eps: &[f64], i: usize) -> Option<f64> {
    let lo = i.saturating_sub(2);
    let hi = (i + 2).min(values.len() - 1);
    let (x, y): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter_map(|j| values[j].map(|v| (ln_eps[j], v)))
        .unzip();
    if x.len() < 2 {
        return None;
    }
    fit_line(&x, &y).map(|l| -l.slope)
}

/// Runs the fit pipeline on every order of a `δh` family.
pub fn preprocess(delta_h: &CurveFamily, window: usize) -> Result<PreprocessedCurves> {
    let ln_eps = delta_h.grid().ln_values();
    let g = ln_eps.len();
    let mut rows = Vec::new();
    let mut all_fits = Vec::new();
    let mut slopes = Vec::new();
    let mut flags = Vec::new();
    for (&m, raw) in delta_h.orders().iter().zip(delta_h.values()) {
        let fitted = fit_curve(m, raw, &ln_eps, window)?;
        let mut vals = raw.clone();
        let mut fl = vec![PointFlags::default(); g];
        let mut owner: Vec<Option<SegmentFit>> = vec![None; g];
        for i in 0..g {
            // overlapping survivors: the one starting higher wins
            if let Some(f) = fitted.fits.iter().rev().find(|f| f.covers(i)) {
                vals[i] = Some(f.value_at(ln_eps[i]));
                fl[i].from_fit = true;
                owner[i] = Some(*f);
            }
        }
        if let Some(lowest) = fitted.fits.first() {
            for i in 0..lowest.i_l {
                vals[i] = Some(lowest.value_at(ln_eps[i]));
                fl[i].extrapolated = true;
                owner[i] = Some(*lowest);
            }
        }
        let mut slope_row = Vec::with_capacity(g);
        for i in 0..g {
            let s = match owner[i] {
                Some(f) => Some(f.slope),
                None => local_slope(&vals, &ln_eps, i),
            };
            slope_row.push(s.map(|s| if s > -SLOPE_CLAMP && s < 0.0 { 0.0 } else { s }));
            fl[i].negative = vals[i].is_some_and(|v| v < 0.0);
        }
        rows.push(vals);
        all_fits.push(fitted);
        slopes.push(slope_row);
        flags.push(fl);
    }
    Ok(PreprocessedCurves {
        delta_h: CurveFamily::new(
            delta_h.quantity(),
            delta_h.orders().to_vec(),
            delta_h.grid().clone(),
            rows,
        )?,
        fits: all_fits,
        slope_field: slopes,
        flags,
    })
}
