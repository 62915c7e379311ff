//! Splitting the excess entropy into state, memory and resolution-dependent
//! parts.
//!
//! With `E = Σ_{k=1}^{m_max} k·δh_k`, the orders whose `δh_k` still grow
//! towards small ε (slope field above `s_min`) form the middle term
//! `m_l..=m_u`. Orders below it contribute to the state complexity, orders
//! above it to the memory complexity, and the middle term is split into a
//! plateau constant `c_k` (added to the state part) and the ε-dependent
//! remainder.

use alloc::vec::Vec;

use crate::corrsum::CurveFamily;
use crate::math::{fit_line, mean, population_std};
use crate::scalefit::{fit_curve, PreprocessedCurves, SegmentFit, DEFAULT_WINDOW};
use crate::{Error, Result};

/// Decomposition thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecompConfig {
    /// Slopes above this mark an order as part of the middle term; slopes
    /// below it mark a plateau.
    pub s_min: f64,
    /// Scales with a stochasticity index at or above this inherit the range
    /// of the next larger deterministic scale.
    pub kappa_max: f64,
    /// Highest `δh` order entering the sums.
    pub m_max: usize,
}

impl DecompConfig {
    /// Default thresholds (`s_min = 0.1`, `κ_max = 0.5`).
    pub fn new(m_max: usize) -> Self {
        Self {
            s_min: 0.1,
            kappa_max: 0.5,
            m_max,
        }
    }

    fn validate(&self, pre: &PreprocessedCurves) -> Result<()> {
        if !(self.s_min > 0.0 && self.s_min < 1.0) {
            return Err(Error::InvalidParams("s_min must lie in (0, 1)"));
        }
        if !(self.kappa_max > 0.0 && self.kappa_max <= 1.0) {
            return Err(Error::InvalidParams("kappa_max must lie in (0, 1]"));
        }
        if self.m_max < 2 {
            return Err(Error::InvalidParams("m_max must be at least 2"));
        }
        for k in 1..=self.m_max {
            if pre.delta_h.row(k).is_none() {
                return Err(Error::MissingOrder(k));
            }
        }
        Ok(())
    }
}

/// Middle-term range at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MtRange {
    /// Lowest middle-term order (1 with `m_u = 0` for an empty range).
    pub m_l: usize,
    /// Highest middle-term order.
    pub m_u: usize,
    /// Stochasticity index of this scale's own range, clamped to [0, 1].
    pub kappa: f64,
    /// `1 − Σ ŝ` before clamping (1 for an empty range).
    pub kappa_raw: f64,
    /// The scale counts as stochastic (`κ ≥ κ_max`).
    pub stochastic: bool,
    /// Grid index whose range was inherited, if any.
    pub inherited_from: Option<usize>,
}

impl MtRange {
    /// True for the empty range `(1, 0)`.
    pub fn is_empty(&self) -> bool {
        self.m_u < self.m_l
    }
}

/// Longest run of orders with `ŝ > s_min` at grid index `i`; ties go to the
/// larger slope sum, then to the lower start.
fn own_range(pre: &PreprocessedCurves, cfg: &DecompConfig, i: usize) -> (usize, usize, f64) {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut k = 1;
    while k <= cfg.m_max {
        if pre.slope(k, i).is_some_and(|s| s > cfg.s_min) {
            let start = k;
            let mut sum = 0.0;
            while k <= cfg.m_max && pre.slope(k, i).is_some_and(|s| s > cfg.s_min) {
                sum += pre.slope(k, i).unwrap_or(0.0);
                k += 1;
            }
            let cand = (start, k - 1, sum);
            let better = match best {
                None => true,
                Some((l, u, s)) => {
                    let (len, blen) = (cand.1 - cand.0, u - l);
                    len > blen || (len == blen && cand.2 > s)
                }
            };
            if better {
                best = Some(cand);
            }
        } else {
            k += 1;
        }
    }
    best.unwrap_or((1, 0, 0.0))
}

/// Middle-term range and stochasticity index for every grid point.
pub fn mt_range(pre: &PreprocessedCurves, cfg: &DecompConfig) -> Result<Vec<MtRange>> {
    cfg.validate(pre)?;
    let g = pre.delta_h.grid().len();
    let own: Vec<MtRange> = (0..g)
        .map(|i| {
            let (m_l, m_u, sum) = own_range(pre, cfg, i);
            let kappa_raw = if m_u < m_l { 1.0 } else { 1.0 - sum };
            MtRange {
                m_l,
                m_u,
                kappa: kappa_raw.clamp(0.0, 1.0),
                kappa_raw,
                stochastic: false,
                inherited_from: None,
            }
        })
        .collect();
    Ok((0..g)
        .map(|i| {
            let r = own[i];
            if r.kappa < cfg.kappa_max {
                return r;
            }
            match (i + 1..g).find(|&j| own[j].kappa < cfg.kappa_max) {
                Some(j) => MtRange {
                    m_l: own[j].m_l,
                    m_u: own[j].m_u,
                    stochastic: true,
                    inherited_from: Some(j),
                    ..r
                },
                None => MtRange {
                    m_l: 1,
                    m_u: 0,
                    stochastic: true,
                    ..r
                },
            }
        })
        .collect())
}

/// Plateau constants `c_k(ε_i)` for `k = 1..=m_max` (row `k − 1`): the
/// minimum of `δh_k` over `(ε_i, ε*]`, where `ε*` is the first larger scale
/// with `ŝ(k, ε*) < s_min`; 0 if there is none. Floored at 0.
pub fn mt_constants(pre: &PreprocessedCurves, cfg: &DecompConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate(pre)?;
    let g = pre.delta_h.grid().len();
    Ok((1..=cfg.m_max)
        .map(|k| {
            let row = pre.delta_h.row(k).unwrap_or(&[]);
            (0..g)
                .map(|i| {
                    let Some(star) = (i + 1..g).find(|&j| pre.slope(k, j).is_some_and(|s| s < cfg.s_min)) else {
                        return 0.0;
                    };
                    row[i + 1..=star]
                        .iter()
                        .flatten()
                        .copied()
                        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                        .unwrap_or(0.0)
                        .max(0.0)
                })
                .collect()
        })
        .collect())
}

/// Decomposition at one scale. Energies are `None` where some `δh_k` is
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsRecord {
    /// Scale.
    pub epsilon: f64,
    /// State complexity.
    pub e_state: Option<f64>,
    /// Resolution-dependent middle-term part.
    pub e_eps: Option<f64>,
    /// Memory complexity.
    pub e_mem: Option<f64>,
    /// `Σ_{k=1}^{m_max} k·δh_k`.
    pub e_total: Option<f64>,
    /// Middle-term range used.
    pub range: MtRange,
}

/// Share of orders with a negative, unfitted or extrapolated `δh` at one
/// scale, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QualityRecord {
    /// Scale.
    pub epsilon: f64,
    /// Stochasticity index.
    pub kappa: f64,
    /// Orders with `δh < 0` (or undefined).
    pub negative: f64,
    /// Orders whose value does not come from a covering fit (extrapolated
    /// values count here too).
    pub no_fit: f64,
    /// Orders whose value was extrapolated.
    pub extrapolated: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanStd {
    /// Mean.
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<Self> {
        Some(Self {
            mean: mean(values)?,
            std: population_std(values)?,
        })
    }
}

/// Averages over a scale window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowSummary {
    /// Lower window edge.
    pub eps_lo: f64,
    /// Upper window edge.
    pub eps_hi: f64,
    /// Grid points used.
    pub points: usize,
    /// State complexity.
    pub e_state: MeanStd,
    /// Memory complexity.
    pub e_mem: MeanStd,
    /// `E_state + E_mem`.
    pub e_core: MeanStd,
    /// Slope `D` of `E_total ≈ const − D·ln ε`.
    pub d: f64,
    /// Intercept of the same fit.
    pub constant: f64,
}

/// Full decomposition output.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecompositionReport {
    /// Thresholds used.
    pub config: DecompConfig,
    /// One record per grid point.
    pub per_eps: Vec<EpsRecord>,
    /// One record per grid point.
    pub quality: Vec<QualityRecord>,
    /// Summaries of the requested windows.
    pub windows: Vec<WindowSummary>,
}

/// Combines curves, ranges and constants into per-scale records.
pub fn decompose(
    pre: &PreprocessedCurves,
    ranges: &[MtRange],
    constants: &[Vec<f64>],
    cfg: &DecompConfig,
) -> Result<Vec<EpsRecord>> {
    cfg.validate(pre)?;
    let eps = pre.delta_h.grid().values();
    if ranges.len() != eps.len() || constants.len() != cfg.m_max {
        return Err(Error::GridMismatch);
    }
    Ok(eps
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let r = ranges[i];
            let dh: Option<Vec<f64>> = (1..=cfg.m_max).map(|k| pre.delta_h.value(k, i)).collect();
            let Some(dh) = dh else {
                return EpsRecord {
                    epsilon,
                    e_state: None,
                    e_eps: None,
                    e_mem: None,
                    e_total: None,
                    range: r,
                };
            };
            let (mut state, mut middle, mut mem, mut total) = (0.0, 0.0, 0.0, 0.0);
            for k in 1..=cfg.m_max {
                let term = k as f64 * dh[k - 1];
                total += term;
                if k < r.m_l {
                    state += term;
                } else if k <= r.m_u {
                    let c = k as f64 * constants[k - 1][i];
                    state += c;
                    middle += term - c;
                } else {
                    mem += term;
                }
            }
            EpsRecord {
                epsilon,
                e_state: Some(state),
                e_eps: Some(middle),
                e_mem: Some(mem),
                e_total: Some(total),
                range: r,
            }
        })
        .collect())
}

/// Quality measures per scale.
pub fn quality_report(pre: &PreprocessedCurves, ranges: &[MtRange], cfg: &DecompConfig) -> Result<Vec<QualityRecord>> {
    cfg.validate(pre)?;
    let m = cfg.m_max as f64;
    Ok(pre
        .delta_h
        .grid()
        .values()
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let (mut neg, mut nofit, mut extrap) = (0usize, 0usize, 0usize);
            for k in 1..=cfg.m_max {
                let f = pre.flag(k, i);
                neg += usize::from(pre.delta_h.value(k, i).is_none_or(|v| v < 0.0));
                nofit += usize::from(!f.from_fit);
                extrap += usize::from(f.extrapolated);
            }
            QualityRecord {
                epsilon,
                kappa: ranges.get(i).map_or(1.0, |r| r.kappa),
                negative: neg as f64 / m,
                no_fit: nofit as f64 / m,
                extrapolated: extrap as f64 / m,
            }
        })
        .collect())
}

/// Runs range detection, constants, decomposition and quality measures, and
/// summarises each window `(eps_lo, eps_hi)`.
pub fn decompose_all(
    pre: &PreprocessedCurves,
    cfg: &DecompConfig,
    windows: &[(f64, f64)],
) -> Result<DecompositionReport> {
    let ranges = mt_range(pre, cfg)?;
    let constants = mt_constants(pre, cfg)?;
    let per_eps = decompose(pre, &ranges, &constants, cfg)?;
    let quality = quality_report(pre, &ranges, cfg)?;
    let mut report = DecompositionReport {
        config: *cfg,
        per_eps,
        quality,
        windows: Vec::new(),
    };
    for &(lo, hi) in windows {
        let w = summarize_window(&report, lo, hi)?;
        report.windows.push(w);
    }
    Ok(report)
}

/// Mean and spread of the ε-independent parts over grid points with
/// `eps_lo ≤ ε ≤ eps_hi`, plus a fit `E_total ≈ const − D·ln ε`.
pub fn summarize_window(report: &DecompositionReport, eps_lo: f64, eps_hi: f64) -> Result<WindowSummary> {
    let inside: Vec<&EpsRecord> = report
        .per_eps
        .iter()
        .filter(|r| r.epsilon >= eps_lo && r.epsilon <= eps_hi && r.e_total.is_some())
        .collect();
    if inside.len() < 3 {
        return Err(Error::WindowTooSmall(inside.len()));
    }
    let state: Vec<f64> = inside.iter().filter_map(|r| r.e_state).collect();
    let mem: Vec<f64> = inside.iter().filter_map(|r| r.e_mem).collect();
    let core: Vec<f64> = state.iter().zip(&mem).map(|(a, b)| a + b).collect();
    let x: Vec<f64> = inside.iter().map(|r| crate::math::ln(r.epsilon)).collect();
    let y: Vec<f64> = inside.iter().filter_map(|r| r.e_total).collect();
    let line = fit_line(&x, &y).ok_or(Error::WindowTooSmall(inside.len()))?;
    let too_small = Error::WindowTooSmall(inside.len());
    Ok(WindowSummary {
        eps_lo,
        eps_hi,
        points: inside.len(),
        e_state: MeanStd::of(&state).ok_or(too_small.clone())?,
        e_mem: MeanStd::of(&mem).ok_or(too_small.clone())?,
        e_core: MeanStd::of(&core).ok_or(too_small)?,
        d: -line.slope,
        constant: line.intercept,
    })
}

/// Crossover between the deterministic and the noise-dominated regime of a
/// conditional entropy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Crossover {
    /// `ε* = exp(h_c − h_KS)`.
    pub eps_star: f64,
    /// Noise-level constant of the unit-slope range, `⟨h_m + ln ε⟩`.
    pub h_c: f64,
    /// Plateau level.
    pub h_ks: f64,
    /// Fit with slope near 1.
    pub unit_fit: SegmentFit,
    /// Fit with slope near 0.
    pub plateau_fit: SegmentFit,
}

/// Estimates the crossover scale from `h_m`: a unit-slope fit (`|s − 1| <
/// 0.2`) gives `h_c`, a plateau fit (`|s| < s_min`, preferably above the
/// unit-slope range) gives `h_KS`.
pub fn crossover_scale(cond: &CurveFamily, m: usize, s_min: f64) -> Result<Crossover> {
    let row = cond.row(m).ok_or(Error::MissingOrder(m))?;
    let ln_eps = cond.grid().ln_values();
    let fits = fit_curve(m, row, &ln_eps, DEFAULT_WINDOW)?.fits;
    fn longest(a: &&&SegmentFit, b: &&&SegmentFit) -> core::cmp::Ordering {
        a.len().cmp(&b.len()).then(b.q.total_cmp(&a.q))
    }
    let steep: Vec<&SegmentFit> = fits.iter().filter(|f| (f.slope - 1.0).abs() < 0.2).collect();
    let unit = **steep
        .iter()
        .max_by(longest)
        .ok_or(Error::NoUnitSlopeRange)?;
    let flat: Vec<&SegmentFit> = fits.iter().filter(|f| f.slope.abs() < s_min).collect();
    let plateau = **flat
        .iter()
        .filter(|f| f.i_l > unit.i_u)
        .max_by(longest)
        .or_else(|| flat.iter().max_by(longest))
        .ok_or(Error::NoPlateau)?;
    let shifted: Vec<f64> = (unit.i_l..=unit.i_u)
        .filter_map(|i| row[i].map(|h| h + ln_eps[i]))
        .collect();
    let h_c = mean(&shifted).ok_or(Error::NoUnitSlopeRange)?;
    let fitted: Vec<f64> = (plateau.i_l..=plateau.i_u).map(|i| plateau.value_at(ln_eps[i])).collect();
    let h_ks = mean(&fitted).ok_or(Error::NoPlateau)?;
    Ok(Crossover {
        eps_star: crate::math::exp(h_c - h_ks),
        h_c,
        h_ks,
        unit_fit: unit,
        plateau_fit: plateau,
    })
}

/// [`crossover_scale`] at the highest order `m ≥ 1` where it succeeds.
///
/// With a pair budget the unit-slope range of the high orders often lies
/// below the smallest resolvable ε, so lower orders are tried in turn. On
/// failure the error of the highest order is returned.
pub fn crossover_scale_highest(cond: &CurveFamily, s_min: f64) -> Result<(usize, Crossover)> {
    let mut first_err = None;
    for &m in cond.orders().iter().rev().filter(|&&m| m >= 1) {
        match crossover_scale(cond, m, s_min) {
            Ok(c) => return Ok((m, c)),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(Error::MissingOrder(1)))
}
