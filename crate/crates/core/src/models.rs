//! Synthetic generators and analytic Gaussian oracles.
//!
//! The Lorenz generator integrates the standard system with fourth-order
//! Runge–Kutta and optional dynamic noise. The AR(2) generator draws Gaussian
//! innovations; [`Ar2Oracle`] gives its exact autocorrelations, block
//! entropies and mutual informations, which the estimators are checked
//! against.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::math::{ln, sqrt, DoubleDouble};
use crate::series::{RngSeed, ScalarSeries};
use crate::{Error, Result};

/// Lorenz system parameters and integration settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LorenzParams {
    /// Prandtl number.
    pub s: f64,
    /// Rayleigh number.
    pub r: f64,
    /// Geometric factor.
    pub b: f64,
    /// RK4 step.
    pub integration_step: f64,
    /// Time between recorded samples; an integer multiple of the step.
    pub sampling_dt: f64,
    /// Dynamic noise: every component receives a U[−a, a] kick before each
    /// integration step.
    pub noise_amp: f64,
    /// Number of recorded samples.
    pub n_samples: usize,
    /// Noise seed (unused without noise).
    pub seed: RngSeed,
    /// Starting point of the transient.
    pub initial_state: [f64; 3],
    /// Integration steps discarded before recording.
    pub transient_steps: usize,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            s: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
            integration_step: 5e-4,
            sampling_dt: 0.01,
            noise_amp: 0.0,
            n_samples: 100_000,
            seed: RngSeed(0),
            initial_state: [1.0, 1.0, 1.0],
            transient_steps: 10_000,
        }
    }
}

/// The three coordinate series of a Lorenz run.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzSeries {
    /// x component.
    pub x: ScalarSeries,
    /// y component.
    pub y: ScalarSeries,
    /// z component.
    pub z: ScalarSeries,
}

const BLOWUP: f64 = 1e6;

fn lorenz_rhs(p: &LorenzParams, v: [f64; 3]) -> [f64; 3] {
    [
        p.s * (v[1] - v[0]),
        v[0] * (p.r - v[2]) - v[1],
        v[0] * v[1] - p.b * v[2],
    ]
}

fn rk4_step(p: &LorenzParams, v: [f64; 3], h: f64) -> [f64; 3] {
    let shift = |a: [f64; 3], k: [f64; 3], f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
    let k1 = lorenz_rhs(p, v);
    let k2 = lorenz_rhs(p, shift(v, k1, 0.5 * h));
    let k3 = lorenz_rhs(p, shift(v, k2, 0.5 * h));
    let k4 = lorenz_rhs(p, shift(v, k3, h));
    core::array::from_fn(|i| v[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

impl LorenzParams {
    fn steps_per_sample(&self) -> Result<usize> {
        let finite = [self.s, self.r, self.b, self.integration_step, self.sampling_dt, self.noise_amp]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("Lorenz parameters must be finite"));
        }
        if self.integration_step <= 0.0 || self.sampling_dt <= 0.0 {
            return Err(Error::InvalidParams("integration step and sampling interval must be positive"));
        }
        if self.noise_amp < 0.0 {
            return Err(Error::InvalidParams("noise amplitude must be non-negative"));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParams("need at least two samples"));
        }
        let ratio = self.sampling_dt / self.integration_step;
        let steps = libm::round(ratio);
        if steps < 1.0 || libm::fabs(ratio - steps) > 1e-9 * ratio {
            return Err(Error::InvalidParams("sampling interval must be a multiple of the integration step"));
        }
        Ok(steps as usize)
    }
}

/// Integrates the Lorenz system and records `n_samples` states.
pub fn lorenz_generate(params: &LorenzParams) -> Result<LorenzSeries> {
    let per_sample = params.steps_per_sample()?;
    let h = params.integration_step;
    let a = params.noise_amp;
    let mut rng = params.seed.rng();
    let mut v = params.initial_state;
    let mut step_count = 0usize;
    let mut advance = |v: &mut [f64; 3]| -> Result<()> {
        if a > 0.0 {
            for c in v.iter_mut() {
                *c += a * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        *v = rk4_step(params, *v, h);
        step_count += 1;
        if v.iter().any(|c| !(libm::fabs(*c) <= BLOWUP)) {
            return Err(Error::NumericalBlowup(step_count));
        }
        Ok(())
    };
    for _ in 0..params.transient_steps {
        advance(&mut v)?;
    }
    let mut cols = [
        Vec::with_capacity(params.n_samples),
        Vec::with_capacity(params.n_samples),
        Vec::with_capacity(params.n_samples),
    ];
    for _ in 0..params.n_samples {
        for _ in 0..per_sample {
            advance(&mut v)?;
        }
        for (col, c) in cols.iter_mut().zip(v) {
            col.push(c);
        }
    }
    let [x, y, z] = cols;
    let dt = params.sampling_dt;
    Ok(LorenzSeries {
        x: ScalarSeries::new(x, dt, "lorenz_x")?,
        y: ScalarSeries::new(y, dt, "lorenz_y")?,
        z: ScalarSeries::new(z, dt, "lorenz_z")?,
    })
}

/// AR(2) process `x_{n+1} = a1·x_n + a2·x_{n−1} + ξ_n`, `ξ_n ~ N(0, σ²)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ar2Params {
    /// Lag-1 coefficient.
    pub a1: f64,
    /// Lag-2 coefficient.
    pub a2: f64,
    /// Innovation standard deviation.
    pub sigma: f64,
    /// Number of recorded samples.
    pub n_samples: usize,
    /// Innovation seed.
    pub seed: RngSeed,
    /// Samples discarded before recording.
    pub transient: usize,
}

impl Ar2Params {
    /// Coefficients fitted to the Lorenz x component.
    pub const LORENZ_FIT: (f64, f64) = (1.991843, -0.994793);

    /// Parameters with unit innovation variance and the default transient.
    pub fn new(a1: f64, a2: f64, n_samples: usize, seed: RngSeed) -> Self {
        Self {
            a1,
            a2,
            sigma: 1.0,
            n_samples,
            seed,
            transient: 1_000,
        }
    }
}

fn check_stationary(a1: f64, a2: f64) -> Result<()> {
    if a1.is_finite() && a2.is_finite() && a2 > -1.0 && a1 + a2 < 1.0 && a2 - a1 < 1.0 {
        Ok(())
    } else {
        Err(Error::NonStationaryParams { a1, a2 })
    }
}

/// Draws an AR(2) realisation.
///
/// The first two values come from the stationary distribution, so the
/// transient only has to wash out nothing in theory; it is kept for
/// robustness against rounding in the start-up covariance.
pub fn ar2_generate(params: &Ar2Params) -> Result<ScalarSeries> {
    check_stationary(params.a1, params.a2)?;
    if !(params.sigma > 0.0 && params.sigma.is_finite()) {
        return Err(Error::InvalidParams("innovation deviation must be positive"));
    }
    if params.n_samples < 2 {
        return Err(Error::InvalidParams("need at least two samples"));
    }
    let oracle = Ar2Oracle::new(params.a1, params.a2)?;
    let var = oracle.variance(params.sigma);
    let r1 = oracle.autocorr(1);
    let mut rng = params.seed.rng();
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let sd = sqrt(var);
    let mut prev = sd * normal();
    let mut cur = sd * (r1 * prev / sd + sqrt((1.0 - r1 * r1).max(0.0)) * normal());
    let total = params.transient + params.n_samples;
    let mut out = Vec::with_capacity(params.n_samples);
    for n in 0..total {
        if n >= params.transient {
            out.push(cur);
        }
        let next = params.a1 * cur + params.a2 * prev + params.sigma * normal();
        prev = cur;
        cur = next;
    }
    ScalarSeries::new(out, 1.0, "ar2")
}

/// Exact second-order statistics of a stationary AR(2) process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2Oracle {
    a1: f64,
    a2: f64,
}

/// Which mutual information [`Ar2Oracle::mutual_information`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiHorizon {
    /// `I(x_{n+τ} : x_n)`.
    OneStep,
    /// `I(x_{n+2τ}, x_{n+τ} : x_n, x_{n−τ})`.
    TwoStep,
}

/// Predictive information and excess entropy of an AR(2) process sampled
/// at some delay. Because the process is Markov of order two, `PI_m` and
/// `E_{m+1}` stop changing from `m = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2Theory {
    /// `PI_1`, equal to `E_2`.
    pub pi_1: f64,
    /// `PI_m` for every `m ≥ 2`.
    pub pi_inf: f64,
    /// Always 0.
    pub e_1: f64,
    /// `E_2`.
    pub e_2: f64,
    /// `E_m` for every `m ≥ 3`.
    pub e_inf: f64,
}

impl Ar2Oracle {
    /// Oracle for coefficients inside the stationarity triangle.
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        check_stationary(a1, a2)?;
        Ok(Self { a1, a2 })
    }

    /// Lag-1 coefficient.
    pub fn a1(&self) -> f64 {
        self.a1
    }

    /// Lag-2 coefficient.
    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// Autocorrelations `r_0..=r_max_lag`, with the Yule–Walker recursion run
    /// in double-double arithmetic.
    pub fn autocorrs(&self, max_lag: usize) -> Vec<f64> {
        let a1 = self.a1;
        let a2 = self.a2;
        let mut out = vec![1.0];
        if max_lag == 0 {
            return out;
        }
        let mut older = DoubleDouble::from_f64(1.0);
        let mut newer = DoubleDouble::from_f64(a1).div_f64(1.0 - a2);
        out.push(newer.to_f64());
        for _ in 2..=max_lag {
            let next = newer.mul_f64(a1).add(older.mul_f64(a2));
            older = newer;
            newer = next;
            out.push(newer.to_f64());
        }
        out
    }

    /// Autocorrelation at lag `k`.
    pub fn autocorr(&self, k: usize) -> f64 {
        self.autocorrs(k)[k]
    }

    /// Stationary variance `γ0 = σ²(1−a2) / ((1+a2)((1−a2)² − a1²))`.
    pub fn variance(&self, sigma: f64) -> f64 {
        let (a1, a2) = (self.a1, self.a2);
        sigma * sigma * (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1))
    }

    /// `σ²/(1 − a1² − a2²)`, the variance formula without the lag-1 cross
    /// term. It differs from [`variance`](Self::variance) whenever `a1 ≠ 0`
    /// and can even be negative; it is provided for comparison only and no
    /// other method uses it.
    pub fn variance_without_cross_term(&self, sigma: f64) -> f64 {
        sigma * sigma / (1.0 - self.a1 * self.a1 - self.a2 * self.a2)
    }

    /// Correlation matrix of `n` samples spaced `tau` apart (row-major).
    pub fn block_correlation(&self, n: usize, tau: usize) -> Vec<f64> {
        let r = self.autocorrs((n.max(1) - 1) * tau);
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = r[i.abs_diff(j) * tau];
            }
        }
        k
    }

    /// Differential entropy of `n` samples spaced `tau` apart, for unit
    /// variance.
    pub fn block_entropy(&self, n: usize, tau: usize) -> Result<f64> {
        gaussian_block_entropy(n, &self.block_correlation(n, tau))
    }

    /// Mutual information between past and future blocks at delay `tau`.
    pub fn mutual_information(&self, horizon: MiHorizon, tau: usize) -> Result<f64> {
        if tau == 0 {
            return Err(Error::InvalidParams("delay must be positive"));
        }
        let n = match horizon {
            MiHorizon::OneStep => 1,
            MiHorizon::TwoStep => 2,
        };
        Ok(2.0 * self.block_entropy(n, tau)? - self.block_entropy(2 * n, tau)?)
    }

    /// Theoretical predictive information and excess entropy at delay `tau`.
    pub fn theory(&self, tau: usize) -> Result<Ar2Theory> {
        let pi_1 = self.mutual_information(MiHorizon::OneStep, tau)?;
        let pi_inf = self.mutual_information(MiHorizon::TwoStep, tau)?;
        Ok(Ar2Theory {
            pi_1,
            pi_inf,
            e_1: 0.0,
            e_2: pi_1,
            e_inf: pi_inf,
        })
    }
}

/// `½·ln((2πe)^n · det K)` for an `n×n` symmetric positive definite
/// covariance `K` given row-major.
pub fn gaussian_block_entropy(n: usize, cov: &[f64]) -> Result<f64> {
    if n == 0 || cov.len() != n * n {
        return Err(Error::InvalidParams("covariance must be a non-empty square matrix"));
    }
    let ln_det = cholesky_ln_det(n, cov)?;
    Ok(0.5 * (n as f64 * ln(2.0 * core::f64::consts::PI * core::f64::consts::E) + ln_det))
}

fn cholesky_ln_det(n: usize, a: &[f64]) -> Result<f64> {
    let mut l = vec![0.0; n * n];
    let mut ln_det = 0.0;
    for j in 0..n {
        for i in j..n {
            if libm::fabs(a[i * n + j] - a[j * n + i]) > 1e-12 * (1.0 + libm::fabs(a[i * n + j])) {
                return Err(Error::NotPositiveDefinite);
            }
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                l[j * n + j] = sqrt(s);
                ln_det += 2.0 * ln(l[j * n + j]);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(ln_det)
}
