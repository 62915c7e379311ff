//! Run configuration shared by all subcommands.
//!
//! Defaults are overridden by a JSON config file, which in turn is
//! overridden by command-line flags. Every output file echoes the resolved
//! configuration (without the output path) as a `# config=` comment.

use std::path::PathBuf;

use excess_core::corrsum::{EpsGrid, PairCountConfig, PairCounter};
use excess_core::decomp::DecompConfig;
use excess_core::series::ScalarSeries;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Generate,
    #[default]
    Analyze,
    Ksg,
    Decompose,
}

/// Synthetic source for `generate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Lorenz,
    Ar2,
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub input: Option<PathBuf>,
    /// Zero-based CSV column of the series.
    pub column: usize,
    pub output: Option<PathBuf>,

    pub model: Model,
    pub n: usize,
    /// Lorenz dynamic noise amplitude.
    pub noise: f64,
    pub a1: f64,
    pub a2: f64,
    pub sigma: f64,

    /// Highest embedding order.
    pub m_max: usize,
    pub tau: usize,
    /// Grid bounds; `None` means relative to the series amplitude `A`
    /// (`1e-3·A` and `A`).
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub n_eps: usize,
    pub theiler: usize,
    pub counter: PairCounter,
    pub max_pairs: Option<u64>,
    /// Difference step of the dimension quotient, in grid points.
    pub delta_steps: usize,

    pub k: usize,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub n_eta: usize,

    pub s_min: f64,
    pub kappa_max: f64,
    pub windows: Vec<(f64, f64)>,

    pub seed: u64,
    /// Report information quantities in bits.
    pub bits: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: Subcommand::Analyze,
            input: None,
            column: 0,
            output: None,
            model: Model::Lorenz,
            n: 100_000,
            noise: 0.0,
            a1: 1.991843,
            a2: -0.994793,
            sigma: 1.0,
            m_max: 10,
            tau: 1,
            eps_min: None,
            eps_max: None,
            n_eps: 64,
            theiler: 0,
            counter: PairCounter::DualTree,
            max_pairs: None,
            delta_steps: 1,
            k: 4,
            eta_min: None,
            eta_max: None,
            n_eta: 16,
            s_min: 0.1,
            kappa_max: 0.5,
            windows: Vec::new(),
            seed: 0,
            bits: false,
        }
    }
}

impl RunConfig {
    /// Parses a JSON config; absent fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Compact JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// JSON echo written into output headers: the config without its output
    /// path.
    pub fn echo(&self) -> String {
        Self { output: None, ..self.clone() }.to_json()
    }

    pub(crate) fn output(&self) -> Result<&PathBuf> {
        self.output.as_ref().ok_or_else(|| CliError::Config("no output path given".into()))
    }

    pub(crate) fn input(&self) -> Result<&PathBuf> {
        self.input.as_ref().ok_or_else(|| CliError::Config("no input path given".into()))
    }

    pub fn pair_config(&self) -> PairCountConfig {
        PairCountConfig {
            theiler: self.theiler,
            counter: self.counter,
            max_pairs: self.max_pairs,
        }
    }

    pub fn decomp_config(&self, m_max: usize) -> DecompConfig {
        DecompConfig {
            s_min: self.s_min,
            kappa_max: self.kappa_max,
            m_max,
        }
    }

    /// ε grid for `series`.
    pub fn eps_grid(&self, series: &ScalarSeries) -> Result<EpsGrid> {
        let a = series.amplitude();
        let lo = self.eps_min.unwrap_or(1e-3 * a);
        let hi = self.eps_max.unwrap_or(a);
        Ok(EpsGrid::geometric(lo, hi, self.n_eps)?)
    }

    /// η grid for `series`.
    pub fn eta_grid(&self, series: &ScalarSeries) -> Result<EpsGrid> {
        let a = series.amplitude();
        let lo = self.eta_min.unwrap_or(1e-3 * a);
        let hi = self.eta_max.unwrap_or(a);
        Ok(EpsGrid::geometric(lo, hi, self.n_eta)?)
    }

    /// Bounds that the core types do not check themselves.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if self.m_max < 2 {
            return bad("m_max must be at least 2");
        }
        if self.tau == 0 {
            return bad("tau must be at least 1");
        }
        if self.n_eps < 2 || self.n_eta < 1 {
            return bad("grids need at least 2 radii and 1 noise level");
        }
        if self.delta_steps == 0 {
            return bad("delta_steps must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.max_pairs == Some(0) {
            return bad("max_pairs must be positive");
        }
        if self.windows.iter().any(|&(lo, hi)| !(lo > 0.0 && lo < hi)) {
            return bad("windows need 0 < lo < hi");
        }
        Ok(())
    }
}
