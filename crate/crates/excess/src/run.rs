//! The four pipeline stages.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use excess_core::corrsum::{BlockCurves, CurveFamily};
use excess_core::decomp::{crossover_scale_highest, decompose_all, Crossover, DecompositionReport};
use excess_core::ksg::{predictive_information, KsgConfig};
use excess_core::models::{ar2_generate, lorenz_generate, Ar2Params, LorenzParams};
use excess_core::scalefit::{preprocess, PreprocessedCurves, DEFAULT_WINDOW};
use excess_core::series::{RngSeed, ScalarSeries};
use serde::Serialize;

use crate::config::{Model, RunConfig, Subcommand};
use crate::error::{CliError, Result};
use crate::io::{self, BITS_PER_NAT};

/// File names written by `analyze`, in [`BlockCurves::families`] order.
pub const CURVE_FILES: [&str; 6] = ["c2.csv", "block_entropy.csv", "cond_entropy.csv", "delta_h.csv", "d2.csv", "e2.csv"];

/// Runs the configured subcommand and returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    match cfg.subcommand {
        Subcommand::Generate => run_generate(cfg),
        Subcommand::Analyze => run_analyze(cfg),
        Subcommand::Ksg => run_ksg(cfg),
        Subcommand::Decompose => run_decompose(cfg),
    }
}

fn provenance(cfg: &RunConfig, series: Option<&ScalarSeries>) -> Vec<(&'static str, String)> {
    let mut p = vec![("generator", format!("excess {}", env!("CARGO_PKG_VERSION")))];
    if let Some(s) = series {
        p.push(("series", s.label().to_string()));
        p.push(("samples", s.len().to_string()));
    }
    p.push(("seed", cfg.seed.to_string()));
    p.push(("config", cfg.echo()));
    p
}

/// Writes a synthetic series.
pub fn run_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.output()?;
    let seed = RngSeed(cfg.seed);
    let mut p = provenance(cfg, None);
    match cfg.model {
        Model::Lorenz => {
            let params = LorenzParams {
                noise_amp: cfg.noise,
                n_samples: cfg.n,
                seed,
                ..LorenzParams::default()
            };
            let s = lorenz_generate(&params)?;
            p.insert(0, ("dt", params.sampling_dt.to_string()));
            p.insert(1, ("columns", "x,y,z".into()));
            io::write_series(out, &p, &[s.x.samples(), s.y.samples(), s.z.samples()])?;
        }
        Model::Ar2 => {
            let params = Ar2Params {
                sigma: cfg.sigma,
                ..Ar2Params::new(cfg.a1, cfg.a2, cfg.n, seed)
            };
            let s = ar2_generate(&params)?;
            p.insert(0, ("dt", "1".into()));
            p.insert(1, ("columns", "x".into()));
            io::write_series(out, &p, &[s.samples()])?;
        }
    }
    Ok(vec![out.clone()])
}

fn load_input(cfg: &RunConfig) -> Result<ScalarSeries> {
    io::load_series(cfg.input()?, cfg.column)
}

fn analyze(cfg: &RunConfig, series: &ScalarSeries) -> Result<BlockCurves> {
    let grid = cfg.eps_grid(series)?;
    Ok(BlockCurves::compute(series, cfg.m_max, cfg.tau, &grid, &cfg.pair_config(), cfg.delta_steps)?)
}

/// Writes the six curve families of a block analysis into the output
/// directory.
pub fn run_analyze(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output()?;
    let series = load_input(cfg)?;
    let curves = analyze(cfg, &series)?;
    let p = provenance(cfg, Some(&series));
    let mut written = Vec::new();
    for (family, name) in curves.families().into_iter().zip(CURVE_FILES) {
        let path = dir.join(name);
        io::write(&path, &io::curve_csv(family, &p, cfg.bits))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes predictive-information curves `m,eta,pi,pi_half`.
pub fn run_ksg(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.output()?;
    let series = load_input(cfg)?;
    let etas = cfg.eta_grid(&series)?;
    let ksg = KsgConfig {
        seed: RngSeed(cfg.seed),
        ..KsgConfig::new(cfg.k)
    };
    let orders: Vec<usize> = (1..=cfg.m_max).collect();
    let pi = predictive_information(&series, &orders, cfg.tau, &ksg, &etas)?;
    let unit = if cfg.bits { "bits" } else { "nats" };
    let scale = if cfg.bits { BITS_PER_NAT } else { 1.0 };
    let mut p = provenance(cfg, Some(&series));
    p.insert(0, ("quantity", "PI".into()));
    p.insert(1, ("units", unit.into()));
    p.push(("enlarged_k", pi.enlarged_k.to_string()));
    let mut text = io::header(&p);
    let _ = writeln!(text, "m,eta,pi_{unit},pi_half_{unit}");
    for (row, &m) in pi.full.orders().iter().enumerate() {
        for (j, eta) in etas.values().iter().enumerate() {
            let cell = |v: Option<f64>| v.map(|v| (v * scale).to_string()).unwrap_or_default();
            let _ = writeln!(
                text,
                "{m},{eta},{},{}",
                cell(pi.full.values()[row][j]),
                cell(pi.half.values()[row][j])
            );
        }
    }
    io::write(out, &text)?;
    Ok(vec![out.clone()])
}

#[derive(Serialize)]
struct ReportFile<'a> {
    run_config: &'a RunConfig,
    units: &'static str,
    #[serde(flatten)]
    report: &'a DecompositionReport,
    /// Order of `h_m` the crossover was estimated on.
    crossover_order: Option<usize>,
    crossover: Option<Crossover>,
}

/// δh and conditional-entropy families from an `analyze` output directory
/// or from a raw series.
fn decompose_inputs(cfg: &RunConfig) -> Result<(CurveFamily, CurveFamily, Option<ScalarSeries>)> {
    let input = cfg.input()?;
    if input.is_dir() {
        let dh = io::read_curve(&input.join(CURVE_FILES[3]))?;
        let cond = io::read_curve(&input.join(CURVE_FILES[2]))?;
        return Ok((dh, cond, None));
    }
    let series = load_input(cfg)?;
    let curves = analyze(cfg, &series)?;
    Ok((curves.delta_h, curves.cond, Some(series)))
}

fn in_bits(report: &DecompositionReport) -> DecompositionReport {
    let b = |v: Option<f64>| v.map(|v| v * BITS_PER_NAT);
    let mut r = report.clone();
    for e in &mut r.per_eps {
        e.e_state = b(e.e_state);
        e.e_eps = b(e.e_eps);
        e.e_mem = b(e.e_mem);
        e.e_total = b(e.e_total);
    }
    for w in &mut r.windows {
        for ms in [&mut w.e_state, &mut w.e_mem, &mut w.e_core] {
            ms.mean *= BITS_PER_NAT;
            ms.std *= BITS_PER_NAT;
        }
        w.d *= BITS_PER_NAT;
        w.constant *= BITS_PER_NAT;
    }
    r
}

fn fits_csv(pre: &PreprocessedCurves, header: &str) -> String {
    let eps = pre.delta_h.grid().values();
    let mut text = header.to_string();
    text.push_str("m,i_l,i_u,eps_l,eps_u,offset,slope,q\n");
    for fit in pre.fits.iter().flat_map(|o| &o.fits) {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            fit.m, fit.i_l, fit.i_u, eps[fit.i_l], eps[fit.i_u], fit.offset, fit.slope, fit.q
        );
    }
    text
}

fn decomposition_csv(report: &DecompositionReport, header: &str) -> String {
    let mut text = header.to_string();
    text.push_str("epsilon,E_state,E_eps,E_mem,E_total,m_l,m_u,kappa,stochastic,neg,nofit,extrap\n");
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (r, q) in report.per_eps.iter().zip(&report.quality) {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.epsilon,
            cell(r.e_state),
            cell(r.e_eps),
            cell(r.e_mem),
            cell(r.e_total),
            r.range.m_l,
            r.range.m_u,
            r.range.kappa,
            u8::from(r.range.stochastic),
            q.negative,
            q.no_fit,
            q.extrapolated
        );
    }
    text
}

/// Runs the fitter and the decomposition; writes `report.json`,
/// `decomposition.csv` and `fits.csv` into the output directory.
pub fn run_decompose(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output()?;
    let (delta_h, cond, series) = decompose_inputs(cfg)?;
    let m_max = delta_h.max_order().ok_or(excess_core::Error::MissingOrder(1))?;
    let pre = preprocess(&delta_h, DEFAULT_WINDOW)?;
    let report = decompose_all(&pre, &cfg.decomp_config(m_max), &cfg.windows)?;
    let (crossover_order, crossover) = match crossover_scale_highest(&cond, cfg.s_min) {
        Ok((m, c)) => (Some(m), Some(c)),
        Err(_) => (None, None),
    };
    let shown = if cfg.bits { in_bits(&report) } else { report };
    let units = if cfg.bits { "bits" } else { "nats" };
    let mut p = provenance(cfg, series.as_ref());
    p.insert(0, ("units", units.into()));
    let header = io::header(&p);

    let json = serde_json::to_string_pretty(&ReportFile {
        run_config: cfg,
        units,
        report: &shown,
        crossover_order,
        crossover,
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    let paths = [dir.join("report.json"), dir.join("decomposition.csv"), dir.join("fits.csv")];
    io::write(&paths[0], &(json + "\n"))?;
    io::write(&paths[1], &decomposition_csv(&shown, &header))?;
    io::write(&paths[2], &fits_csv(&pre, &header))?;
    Ok(paths.to_vec())
}

/// One-line human summary of a window, for the terminal.
pub fn describe_window(w: &excess_core::decomp::WindowSummary) -> String {
    format!(
        "window [{}, {}] ({} points): E_state = {:.3} ± {:.3}, E_mem = {:.3} ± {:.3}, E_core = {:.3} ± {:.3}, D = {:.3}, const = {:.3}",
        w.eps_lo, w.eps_hi, w.points, w.e_state.mean, w.e_state.std, w.e_mem.mean, w.e_mem.std, w.e_core.mean, w.e_core.std, w.d, w.constant
    )
}

/// Reads back the window summaries of a written `report.json`.
pub fn read_windows(path: &Path) -> Result<Vec<excess_core::decomp::WindowSummary>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    serde_json::from_value(v["windows"].clone()).map_err(|e| CliError::Config(e.to_string()))
}
