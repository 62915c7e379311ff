//! Benchmark acceptance suite.
//!
//! Prints one PASS/FAIL line per criterion, with the measured numbers, and
//! a tally at the end. The full run analyses five million-sample Lorenz
//! series and two AR(2) series and takes tens of minutes on one core.
//!
//! `EXCESS_ACCEPTANCE_ONLY=1,4,7` runs a subset. The exit status is nonzero
//! on failures only when `EXCESS_ACCEPTANCE_STRICT=1`; by default the
//! report is informational so that `cargo test` stays usable while known
//! gaps are open.

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use excess_core::corrsum::{
    block_correlation_sums, correlation_sum, excess_entropy_from_delta_h, max_abs_difference, BlockCurves, EpsGrid,
    PairCountConfig, PairCounter,
};
use excess_core::decomp::{crossover_scale_highest, decompose_all, DecompConfig, WindowSummary};
use excess_core::ksg::{ksg_mi, past_future_blocks, KsgConfig};
use excess_core::models::{ar2_generate, lorenz_generate, Ar2Oracle, Ar2Params, LorenzParams};
use excess_core::scalefit::{fit_curve, preprocess, DEFAULT_WINDOW};
use excess_core::series::{delay_embed, rescale, EmbeddingSpec, PointCloud, RngSeed, ScalarSeries};
use rand::Rng;
use rand_distr::StandardNormal;

const N: usize = 1_000_000;
/// Embedding orders 1..=M; δh is available up to M − 1.
const M: usize = 10;
const TAU: usize = 10;
const THEILER: usize = 100;
const MAX_PAIRS: u64 = 1_000_000;
const S_MIN: f64 = 0.1;
const AR2: (f64, f64) = (1.991843, -0.994793);

/// Averaging windows, fixed before looking at the decomposition: the
/// deterministic range of the clean attractor, and for noisy data a range
/// starting above the expected crossover scale.
const WINDOW_CLEAN: (f64, f64) = (0.02, 0.3);
const WINDOW_WEAK_NOISE: (f64, f64) = (0.3, 2.0);
const WINDOW_STRONG_NOISE: (f64, f64) = (0.5, 3.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn lorenz_grid() -> EpsGrid {
    EpsGrid::geometric(0.01, 30.0, 64).unwrap()
}

fn pair_cfg() -> PairCountConfig {
    PairCountConfig {
        theiler: THEILER,
        counter: PairCounter::DualTree,
        max_pairs: Some(MAX_PAIRS),
    }
}

fn lorenz_x(noise: f64) -> ScalarSeries {
    let p = LorenzParams {
        noise_amp: noise,
        n_samples: N,
        seed: RngSeed(0),
        ..LorenzParams::default()
    };
    lorenz_generate(&p).unwrap().x
}

fn analyse(x: &ScalarSeries, grid: &EpsGrid) -> BlockCurves {
    let t = Instant::now();
    let c = BlockCurves::compute(x, M, TAU, grid, &pair_cfg(), 1).unwrap();
    eprintln!("  [analysed {} ({} samples) in {:.0?}]", x.label(), x.len(), t.elapsed());
    c
}

/// Block curves of the Lorenz x component at a given noise level.
fn lorenz(noise: f64) -> &'static BlockCurves {
    static CACHE: OnceLock<std::sync::Mutex<HashMap<u64, &'static BlockCurves>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = noise.to_bits();
    if let Some(c) = cache.lock().unwrap().get(&key) {
        return c;
    }
    let curves = Box::leak(Box::new(analyse(&lorenz_x(noise), &lorenz_grid())));
    cache.lock().unwrap().insert(key, curves);
    curves
}

fn window_summary(curves: &BlockCurves, window: (f64, f64)) -> WindowSummary {
    let pre = preprocess(&curves.delta_h, DEFAULT_WINDOW).unwrap();
    let report = decompose_all(&pre, &DecompConfig::new(M - 1), &[window]).unwrap();
    report.windows[0].clone()
}

fn show(w: &WindowSummary) -> String {
    format!(
        "window [{}, {}]: E_state {:.3}±{:.3}, E_mem {:.3}±{:.3}, E_core {:.3}±{:.3}, D {:.3}, const {:.3}",
        w.eps_lo, w.eps_hi, w.e_state.mean, w.e_state.std, w.e_mem.mean, w.e_mem.std, w.e_core.mean, w.e_core.std, w.d, w.constant
    )
}

fn lorenz_dimension() -> Outcome {
    let c = lorenz(0.0);
    let eps = c.d2.grid().values();
    let inside = |i: usize| (3..=M).all(|m| c.d2.value(m, i).is_some_and(|d| within(d, 2.06, 0.10)));
    // longest run of radii where every order lies in the band
    let (mut best, mut start) = ((0, 0), None);
    for i in 0..=eps.len() {
        match (i < eps.len() && inside(i), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if best.1 == best.0 {
        return outcome(false, "no radius where D2 of all orders 3..10 lies in 2.06 ± 0.10");
    }
    let (lo, hi) = (eps[best.0], eps[best.1 - 1]);
    let decades = (hi / lo).log10();
    let mean: f64 = (best.0..best.1)
        .flat_map(|i| (3..=M).map(move |m| c.d2.value(m, i).unwrap()))
        .sum::<f64>()
        / ((best.1 - best.0) * (M - 2)) as f64;
    outcome(
        decades >= 0.5,
        format!("D2 (m = 3..10) in 2.06 ± 0.10 over ε ∈ [{lo:.4}, {hi:.4}] ({decades:.2} decades, mean {mean:.3})"),
    )
}

fn lorenz_excess_scaling() -> Outcome {
    let w = window_summary(lorenz(0.0), WINDOW_CLEAN);
    outcome(
        within(w.d, 2.11, 0.15) && within(w.constant, 4.62, 0.3),
        format!("D = {:.3} (2.11 ± 0.15), const = {:.3} (4.62 ± 0.3)", w.d, w.constant),
    )
}

fn lorenz_decomposition() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut check = |label: &str, ok: bool, w: &WindowSummary| {
        pass &= ok;
        parts.push(format!("{label}: {} [{}]", show(w), if ok { "ok" } else { "off" }));
    };
    let w = window_summary(lorenz(0.0), WINDOW_CLEAN);
    check(
        "clean (E_state 0.68±0.15, E_mem 1.86±0.30)",
        within(w.e_state.mean, 0.68, 0.15) && within(w.e_mem.mean, 1.86, 0.30),
        &w,
    );
    let w = window_summary(lorenz(0.005), WINDOW_WEAK_NOISE);
    check(
        "noise 0.005 (E_state 0.68±0.15, E_mem 1.27±0.20)",
        within(w.e_state.mean, 0.68, 0.15) && within(w.e_mem.mean, 1.27, 0.20),
        &w,
    );
    let w = window_summary(lorenz(0.01), WINDOW_WEAK_NOISE);
    check(
        "noise 0.01 (E_state = 0, E_mem 1.98±0.35)",
        w.e_state.mean == 0.0 && within(w.e_mem.mean, 1.98, 0.35),
        &w,
    );
    let w = window_summary(lorenz(0.02), WINDOW_STRONG_NOISE);
    check("noise 0.02 (E_core 1.2±0.3)", within(w.e_core.mean, 1.2, 0.3), &w);
    outcome(pass, parts.join("\n        "))
}

fn crossover_scales() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (noise, target) in [(0.005, 0.12), (0.01, 0.23), (0.02, 0.45)] {
        match crossover_scale_highest(&lorenz(noise).cond, S_MIN) {
            Ok((m, c)) => {
                let ok = (c.eps_star / target - 1.0).abs() <= 0.3;
                pass &= ok;
                parts.push(format!(
                    "noise {noise}: ε* = {:.3} from h_{m} (target {target} ± 30%) [{}]",
                    c.eps_star,
                    if ok { "ok" } else { "off" }
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("noise {noise}: not estimable ({e}) [off]"));
            }
        }
    }
    outcome(pass, parts.join("\n        "))
}

fn ar2_series(n: usize) -> ScalarSeries {
    ar2_generate(&Ar2Params::new(AR2.0, AR2.1, n, RngSeed(5))).unwrap()
}

/// Level of the longest near-flat fit of `E2_m`.
fn e2_plateau(curves: &BlockCurves, m: usize) -> Option<f64> {
    let ln = curves.e2.grid().ln_values();
    let fits = fit_curve(m, curves.e2.row(m)?, &ln, DEFAULT_WINDOW).ok()?.fits;
    let flat = fits.iter().filter(|f| f.slope.abs() < S_MIN).max_by_key(|f| f.len())?;
    let vals: Vec<f64> = (flat.i_l..=flat.i_u).map(|i| flat.value_at(ln[i])).collect();
    Some(vals.iter().sum::<f64>() / vals.len() as f64)
}

fn ar2_oracle_equivalence() -> Outcome {
    let x = ar2_series(N);
    let oracle = Ar2Oracle::new(AR2.0, AR2.1).unwrap();
    let grid = EpsGrid::geometric(0.01, 1000.0, 64).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [1, 10] {
        let t = Instant::now();
        let curves = BlockCurves::compute(&x, 5, tau, &grid, &pair_cfg(), 1).unwrap();
        eprintln!("  [analysed AR(2) at delay {tau} in {:.0?}]", t.elapsed());
        let theory = oracle.theory(tau).unwrap();
        for m in 2..=4 {
            let target = if m == 2 { theory.e_2 } else { theory.e_inf };
            let (ok, got) = match e2_plateau(&curves, m) {
                Some(v) => (within(v, target, 0.15), format!("{v:.3}")),
                None => (false, "no plateau".into()),
            };
            pass &= ok;
            parts.push(format!(
                "delay {tau}, E2_{m} = {got} (oracle {target:.3} ± 0.15) [{}]",
                if ok { "ok" } else { "off" }
            ));
        }
    }
    outcome(pass, parts.join("\n        "))
}

fn cloud(v: Vec<f64>) -> PointCloud {
    let n = v.len();
    PointCloud::from_parts(1, v, (0..n).collect()).unwrap()
}

fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (PointCloud, PointCloud) {
    let mut rng = RngSeed(seed).rng();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        xs.push(a);
        ys.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (cloud(xs), cloud(ys))
}

fn ksg_correctness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut seed = 100;
    for k in [4, 20] {
        let cfg = KsgConfig::new(k);
        for rho in [0.3f64, 0.5, 0.9] {
            seed += 1;
            let (x, y) = gaussian_pair(10_000, rho, seed);
            let exact = -0.5 * (1.0 - rho * rho).ln();
            let v = ksg_mi(&x, &y, &cfg).unwrap().value;
            let ok = within(v, exact, 0.02);
            pass &= ok;
            parts.push(format!("k={k} ρ={rho}: {v:.4} vs {exact:.4} [{}]", if ok { "ok" } else { "off" }));
        }
        seed += 1;
        let (x, y) = gaussian_pair(10_000, 0.0, seed);
        let v = ksg_mi(&x, &y, &cfg).unwrap().value;
        let ok = v.abs() < 0.01;
        pass &= ok;
        parts.push(format!("k={k} independent: {v:.4} [{}]", if ok { "ok" } else { "off" }));
    }
    let x = ar2_series(N);
    let theory = Ar2Oracle::new(AR2.0, AR2.1).unwrap().theory(TAU).unwrap();
    let cfg = KsgConfig::new(20);
    for m in [1, 2, 4] {
        let (past, future) = past_future_blocks(&x, m, TAU).unwrap();
        let v = ksg_mi(&past, &future, &cfg).unwrap().value;
        let target = if m == 1 { theory.pi_1 } else { theory.pi_inf };
        let (ok, rule) = if m < 4 {
            (within(v, target, 0.05), "± 0.05")
        } else {
            (v < target, "expected below")
        };
        pass &= ok;
        parts.push(format!(
            "AR(2) delay {TAU} PI_{m} = {v:.4} vs oracle {target:.4} ({rule}) [{}]",
            if ok { "ok" } else { "off" }
        ));
    }
    outcome(pass, parts.join("\n        "))
}

fn exact_identities() -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let grid = EpsGrid::geometric(0.02, 2.0, 16).unwrap();
    let cfg = PairCountConfig::default();
    let mut rng = RngSeed(77).rng();
    let mut worst_tele: f64 = 0.0;
    let mut worst_part: f64 = 0.0;
    for trial in 0..1000u64 {
        let n = rng.random_range(10..60);
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let series = ScalarSeries::new(s, 1.0, "random").unwrap();
        let c2 = block_correlation_sums(&series, 4, 1, &grid, &cfg).unwrap();
        let counts = c2.counts().unwrap();
        for (m, row) in counts.iter().enumerate() {
            if row.windows(2).any(|w| w[0] > w[1]) {
                failures.push(format!("trial {trial}: C2_{} not monotone in ε", m + 1));
            }
            if m > 0 && row.iter().zip(&counts[m - 1]).any(|(hi, lo)| hi > lo) {
                failures.push(format!("trial {trial}: C2_{} exceeds C2_{m}", m + 1));
            }
        }
        if trial % 10 == 0 {
            let curves = BlockCurves::from_correlation_sums(c2, 1).unwrap();
            worst_tele = worst_tele.max(max_abs_difference(
                &curves.e2,
                &excess_entropy_from_delta_h(&curves.delta_h).unwrap(),
            ));
            let pre = preprocess(&curves.delta_h, DEFAULT_WINDOW).unwrap();
            let report = decompose_all(&pre, &DecompConfig::new(3), &[]).unwrap();
            for r in &report.per_eps {
                if let Some(total) = r.e_total {
                    let sum = r.e_state.unwrap() + r.e_eps.unwrap() + r.e_mem.unwrap();
                    worst_part = worst_part.max((sum - total).abs());
                }
            }
        }
    }
    if worst_tele > 1e-9 {
        failures.push(format!("telescoping identity off by {worst_tele:e}"));
    }
    if worst_part > 1e-9 {
        failures.push(format!("partition off by {worst_part:e}"));
    }
    let random_part = t.elapsed();

    let x = lorenz_generate(&LorenzParams {
        n_samples: 5000,
        ..LorenzParams::default()
    })
    .unwrap()
    .x;
    let cloud = delay_embed(&x, EmbeddingSpec::new(3, TAU).unwrap()).unwrap();
    let g = EpsGrid::for_amplitude(x.amplitude(), 32).unwrap();
    let count = |counter| {
        let cfg = PairCountConfig {
            counter,
            theiler: 30,
            max_pairs: None,
        };
        correlation_sum(&cloud, &g, &cfg).unwrap().counts().unwrap().to_vec()
    };
    let naive = count(PairCounter::Naive);
    for counter in [PairCounter::BoxAssisted, PairCounter::DualTree] {
        if count(counter) != naive {
            failures.push(format!("{counter:?} differs from naive counting at N = 5000"));
        }
    }
    let elapsed = t.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("took {elapsed:.2?}, not sub-second"));
    }
    let detail = format!(
        "telescoping max err {worst_tele:.1e}, partition max err {worst_part:.1e}, 1000 series monotone and nested, counters bit-exact, {elapsed:.2?} ({random_part:.2?} for the random series)"
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}\n        {}", failures.join("\n        ")))
    }
}

fn scale_invariance() -> Outcome {
    const FACTOR: f64 = 10.0;
    let plain = window_summary(lorenz(0.0), WINDOW_CLEAN);
    let x = rescale(&lorenz_x(0.0), FACTOR).unwrap();
    let scaled_curves = analyse(&x, &lorenz_grid().scaled(FACTOR).unwrap());
    let scaled = window_summary(&scaled_curves, (WINDOW_CLEAN.0 * FACTOR, WINDOW_CLEAN.1 * FACTOR));
    let diffs = [
        (plain.e_state.mean - scaled.e_state.mean).abs(),
        (plain.e_mem.mean - scaled.e_mem.mean).abs(),
        (plain.e_core.mean - scaled.e_core.mean).abs(),
    ];
    outcome(
        diffs.iter().all(|&d| d <= 0.05),
        format!(
            "|ΔE_state| = {:.4}, |ΔE_mem| = {:.4}, |ΔE_core| = {:.4} (≤ 0.05)\n        x:    {}\n        10x:  {}",
            diffs[0],
            diffs[1],
            diffs[2],
            show(&plain),
            show(&scaled)
        ),
    )
}

/// Continuous piecewise curve in `−ln ε` plus Gaussian noise.
fn regimes(ln_eps: &[f64], breaks: &[usize], slopes: &[f64], sigma: f64, seed: u64) -> Vec<Option<f64>> {
    let n = ln_eps.len();
    let mut v = vec![0.0; n];
    let mut piece = slopes.len() - 1;
    for i in (0..n - 1).rev() {
        while piece > 0 && i < breaks[piece - 1] {
            piece -= 1;
        }
        v[i] = v[i + 1] + slopes[piece] * (ln_eps[i + 1] - ln_eps[i]);
    }
    let mut rng = RngSeed(seed).rng();
    v.into_iter()
        .map(|x| Some(x + sigma * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

fn fitter_recovery() -> Outcome {
    let grid = EpsGrid::geometric(1e-3, 1.0, 60).unwrap();
    let ln = grid.ln_values();
    let (mut ok, mut slopes_ok) = (0, 0);
    for seed in 0..100u64 {
        let (breaks, slopes): (&[usize], &[f64]) = if seed % 2 == 0 {
            (&[30], &[0.9, 0.3])
        } else {
            (&[20, 40], &[1.0, 0.5, 0.0])
        };
        let v = regimes(&ln, breaks, slopes, 0.01, 1000 + seed);
        let fits = fit_curve(1, &v, &ln, DEFAULT_WINDOW).unwrap().fits;
        let mut edges = vec![0];
        edges.extend_from_slice(breaks);
        edges.push(ln.len());
        let regime = |r: usize, strict: bool| {
            let (lo, hi) = (edges[r], edges[r + 1] - 1);
            fits.iter().any(|f| {
                let placed = !strict || (f.i_l.abs_diff(lo) <= 2 && f.i_u.abs_diff(hi) <= 2);
                (f.slope - slopes[r]).abs() < 0.02 && placed
            })
        };
        ok += usize::from((0..slopes.len()).all(|r| regime(r, true)));
        slopes_ok += usize::from((0..slopes.len()).all(|r| regime(r, false)));
    }
    outcome(
        ok >= 95,
        format!("{ok}/100 instances with all slopes within 0.02 and boundaries within 2 points (need 95); slopes alone: {slopes_ok}/100"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "Lorenz correlation dimension plateau", lorenz_dimension),
        (2, "Lorenz excess-entropy scaling D and const", lorenz_excess_scaling),
        (3, "Lorenz decomposition at four noise levels", lorenz_decomposition),
        (4, "crossover scales of noisy Lorenz", crossover_scales),
        (5, "AR(2) excess entropy against the analytic oracle", ar2_oracle_equivalence),
        (6, "KSG mutual information and predictive information", ksg_correctness),
        (7, "exact identities and counter equivalence", exact_identities),
        (8, "scale invariance of the decomposition", scale_invariance),
        (9, "scaling-range fitter recovery", fitter_recovery),
    ];
    let only: Option<Vec<u32>> = std::env::var("EXCESS_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let strict = std::env::var("EXCESS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let (mut passed, mut failed) = (0, 0);
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id} {name} ({:.0?})\n        {}", t.elapsed(), o.detail);
        if o.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
