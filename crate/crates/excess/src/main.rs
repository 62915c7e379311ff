use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};
use excess::config::{Model, RunConfig, Subcommand};
use excess::run::{describe_window, read_windows, run};
use excess::CliError;
use excess_core::corrsum::PairCounter;

/// Scale-dependent entropy, excess-entropy decomposition and predictive
/// information for scalar time series.
///
/// Thread count: set EXCESS_THREADS (default: all cores).
/// Exit codes: 0 ok, 1 usage or invalid parameters, 2 data error,
/// 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "excess", version)]
struct Cli {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report information quantities in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Write a synthetic series (Lorenz x,y,z or AR(2)) as CSV.
    Generate(GenerateArgs),
    /// Block correlation sums and derived curves, one CSV per quantity.
    Analyze {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Predictive information over a noise grid (KSG estimator).
    Ksg {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        ksg: KsgArgs,
    },
    /// Fit scaling ranges and decompose the excess entropy.
    Decompose {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        decomp: DecompArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Lorenz,
    Ar2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CounterArg {
    Naive,
    Box,
    Tree,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    model: ModelArg,
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    /// Lorenz dynamic noise amplitude.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a2: Option<f64>,
    /// AR(2) innovation standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Series CSV (for decompose also an analyze output directory).
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Zero-based column of the series.
    #[arg(long)]
    column: Option<usize>,
    /// Output file (ksg) or directory (analyze, decompose).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Highest embedding order.
    #[arg(long)]
    m_max: Option<usize>,
    /// Delay in samples.
    #[arg(long)]
    tau: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Smallest radius (default 1e-3 times the series amplitude).
    #[arg(long)]
    eps_min: Option<f64>,
    /// Largest radius (default: the series amplitude).
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    n_eps: Option<usize>,
    /// Theiler window in samples.
    #[arg(long)]
    theiler: Option<usize>,
    #[arg(long)]
    counter: Option<CounterArg>,
    /// Close-pair budget per radius; enables reference-point sampling.
    #[arg(long)]
    max_pairs: Option<u64>,
    /// Difference step of the dimension estimate, in grid points.
    #[arg(long)]
    delta_steps: Option<usize>,
}

#[derive(Args, Debug)]
struct KsgArgs {
    /// Neighbour count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eta_min: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long)]
    n_eta: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DecompArgs {
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    kappa_max: Option<f64>,
    /// Averaging window `LO:HI`; may be repeated.
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<(f64, f64)>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl InputArgs {
    fn apply(self, c: &mut RunConfig) {
        c.input = self.input.or(c.input.take());
        c.output = self.output.or(c.output.take());
        set(&mut c.column, self.column);
    }
}

impl EmbedArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.m_max, self.m_max);
        set(&mut c.tau, self.tau);
    }
}

impl GridArgs {
    fn apply(self, c: &mut RunConfig) {
        c.eps_min = self.eps_min.or(c.eps_min);
        c.eps_max = self.eps_max.or(c.eps_max);
        c.max_pairs = self.max_pairs.or(c.max_pairs);
        set(&mut c.n_eps, self.n_eps);
        set(&mut c.theiler, self.theiler);
        set(&mut c.delta_steps, self.delta_steps);
        set(
            &mut c.counter,
            self.counter.map(|k| match k {
                CounterArg::Naive => PairCounter::Naive,
                CounterArg::Box => PairCounter::BoxAssisted,
                CounterArg::Tree => PairCounter::DualTree,
            }),
        );
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::FileNotFound(path.clone()),
                _ => CliError::Config(format!("{}: {e}", path.display())),
            })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    c.bits |= cli.bits;
    match cli.command {
        Command::Generate(g) => {
            c.subcommand = Subcommand::Generate;
            c.model = match g.model {
                ModelArg::Lorenz => Model::Lorenz,
                ModelArg::Ar2 => Model::Ar2,
            };
            set(&mut c.n, g.n);
            set(&mut c.noise, g.noise);
            set(&mut c.a1, g.a1);
            set(&mut c.a2, g.a2);
            set(&mut c.sigma, g.sigma);
            set(&mut c.seed, g.seed);
            c.output = g.output.or(c.output.take());
        }
        Command::Analyze { io, embed, grid } => {
            c.subcommand = Subcommand::Analyze;
            io.apply(&mut c);
            embed.apply(&mut c);
            grid.apply(&mut c);
        }
        Command::Ksg { io, embed, ksg } => {
            c.subcommand = Subcommand::Ksg;
            io.apply(&mut c);
            embed.apply(&mut c);
            set(&mut c.k, ksg.k);
            c.eta_min = ksg.eta_min.or(c.eta_min);
            c.eta_max = ksg.eta_max.or(c.eta_max);
            set(&mut c.n_eta, ksg.n_eta);
            set(&mut c.seed, ksg.seed);
        }
        Command::Decompose { io, embed, grid, decomp } => {
            c.subcommand = Subcommand::Decompose;
            io.apply(&mut c);
            embed.apply(&mut c);
            grid.apply(&mut c);
            set(&mut c.s_min, decomp.s_min);
            set(&mut c.kappa_max, decomp.kappa_max);
            if !decomp.windows.is_empty() {
                c.windows = decomp.windows;
            }
        }
    }
    Ok(c)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EXCESS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("EXCESS_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| resolve(cli)).and_then(|cfg| {
        let files = run(&cfg)?;
        Ok((cfg, files))
    });
    match result {
        Ok((cfg, files)) => {
            for f in &files {
                println!("wrote {}", f.display());
            }
            if cfg.subcommand == Subcommand::Decompose {
                if let Ok(windows) = read_windows(&files[0]) {
                    for w in &windows {
                        println!("{}", describe_window(w));
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
