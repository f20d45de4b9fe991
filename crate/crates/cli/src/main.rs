mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Diverged, Output};
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "sirlab", version, about = "Discrete-time SIR map laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the map and write the orbit as CSV (`n,S,I` or `n,S,I,R`).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        unscaled: Unscaled,
    },
    /// Fixed points, thresholds, boundary tags and normal-form coefficients as JSON.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Sample the threshold curves at this many r-values in (1, r_max].
        #[arg(long)]
        curve_points: Option<usize>,
    },
    /// Bifurcation scan over one parameter, written as CSV.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Parameter values where period-n orbits of the logistic limit are born.
    Cycles {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
    },
    /// Positively invariant region and a seeded invariance probe, as JSON.
    Regions {
        #[command(flatten)]
        common: Common,
        /// Number of region-uniform starting points.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Lyapunov exponents at one point or along a sweep, as CSV.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    i0: Option<f64>,
    #[arg(long)]
    transient: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Named parameter set, applied before the config file and flags.
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key=value` file, applied after the preset and before flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    /// Parameter to vary: r, beta, a or K.
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct Unscaled {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    beta_tilde: Option<f64>,
    #[arg(long)]
    a_tilde: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Initial recovered population.
    #[arg(long)]
    r0: Option<f64>,
}

type Flags = Vec<(&'static str, Option<String>)>;

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

impl Common {
    fn flags(&self) -> Flags {
        vec![
            ("r", s(&self.r)),
            ("beta", s(&self.beta)),
            ("a", s(&self.a)),
            ("K", s(&self.k)),
            ("s0", s(&self.s0)),
            ("i0", s(&self.i0)),
            ("transient", s(&self.transient)),
            ("steps", s(&self.steps)),
            ("seed", s(&self.seed)),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ]
    }
}

impl Sweep {
    fn flags(&self) -> Flags {
        vec![
            ("param", self.param.clone()),
            ("lo", s(&self.lo)),
            ("hi", s(&self.hi)),
            ("points", s(&self.points)),
        ]
    }
}

impl Unscaled {
    fn flags(&self) -> Flags {
        vec![
            ("rho", s(&self.rho)),
            ("c", s(&self.c)),
            ("beta_tilde", s(&self.beta_tilde)),
            ("a_tilde", s(&self.a_tilde)),
            ("mu", s(&self.mu)),
            ("gamma", s(&self.gamma)),
            ("lambda", s(&self.lambda)),
            ("r0", s(&self.r0)),
        ]
    }
}

fn build(common: &Common, extra: Flags) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(name) = &common.preset {
        cfg.apply_preset(name)?;
    }
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in common.flags().into_iter().chain(extra) {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Option<String>> {
    let (cfg, out): (RunConfig, Output) = match &cli.command {
        Command::Simulate { common, unscaled } => {
            let cfg = build(common, unscaled.flags())?;
            let out = commands::simulate(&cfg)?;
            (cfg, out)
        }
        Command::Analyze { common, curve_points } => {
            let cfg = build(common, vec![("curve_points", s(curve_points))])?;
            let out = commands::analyze(&cfg)?;
            (cfg, out)
        }
        Command::Scan { common, sweep } => {
            let cfg = build(common, sweep.flags())?;
            let out = commands::scan_cmd(&cfg)?;
            (cfg, out)
        }
        Command::Cycles { common, n, lo, hi } => {
            let cfg = build(common, vec![("n", s(n)), ("lo", s(lo)), ("hi", s(hi))])?;
            let out = commands::cycles(&cfg)?;
            (cfg, out)
        }
        Command::Regions { common, samples } => {
            let cfg = build(common, vec![("samples", s(samples))])?;
            let out = commands::regions(&cfg)?;
            (cfg, out)
        }
        Command::Lyapunov { common, sweep } => {
            let cfg = build(common, sweep.flags())?;
            let out = commands::lyapunov_cmd(&cfg)?;
            (cfg, out)
        }
    };

    match cfg.raw("out") {
        Some(path) => std::fs::write(path, &out.body)
            .map_err(|e| anyhow::anyhow!("cannot write {path}: {e}"))?,
        None => std::io::stdout().write_all(out.body.as_bytes())?,
    }
    if let Some(summary) = &out.summary {
        eprintln!("{summary}");
    }
    Ok(out.diverged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else if e.is::<Diverged>() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
