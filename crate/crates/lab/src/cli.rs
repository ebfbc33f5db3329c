//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use css_core::gauge::GaugeOptions;
use css_core::{make_grid, Grid2D};

use crate::commands;
use crate::error::{LabError, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "CSS_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "css-lab", version, about = "Chern-Simons-Schrodinger numerical laboratory")]
pub struct Cli {
    /// Rerun the experiment on a box of twice the side at the same spacing.
    #[arg(long, global = true)]
    pub double_box: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interpolation constant gamma*(beta) and its minimizer.
    GammaStar(GammaStarArgs),
    /// Time evolution described by a config file.
    Evolve(EvolveArgs),
    /// Zero-energy standing wave built from the minimizer at beta * mass.
    StandingWave(StandingWaveArgs),
    /// Global-existence versus blowup over a (beta, gamma, mass) grid.
    Scan(ScanArgs),
    /// Inequality audit on seeded random fields.
    Audit(AuditArgs),
    /// Phase rate of the minimizer and the multiplier identity.
    Lambda(LambdaArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GaugeArg {
    Periodic,
    FreeSpace,
}

impl GaugeArg {
    pub fn options(self) -> GaugeOptions {
        match self {
            GaugeArg::Periodic => GaugeOptions::periodic(),
            GaugeArg::FreeSpace => GaugeOptions::free_space(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GammaMode {
    /// Gamma values are used as given.
    Absolute,
    /// Gamma values are multiples of the threshold gamma*(beta mass) / mass.
    Threshold,
}

#[derive(Clone, Debug, Args)]
pub struct GridArgs {
    /// Points per side.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Box side.
    #[arg(long, default_value_t = 24.0)]
    pub length: f64,
}

impl GridArgs {
    pub fn grid(&self, double_box: bool) -> Result<Grid2D> {
        let (n, l) = if double_box {
            (2 * self.n, 2.0 * self.length)
        } else {
            (self.n, self.length)
        };
        make_grid(n, l).map_err(|e| LabError::Usage(e.to_string()))
    }
}

#[derive(Clone, Debug, Args)]
pub struct MinimizerArgs {
    /// Residual tolerance of the flow (default: 1e-6 times the quotient).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 4000)]
    pub max_iters: usize,
    /// Randomized restarts in addition to the Gaussian start.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct GammaStarArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub minimizer: MinimizerArgs,
    #[arg(long, value_enum, default_value_t = GaugeArg::Periodic)]
    pub gauge: GaugeArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct EvolveArgs {
    /// Run configuration (`section.key = value` lines).
    pub config: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct StandingWaveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t_final: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub dt: f64,
    /// Points per side.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Box side; the self-dual profiles decay algebraically and need room.
    #[arg(long, default_value_t = 48.0)]
    pub length: f64,
    #[arg(long, value_enum, default_value_t = GaugeArg::FreeSpace)]
    pub gauge: GaugeArg,
    /// Target `|scale multiplier| / gamma*` of the stationary dilation.
    #[arg(long, default_value_t = 1e-6)]
    pub scale_tol: f64,
    #[command(flatten)]
    pub minimizer: MinimizerArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    pub mass: Vec<f64>,
    #[arg(long, value_enum, default_value_t = GammaMode::Absolute)]
    pub gamma_mode: GammaMode,
    #[arg(long, default_value_t = 5.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Gradient CFL constant of the step control.
    #[arg(long, default_value_t = 0.2)]
    pub cfl: f64,
    #[arg(long, default_value_t = 10.0)]
    pub blowup_factor: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = GaugeArg::Periodic)]
    pub gauge: GaugeArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,0.5,2,4", allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 16.0)]
    pub length: f64,
    #[arg(long, value_enum, default_value_t = GaugeArg::Periodic)]
    pub gauge: GaugeArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct LambdaArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    /// Difference step of gamma*' (default 0.05 max(beta, 1)).
    #[arg(long)]
    pub h: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub minimizer: MinimizerArgs,
    #[arg(long, value_enum, default_value_t = GaugeArg::Periodic)]
    pub gauge: GaugeArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(LabError::config(THREADS_ENV, format!("`{v}` is not a positive integer"))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(LabError::config(THREADS_ENV, e.to_string())),
    }
}

/// Runs one parsed command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = thread_cap().and_then(|cap| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| LabError::Usage(format!("cannot start worker pool: {e}")))?;
        pool.install(|| dispatch(&cli))
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("css-lab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let db = cli.double_box;
    match &cli.command {
        Command::GammaStar(a) => commands::gamma_star(a, db),
        Command::Evolve(a) => commands::evolve(a, db),
        Command::StandingWave(a) => commands::standing_wave(a, db),
        Command::Scan(a) => commands::scan(a, db),
        Command::Audit(a) => commands::audit(a, db),
        Command::Lambda(a) => commands::lambda(a, db),
    }
}
