//! `twistlab`: sweeps, figure data and verification suites from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use twistlab::lattice::Branch;
use twistlab::Direction;

use crate::output::Format;

#[derive(Debug, Parser, Serialize)]
#[command(name = "twistlab", version, about = "One-axis-twisting metrology sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalOpts {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: TWISTLAB_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Optimizer seed.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
}

/// Time points: an explicit list, or `points` equally spaced on `(0, π/2]`.
#[derive(Debug, Args, Serialize)]
pub struct TimeGrid {
    /// Interaction times (comma separated).
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Number of grid points `k·π/(2·points)` used when no times are given.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    RotationOnly,
    TwistUntwist,
    Realigned,
    MachZehnder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchArg {
    Auto,
    Smallk,
    Bigk,
    Moments,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Auto => Branch::Auto,
            BranchArg::Smallk => Branch::SmallK,
            BranchArg::Bigk => Branch::BigK,
            BranchArg::Moments => Branch::MomentTable,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    AppendixC,
    Qfi,
    All,
}

/// A fixed direction or a rule for choosing one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Fixed(Direction),
    /// Rotation axis maximizing the QFI, or the optimal readout.
    Optimize,
}

fn parse_direction(s: &str) -> Result<DirectionArg, String> {
    let axis = |d: Direction, neg: bool| DirectionArg::Fixed(if neg { d.antipode() } else { d });
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    match body {
        "optimize" | "opt" if !neg => return Ok(DirectionArg::Optimize),
        "x" => return Ok(axis(Direction::X, neg)),
        "y" => return Ok(axis(Direction::Y, neg)),
        "z" => return Ok(axis(Direction::Z, neg)),
        _ => {}
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("expected x, y, z, optimize or 'a,b,c'; got {s:?}"))?;
    match parts[..] {
        [x, y, z] => Direction::new(x, y, z).map(DirectionArg::Fixed).map_err(|e| e.to_string()),
        _ => Err(format!("a direction needs three components; got {s:?}")),
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Closed-form and statevector QFI of the twisted coherent state.
    Qfi {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        times: TimeGrid,
        /// Polar angle of the rotation axis; optimized when omitted.
        #[arg(long, requires = "theta")]
        xi: Option<f64>,
        /// Azimuth of the rotation axis.
        #[arg(long, requires = "xi", allow_negative_numbers = true)]
        theta: Option<f64>,
    },
    /// Method-of-moments reciprocal error of a protocol.
    Mom {
        #[arg(long)]
        n: usize,
        #[arg(long = "t", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Sensed angles; 0 means the φ → 0 limit (twist-untwist only).
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        phi: Vec<f64>,
        #[arg(long, value_enum, default_value_t = VariantArg::TwistUntwist)]
        variant: VariantArg,
        /// Rotation axis: x, y, z, -x, 'a,b,c' or optimize.
        #[arg(long, value_parser = parse_direction, default_value = "x", allow_hyphen_values = true)]
        rot: DirectionArg,
        /// Readout direction: x, y, z, -x, 'a,b,c' or optimize.
        #[arg(long, value_parser = parse_direction, default_value = "x", allow_hyphen_values = true)]
        readout: DirectionArg,
        /// Realigning angle φ' for the realigned and Mach-Zehnder variants.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi_prime: f64,
        /// Sensing axis of the Mach-Zehnder variant.
        #[arg(long, value_enum, default_value_t = AxisArg::Y)]
        mz_axis: AxisArg,
    },
    /// Direction-optimized QFI against the time exponent q (t = N^q).
    PhaseDiagram {
        #[arg(long)]
        n: usize,
        /// Exponents q (default: 60 points from -2.5 to t = π/2).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Vec<f64>,
    },
    /// QFI, optimized-readout and fixed-readout method of moments against time.
    TwistUntwistScan {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        times: TimeGrid,
        #[arg(long, default_value_t = 1e-3)]
        phi: f64,
        #[arg(long, value_parser = parse_direction, default_value = "x", allow_hyphen_values = true)]
        rot: DirectionArg,
        #[arg(long, value_parser = parse_direction, default_value = "x", allow_hyphen_values = true)]
        readout: DirectionArg,
    },
    /// Finite-range variance from the analytic formulas (and optionally brute force).
    FrVariance {
        /// N; the ring has N + 2 sites.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        times: TimeGrid,
        #[arg(long)]
        xi: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Auto)]
        branch: BranchArg,
        /// Also evaluate the statevector variance.
        #[arg(long)]
        brute: bool,
    },
    /// Direction-maximized finite-range QFI with overlay curves.
    FrQfi {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        times: TimeGrid,
        #[arg(long, value_enum, default_value_t = BranchArg::Auto)]
        branch: BranchArg,
    },
    /// Jointly optimized finite-range twist-untwist protocol against time.
    FrOptimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        times: TimeGrid,
        #[arg(long, default_value_t = 1e-3)]
        phi: f64,
    },
    /// Husimi Q of the twisted coherent state on a midpoint sphere grid.
    Husimi {
        #[arg(long)]
        n: usize,
        #[arg(long = "t")]
        t: f64,
        #[arg(long, default_value_t = 32)]
        n_polar: usize,
        #[arg(long, default_value_t = 64)]
        n_azimuth: usize,
    },
    /// Brute-force cross-check suites; exits with status 3 on failure.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Ring size N + 2 for the appendix-c suite.
        #[arg(long, default_value_t = 8)]
        sites: usize,
        /// Random draws per case.
        #[arg(long, default_value_t = 10)]
        draws: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Qfi { .. } => "qfi",
            Command::Mom { .. } => "mom",
            Command::PhaseDiagram { .. } => "phase-diagram",
            Command::TwistUntwistScan { .. } => "twist-untwist-scan",
            Command::FrVariance { .. } => "fr-variance",
            Command::FrQfi { .. } => "fr-qfi",
            Command::FrOptimize { .. } => "fr-optimize",
            Command::Husimi { .. } => "husimi",
            Command::Verify { .. } => "verify",
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let env = std::env::var("TWISTLAB_THREADS").ok();
    let threads = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(s)) => Some(
            s.parse::<usize>().map_err(|_| commands::config_error(format!("TWISTLAB_THREADS={s:?} is not a count")))?,
        ),
        (None, None) => None,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(commands::config_error("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.global.threads)?;
    let table = commands::run(&cli.command, &cli.global)?;
    let meta = serde_json::json!({
        "command": cli.command.name(),
        "config": serde_json::to_value(cli)?,
        "version": env!("CARGO_PKG_VERSION"),
    });
    output::emit(&table.table, cli.global.format, cli.global.output.as_deref(), cli.command.name(), meta)?;
    match table.verification_failure {
        Some(msg) => Err(commands::VerificationFailed(msg).into()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
