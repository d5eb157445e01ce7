//! `preamp`: CSV/JSON artifacts for preamplified heterodyne experiments.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use preamp_core::StateSpec;

#[derive(Parser)]
#[command(name = "preamp", version, about = "Preamplified heterodyne detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Observable {
    Number,
    Quadrature,
    K,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionKind {
    /// |α|²
    Abs2,
    /// Re(α e^{−iφ})
    ReAlpha,
    /// Im(α²) + (c/2)|α|²
    ImAlpha2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Analytic,
    Mc,
    Quad2d,
}

/// Flags shared by every subcommand; each command reads the ones it needs.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Fock-space truncation.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Detector quantum efficiency in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Gain ladder (comma separated).
    #[arg(long = "gains", alias = "gain", value_delimiter = ',')]
    pub gains: Option<Vec<f64>>,
    /// Quadrature angle φ.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    /// Coefficient c of the quadratic family Im(α²) + (c/2)|α|².
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c: f64,
    /// Histogram bins (Freedman–Diaconis when omitted).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points per side of the position grid.
    #[arg(long, default_value_t = 4000)]
    pub grid_points: usize,
    /// Half-width of the position grid.
    #[arg(long, default_value_t = 32.0)]
    pub grid_max: f64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout when omitted); written atomically.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Preamplified number densities of a coherent state at several gains.
    Fig1 {
        #[arg(long, default_value = "mean:12")]
        state: StateSpec,
        #[arg(long, default_value_t = 30.0)]
        h_max: f64,
        #[arg(long, default_value_t = 6001)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Heterodyne marginal density of a phase-space function.
    Density {
        #[arg(long, value_enum, default_value = "abs2")]
        f: FunctionKind,
        #[arg(long, default_value = "vacuum")]
        state: StateSpec,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Evaluation points for closed-form densities.
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Raw heterodyne outcomes α.
    Sample {
        #[arg(long, default_value = "vacuum")]
        state: StateSpec,
        /// Number of outcomes.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Rescaled outcome density after ideal preamplification.
    Preamp {
        #[arg(long, value_enum, default_value = "number")]
        observable: Observable,
        #[arg(long, default_value = "mean:4")]
        state: StateSpec,
        #[arg(long, default_value_t = 4001)]
        points: usize,
        /// Upper end of the outcome range (chosen from the state when omitted).
        #[arg(long)]
        u_max: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Moment-condition report on a gain ladder.
    Moments {
        #[arg(long, value_enum, default_value = "number")]
        observable: Observable,
        /// Test state (repeatable).
        #[arg(long = "state")]
        states: Vec<StateSpec>,
        #[arg(long, default_value_t = 2)]
        l_max: u32,
        /// Exit with status 4 unless the verdict is "converges".
        #[arg(long)]
        assert_converges: bool,
        /// Exit with status 4 unless the verdict is "diverges-from-target".
        #[arg(long)]
        assert_diverges: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Three-route analysis of the preamplified K second moment.
    Counterexample {
        #[arg(long = "state")]
        states: Vec<StateSpec>,
        /// Exit with status 4 unless the verdict is "diverges-from-target".
        #[arg(long)]
        assert_diverges: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form su(1,1) disentangling checked against 2×2 matrices.
    Bch {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Exit with status 4 if any residual reaches this value.
        #[arg(long, default_value_t = 1e-10)]
        max_residual: f64,
        #[arg(long)]
        assert: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Stirling numbers of the first kind, or the density-bound check.
    Stirling {
        #[arg(long, default_value_t = 12)]
        l_max: usize,
        /// Check the Stirling bounds on the amplified number density instead.
        #[arg(long)]
        bounds: bool,
        #[arg(long, default_value_t = 20)]
        n_max: u64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Exit with status 4 on any identity failure or bound violation.
        #[arg(long)]
        assert: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fig1 { state, h_max, points, common } => commands::fig1(&state, h_max, points, &common),
        Command::Density { f, state, method, points, common } => commands::density(f, &state, method, points, &common),
        Command::Sample { state, n, common } => commands::sample(&state, n, &common),
        Command::Preamp { observable, state, points, u_max, common } => {
            commands::preamp(observable, &state, points, u_max, &common)
        }
        Command::Moments { observable, states, l_max, assert_converges, assert_diverges, common } => {
            commands::moments(observable, &states, l_max, assert_converges, assert_diverges, &common)
        }
        Command::Counterexample { states, assert_diverges, common } => {
            commands::counterexample(&states, assert_diverges, &common)
        }
        Command::Bch { trials, radius, lambda, max_residual, assert, common } => {
            commands::bch(trials, radius, lambda, max_residual, assert, &common)
        }
        Command::Stirling { l_max, bounds, n_max, points, assert, common } => {
            commands::stirling(l_max, bounds, n_max, points, assert, &common)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
