//! Batch front end: every pipeline behind one subcommand, configured by a
//! JSON file and writing CSV or JSON.
//!
//! Exit codes: 0 all checks pass, 1 assertion failure, 2 configuration
//! error, 3 numerical non-convergence.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glfock::Error;

use commands::{NormArg, Suite};
use config::{Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "glfock", version, about = "Gelfond-Leontiev Fock space diagnostics")]
struct Cli {
    /// JSON run configuration; the exponential defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficients, fitted growth, ψ coefficients and radii of φ.
    PhiInfo,
    /// Runs one assertion suite.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        tol: Option<f64>,
        /// Largest index or degree the suite exercises.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Frame bounds over lattice sizes s_min..=s_max.
    FramesSweep {
        #[arg(long, default_value_t = 0.3)]
        s_min: f64,
        #[arg(long, default_value_t = 1.5)]
        s_max: f64,
        #[arg(long, default_value_t = 13)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        window_n: usize,
    },
    /// |1 − E(z)| against |Ω(z)| on a grid over the unit disk.
    WeierstrassTable {
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Beurling densities of a square or randomly perturbed lattice.
    Density {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
        radii: Vec<f64>,
        /// Perturbation bound; 0 keeps the lattice.
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = 8)]
        shifts: usize,
        #[arg(long, value_enum, default_value_t = NormArg::TwoPi)]
        norm: NormArg,
    },
    /// Forward and inverse Bargmann transform of random Hermite expansions.
    BargmannRoundtrip {
        #[arg(long, default_value_t = 15)]
        degree: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) | Error::Divergence(_) | Error::Overflow(_) => 3,
        Error::WeightMismatch { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, (u8, String)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| (2, format!("config error: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let format = cli.format.unwrap_or(cfg.output.format);
    let out = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let report = match cli.command {
        Command::PhiInfo => commands::phi_info(&cfg),
        Command::Check { suite, tol, n_max } => commands::check(&cfg, suite, tol, n_max),
        Command::FramesSweep { s_min, s_max, steps, window_n } => commands::frames_sweep(&cfg, s_min, s_max, steps, window_n),
        Command::WeierstrassTable { grid } => commands::weierstrass_table(&cfg, grid),
        Command::Density { lambda, radii, q, shifts, norm } => commands::density_cmd(&cfg, lambda, &radii, q, shifts, norm),
        Command::BargmannRoundtrip { degree, samples } => commands::bargmann_roundtrip(&cfg, degree, samples),
    }
    .map_err(|e| (exit_code(&e), format!("error: {e}")))?;

    let text = report.render(format);
    match &out {
        Some(p) => std::fs::write(p, &text).map_err(|e| (2, format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if format == config::Format::Csv {
        eprint!("{}", report.summary_text());
    }
    match (report.passed, report.failure) {
        (Some(false), Some(msg)) => Err((1, format!("{}: {msg}", report.title))),
        (Some(false), None) => Err((1, format!("{}: failed", report.title))),
        _ => Ok(0),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
