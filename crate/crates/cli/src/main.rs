//! `catcool`: catalytic cooling and thermometry analyses with CSV output.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] catcool::error::Error),
    #[error("invalid input: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use catcool::error::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::InvalidInput(_)) => 2,
            CliError::Core(E::OutOfRegime(_) | E::NoLoop(_) | E::NotSynthesizable(_)) => 3,
            CliError::Verification(_)
            | CliError::Core(E::Verification(_) | E::InconsistentCertificate(_)) => 4,
            CliError::Core(E::Internal(_)) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "catcool",
    version,
    about = "Catalytic cooling and thermometry of diagonal quantum states"
)]
pub struct Cli {
    /// Plain-text key=value file supplying defaults for flags not given on the command line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized oracle runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Cold, hot and catalyst spectra, or a single system spectrum with a catalyst.
#[derive(Args, Debug, Clone)]
pub struct Spectra {
    /// Cold object populations, non-increasing, comma separated.
    #[arg(long)]
    pc: Option<String>,
    /// Hot object populations.
    #[arg(long)]
    ph: Option<String>,
    /// Single system populations (replaces --pc/--ph).
    #[arg(long, conflicts_with_all = ["pc", "ph"])]
    ps: Option<String>,
    /// Catalyst populations.
    #[arg(long)]
    pv: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnhanceMode {
    /// Sweep the cold temperature at fixed hot `x`.
    Cold,
    /// Sweep the hot `x` at fixed cold `y`.
    Hot,
    /// Single parameter point.
    Point,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MbcSweep {
    /// Cooling coefficients for k = 2..kmax over a p2 grid.
    Xi,
    /// Performance ratio over Nc for several temperatures.
    Gamma,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Beta,
    Temperature,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Is the cold-hot product passive with respect to the cold Hamiltonian?
    Passivity {
        #[arg(long)]
        pc: String,
        #[arg(long)]
        ph: String,
    },
    /// Search for a single-current catalytic cooling certificate.
    Cnu1Check {
        #[command(flatten)]
        spectra: Spectra,
    },
    /// Build and execute the plan of the best certificate, or of a plan file.
    Cnu1Run {
        #[command(flatten)]
        spectra: Spectra,
        /// Execute this serialized plan instead of searching.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Write the executed plan here.
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Construct a geometric catalyst that enables cooling.
    Synthesize {
        #[arg(long)]
        pc: String,
        #[arg(long)]
        ph: Option<String>,
        /// Cool the lowest `g` cold levels without any hot object.
        #[arg(long)]
        ground: Option<usize>,
    },
    /// Log-population diagram with the arrows of the best certificate.
    Diagram {
        #[command(flatten)]
        spectra: Spectra,
        /// Omit plan arrows.
        #[arg(long)]
        no_plan: bool,
    },
    /// Optimal qubit catalyst sweep for a cold and a hot qubit.
    OptimalQubit {
        #[arg(long, default_value = "0.025:0.5:20")]
        p2c: String,
        #[arg(long, default_value = "0.025:0.5:20")]
        p2h: String,
        /// Catalyst ranks.
        #[arg(long, default_value = "2,3,4,5,10")]
        n: String,
        /// Sweep identical qubits (p2c = p2h = p2) instead of the full grid.
        #[arg(long)]
        diagonal: bool,
        #[arg(long, default_value = "0.005:0.5:100")]
        p2: String,
    },
    /// Catalytic enhancement of optimal hot-only cooling with a degenerate three-level hot object.
    Enhance {
        #[arg(long, value_enum, default_value_t = EnhanceMode::Cold)]
        mode: EnhanceMode,
        /// `exp(-β_h ε3)` of the hot object.
        #[arg(long, default_value_t = 0.01)]
        x: f64,
        /// `exp(-β_c ε)` of the cold qubit, for the hot sweep.
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Cold excited population, for a single point.
        #[arg(long)]
        p2c: Option<f64>,
        /// Catalyst ground population, for a single point (default: balanced).
        #[arg(long)]
        p1v: Option<f64>,
    },
    /// Many-body cooling versus repeated catalytic cycles on identical qubits.
    MbcVsCc {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "Nc")]
        nc: Option<usize>,
        #[arg(long)]
        p2: Option<f64>,
        /// Inverse temperature with unit gap; alternative to --p2.
        #[arg(long, conflicts_with = "p2")]
        beta: Option<f64>,
        #[arg(long, value_enum)]
        sweep: Option<MbcSweep>,
        #[arg(long, default_value_t = 14)]
        kmax: usize,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Inverse temperatures for the gamma sweep; `inf` allowed.
        #[arg(long, default_value = "0,1,inf")]
        betas: String,
    },
    /// Estimation errors of a qubit thermometer with and without a catalyst.
    Thermometry {
        /// Probe population ratio p2/p1.
        #[arg(long, default_value_t = 0.3)]
        ratio: f64,
        #[arg(long, default_value_t = 1.0)]
        eps3: f64,
        /// Fixed catalyst ground population (default: balanced at each point).
        #[arg(long)]
        p1v: Option<f64>,
        /// Grid of `x = exp(-β ε3)`.
        #[arg(long, default_value = "log:1e-4:1:200")]
        x: String,
        #[arg(long, value_enum, default_value_t = Units::Beta)]
        units: Units,
        /// Also compare analytic sensitivities with finite differences.
        #[arg(long)]
        fd_check: bool,
    },
    /// Compare library routines with brute-force oracles on seeded random instances.
    Oracle {
        /// passivity, cnu1, hot-only, coefficients, thermometry or all.
        #[arg(long, default_value = "all")]
        check: String,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

fn main() -> ExitCode {
    let args = match input::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = Cli::parse_from(args);
    match commands::run(&cli) {
        Ok(csv) => match write_output(&cli, &csv) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err((e, partial)) => {
            if let Some(csv) = partial {
                let _ = write_output(&cli, &csv);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_output(cli: &Cli, csv: &str) -> std::io::Result<()> {
    match &cli.output {
        Some(p) => std::fs::write(p, csv),
        None => std::io::stdout().lock().write_all(csv.as_bytes()),
    }
}
