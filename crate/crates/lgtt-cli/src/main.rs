//! `lgtt` command-line front end.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lgtt", version, about = "Landau-Ginzburg singularities, thimble periods and tt* checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Coupling τ, e.g. "1" or "0.5+2i" (overrides the family file).
    #[arg(long, global = true)]
    pub tau: Option<String>,
    /// Deformation parameters, comma-separated complex values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Half-width of the spectral grid.
    #[arg(long = "grid-R", global = true)]
    pub grid_r: Option<f64>,
    /// Spacing of the spectral grid.
    #[arg(long = "grid-h", global = true)]
    pub grid_h: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long, global = true, default_value_t = 6)]
    pub k: usize,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Turn warnings into errors.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodMode {
    Holomorphic,
    Twisted,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Weights, invertible class, Milnor number, symmetry group and tameness.
    Analyze { file: PathBuf },
    /// Newton polytope, convenience and nondegeneracy.
    Newton { file: PathBuf },
    /// Tameness certificate with an optional radial probe.
    Tame {
        file: PathBuf,
        /// Probe radii, comma-separated; enables the advisory probe.
        #[arg(long)]
        radii: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Lowest eigenvalues of the twisted Laplacian on p-forms (one variable).
    Spectrum {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: u8,
        #[arg(long, default_value_t = 0.1)]
        zero_band: f64,
        #[arg(long, default_value_t = 10.0)]
        gap: f64,
    },
    /// Trace descending and ascending thimbles (one variable).
    Thimbles { file: PathBuf },
    /// Thimble period matrices and the Witten matrix.
    Periods {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PeriodMode::Holomorphic)]
        mode: PeriodMode,
        /// Rotate t by this angle (radians) when it sits on a wall.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Monodromy of the thimble basis around a loop.
    Monodromy {
        file: PathBuf,
        /// "tau" or "t:J:RADIUS" (J is 1-based).
        #[arg(long = "loop", default_value = "tau")]
        path: String,
        #[arg(long, default_value_t = 48)]
        steps: usize,
        /// Also compute the half-loop map (odd degree).
        #[arg(long)]
        half: bool,
    },
    /// Higgs fields, Frobenius tensor and connection residuals.
    Frobenius {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Moduli dimension against the marginal deformation count.
    Moduli {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Newton { .. } => "newton",
            Command::Tame { .. } => "tame",
            Command::Spectrum { .. } => "spectrum",
            Command::Thimbles { .. } => "thimbles",
            Command::Periods { .. } => "periods",
            Command::Monodromy { .. } => "monodromy",
            Command::Frobenius { .. } => "frobenius",
            Command::Moduli { .. } => "moduli",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    match commands::run(&cli) {
        Ok(outcome) => match commands::emit(&cli, outcome, start) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
