//! `ahlfors` command-line front end.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(ahlfors::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

impl From<ahlfors::Error> for CliError {
    fn from(e: ahlfors::Error) -> Self {
        match e {
            ahlfors::Error::Validation(m) => CliError::Usage(m),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Format(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ahlfors", version, about = "Extremal-derivative polynomials, potential theory and inversion on real interval systems")]
pub struct Cli {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct InstanceArg {
    /// Instance JSON: {"kind": "J"|"S"|"T", "endpoints": [...]}.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictKind {
    Auto,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Sweep,
    Bifurcation,
    Auto,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize an instance (JSON).
    Describe(InstanceArg),
    /// Comb parameters: critical points, base angles and slit heights.
    Comb(InstanceArg),
    /// Green function at points, with pole at infinity or at a real x0.
    Green {
        #[command(flatten)]
        inst: InstanceArg,
        /// Evaluation point, repeatable, e.g. "0.1+0.8i".
        #[arg(long = "z", required = true, allow_hyphen_values = true)]
        z: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
    },
    /// Logarithmic capacity and Robin constant.
    Capacity(InstanceArg),
    /// Harmonic measures omega(z, E_k) and band measures.
    Hm {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Real Abel-Jacobi inversion for a character vector.
    Invert {
        #[command(flatten)]
        inst: InstanceArg,
        /// Comma-separated character, e.g. "0.2,0.7".
        #[arg(long)]
        beta: String,
    },
    /// Generalized inversion for a complex evaluation point.
    Gaji {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, default_value = "")]
        beta: String,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
    },
    /// Branch scan of the generalized inversion over beta (g = 1).
    Bifurcation {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Limit prediction at a complex z0 or a real gap point x0.
    Predict {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, default_value = "")]
        beta: String,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "x0")]
        z0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
    },
    /// Candidate extremal polynomials from a preimage generator U and T_m (JSON).
    Candidate {
        #[command(flatten)]
        inst: InstanceArg,
        /// Coefficients of U, lowest degree first, e.g. "-3,0,1".
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long)]
        m: usize,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        /// Expected degree m deg U (checked when given).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        contact_tol: f64,
        #[arg(long, default_value_t = 1e-7)]
        lp_tol: f64,
    },
    /// LP oracle for A_n(z0; E).
    Oracle {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        /// Polygon facets (0: exact-angle cuts).
        #[arg(long = "K", default_value_t = 64)]
        k: usize,
        /// Grid points per piece per degree.
        #[arg(long, default_value_t = 30)]
        grid: usize,
    },
    /// Oracle values over a list of degrees with scaled values and predictions.
    Sweep {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        /// Degrees: "20,30,40" or "lo:hi:step".
        #[arg(long)]
        n: String,
        #[arg(long = "K", default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 30)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = PredictKind::Auto)]
        predict: PredictKind,
    },
    /// Run the built-in invariant checks.
    Selftest,
    /// Render a CSV from this tool as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotKind::Auto)]
        kind: PlotKind,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("AHL_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("AHL_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("AHL_THREADS must be positive".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn diagnostic(cli: &Cli, err: &CliError) {
    let dir = cli
        .out
        .as_ref()
        .and_then(|p| p.parent())
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let text = format!(
        "tool=ahlfors version={}\nargs={:?}\nerror={err}\n",
        output::VERSION,
        std::env::args().collect::<Vec<_>>()
    );
    let path = dir.join("ahlfors-diagnostic.txt");
    if output::write_atomic(&path, &text).is_ok() {
        eprintln!("diagnostic written to {}", path.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = configure_threads().and_then(|_| commands::run(&cli));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.code() == 1 {
                diagnostic(&cli, &e);
            }
            ExitCode::from(e.code())
        }
    }
}
