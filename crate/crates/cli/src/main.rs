//! `sobolev2d`: command-line front end for the extension library.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sobolev2d",
    version,
    about = "Linear extension operators for Sobolev trace data in the plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input JSON file.
    pub input: PathBuf,
    /// Config JSON overriding the defaults.
    #[arg(long, env = "SOBOLEV2D_CONFIG")]
    pub config: Option<PathBuf>,
    /// Override p from the config and the input.
    #[arg(long)]
    pub p: Option<f64>,
    /// Write the main result here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Nodes per side of the output or oracle grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Grid square as cx,cy,side [default: 1.5x the bounding box of the points].
    #[arg(long = "box", value_parser = io::parse_box, allow_hyphen_values = true)]
    pub domain: Option<sobolev2d::Square>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calderón–Zygmund decomposition of the points as JSON.
    Decompose(Common),
    /// Besov seminorm of the point set, with the minimizing frame.
    SetSeminorm(Common),
    /// One-dimensional trace norm and extension of {"xs", "gs", "p"} data.
    Trace1d {
        #[command(flatten)]
        common: Common,
        /// Also write this many samples of the extension as CSV.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Local extension on a single square.
    LocalExtend {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Field values on the grid as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Selected keystone jets.
    Jets(Common),
    /// Global extension: the trace-norm functionals and optionally the field on a grid.
    Extend {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Field values on the grid as CSV (grid defaults to 64 nodes per side).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate the extension (value and gradient) at points or on a grid, as CSV.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Evaluation point x,y; repeatable.
        #[arg(long, value_parser = io::parse_point, allow_hyphen_values = true)]
        at: Vec<sobolev2d::Point2>,
    },
    /// Brute-force grid or line oracle on a problem or instance file.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Nodes for the line oracle.
        #[arg(long, default_value_t = 200)]
        line_nodes: usize,
        /// Minimizing grid field as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Extension functional versus the grid oracle on the same instance.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Debug)]
pub enum CliError {
    Lib(sobolev2d::Error),
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn exit_code(&self) -> u8 {
        use sobolev2d::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Lib(E::ToleranceNotMet { .. }) => 3,
            CliError::Lib(E::Internal(_)) | CliError::Internal(_) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<sobolev2d::Error> for CliError {
    fn from(e: sobolev2d::Error) -> Self {
        CliError::Lib(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(c) => commands::decompose(&c),
        Command::SetSeminorm(c) => commands::set_seminorm(&c),
        Command::Trace1d {
            common,
            samples,
            csv,
        } => commands::trace1d(&common, samples, csv.as_ref()),
        Command::LocalExtend { common, grid, csv } => {
            commands::local_extend(&common, &grid, csv.as_ref())
        }
        Command::Jets(c) => commands::jets(&c),
        Command::Extend { common, grid, csv } => commands::extend(&common, &grid, csv.as_ref()),
        Command::Eval { common, grid, at } => commands::eval(&common, &grid, &at),
        Command::Oracle {
            common,
            grid,
            line_nodes,
            csv,
        } => commands::oracle(&common, &grid, line_nodes, csv.as_ref()),
        Command::Compare { common, grid } => commands::compare(&common, &grid),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sobolev2d: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
