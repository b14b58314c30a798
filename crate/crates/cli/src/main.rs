//! `flowlab`: batch driver for flows, entropy, stability, Plateau films,
//! shrinker checks and caloric counts.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "flowlab", version, about = "Mean curvature flow and minimal surface experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Flags override the config file, which
/// overrides built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Input mesh (.off or .obj).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest time step (flows) or descent step in diameter² units (plateau).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Step or iteration budget.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long)]
    pub eigs: Option<usize>,
    /// Number of optimizer starts.
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean curvature flow of a mesh.
    Flow(WithCommon),
    /// Rescaled mean curvature flow of a mesh.
    Rescale(WithCommon),
    /// Entropy: sup of the Gaussian area over dilations and translations.
    Entropy(WithCommon),
    /// Jacobi spectrum, index and verdict.
    Stability(WithCommon),
    /// Least-area film spanning boundary polygons.
    Plateau(PlateauArgs),
    /// Catalog shrinker checks.
    Shrinker {
        #[command(subcommand)]
        action: ShrinkerAction,
    },
    /// Caloric polynomials and coordinate spans.
    Caloric {
        #[command(subcommand)]
        action: CaloricAction,
    },
}

#[derive(Debug, Args)]
struct WithCommon {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PlateauArgs {
    /// Boundary polygon files, one closed polygon each.
    #[arg(required = true)]
    boundary: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum ShrinkerAction {
    /// Gaussian area and shrinker residual of a catalog shrinker.
    Verify {
        /// `sphere2`, `circle`, `cylinder`, `clifford_torus`, `plane`, ...
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
enum CaloricAction {
    /// Dimension of the caloric polynomials of degree at most D on R^N.
    Dim {
        n: usize,
        d: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Caloric extension of the monomial with the given exponents.
    Extend {
        #[arg(required = true)]
        exponents: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Affine rank of the vertex coordinates across meshes.
    Rank {
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Flow(a) => commands::flow(&a.common, flowlab::flow::FlowKind::Mcf),
        Command::Rescale(a) => commands::flow(&a.common, flowlab::flow::FlowKind::Rescaled),
        Command::Entropy(a) => commands::entropy(&a.common),
        Command::Stability(a) => commands::stability(&a.common),
        Command::Plateau(a) => commands::plateau(&a.common, &a.boundary),
        Command::Shrinker {
            action: ShrinkerAction::Verify { name, common },
        } => commands::shrinker_verify(&common, &name),
        Command::Caloric { action } => match action {
            CaloricAction::Dim { n, d, common } => commands::caloric_dim(&common, n, d),
            CaloricAction::Extend { exponents, common } => commands::caloric_extend(&common, &exponents),
            CaloricAction::Rank { meshes, common } => commands::caloric_rank(&common, &meshes),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
