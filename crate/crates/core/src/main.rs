use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curlcurl::adaptivity::Driver;
use curlcurl::cases::case_by_name;
use curlcurl::driver::{exit_code, run, Mode, RunConfig};
use curlcurl::equilibration::PoincareMode;
use curlcurl::mesh::write_medit;
use curlcurl::Error;

#[derive(Parser)]
#[command(name = "curlcurl", version, about = "Nedelec curl-curl solver with equilibrated error estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, estimate and write a CSV of the results.
    Run(RunArgs),
    /// Write the initial mesh of a case in MEDIT format.
    Mesh {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// cube, ltype-3pi4, ltype-pi2, ltype-pi8, fichera or poly.
    #[arg(long)]
    case: String,
    /// single, hconv, pconv or adapt.
    #[arg(long, default_value = "single")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    p: usize,
    /// Flux degree minus `p`.
    #[arg(long, default_value_t = 1)]
    q_offset: usize,
    /// Resolution of the (initial) mesh.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Number of meshes in an h-convergence study.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Highest degree in a p-convergence study.
    #[arg(long, default_value_t = 3)]
    pmax: usize,
    /// Quantity that drives adaptive marking: edge or cell.
    #[arg(long, default_value = "cell")]
    driver: Driver,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 30_000)]
    budget_dofs: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Lifting constant multiplying the reported estimators.
    #[arg(long, default_value_t = 1.0)]
    clift: f64,
    /// Include oscillation terms in the reported estimators.
    #[arg(long)]
    osc: bool,
    /// Use the bound 1/pi instead of patch eigenvalues for Poincare constants.
    #[arg(long)]
    poincare_bound: bool,
    /// Initial mesh in MEDIT format.
    #[arg(long)]
    mesh_in: Option<PathBuf>,
    /// Triangle references treated as Dirichlet (default: all).
    #[arg(long, value_delimiter = ',')]
    dirichlet_refs: Option<Vec<i64>>,
    /// CSV destination; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every record to standard error as it is computed.
    #[arg(long)]
    verbose: bool,
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Mesh { case, n, out } => {
            let case = case_by_name(&case)?;
            write_medit(&(case.mesh)(n)?, out)?;
            Ok(())
        }
        Command::Run(a) => {
            let config = RunConfig {
                case: a.case,
                mode: a.mode,
                p: a.p,
                q_offset: a.q_offset,
                n: a.n,
                levels: a.levels,
                pmax: a.pmax,
                driver: a.driver,
                theta: a.theta,
                budget_dofs: a.budget_dofs,
                max_iters: a.max_iters,
                c_lift: a.clift,
                osc: a.osc,
                poincare: if a.poincare_bound { PoincareMode::Bound } else { PoincareMode::Eigen },
                mesh_in: a.mesh_in,
                dirichlet_refs: a.dirichlet_refs,
            };
            let verbose = a.verbose;
            let out = run(&config, |r| {
                if verbose {
                    eprintln!(
                        "iter {} p {} dofs {} err {:.4e} etae {:.4e} etac {:.4e}",
                        r.iter, r.p, r.nr_dofs, r.err, r.eta_edge, r.eta_cell
                    );
                }
            })?;
            match a.out {
                Some(path) => std::fs::write(path, out.csv)?,
                None => print!("{}", out.csv),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
