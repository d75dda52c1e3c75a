use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use minmax_core::catalog::listing;
use minmax_core::domain::DomainDescriptor;
use minmax_core::export::{build_mesh, feasibility_of, load_example, parse_suite, report_json, run_verify};
use minmax_core::mesh::{write_obj, GridSpec};
use minmax_core::surfaces::SurfaceKind;
use minmax_core::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "minmax", version, about = "Minimal and maximal graphs over signed polygons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a surface and write it as OBJ.
    Build {
        #[arg(long)]
        example: String,
        #[arg(long, default_value = "min")]
        surface: SurfaceKind,
        /// Radial by angular counts, e.g. 32x128.
        #[arg(long, default_value = "32x128")]
        grid: String,
        #[arg(long, default_value_t = 1.0 - 1e-3)]
        clip: f64,
        /// Reflect across the arc carrying this vertex.
        #[arg(long)]
        extend_vertex: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run named checks and print a JSON report.
    Verify {
        #[arg(long)]
        example: String,
        /// `all` or a comma-separated list.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Decide whether a signed domain admits a solution.
    Feasibility {
        #[arg(long)]
        domain: PathBuf,
    },
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::UnknownCheck(_)
            | Error::InvalidInput(_)
            | Error::InvalidPolygon(_)
            | Error::TooManyVertices { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::HypothesisViolated(_)
            | Error::ProjectionMismatch,
        ) => EXIT_USAGE,
        Some(_) => EXIT_NUMERIC,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_USAGE,
        None => EXIT_NUMERIC,
    }
}

fn emit(text: &str, path: Option<&PathBuf>) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Build { example, surface, grid, clip, extend_vertex, out } => {
            let grid = GridSpec::parse(&grid, clip)?;
            let ex = load_example(&example)?;
            let mesh = build_mesh(&ex, &example, surface, &grid, extend_vertex)?;
            write_obj(&mesh, &out)?;
            log::info!("wrote {} vertices, {} triangles to {}", mesh.vertices.len(), mesh.triangles.len(), out.display());
            Ok(true)
        }
        Command::Verify { example, suite, seed, json } => {
            let suite = parse_suite(&suite)?;
            let ex = load_example(&example)?;
            let report = run_verify(&ex, &suite, seed)?;
            for c in report.checks.iter().filter(|c| !c.pass) {
                log::warn!("{} failed: measured {:e}, tolerance {:e}", c.id, c.measured, c.tolerance);
            }
            emit(&report_json(&example, seed, &suite, &report)?, json.as_ref())?;
            Ok(report.passed())
        }
        Command::Feasibility { domain } => {
            let text = fs::read_to_string(&domain).with_context(|| format!("reading {}", domain.display()))?;
            let out = feasibility_of(&DomainDescriptor::from_json(&text)?)?;
            let mut s = serde_json::to_string_pretty(&out)?;
            s.push('\n');
            emit(&s, None)?;
            Ok(out.js.is_feasible() && out.lightlike.is_feasible())
        }
        Command::Catalog { action: CatalogAction::List } => {
            for (id, what) in listing() {
                println!("{id:<16} {what}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MINMAX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
