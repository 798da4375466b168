//! `wulffgeo`: construct equilibrium shapes, verify the curvature
//! identities on a surface, and generate rotational equilibrium surfaces.

mod commands;
mod config;
mod tessellate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_delaunay, cmd_report_merge, cmd_verify, cmd_wulff, load_scenario, Overrides};

#[derive(Parser)]
#[command(
    name = "wulffgeo",
    version,
    about = "Anisotropic equilibrium shapes and their verification suite"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct the equilibrium shape of a density and export mesh,
    /// edges, and summary.
    Wulff(RunArgs),
    /// Run the verification checks for a density on a surface.
    Verify(RunArgs),
    /// Generate a rotational equilibrium surface with prescribed
    /// anisotropic mean curvature.
    Delaunay(RunArgs),
    /// Merge verification report JSON files into one document.
    ReportMerge(MergeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `[output] dir` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override `[numerics] seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override `[numerics] quadrature`.
    #[arg(long, value_name = "N")]
    quadrature: Option<usize>,
    /// Override `[numerics] tolerance_scale`.
    #[arg(long = "tolerance-scale", value_name = "X")]
    tolerance_scale: Option<f64>,
}

#[derive(Args)]
struct MergeArgs {
    /// Report JSON files to merge.
    #[arg(required = true, value_name = "REPORT")]
    inputs: Vec<PathBuf>,
    /// Output directory for the merged document.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.cmd {
        Cmd::Wulff(args) | Cmd::Verify(args) | Cmd::Delaunay(args) => {
            let ov = Overrides {
                out: args.out.clone(),
                seed: args.seed,
                quadrature: args.quadrature,
                tolerance_scale: args.tolerance_scale,
            };
            match load_scenario(&args.config, &ov) {
                Ok((cfg, out)) => match &cli.cmd {
                    Cmd::Wulff(_) => cmd_wulff(&cfg, &out),
                    Cmd::Verify(_) => cmd_verify(&cfg, &out),
                    Cmd::Delaunay(_) => cmd_delaunay(&cfg, &out),
                    Cmd::ReportMerge(_) => unreachable!(),
                },
                Err(f) => Err(f),
            }
        }
        Cmd::ReportMerge(args) => cmd_report_merge(&args.inputs, &args.out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
