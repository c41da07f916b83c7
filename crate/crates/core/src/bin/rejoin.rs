//! Command-line front end: solve, guess, study, validate.

use clap::{Args, Parser, Subcommand};
use rejoin_core::config::load_scenario;
use rejoin_core::guess::RingTarget;
use rejoin_core::output::print_report;
use rejoin_core::pipeline::{run_guess, run_solve, run_study, run_validate, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rejoin", version, about = "Formation-ring rejoin trajectory optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for run artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Ring station chased by the guess controller.
    #[arg(long, value_parser = parse_target)]
    target: Option<RingTarget>,
    /// Mesh-refinement error tolerance.
    #[arg(long)]
    mesh_tol: Option<f64>,
    /// NLP convergence tolerance.
    #[arg(long)]
    nlp_tol: Option<f64>,
    /// Seed for randomized sampling in checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the two-phase rejoin problem and write run artifacts.
    Solve(CommonArgs),
    /// Export the maneuver-primitive initial guess as a trajectory file.
    Guess(CommonArgs),
    /// Solve once per ring target and compare costs and rejoin times.
    Study(CommonArgs),
    /// Check a trajectory file against the scenario constraints.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory file to validate.
        #[arg(long)]
        traj: PathBuf,
    },
}

fn parse_target(s: &str) -> Result<RingTarget, String> {
    RingTarget::parse(s).ok_or_else(|| format!("unknown target `{s}` (left | right | top | bottom)"))
}

fn options(common: &CommonArgs) -> RunOptions {
    RunOptions {
        out_dir: common.out.clone(),
        target: common.target,
        mesh_tol: common.mesh_tol,
        nlp_tol: common.nlp_tol,
        seed: common.seed,
        prefix: String::new(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, map) = load_scenario(&common.config)?;
            let art = run_solve(&cfg, &map, &options(&common))?;
            println!(
                "scenario `{}`: {} (mesh error {:.3e}, NLP {})",
                cfg.name,
                if art.converged() { "converged" } else { "NOT converged" },
                art.outcome.mesh_error,
                art.outcome.solution.nlp.status.label(),
            );
            println!(
                "rejoin time {:.4} s, objective {:.6}, derivative gate {:.2e}",
                art.rejoin_time_s(),
                art.ocp.report_cost(art.outcome.solution.objective),
                art.deriv_gate_max_rel
            );
            print_report(&art.report);
            println!("wrote {}", art.trajectory_path.display());
            println!("wrote {}", art.diagnostics_path.display());
            println!("wrote {}", art.manifest_path.display());
            Ok(if art.converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Guess(common) => {
            let (cfg, _map) = load_scenario(&common.config)?;
            let path = run_guess(&cfg, common.target, &common.out)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Study(common) => {
            let (cfg, map) = load_scenario(&common.config)?;
            let (report, artifacts) = run_study(&cfg, &map, &options(&common))?;
            println!("target   t_f1 [s]      cost        converged");
            for row in &report.rows {
                println!(
                    "{:<8} {:<13.4} {:<11.4} {}",
                    row.target.label(),
                    row.rejoin_time_s,
                    row.cost,
                    row.converged
                );
            }
            println!(
                "cost spread {:.4}%, rejoin-time spread {:.4}%, min pairwise separation {:.1} ft",
                100.0 * report.cost_spread_relative(),
                100.0 * report.time_spread_relative(),
                report.min_pairwise_separation_ft()
            );
            let all_converged = artifacts.iter().all(|a| a.converged());
            Ok(if all_converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Validate { common, traj } => {
            let (cfg, _map) = load_scenario(&common.config)?;
            let report = run_validate(&cfg, &traj)?;
            print_report(&report);
            Ok(if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
