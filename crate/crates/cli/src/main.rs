//! `stratnet`: simulate and analyze stratified populations on networks.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 no convergence by `t_max`, 4 validation failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod output;
mod scenario;
mod validate;

use scenario::Scenario;
use stratnet::{analysis, integrator, nbrd, nrpm, Error, PopulationState};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no convergence: {0}")]
    NotConverged(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numerical(_) => 2,
            Self::NotConverged(_) => 3,
            Self::Validation(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Graph(_) | Error::ProfileSize { .. } | Error::NotOnSimplex(_) | Error::InvalidArgument(_) => {
                Self::Config(e.to_string())
            }
            Error::StepTooLarge { .. } => Self::Numerical(format!("{e}; reduce the step size h")),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "stratnet", version, about = "Stratified population dynamics on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario's dynamics; write the trajectory CSV and summary JSON.
    Simulate {
        scenario: PathBuf,
        /// Trajectory CSV path (overrides the scenario's output.trajectory).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Summary JSON path (overrides output.summary; "-" for stdout).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Best response of one node at the scenario state.
    BestResponse {
        scenario: PathBuf,
        /// 1-based node label.
        #[arg(long)]
        node: usize,
        /// Comma-separated state; defaults to the scenario's x0.
        #[arg(long)]
        state: Option<String>,
    },
    /// Network-restricted reallocation at the scenario state.
    NrpmStep {
        scenario: PathBuf,
        #[arg(long)]
        state: Option<String>,
    },
    /// Nash test of a state.
    CheckNe {
        scenario: PathBuf,
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = analysis::SIMULATION_NASH_TOL)]
        tol: f64,
    },
    /// Global maximizer of social utility and its Nash report on the scenario graph.
    Equilibria { scenario: PathBuf },
    /// Randomized property suite.
    Validate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cases: u64,
        /// Directory for serialized failing instances.
        #[arg(long, default_value = "validate-failures")]
        failures: PathBuf,
        #[arg(long, hide = true)]
        mutate: Option<String>,
    },
    /// Re-run a serialized failing instance.
    Replay { instance: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stratnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            trajectory,
            summary,
        } => simulate(&scenario::load(&scenario)?, trajectory, summary),
        Command::BestResponse { scenario, node, state } => {
            let s = scenario::load(&scenario)?;
            let x = state_or_x0(&s, state.as_deref())?;
            let n = s.game.node_count();
            if node == 0 || node > n {
                return Err(CliError::Config(format!("--node {node} is outside 1..={n}")));
            }
            let br = nbrd::solve_node_best_response(&s.game, &x, node - 1)?;
            let kkt = nbrd::verify_kkt(&s.game, &x, &br)?;
            print_json(&output::best_response(&x, &br, kkt))
        }
        Command::NrpmStep { scenario, state } => {
            let s = scenario::load(&scenario)?;
            let x = state_or_x0(&s, state.as_deref())?;
            let r = nrpm::solve(&s.game, &x, None)?;
            let od = s
                .game
                .topology()
                .od_decompose(&r.support_pattern(nrpm::SUPPORT_TOL))
                .map_err(Error::from)?;
            print_json(&output::nrpm_step(&x, &r, &od))
        }
        Command::CheckNe { scenario, state, tol } => {
            let s = scenario::load(&scenario)?;
            let x = state_or_x0(&s, state.as_deref())?;
            let report = analysis::is_nash(&s.game, &x, tol);
            print_json(&output::check_ne(&x, &report, tol))
        }
        Command::Equilibria { scenario } => {
            let s = scenario::load(&scenario)?;
            let opt = analysis::global_waterfill(s.game.profile())?;
            let report = analysis::is_nash(&s.game, &opt.x, analysis::ANALYTIC_NASH_TOL);
            print_json(&output::equilibria(&opt, &report))
        }
        Command::Validate {
            seed,
            cases,
            failures,
            mutate,
        } => validate::run(seed, cases, &failures, mutate.as_deref()),
        Command::Replay { instance } => validate::replay(&instance),
    }
}

fn state_or_x0(s: &Scenario, list: Option<&str>) -> Result<PopulationState, CliError> {
    match list {
        Some(list) => scenario::parse_state_list(list, s.game.node_count()),
        None => Ok(s.x0.clone()),
    }
}

fn simulate(s: &Scenario, trajectory: Option<PathBuf>, summary: Option<PathBuf>) -> Result<(), CliError> {
    let traj = integrator::simulate(&s.game, &s.x0, &s.config)?;
    if let Some(path) = trajectory.or_else(|| s.output.trajectory.clone()) {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        output::write_trajectory(&mut file, &traj)?;
        file.flush()?;
    }
    let report = analysis::is_nash(&s.game, traj.final_state(), analysis::SIMULATION_NASH_TOL);
    let text = output::to_json(&output::summary(&s.game, &traj, &report))?;
    match summary.or_else(|| s.output.summary.clone()) {
        Some(path) if path != Path::new("-") => std::fs::write(path, text + "\n")?,
        _ => println!("{text}"),
    }
    if traj.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "residual {} at t = {}",
            traj.final_residual(),
            traj.final_time()
        )))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", output::to_json(value)?);
    Ok(())
}
