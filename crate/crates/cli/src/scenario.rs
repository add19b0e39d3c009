//! Scenario files.
//!
//! ```json
//! {
//!   "graph": { "nodes": 3, "edges": [[1, 2], [2, 3]] },
//!   "payoffs": [
//!     { "type": "quadratic", "a": 0, "c": 1 },
//!     { "type": "quadratic", "a": 5, "c": 1 },
//!     { "type": "log", "w": 1, "s": 0.5 }
//!   ],
//!   "dynamics": "nbrd",
//!   "x0": [0, 1, 0],
//!   "integrator": { "h": 0.01, "t_max": 200, "tol_eq": 1e-10, "clamp_tol": 1e-10 },
//!   "output": { "trajectory": "traj.csv", "summary": "summary.json" },
//!   "seed": 42
//! }
//! ```
//!
//! Node labels are 1-based. `x0` may be omitted or set to `"random"`, in
//! which case it is drawn from `seed`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stratnet::{
    random, DynamicsKind, NetworkTopology, PayoffFunction, PayoffProfile, PopulationGame, PopulationState,
    SimulationConfig, SIMPLEX_TOL,
};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    graph: RawGraph,
    payoffs: Vec<PayoffFunction>,
    #[serde(default = "default_dynamics")]
    dynamics: DynamicsKind,
    #[serde(default)]
    x0: Option<RawState>,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    output: Output,
    #[serde(default)]
    seed: u64,
}

fn default_dynamics() -> DynamicsKind {
    DynamicsKind::Ssd
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: usize,
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawState {
    Values(Vec<f64>),
    Keyword(StateKeyword),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StateKeyword {
    Random,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawIntegrator {
    h: f64,
    t_max: f64,
    tol_eq: f64,
    clamp_tol: f64,
}

impl Default for RawIntegrator {
    fn default() -> Self {
        let c = SimulationConfig::new(DynamicsKind::Ssd);
        Self {
            h: c.step,
            t_max: c.t_max,
            tol_eq: c.tol_eq,
            clamp_tol: c.clamp_tol,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub trajectory: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub game: PopulationGame,
    pub x0: PopulationState,
    pub config: SimulationConfig,
    pub output: Output,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{}{}: {}", path, node_hint(&path), e.inner()))
    })?;
    build(raw)
}

/// `payoffs[k]...` paths also name the 1-based node.
fn node_hint(path: &str) -> String {
    path.strip_prefix("payoffs[")
        .and_then(|rest| rest.split(']').next())
        .and_then(|k| k.parse::<usize>().ok())
        .map(|k| format!(" (node {})", k + 1))
        .unwrap_or_default()
}

fn build(raw: RawScenario) -> Result<Scenario, CliError> {
    let edges: Vec<(usize, usize)> = raw.graph.edges.iter().map(|e| (e[0], e[1])).collect();
    let topo = NetworkTopology::from_one_based(raw.graph.nodes, &edges)
        .map_err(|e| CliError::Config(format!("graph: {e}")))?;
    let n = topo.node_count();
    if raw.payoffs.len() != n {
        return Err(CliError::Config(format!(
            "payoffs: {} entries for {n} nodes",
            raw.payoffs.len()
        )));
    }
    let game = PopulationGame::new(topo, PayoffProfile::new(raw.payoffs))
        .map_err(|e| CliError::Config(format!("payoffs: {e}")))?;
    let x0 = match raw.x0 {
        None | Some(RawState::Keyword(StateKeyword::Random)) => {
            random::state(&mut random::instance_rng(raw.seed, 0), n)
        }
        Some(RawState::Values(v)) => parse_state(v, n).map_err(|e| CliError::Config(format!("x0: {e}")))?,
    };
    let config = SimulationConfig {
        dynamics: raw.dynamics,
        step: raw.integrator.h,
        t_max: raw.integrator.t_max,
        tol_eq: raw.integrator.tol_eq,
        clamp_tol: raw.integrator.clamp_tol,
    };
    config
        .validate()
        .map_err(|e| CliError::Config(format!("integrator: {e}")))?;
    Ok(Scenario {
        game,
        x0,
        config,
        output: raw.output,
    })
}

/// Validates a state vector: right length, nonnegative, unit sum within
/// the simplex tolerance; it is then renormalized.
pub fn parse_state(v: Vec<f64>, n: usize) -> Result<PopulationState, String> {
    if v.len() != n {
        return Err(format!("{} components for {n} nodes", v.len()));
    }
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
        return Err(format!("component {} is {x}", i + 1));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(format!("components sum to {sum}, expected 1"));
    }
    PopulationState::normalized(v).map_err(|e| e.to_string())
}

/// Parses a comma-separated state such as `0.5,0,0.5`.
pub fn parse_state_list(list: &str, n: usize) -> Result<PopulationState, CliError> {
    let values = list
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("--state: {e}")))?;
    parse_state(values, n).map_err(|e| CliError::Config(format!("--state: {e}")))
}
