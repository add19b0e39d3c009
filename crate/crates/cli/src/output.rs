//! JSON documents and the trajectory CSV. Node labels are 1-based;
//! numbers use the shortest representation that round-trips.

use std::io::{self, Write};

use serde::Serialize;
use stratnet::analysis::GlobalOptimum;
use stratnet::{BestResponse, NashReport, OdDecomposition, PopulationGame, PopulationState, Reallocation, Trajectory};

use crate::CliError;

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(io::Error::other(e)))
}

fn labels(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().map(|i| i + 1).collect()
}

/// Header `t,x1,..,xN,U,residual,dissipation`, then one row per step.
pub fn write_trajectory<W: Write>(out: &mut W, traj: &Trajectory) -> io::Result<()> {
    let n = traj.states.first().map_or(0, |x| x.len());
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",U,residual,dissipation\n");
    out.write_all(header.as_bytes())?;
    let mut buf = ryu::Buffer::new();
    let mut line = String::new();
    for k in 0..traj.len() {
        line.clear();
        line.push_str(buf.format(traj.times[k]));
        for &v in traj.states[k].iter() {
            line.push(',');
            line.push_str(buf.format(v));
        }
        for v in [traj.utilities[k], traj.residuals[k], traj.dissipation[k]] {
            line.push(',');
            line.push_str(buf.format(v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct NashJson {
    pub is_nash: bool,
    pub worst_violation: f64,
}

#[derive(Serialize)]
pub struct Summary {
    pub converged: bool,
    pub t_final: f64,
    pub x_final: Vec<f64>,
    #[serde(rename = "U_final")]
    pub u_final: f64,
    pub nash: NashJson,
}

pub fn summary(game: &PopulationGame, traj: &Trajectory, report: &NashReport) -> Summary {
    let x = traj.final_state();
    Summary {
        converged: traj.converged,
        t_final: traj.final_time(),
        x_final: x.to_vec(),
        u_final: game.social_utility(x),
        nash: NashJson {
            is_nash: report.is_nash,
            worst_violation: report.worst_violation,
        },
    }
}

#[derive(Serialize)]
pub struct Allocation {
    pub to: usize,
    pub d: f64,
}

#[derive(Serialize)]
pub struct BestResponseJson {
    pub node: usize,
    pub state: Vec<f64>,
    pub level: Option<f64>,
    pub allocations: Vec<Allocation>,
    pub support: Vec<usize>,
    pub kkt_residual: f64,
}

pub fn best_response(x: &PopulationState, br: &BestResponse, kkt: f64) -> BestResponseJson {
    BestResponseJson {
        node: br.node + 1,
        state: x.to_vec(),
        level: br.level,
        allocations: br
            .allocations
            .iter()
            .map(|&(j, d)| Allocation { to: j + 1, d })
            .collect(),
        support: labels(&br.support),
        kkt_residual: kkt,
    }
}

#[derive(Serialize)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub d: f64,
}

#[derive(Serialize)]
pub struct Component {
    pub origins: Vec<usize>,
    pub destinations: Vec<usize>,
}

#[derive(Serialize)]
pub struct NrpmStepJson {
    pub state: Vec<f64>,
    pub z: Vec<f64>,
    /// Positive flows, self pairs included.
    pub d: Vec<Flow>,
    pub od_components: Vec<Component>,
    pub uncovered_destinations: Vec<usize>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

pub fn nrpm_step(x: &PopulationState, r: &Reallocation, od: &OdDecomposition) -> NrpmStepJson {
    NrpmStepJson {
        state: x.to_vec(),
        z: r.z.clone(),
        d: r.entries()
            .filter(|&(_, d)| d > 0.0)
            .map(|((i, j), d)| Flow {
                from: i + 1,
                to: j + 1,
                d,
            })
            .collect(),
        od_components: od
            .components
            .iter()
            .map(|c| Component {
                origins: labels(&c.origins),
                destinations: labels(&c.destinations),
            })
            .collect(),
        uncovered_destinations: labels(&od.uncovered_destinations),
        objective: r.objective,
        kkt_residual: r.kkt_residual,
        iterations: r.iterations,
    }
}

#[derive(Serialize)]
pub struct CheckNeJson {
    pub state: Vec<f64>,
    pub tol: f64,
    pub is_nash: bool,
    pub worst_violation: f64,
    pub support: Vec<usize>,
}

pub fn check_ne(x: &PopulationState, report: &NashReport, tol: f64) -> CheckNeJson {
    CheckNeJson {
        state: x.to_vec(),
        tol,
        is_nash: report.is_nash,
        worst_violation: report.worst_violation,
        support: labels(&report.support),
    }
}

#[derive(Serialize)]
pub struct EquilibriaJson {
    pub x: Vec<f64>,
    pub level: f64,
    pub nash: NashReportJson,
}

#[derive(Serialize)]
pub struct NashReportJson {
    pub is_nash: bool,
    pub worst_violation: f64,
    pub support: Vec<usize>,
}

pub fn equilibria(opt: &GlobalOptimum, report: &NashReport) -> EquilibriaJson {
    EquilibriaJson {
        x: opt.x.clone(),
        level: opt.level,
        nash: NashReportJson {
            is_nash: report.is_nash,
            worst_violation: report.worst_violation,
            support: labels(&report.support),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stratnet::{integrator, DynamicsKind, NetworkTopology, PayoffProfile, SimulationConfig};

    #[test]
    fn csv_layout() {
        let game = PopulationGame::new(
            NetworkTopology::path(3).unwrap(),
            PayoffProfile::water_tank(&[0.0, 5.0, 0.0]),
        )
        .unwrap();
        let x = PopulationState::new(vec![1.0, 0.0, 0.0]).unwrap();
        let traj = integrator::simulate(&game, &x, &SimulationConfig::new(DynamicsKind::Ssd)).unwrap();
        let mut out = Vec::new();
        write_trajectory(&mut out, &traj).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,x1,x2,x3,U,residual,dissipation\n0.0,1.0,0.0,0.0,-0.5,0.0,0.0\n"
        );
    }

    #[test]
    fn summary_keys() {
        let s = Summary {
            converged: true,
            t_final: 0.5,
            x_final: vec![0.1, 0.9],
            u_final: -1.0,
            nash: NashJson {
                is_nash: false,
                worst_violation: 0.1 + 0.2,
            },
        };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"converged":true,"t_final":0.5,"x_final":[0.1,0.9],"U_final":-1.0,"nash":{"is_nash":false,"worst_violation":0.30000000000000004}}"#
        );
    }
}
