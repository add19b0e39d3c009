//! Equilibrium and flow-property checks.

use serde::Serialize;

use crate::error::Error;
use crate::field::{field_for, DynamicsKind};
use crate::game::PopulationGame;
use crate::graph::FlowVector;
use crate::payoff::PayoffProfile;
use crate::state::PopulationState;

/// Nodes with `x_i` above this are occupied.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;
/// Tolerance for checking simulated end states.
pub const SIMULATION_NASH_TOL: f64 = 1e-6;
/// Tolerance for checking closed-form points.
pub const ANALYTIC_NASH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub is_nash: bool,
    /// Largest `u_j(x_j) - u_i(x_i)` over occupied `i` and neighbors `j`,
    /// clipped at zero.
    pub worst_violation: f64,
    pub support: Vec<usize>,
}

/// Whether no occupied node has a neighbor with strictly higher density
/// (beyond `tol`).
pub fn is_nash(game: &PopulationGame, x: &[f64], tol: f64) -> NashReport {
    let topo = game.topology();
    let profile = game.profile();
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > SUPPORT_THRESHOLD).collect();
    let mut worst: f64 = 0.0;
    for &i in &support {
        let ui = profile.u(i, x[i]);
        for &j in topo.neighbors(i) {
            worst = worst.max(profile.u(j, x[j]) - ui);
        }
    }
    NashReport {
        is_nash: worst <= tol,
        worst_violation: worst,
        support,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpcReport {
    pub holds: bool,
    /// Arcs `(i, j)` with `u_i(x_i) >= u_j(x_j)` but `delta_ij > tol`.
    pub violations: Vec<(usize, usize)>,
}

/// Strong positive correlation: no flow from a node to a neighbor whose
/// density is not higher.
pub fn check_spc(game: &PopulationGame, x: &[f64], delta: &FlowVector, tol: f64) -> SpcReport {
    let profile = game.profile();
    let violations: Vec<(usize, usize)> = game
        .topology()
        .arcs()
        .iter()
        .zip(delta.values())
        .filter(|&(&(i, j), &d)| profile.u(i, x[i]) >= profile.u(j, x[j]) && d > tol)
        .map(|(&a, _)| a)
        .collect();
    SpcReport {
        holds: violations.is_empty(),
        violations,
    }
}

/// `max_i |F_i(x)|` for the chosen dynamics.
pub fn equilibrium_residual(game: &PopulationGame, x: &PopulationState, kind: DynamicsKind) -> Result<f64, Error> {
    Ok(field_for(game, kind).evaluate(x)?.residual())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalOptimum {
    pub x: Vec<f64>,
    /// Common density on the support.
    pub level: f64,
}

/// Maximizer of `U` over the whole simplex, ignoring the graph.
///
/// Nodes enter in order of `u_i(0)`; the level drops until the next node
/// would not be worth entering.
pub fn global_waterfill(profile: &PayoffProfile) -> Result<GlobalOptimum, Error> {
    let n = profile.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| profile.u(b, 0.0).total_cmp(&profile.u(a, 0.0)).then(a.cmp(&b)));
    let mut level = f64::NAN;
    let mut members = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        members.push(i);
        level = profile.level_solve(&members, 1.0)?;
        match order.get(k + 1) {
            Some(&next) if profile.u(next, 0.0) > level => continue,
            _ => break,
        }
    }
    let mut x = vec![0.0; n];
    for &i in &members {
        x[i] = profile.u_inv(i, level);
    }
    Ok(GlobalOptimum { x, level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkTopology;
    use crate::{nrpm, ssd};

    fn game(topo: NetworkTopology, a: &[f64]) -> PopulationGame {
        PopulationGame::new(topo, PayoffProfile::water_tank(a)).unwrap()
    }

    #[test]
    fn path_continuum() {
        let g = game(NetworkTopology::path(3).unwrap(), &[0.0, 5.0, 0.0]);
        for s in [0.0, 0.3, 1.0] {
            let r = is_nash(&g, &[s, 0.0, 1.0 - s], ANALYTIC_NASH_TOL);
            assert!(r.is_nash, "sigma {s}");
            assert_eq!(r.worst_violation, 0.0);
        }
        assert!(!is_nash(&g, &[0.0, 1.0, 0.0], 1e-6).is_nash);
    }

    #[test]
    fn triangle_singleton() {
        let g = game(NetworkTopology::complete(3).unwrap(), &[0.0, 5.0, 0.0]);
        assert!(is_nash(&g, &[0.5, 0.0, 0.5], ANALYTIC_NASH_TOL).is_nash);
        let r = is_nash(&g, &[1.0, 0.0, 0.0], ANALYTIC_NASH_TOL);
        assert!(!r.is_nash);
        assert_eq!(r.worst_violation, 1.0);
        assert_eq!(r.support, vec![0]);
    }

    #[test]
    fn spc_counterexample() {
        let g = game(NetworkTopology::path(3).unwrap(), &[2.0, 2.0, 0.0]);
        let x = PopulationState::new(vec![0.2, 0.8, 0.0]).unwrap();
        let (f, _) = nrpm::field(&g, &x, None).unwrap();
        let r = check_spc(&g, &x, &f.delta, 1e-9);
        assert!(!r.holds);
        assert!(r.violations.contains(&(0, 1)));
        let s = ssd::field(&g, &x).unwrap();
        assert!(check_spc(&g, &x, &s.delta, 1e-12).holds);
    }

    #[test]
    fn residual_examples() {
        let g = game(NetworkTopology::path(3).unwrap(), &[0.0, 5.0, 0.0]);
        let ne = PopulationState::new(vec![0.3, 0.0, 0.7]).unwrap();
        for kind in DynamicsKind::ALL {
            assert!(equilibrium_residual(&g, &ne, kind).unwrap() <= 1e-10);
        }
        let x = PopulationState::vertex(3, 1);
        assert!(equilibrium_residual(&g, &x, DynamicsKind::Ssd).unwrap() > 0.0);
    }

    #[test]
    fn global_waterfill_examples() {
        let r = global_waterfill(&PayoffProfile::water_tank(&[0.0, 5.0, 0.0])).unwrap();
        assert_eq!(r.x, vec![0.5, 0.0, 0.5]);
        assert!((r.level + 0.5).abs() < 1e-12);
        let r = global_waterfill(&PayoffProfile::water_tank(&[0.0; 4])).unwrap();
        for v in r.x {
            assert!((v - 0.25).abs() < 1e-12);
        }
        let r = global_waterfill(&PayoffProfile::water_tank(&[1.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(r.x, vec![0.0, 0.5, 0.0, 0.5]);
    }
}
