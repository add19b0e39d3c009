//! Stratified Smith dynamics.
//!
//! Agents in stratum `[y]` of node `i` move to neighbor `j` at a rate
//! proportional to `max(0, u_j(x_j) - u_i(y))`. Integrating over the strata
//! `[0, x_i]` gives the closed-form outflow
//!
//! ```text
//! delta_ij = max(0, u_j(x_j) (x_i - y_ij) - (p_i(x_i) - p_i(y_ij)))
//! ```
//!
//! where `y_ij` is `u_i^{-1}(u_j(x_j))` clamped to `[0, x_i]`: only strata
//! above `y_ij` earn less than the neighbor's newest stratum.

use crate::error::Error;
use crate::field::FieldValue;
use crate::game::PopulationGame;
use crate::graph::FlowVector;
use crate::state::PopulationState;

/// Outflow along arc `(from, to)`.
pub fn outflow(game: &PopulationGame, x: &PopulationState, from: usize, to: usize) -> Result<f64, Error> {
    game.check_state(x)?;
    if !game.topology().has_arc(from, to) {
        return Err(Error::InvalidArgument(format!(
            "({}, {}) is not an arc",
            from + 1,
            to + 1
        )));
    }
    Ok(arc_outflow(game, x, from, to))
}

pub(crate) fn arc_outflow(game: &PopulationGame, x: &[f64], i: usize, j: usize) -> f64 {
    let xi = x[i];
    if xi <= 0.0 {
        return 0.0;
    }
    let profile = game.profile();
    let target = profile.u(j, x[j]);
    let y = profile.u_inv(i, target).min(xi);
    let gain = target * (xi - y) - (profile.p(i, xi) - profile.p(i, y));
    gain.max(0.0)
}

/// Outflows on every arc and the resulting `xdot`.
pub fn field(game: &PopulationGame, x: &PopulationState) -> Result<FieldValue, Error> {
    game.check_state(x)?;
    let topo = game.topology();
    let delta: Vec<f64> = topo.arcs().iter().map(|&(i, j)| arc_outflow(game, x, i, j)).collect();
    let delta = FlowVector::from_raw(delta);
    let xdot = topo.apply_incidence(&delta)?;
    Ok(FieldValue { delta, xdot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkTopology;
    use crate::payoff::PayoffProfile;

    fn game(topo: NetworkTopology, a: &[f64]) -> PopulationGame {
        PopulationGame::new(topo, PayoffProfile::water_tank(a)).unwrap()
    }

    fn state(x: &[f64]) -> PopulationState {
        PopulationState::new(x.to_vec()).unwrap()
    }

    #[test]
    fn two_node_closed_form() {
        let g = game(NetworkTopology::path(2).unwrap(), &[2.0, 0.0]);
        // y_12 = 0, delta = 0 * 1 - (p_1(1) - p_1(0)) = 2.5
        let d = outflow(&g, &state(&[1.0, 0.0]), 0, 1).unwrap();
        assert!((d - 2.5).abs() < 1e-14);
        assert_eq!(outflow(&g, &state(&[1.0, 0.0]), 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_state_has_no_flow() {
        let g = game(NetworkTopology::path(2).unwrap(), &[0.0, 0.0]);
        let x = state(&[0.5, 0.5]);
        assert_eq!(outflow(&g, &x, 0, 1).unwrap(), 0.0);
        assert_eq!(outflow(&g, &x, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn empty_node_sends_nothing() {
        let g = game(NetworkTopology::complete(3).unwrap(), &[0.0, 5.0, 0.0]);
        let x = state(&[0.0, 0.2, 0.8]);
        assert_eq!(outflow(&g, &x, 0, 1).unwrap(), 0.0);
        assert_eq!(outflow(&g, &x, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_arcs() {
        let g = game(NetworkTopology::path(3).unwrap(), &[0.0, 5.0, 0.0]);
        assert!(outflow(&g, &state(&[1.0, 0.0, 0.0]), 0, 2).is_err());
    }

    #[test]
    fn field_examples() {
        let tri = game(NetworkTopology::complete(3).unwrap(), &[0.0, 5.0, 0.0]);
        let f = field(&tri, &state(&[0.5, 0.0, 0.5])).unwrap();
        assert_eq!(f.delta.max(), 0.0);
        assert_eq!(f.residual(), 0.0);

        let path = game(NetworkTopology::path(3).unwrap(), &[0.0, 5.0, 0.0]);
        let f = field(&path, &state(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(f.delta.max(), 0.0);

        let f = field(&path, &state(&[0.0, 1.0, 0.0])).unwrap();
        let t = path.topology();
        let d21 = f.delta.values()[t.arc_index(1, 0).unwrap()];
        let d23 = f.delta.values()[t.arc_index(1, 2).unwrap()];
        assert!(d21 > 0.0);
        assert_eq!(d21, d23);
        assert_eq!(f.delta.values()[t.arc_index(0, 1).unwrap()], 0.0);
        assert_eq!(f.delta.values()[t.arc_index(2, 1).unwrap()], 0.0);
        assert_eq!(f.xdot, vec![d21, -2.0 * d21, d21]);
    }
}
