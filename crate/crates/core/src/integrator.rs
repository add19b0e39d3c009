//! Fixed-step RK4 integration on the simplex.

use crate::error::Error;
use crate::field::{field_for, DynamicsKind, VectorField};
use crate::game::PopulationGame;
use crate::graph::FlowVector;
use crate::state::PopulationState;

/// Relative mass drift allowed per unit step before rescaling.
pub const DRIFT_PER_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dynamics: DynamicsKind,
    pub step: f64,
    pub t_max: f64,
    /// Stop once `max_i |F_i(x)|` drops below this. The default sits below
    /// the Nash support threshold so that emptying nodes end up unoccupied.
    pub tol_eq: f64,
    /// Negative components down to `-clamp_tol` are zeroed after a step.
    pub clamp_tol: f64,
}

impl SimulationConfig {
    pub fn new(dynamics: DynamicsKind) -> Self {
        Self {
            dynamics,
            step: 0.01,
            t_max: 200.0,
            tol_eq: 1e-10,
            clamp_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("step", self.step)?;
        positive("t_max", self.t_max)?;
        positive("tol_eq", self.tol_eq)?;
        positive("clamp_tol", self.clamp_tol)?;
        if self.t_max < self.step {
            return Err(Error::InvalidArgument(format!(
                "t_max {} is shorter than one step {}",
                self.t_max, self.step
            )));
        }
        Ok(())
    }

    fn step_count(&self) -> usize {
        (self.t_max / self.step * (1.0 + 1e-12)).floor() as usize
    }
}

/// One RK4 step from `x`, followed by clamping and rescaling onto the
/// simplex.
pub fn step_rk4(
    field: &mut dyn VectorField,
    x: &PopulationState,
    h: f64,
    clamp_tol: f64,
) -> Result<PopulationState, Error> {
    let k1 = field.evaluate(x)?;
    step_from(field, x, &k1.xdot, h, clamp_tol)
}

fn step_from(
    field: &mut dyn VectorField,
    x: &PopulationState,
    k1: &[f64],
    h: f64,
    clamp_tol: f64,
) -> Result<PopulationState, Error> {
    let stage = |k: &[f64], a: f64| PopulationState::from_raw(x.iter().zip(k).map(|(x, k)| x + a * k).collect());
    let k2 = field.evaluate(&stage(k1, h / 2.0))?.xdot;
    let k3 = field.evaluate(&stage(&k2, h / 2.0))?.xdot;
    let k4 = field.evaluate(&stage(&k3, h))?.xdot;
    let mut next: Vec<f64> = (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();

    let sum: f64 = next.iter().sum();
    let drift = (sum - 1.0).abs();
    if drift > (DRIFT_PER_STEP * h).max(64.0 * f64::EPSILON) {
        return Err(Error::MassDrift(drift));
    }
    for (index, v) in next.iter_mut().enumerate() {
        if *v < -clamp_tol {
            return Err(Error::StepTooLarge { index, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= sum);
    Ok(PopulationState::from_raw(next))
}

/// Samples recorded at every step, the final state included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    pub utilities: Vec<f64>,
    /// `max_i |F_i(x)|` at each recorded state.
    pub residuals: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub converged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &PopulationState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial state")
    }

    pub fn final_residual(&self) -> f64 {
        *self
            .residuals
            .last()
            .expect("trajectory has at least the initial state")
    }
}

/// Integrates from `x0` until the residual drops below `tol_eq` or `t_max`
/// is reached.
pub fn simulate(game: &PopulationGame, x0: &PopulationState, config: &SimulationConfig) -> Result<Trajectory, Error> {
    let mut field = field_for(game, config.dynamics);
    simulate_with_field(game, field.as_mut(), x0, config)
}

/// [`simulate`] with a caller-supplied field; `config.dynamics` is ignored.
pub fn simulate_with_field(
    game: &PopulationGame,
    field: &mut dyn VectorField,
    x0: &PopulationState,
    config: &SimulationConfig,
) -> Result<Trajectory, Error> {
    config.validate()?;
    game.check_state(x0)?;
    let steps = config.step_count();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        utilities: Vec::new(),
        residuals: Vec::new(),
        dissipation: Vec::new(),
        converged: false,
    };
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let value = field.evaluate(&x)?;
        let residual = value.residual();
        traj.times.push(k as f64 * config.step);
        traj.utilities.push(game.social_utility(&x));
        traj.residuals.push(residual);
        traj.dissipation.push(dissipation(game, &x, &value.delta));
        traj.states.push(x.clone());
        if residual < config.tol_eq {
            traj.converged = true;
            break;
        }
        if k == steps {
            break;
        }
        x = step_from(field, &x, &value.xdot, config.step, config.clamp_tol)?;
        k += 1;
    }
    Ok(traj)
}

/// `sum_{(i,j)} delta_ij (u_i(x_i) - u_j(x_j))`, the time derivative of
/// `-U` along a flow-balanced field.
pub fn dissipation(game: &PopulationGame, x: &[f64], delta: &FlowVector) -> f64 {
    let profile = game.profile();
    game.topology()
        .arcs()
        .iter()
        .zip(delta.values())
        .filter(|(_, &d)| d != 0.0)
        .fold(0.0, |acc, (&(i, j), &d)| {
            acc + d * (profile.u(i, x[i]) - profile.u(j, x[j]))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SsdField;
    use crate::graph::NetworkTopology;
    use crate::payoff::PayoffProfile;
    use crate::ssd;

    fn path() -> PopulationGame {
        PopulationGame::new(
            NetworkTopology::path(3).unwrap(),
            PayoffProfile::water_tank(&[0.0, 5.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = SimulationConfig::new(DynamicsKind::Ssd);
        assert!(c.validate().is_ok());
        c.t_max = 0.001;
        assert!(c.validate().is_err());
        c.t_max = 1.0;
        c.tol_eq = 0.0;
        assert!(c.validate().is_err());
        c.tol_eq = 1e-8;
        c.step = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn step_count_tolerates_rounding() {
        let mut c = SimulationConfig::new(DynamicsKind::Ssd);
        assert_eq!(c.step_count(), 20_000);
        c.t_max = 0.01;
        assert_eq!(c.step_count(), 1);
        c.t_max = 0.3;
        c.step = 0.1;
        assert_eq!(c.step_count(), 3);
    }

    #[test]
    fn nash_state_is_fixed() {
        let g = path();
        let x = PopulationState::new(vec![1.0, 0.0, 0.0]).unwrap();
        let y = step_rk4(&mut SsdField(&g), &x, 0.01, 1e-10).unwrap();
        assert_eq!(y, x);
        let t = simulate(&g, &x, &SimulationConfig::new(DynamicsKind::Nbrd)).unwrap();
        assert!(t.converged);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn symmetric_step() {
        let g = path();
        let y = step_rk4(&mut SsdField(&g), &PopulationState::vertex(3, 1), 0.01, 1e-10).unwrap();
        assert_eq!(y[0], y[2]);
        assert!(y[0] > 0.0 && y[1] < 1.0);
        assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let g = path();
        let r = step_rk4(&mut SsdField(&g), &PopulationState::vertex(3, 1), 5.0, 1e-10);
        assert!(matches!(r, Err(Error::StepTooLarge { index: 1, .. })));
    }

    #[test]
    fn dissipation_signs() {
        let g = path();
        let x = PopulationState::vertex(3, 1);
        let f = ssd::field(&g, &x).unwrap();
        assert!(dissipation(&g, &x, &f.delta) < 0.0);
        let ne = [0.5, 0.0, 0.5];
        assert_eq!(dissipation(&g, &ne, &FlowVector::zeros(4)), 0.0);
    }

    #[test]
    fn short_horizon_does_not_converge() {
        let g = path();
        let mut c = SimulationConfig::new(DynamicsKind::Ssd);
        c.t_max = 0.01;
        let t = simulate(&g, &PopulationState::vertex(3, 1), &c).unwrap();
        assert!(!t.converged);
        assert_eq!(t.times, vec![0.0, 0.01]);
    }
}
