use stratnet::analysis::{equilibrium_residual, global_waterfill, is_nash, ANALYTIC_NASH_TOL, SIMULATION_NASH_TOL};
use stratnet::integrator::{self, dissipation, simulate, step_rk4};
use stratnet::validation::check_trajectory;
use stratnet::{
    field_for, random, DynamicsKind, NetworkTopology, PayoffProfile, PopulationGame, PopulationState, SimulationConfig,
};

fn game(topo: NetworkTopology, a: &[f64]) -> PopulationGame {
    PopulationGame::new(topo, PayoffProfile::water_tank(a)).unwrap()
}

fn state(x: &[f64]) -> PopulationState {
    PopulationState::new(x.to_vec()).unwrap()
}

fn path_tank() -> PopulationGame {
    game(NetworkTopology::path(3).unwrap(), &[0.0, 5.0, 0.0])
}

fn triangle_tank() -> PopulationGame {
    game(NetworkTopology::complete(3).unwrap(), &[0.0, 5.0, 0.0])
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn path_centre_spreads_to_both_ends() {
    let g = path_tank();
    for kind in DynamicsKind::ALL {
        let traj = simulate(&g, &state(&[0.0, 1.0, 0.0]), &SimulationConfig::new(kind)).unwrap();
        let x = traj.final_state();
        assert!(distance(x.as_slice(), &[0.5, 0.0, 0.5]) <= 1e-4, "{kind}: {x:?}");
        assert!(is_nash(&g, x.as_slice(), SIMULATION_NASH_TOL).is_nash, "{kind}");
        check_trajectory(kind, &traj).unwrap();
    }
}

#[test]
fn nash_start_does_not_move() {
    let g = path_tank();
    for kind in DynamicsKind::ALL {
        let traj = simulate(&g, &state(&[1.0, 0.0, 0.0]), &SimulationConfig::new(kind)).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.len(), 1, "{kind}");
        assert_eq!(traj.final_state().as_slice(), &[1.0, 0.0, 0.0]);
    }
}

#[test]
fn rk4_step_keeps_symmetry() {
    let g = path_tank();
    let mut field = field_for(&g, DynamicsKind::Ssd);
    let x = step_rk4(field.as_mut(), &state(&[0.0, 1.0, 0.0]), 0.01, 1e-10).unwrap();
    assert_eq!(x[0], x[2]);
    assert!(x[0] > 0.0 && x[1] < 1.0);
    assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
}

#[test]
fn triangle_reaches_the_single_nash_point_under_best_response_dynamics() {
    let g = triangle_tank();
    let mut rng = random::instance_rng(3, 0);
    for _ in 0..5 {
        let x0 = random::state(&mut rng, 3);
        for kind in [DynamicsKind::Nbrd, DynamicsKind::Nrpm] {
            let traj = simulate(&g, &x0, &SimulationConfig::new(kind)).unwrap();
            assert!(traj.converged, "{kind}");
            assert!(distance(traj.final_state().as_slice(), &[0.5, 0.0, 0.5]) <= 1e-4);
        }
    }
}

#[test]
fn triangle_under_smith_dynamics_closes_in_slowly() {
    let g = triangle_tank();
    let x0 = state(&[0.6, 0.1, 0.3]);
    let traj = simulate(&g, &x0, &SimulationConfig::new(DynamicsKind::Ssd)).unwrap();
    check_trajectory(DynamicsKind::Ssd, &traj).unwrap();
    let x = traj.final_state();
    assert!(x[1] < 1e-12);
    let gap = (x[0] - x[2]).abs();
    assert!(gap < 1e-2, "{x:?}");
    assert!(traj.final_residual() < 1e-4);
    let half = traj.len() / 2;
    assert!(traj.residuals[half] > traj.final_residual());
}

#[test]
fn utility_climbs_and_dissipation_is_nonpositive() {
    for case in 0..6 {
        let mut rng = random::instance_rng(11, case);
        let topo = random::connected_graph(&mut rng, 5, 0.4);
        let g = PopulationGame::new(topo, random::mixed_profile(&mut rng, 5)).unwrap();
        let x0 = random::state(&mut rng, 5);
        for kind in DynamicsKind::ALL {
            let mut config = SimulationConfig::new(kind);
            config.t_max = 20.0;
            let traj = simulate(&g, &x0, &config).unwrap();
            check_trajectory(kind, &traj).unwrap_or_else(|e| panic!("case {case} {kind}: {e}"));
        }
    }
}

#[test]
fn smith_dissipation_is_negative_off_equilibrium() {
    let g = path_tank();
    let x = [0.0, 1.0, 0.0];
    let f = field_for(&g, DynamicsKind::Ssd).evaluate(&state(&x)).unwrap();
    assert!(dissipation(&g, &x, &f.delta) < 0.0);
    let nash = [0.5, 0.0, 0.5];
    let f = field_for(&g, DynamicsKind::Ssd).evaluate(&state(&nash)).unwrap();
    assert_eq!(dissipation(&g, &nash, &f.delta), 0.0);
}

#[test]
fn residual_examples() {
    let g = triangle_tank();
    for kind in DynamicsKind::ALL {
        assert!(equilibrium_residual(&g, &state(&[0.5, 0.0, 0.5]), kind).unwrap() <= 1e-10);
    }
    assert!(equilibrium_residual(&path_tank(), &state(&[0.0, 1.0, 0.0]), DynamicsKind::Ssd).unwrap() > 0.0);
}

#[test]
fn nash_sets_of_path_and_triangle() {
    let path = path_tank();
    let triangle = triangle_tank();
    for k in 0..=10 {
        let s = k as f64 / 10.0;
        let x = [s, 0.0, 1.0 - s];
        assert!(is_nash(&path, &x, ANALYTIC_NASH_TOL).is_nash, "{x:?}");
        assert_eq!(is_nash(&triangle, &x, ANALYTIC_NASH_TOL).is_nash, k == 5, "{x:?}");
    }
    let report = is_nash(&triangle, &[1.0, 0.0, 0.0], ANALYTIC_NASH_TOL);
    assert!(!report.is_nash);
    assert_eq!(report.worst_violation, 1.0);
    assert!(!is_nash(&path, &[0.0, 1.0, 0.0], ANALYTIC_NASH_TOL).is_nash);
}

#[test]
fn global_optimum_examples() {
    let opt = global_waterfill(&PayoffProfile::water_tank(&[0.0, 5.0, 0.0])).unwrap();
    assert!(distance(&opt.x, &[0.5, 0.0, 0.5]) <= 1e-12);
    assert!((opt.level + 0.5).abs() <= 1e-12);
    let opt = global_waterfill(&PayoffProfile::water_tank(&[1.0, 0.0, 1.0, 0.0])).unwrap();
    assert!(distance(&opt.x, &[0.0, 0.5, 0.0, 0.5]) <= 1e-12);
    let opt = global_waterfill(&PayoffProfile::water_tank(&[0.7; 6])).unwrap();
    assert!(opt.x.iter().all(|v| (v - 1.0 / 6.0).abs() <= 1e-12));
}

#[test]
fn global_optimum_is_nash_on_any_graph() {
    for case in 0..20 {
        let mut rng = random::instance_rng(5, case);
        let profile = random::mixed_profile(&mut rng, 6);
        let opt = global_waterfill(&profile).unwrap();
        let topo = random::connected_graph(&mut rng, 6, 0.3);
        let g = PopulationGame::new(topo, profile).unwrap();
        assert!(is_nash(&g, &opt.x, ANALYTIC_NASH_TOL).is_nash, "case {case}");
        for _ in 0..50 {
            let y = random::state(&mut rng, 6);
            assert!(g.social_utility(y.as_slice()) <= g.social_utility(&opt.x) + 1e-12);
        }
    }
}

#[test]
fn config_defaults() {
    let c = SimulationConfig::new(DynamicsKind::Nbrd);
    assert_eq!((c.step, c.t_max, c.tol_eq, c.clamp_tol), (0.01, 200.0, 1e-10, 1e-10));
    assert_eq!(integrator::DRIFT_PER_STEP, 1e-12);
}
