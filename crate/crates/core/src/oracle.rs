//! Slow reference computations used to cross-check the fast solvers.

use crate::error::Error;
use crate::game::PopulationGame;
use crate::simplex::project_scaled_simplex;
use crate::state::PopulationState;

const SIMPSON_MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute error `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Smith outflow `int_0^{x_i} max(0, u_j(x_j) - u_i(a)) da` by quadrature.
pub fn ssd_outflow_quadrature(game: &PopulationGame, x: &[f64], i: usize, j: usize, tol: f64) -> f64 {
    let profile = game.profile();
    let target = profile.u(j, x[j]);
    let integrand = |a: f64| (target - profile.u(i, a)).max(0.0);
    adaptive_simpson(&integrand, 0.0, x[i].max(0.0), tol)
}

/// Best response of node `i` by projected gradient ascent from `start`
/// (one entry per member of the closed neighborhood, projected onto the
/// feasible set first). Returns `(j, d_ij)` sorted by `j`.
pub fn best_response_projected_gradient(
    game: &PopulationGame,
    x: &PopulationState,
    i: usize,
    start: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<Vec<(usize, f64)>, Error> {
    let members = game.topology().closed_neighborhood(i);
    if start.len() != members.len() {
        return Err(Error::InvalidArgument(format!(
            "start has {} entries, node {} has {} candidates",
            start.len(),
            i + 1,
            members.len()
        )));
    }
    let profile = game.profile();
    let base: Vec<f64> = members.iter().map(|&j| if j == i { 0.0 } else { x[j] }).collect();
    let slope = members
        .iter()
        .map(|&j| profile.function(j).max_slope())
        .fold(0.0, f64::max);
    let step = 1.0 / slope;
    let mass = x[i].max(0.0);
    let mut d = start.to_vec();
    project_scaled_simplex(&mut d, mass);
    let mut next = vec![0.0; d.len()];
    for _ in 0..max_iterations {
        for k in 0..d.len() {
            next[k] = d[k] + step * profile.u(members[k], base[k] + d[k]);
        }
        project_scaled_simplex(&mut next, mass);
        let moved = next.iter().zip(&d).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut d, &mut next);
        if moved <= tol {
            return Ok(members.into_iter().zip(d).collect());
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkTopology;
    use crate::payoff::PayoffProfile;

    #[test]
    fn simpson_polynomials_and_kinks() {
        let cubic = |t: f64| t * t * t;
        assert!((adaptive_simpson(&cubic, 0.0, 2.0, 1e-12) - 4.0).abs() < 1e-12);
        let kink = |t: f64| (t - 0.3).max(0.0);
        assert!((adaptive_simpson(&kink, 0.0, 1.0, 1e-13) - 0.245).abs() < 1e-11);
        assert_eq!(adaptive_simpson(&cubic, 1.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn two_node_outflow() {
        let g = PopulationGame::new(
            NetworkTopology::path(2).unwrap(),
            PayoffProfile::water_tank(&[2.0, 0.0]),
        )
        .unwrap();
        let q = ssd_outflow_quadrature(&g, &[1.0, 0.0], 0, 1, 1e-13);
        assert!((q - 2.5).abs() < 1e-10);
    }

    #[test]
    fn projected_gradient_triangle() {
        let g = PopulationGame::new(
            NetworkTopology::complete(3).unwrap(),
            PayoffProfile::water_tank(&[0.0; 3]),
        )
        .unwrap();
        let x = PopulationState::vertex(3, 0);
        let d = best_response_projected_gradient(&g, &x, 0, &[1.0, 0.0, 0.0], 1e-14, 100_000).unwrap();
        for (_, v) in d {
            assert!((v - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(best_response_projected_gradient(&g, &x, 0, &[1.0], 1e-14, 10).is_err());
    }
}
