//! Nodal best-response dynamics.
//!
//! The mass `x_i` at node `i` reallocates itself over `i` and its neighbors
//! to maximize its own cumulative payoff, assuming every other node stays
//! put:
//!
//! ```text
//! max  sum_{j in N(i)} [p_j(x_j + d_ij) - p_j(x_j)] + [p_i(d_ii) - p_i(0)]
//! s.t. d_ii + sum_j d_ij = x_i,  d >= 0
//! ```
//!
//! The optimizer equalizes densities at a common level `eta_i` over its
//! support, and every excluded candidate enters at or below that level. The
//! solver finds it by waterfilling: candidates are admitted in order of
//! their entry level (`u_j(x_j)` for neighbors, `u_i(0)` for the node
//! itself) until the next entry no longer exceeds the water level.

use serde::Serialize;

use crate::error::Error;
use crate::field::FieldValue;
use crate::game::PopulationGame;
use crate::graph::FlowVector;
use crate::state::PopulationState;

/// Residual above which a best response is rejected.
pub const KKT_TOL: f64 = 1e-8;
/// Slack on the mass balance of a best response.
pub const MASS_TOL: f64 = 1e-10;
/// Largest closed neighborhood the support enumeration accepts.
pub const ENUMERATION_LIMIT: usize = 20;

/// Optimal reallocation of one node's mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub node: usize,
    /// `(j, d_ij)` over the closed neighborhood of `node`, sorted by `j`.
    pub allocations: Vec<(usize, f64)>,
    /// Common density level; `None` when the node is empty.
    pub level: Option<f64>,
    /// Nodes receiving positive mass.
    pub support: Vec<usize>,
}

impl BestResponse {
    fn empty(game: &PopulationGame, node: usize) -> Self {
        Self {
            node,
            allocations: game
                .topology()
                .closed_neighborhood(node)
                .into_iter()
                .map(|j| (j, 0.0))
                .collect(),
            level: None,
            support: Vec::new(),
        }
    }

    pub fn allocation(&self, j: usize) -> Option<f64> {
        self.allocations.iter().find(|&&(k, _)| k == j).map(|&(_, d)| d)
    }

    /// Mass the node keeps, `d_ii`.
    pub fn retained(&self) -> f64 {
        self.allocation(self.node).unwrap_or(0.0)
    }
}

/// Admission rule of the waterfilling loop.
///
/// `Inverted` flips the stopping comparison; it exists only so that the
/// validation harness can demonstrate that KKT verification catches a
/// broken solver.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    #[default]
    Standard,
    Inverted,
}

/// Entry levels of the candidates, sorted descending with ties broken by
/// node index.
fn ranked_candidates(game: &PopulationGame, x: &[f64], i: usize) -> Vec<(usize, f64)> {
    let mut cands: Vec<(usize, f64)> = game
        .topology()
        .closed_neighborhood(i)
        .into_iter()
        .map(|j| (j, entry_level(game, x, i, j)))
        .collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cands
}

fn entry_level(game: &PopulationGame, x: &[f64], i: usize, j: usize) -> f64 {
    if j == i {
        game.profile().u(i, 0.0)
    } else {
        game.profile().u(j, x[j])
    }
}

/// Allocations for a given support and level: neighbors fill up to
/// `u_j^{-1}(eta)`, the node keeps `u_i^{-1}(eta)`.
fn allocations_for(game: &PopulationGame, x: &[f64], i: usize, members: &[usize], eta: f64) -> Vec<(usize, f64)> {
    let profile = game.profile();
    game.topology()
        .closed_neighborhood(i)
        .into_iter()
        .map(|j| {
            if !members.contains(&j) {
                return (j, 0.0);
            }
            let base = if j == i { 0.0 } else { x[j] };
            (j, (profile.u_inv(j, eta) - base).max(0.0))
        })
        .collect()
}

fn support_of(allocations: &[(usize, f64)]) -> Vec<usize> {
    allocations.iter().filter(|&&(_, d)| d > 0.0).map(|&(j, _)| j).collect()
}

/// Waterfilling best response of node `i`, verified against its KKT system.
pub fn solve_node_best_response(game: &PopulationGame, x: &PopulationState, i: usize) -> Result<BestResponse, Error> {
    solve_with_rule(game, x, i, StopRule::Standard)
}

#[doc(hidden)]
pub fn solve_with_rule(
    game: &PopulationGame,
    x: &PopulationState,
    i: usize,
    rule: StopRule,
) -> Result<BestResponse, Error> {
    game.check_state(x)?;
    if i >= game.node_count() {
        return Err(Error::InvalidArgument(format!("node {} does not exist", i + 1)));
    }
    let br = waterfill(game, x, i, rule)?;
    let residual = verify_kkt(game, x, &br)?;
    if residual > KKT_TOL {
        return Err(Error::KktFailure { node: i + 1, residual });
    }
    Ok(br)
}

fn waterfill(game: &PopulationGame, x: &[f64], i: usize, rule: StopRule) -> Result<BestResponse, Error> {
    if x[i] <= 0.0 {
        return Ok(BestResponse::empty(game, i));
    }
    let cands = ranked_candidates(game, x, i);
    let mut members = Vec::with_capacity(cands.len());
    let mut mass = x[i];
    let mut eta = f64::NAN;
    for (k, &(j, _)) in cands.iter().enumerate() {
        members.push(j);
        if j != i {
            mass += x[j];
        }
        eta = game.profile().level_solve(&members, mass)?;
        let stop = match cands.get(k + 1) {
            None => true,
            Some(&(_, next)) => match rule {
                StopRule::Standard => next <= eta,
                StopRule::Inverted => next >= eta,
            },
        };
        if stop {
            break;
        }
    }
    let allocations = allocations_for(game, x, i, &members, eta);
    Ok(BestResponse {
        node: i,
        support: support_of(&allocations),
        allocations,
        level: Some(eta),
    })
}

/// KKT residual of a candidate best response.
///
/// With `lambda = eta` the multipliers are `mu_ij = lambda - u_j(x_j + d_ij)`
/// (and `mu_ii = lambda - u_i(d_ii)`), which makes stationarity exact; the
/// residual is the largest complementary-slackness product `|mu_ij d_ij|`
/// or negative part of a multiplier.
pub fn verify_kkt(game: &PopulationGame, x: &[f64], br: &BestResponse) -> Result<f64, Error> {
    let i = br.node;
    if let Some(&(j, d)) = br.allocations.iter().find(|(_, d)| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InfeasibleAllocation(format!("d[{}][{}] = {d}", i + 1, j + 1)));
    }
    let total: f64 = br.allocations.iter().map(|&(_, d)| d).sum();
    if (total - x[i].max(0.0)).abs() > MASS_TOL {
        return Err(Error::InfeasibleAllocation(format!(
            "node {} allocates {total} of mass {}",
            i + 1,
            x[i]
        )));
    }
    let Some(lambda) = br.level else {
        return Ok(0.0);
    };
    let profile = game.profile();
    let mut residual: f64 = 0.0;
    for &(j, d) in &br.allocations {
        let density = if j == i {
            profile.u(i, d)
        } else {
            profile.u(j, x[j] + d)
        };
        let mu = lambda - density;
        residual = residual.max((mu * d).abs());
        if -mu > residual {
            residual = -mu;
        }
    }
    Ok(residual)
}

/// Brute-force best response: try every nonempty candidate support, keep
/// the feasible one with the largest objective.
///
/// For a support `M` the level is `eta = g_M^{-1}(x_i + sum_{j in M, j != i} x_j)`
/// and the candidate allocation follows. It is feasible when every member
/// receives nonnegative mass and no excluded candidate enters above `eta`.
pub fn enumerate_supports(game: &PopulationGame, x: &PopulationState, i: usize) -> Result<BestResponse, Error> {
    game.check_state(x)?;
    if x[i] <= 0.0 {
        return Ok(BestResponse::empty(game, i));
    }
    let cands = game.topology().closed_neighborhood(i);
    if cands.len() > ENUMERATION_LIMIT {
        return Err(Error::DimensionTooLarge(cands.len(), ENUMERATION_LIMIT));
    }
    let profile = game.profile();
    const FEAS_TOL: f64 = 1e-10;

    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    for mask in 1u32..(1u32 << cands.len()) {
        let members: Vec<usize> = (0..cands.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| cands[b])
            .collect();
        let mass = x[i] + members.iter().filter(|&&j| j != i).map(|&j| x[j]).sum::<f64>();
        let Ok(eta) = profile.level_solve(&members, mass) else {
            continue;
        };
        let feasible = cands.iter().all(|&j| {
            let base = if j == i { 0.0 } else { x[j] };
            if members.contains(&j) {
                profile.u_inv(j, eta) - base >= -FEAS_TOL
            } else {
                entry_level(game, x, i, j) <= eta + FEAS_TOL
            }
        });
        if !feasible {
            continue;
        }
        let score: f64 = members
            .iter()
            .map(|&j| {
                let w = profile.u_inv(j, eta);
                if j == i {
                    profile.p(i, w) - profile.p(i, 0.0)
                } else {
                    profile.p(j, w.max(x[j])) - profile.p(j, x[j])
                }
            })
            .sum();
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, members, eta));
        }
    }
    let (_, members, eta) = best.ok_or(Error::NoFeasibleSupport(i + 1))?;
    let allocations = allocations_for(game, x, i, &members, eta);
    Ok(BestResponse {
        node: i,
        support: support_of(&allocations),
        allocations,
        level: Some(eta),
    })
}

/// Assembles arc flows from every node's best response; retained mass is
/// not an arc flow.
pub fn field(game: &PopulationGame, x: &PopulationState) -> Result<FieldValue, Error> {
    field_with_rule(game, x, StopRule::Standard)
}

#[doc(hidden)]
pub fn field_with_rule(game: &PopulationGame, x: &PopulationState, rule: StopRule) -> Result<FieldValue, Error> {
    game.check_state(x)?;
    let topo = game.topology();
    let mut delta = vec![0.0; topo.arc_count()];
    for i in 0..game.node_count() {
        if x[i] <= 0.0 {
            continue;
        }
        let br = solve_with_rule(game, x, i, rule)?;
        for &(j, d) in &br.allocations {
            if j != i {
                let m = topo.arc_index(i, j).expect("neighbor arc");
                delta[m] = d;
            }
        }
    }
    let delta = FlowVector::from_raw(delta);
    let xdot = topo.apply_incidence(&delta)?;
    Ok(FieldValue { delta, xdot })
}
