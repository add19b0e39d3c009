//! Network-restricted payoff maximization.
//!
//! A central planner reallocates every node's mass over its closed
//! neighborhood (one hop) so as to maximize social utility:
//!
//! ```text
//! max  U(z)
//! s.t. z_i = sum_{k : i in closed N(k)} d_ki,   sum_{j in closed N(i)} d_ij = x_i,   d >= 0
//! ```
//!
//! The objective is strictly concave in `z` but only concave in `d`, so the
//! post-reallocation state `z*` is unique while the flows `d*` need not be.
//! The dynamics is `xdot = z*(x) - x`.
//!
//! The solver is projected gradient ascent on `d` over the product of
//! per-node scaled simplices; `z` is eliminated through the inflow sums and
//! the gradient entry for `d_ij` is `u_j(z_j)`.

use crate::error::Error;
use crate::field::{FieldValue, VectorField};
use crate::game::PopulationGame;
use crate::graph::{FlowVector, NetworkTopology, SupportPattern};
use crate::simplex::project_scaled_simplex;
use crate::state::PopulationState;

/// Stop once the projected-gradient norm drops below this.
pub const PG_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 100_000;
/// Hitting the iteration cap is an error only above this residual.
pub const NONCONVERGENCE_TOL: f64 = 1e-6;
/// Flows above this count as part of the support pattern.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Largest number of decision variables [`brute_force`] accepts.
pub const BRUTE_FORCE_MAX_DIM: usize = 8;
pub const BRUTE_FORCE_MIN_STEP: f64 = 0.025;

/// Block layout of the decision vector: node `i` owns entries
/// `offsets[i]..offsets[i + 1]`, one per member of its closed neighborhood.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Layout {
    fn new(topo: &NetworkTopology) -> Self {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for i in 0..topo.node_count() {
            targets.extend(topo.closed_neighborhood(i));
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.block(i);
        self.targets[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    fn inflows(&self, d: &[f64], z: &mut [f64]) {
        z.fill(0.0);
        for (&j, &v) in self.targets.iter().zip(d) {
            z[j] += v;
        }
    }
}

/// One optimizer `(z*, d*)` of the reallocation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Reallocation {
    /// Post-reallocation state; unique across optimizers.
    pub z: Vec<f64>,
    /// `U(z)`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    layout: Layout,
    flows: Vec<f64>,
}

impl Reallocation {
    /// Keep every node's mass at home.
    pub fn identity(game: &PopulationGame, x: &[f64]) -> Self {
        let layout = Layout::new(game.topology());
        let mut flows = vec![0.0; layout.targets.len()];
        for (i, &xi) in x.iter().enumerate() {
            flows[layout.position(i, i).expect("self entry")] = xi.max(0.0);
        }
        Self::assemble(game, x, layout, flows, 0)
    }

    /// Builds a reallocation from explicit `((i, j), d_ij)` entries; unlisted
    /// entries are zero. Fails on arcs outside the closed neighborhoods or
    /// when a node's outflows do not add up to its mass.
    pub fn from_flows(game: &PopulationGame, x: &[f64], entries: &[((usize, usize), f64)]) -> Result<Self, Error> {
        let layout = Layout::new(game.topology());
        let mut flows = vec![0.0; layout.targets.len()];
        for &((i, j), d) in entries {
            let pos = layout.position(i, j).ok_or_else(|| {
                Error::InfeasibleAllocation(format!("({}, {}) is not an arc or self pair", i + 1, j + 1))
            })?;
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InfeasibleAllocation(format!("d[{}][{}] = {d}", i + 1, j + 1)));
            }
            flows[pos] = d;
        }
        for i in 0..layout.node_count() {
            let total: f64 = flows[layout.block(i)].iter().sum();
            if (total - x[i]).abs() > 1e-10 {
                return Err(Error::InfeasibleAllocation(format!(
                    "node {} sends {total} of mass {}",
                    i + 1,
                    x[i]
                )));
            }
        }
        Ok(Self::assemble(game, x, layout, flows, 0))
    }

    fn assemble(game: &PopulationGame, x: &[f64], layout: Layout, flows: Vec<f64>, iterations: usize) -> Self {
        let mut z = vec![0.0; layout.node_count()];
        layout.inflows(&flows, &mut z);
        let kkt_residual = kkt_residual(game, x, &layout, &flows, &z);
        Self {
            objective: game.social_utility(&z),
            z,
            kkt_residual,
            iterations,
            layout,
            flows,
        }
    }

    /// `d_ij`, zero outside the closed neighborhoods.
    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.layout.position(i, j).map_or(0.0, |p| self.flows[p])
    }

    /// All `((i, j), d_ij)` entries, self pairs included, grouped by source.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (0..self.layout.node_count()).flat_map(move |i| {
            self.layout
                .block(i)
                .map(move |p| ((i, self.layout.targets[p]), self.flows[p]))
        })
    }

    /// Arc flows in topology order; retained mass is dropped.
    pub fn arc_flows(&self, topo: &NetworkTopology) -> FlowVector {
        FlowVector::from_raw(topo.arcs().iter().map(|&(i, j)| self.flow(i, j)).collect())
    }

    pub fn support_pattern(&self, tol: f64) -> SupportPattern {
        SupportPattern::new(self.entries().filter(|&(_, d)| d > tol).map(|(a, _)| a))
    }

    /// Largest spread of `u_j(z_j)` among the destinations a node sends
    /// more than `tol` to (zero when every source sees a single level).
    pub fn level_spread(&self, game: &PopulationGame, tol: f64) -> f64 {
        let profile = game.profile();
        (0..self.layout.node_count())
            .map(|i| {
                let levels = self.layout.block(i).filter(|&p| self.flows[p] > tol).map(|p| {
                    let j = self.layout.targets[p];
                    profile.u(j, self.z[j])
                });
                let (lo, hi) = levels.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if lo.is_finite() {
                    hi - lo
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `u_i(z_i) - u_j(z_j)` over arcs `i != j` with `d_ij > tol`.
    /// Optimizers send mass only toward destinations at least as good.
    pub fn ordering_violation(&self, game: &PopulationGame, tol: f64) -> f64 {
        let profile = game.profile();
        self.entries()
            .filter(|&((i, j), d)| i != j && d > tol)
            .map(|((i, j), _)| profile.u(i, self.z[i]) - profile.u(j, self.z[j]))
            .fold(0.0, f64::max)
    }
}

fn kkt_residual(game: &PopulationGame, x: &[f64], layout: &Layout, d: &[f64], z: &[f64]) -> f64 {
    let profile = game.profile();
    let mut residual: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate().take(layout.node_count()) {
        let block = layout.block(i);
        let total: f64 = d[block.clone()].iter().sum();
        residual = residual.max((total - xi.max(0.0)).abs());
        let lambda = block
            .clone()
            .map(|p| profile.u(layout.targets[p], z[layout.targets[p]]))
            .fold(f64::NEG_INFINITY, f64::max);
        for p in block {
            let j = layout.targets[p];
            residual = residual.max(d[p] * (lambda - profile.u(j, z[j])));
        }
    }
    residual
}

/// Solves the reallocation problem at `x`, optionally warm-started from a
/// previous optimizer (its flows are projected onto the new feasible set).
pub fn solve(
    game: &PopulationGame,
    x: &PopulationState,
    warm_start: Option<&Reallocation>,
) -> Result<Reallocation, Error> {
    game.check_state(x)?;
    let layout = Layout::new(game.topology());
    let n = layout.node_count();
    let mut d = match warm_start {
        Some(w) if w.layout == layout => w.flows.clone(),
        _ => Reallocation::identity(game, x).flows,
    };
    for i in 0..n {
        project_scaled_simplex(&mut d[layout.block(i)], x[i].max(0.0));
    }

    let profile = game.profile();
    let lipschitz = (game.topology().max_degree() + 1) as f64 * profile.max_slope();
    let step = 1.0 / lipschitz;
    let mut z = vec![0.0; n];
    let mut next = d.clone();
    let mut densities = vec![0.0; n];
    let mut iterations = 0;
    let mut pg_norm = f64::INFINITY;
    while iterations < MAX_ITERATIONS {
        layout.inflows(&d, &mut z);
        for j in 0..n {
            densities[j] = profile.u(j, z[j]);
        }
        let mut sq = 0.0;
        for i in 0..n {
            let block = layout.block(i);
            if x[i] <= 0.0 {
                next[block].fill(0.0);
                continue;
            }
            for p in block.clone() {
                next[p] = d[p] + step * densities[layout.targets[p]];
            }
            project_scaled_simplex(&mut next[block.clone()], x[i]);
            for p in block {
                let g = (next[p] - d[p]) * lipschitz;
                sq += g * g;
            }
        }
        pg_norm = sq.sqrt();
        if pg_norm <= PG_TOL {
            break;
        }
        std::mem::swap(&mut d, &mut next);
        iterations += 1;
    }
    if pg_norm > NONCONVERGENCE_TOL {
        return Err(Error::NotConverged {
            iterations,
            residual: pg_norm,
        });
    }
    Ok(Reallocation::assemble(game, x, layout, d, iterations))
}

/// The unique post-reallocation state `z*(x)`.
pub fn z_star(game: &PopulationGame, x: &PopulationState) -> Result<Vec<f64>, Error> {
    solve(game, x, None).map(|r| r.z)
}

/// `xdot = z*(x) - x`, with one optimizer's arc flows as `delta`.
pub fn field(
    game: &PopulationGame,
    x: &PopulationState,
    warm_start: Option<&Reallocation>,
) -> Result<(FieldValue, Reallocation), Error> {
    let realloc = solve(game, x, warm_start)?;
    let xdot = realloc.z.iter().zip(x.iter()).map(|(z, x)| z - x).collect();
    let delta = realloc.arc_flows(game.topology());
    Ok((FieldValue { delta, xdot }, realloc))
}

/// Reallocation field that warm-starts each solve from the previous one.
pub struct NrpmField<'a> {
    game: &'a PopulationGame,
    last: Option<Reallocation>,
}

impl<'a> NrpmField<'a> {
    pub fn new(game: &'a PopulationGame) -> Self {
        Self { game, last: None }
    }

    pub fn last_solution(&self) -> Option<&Reallocation> {
        self.last.as_ref()
    }
}

impl VectorField for NrpmField<'_> {
    fn evaluate(&mut self, x: &PopulationState) -> Result<FieldValue, Error> {
        let (value, realloc) = field(self.game, x, self.last.as_ref())?;
        self.last = Some(realloc);
        Ok(value)
    }
}

/// Closed-form post-reallocation state implied by a support pattern:
/// each destination set `D^r` shares the mass of its origin set `O^r` at a
/// common level; destinations outside every component receive nothing.
pub fn support_value(game: &PopulationGame, x: &[f64], pattern: &SupportPattern) -> Result<Vec<f64>, Error> {
    let od = game.topology().od_decompose(pattern)?;
    let profile = game.profile();
    let mut out = vec![0.0; game.node_count()];
    for comp in &od.components {
        let mass: f64 = comp.origins.iter().map(|&k| x[k].max(0.0)).sum();
        let eta = profile.level_solve(&comp.destinations, mass)?;
        for &i in &comp.destinations {
            out[i] = profile.u_inv(i, eta);
        }
    }
    Ok(out)
}

/// Checks a reallocation against the structure every optimizer has: each
/// occupied node has an outgoing support arc, the occupied nodes are all
/// origins, and the support pattern reproduces `z` in closed form.
pub fn verify_support_pattern(game: &PopulationGame, x: &[f64], realloc: &Reallocation) -> bool {
    let pattern = realloc.support_pattern(SUPPORT_TOL);
    let occupied: Vec<usize> = (0..game.node_count()).filter(|&i| x[i] > SUPPORT_TOL).collect();
    if !occupied.iter().all(|&i| pattern.has_outgoing(i)) {
        return false;
    }
    let Ok(od) = game.topology().od_decompose(&pattern) else {
        return false;
    };
    let covered = |i: usize| od.components.iter().any(|c| c.origins.contains(&i));
    if !occupied.iter().all(|&i| covered(i)) {
        return false;
    }
    match support_value(game, x, &pattern) {
        Ok(f) => f.iter().zip(&realloc.z).all(|(a, b)| (a - b).abs() <= 1e-6),
        Err(_) => false,
    }
}

/// Exhaustive search over grid compositions of every node's mass.
///
/// Each occupied node splits `x_i` over its closed neighborhood in
/// multiples of `grid_step` (the last share absorbs any remainder). Meant
/// as a small-scale oracle; the number of decision variables is capped.
pub fn brute_force(game: &PopulationGame, x: &PopulationState, grid_step: f64) -> Result<Reallocation, Error> {
    game.check_state(x)?;
    if grid_step.is_nan() || grid_step < BRUTE_FORCE_MIN_STEP {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} is below {BRUTE_FORCE_MIN_STEP}"
        )));
    }
    let layout = Layout::new(game.topology());
    let occupied: Vec<usize> = (0..layout.node_count()).filter(|&i| x[i] > 0.0).collect();
    let dim: usize = occupied.iter().map(|&i| layout.block(i).len()).sum();
    if dim > BRUTE_FORCE_MAX_DIM {
        return Err(Error::DimensionTooLarge(dim, BRUTE_FORCE_MAX_DIM));
    }

    // Candidate splits per occupied node.
    let choices: Vec<Vec<Vec<f64>>> = occupied
        .iter()
        .map(|&i| grid_compositions(x[i], layout.block(i).len(), grid_step))
        .collect();

    let mut flows = vec![0.0; layout.targets.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut z = vec![0.0; layout.node_count()];
    search(
        &mut |flows: &[f64]| {
            layout.inflows(flows, &mut z);
            let u = game.social_utility(&z);
            if best.as_ref().is_none_or(|(b, _)| u > *b) {
                best = Some((u, flows.to_vec()));
            }
        },
        &layout,
        &occupied,
        &choices,
        0,
        &mut flows,
    );

    let (_, flows) = best.expect("at least one grid point");
    Ok(Reallocation::assemble(game, x, layout, flows, 0))
}

fn search(
    visit: &mut dyn FnMut(&[f64]),
    layout: &Layout,
    occupied: &[usize],
    choices: &[Vec<Vec<f64>>],
    depth: usize,
    flows: &mut Vec<f64>,
) {
    if depth == occupied.len() {
        visit(flows);
        return;
    }
    let block = layout.block(occupied[depth]);
    for split in &choices[depth] {
        flows[block.clone()].copy_from_slice(split);
        search(visit, layout, occupied, choices, depth + 1, flows);
    }
}

fn grid_compositions(mass: f64, parts: usize, step: f64) -> Vec<Vec<f64>> {
    let units = (mass / step + 1e-9).floor() as usize;
    let remainder = (mass - units as f64 * step).max(0.0);
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn rec(k: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k + 1 == current.len() {
            current[k] = left;
            out.push(current.clone());
            return;
        }
        for take in 0..=left {
            current[k] = take;
            rec(k + 1, left - take, current, out);
        }
    }
    let mut raw = Vec::new();
    rec(0, units, &mut current, &mut raw);
    for c in raw {
        let mut split: Vec<f64> = c.iter().map(|&u| u as f64 * step).collect();
        *split.last_mut().expect("nonempty block") += remainder;
        out.push(split);
    }
    out
}
