//! Seeded random instances: connected graphs, payoff profiles and states.
//!
//! Every instance is derived from a `(seed, case)` pair, so any single case
//! can be regenerated without replaying the ones before it.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::NetworkTopology;
use crate::payoff::{PayoffFunction, PayoffProfile};
use crate::state::PopulationState;

pub type InstanceRng = ChaCha8Rng;

/// Independent stream for case `case` of run `seed`.
pub fn instance_rng(seed: u64, case: u64) -> InstanceRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

/// Random spanning tree plus each remaining edge with probability
/// `extra_edge_prob`.
pub fn connected_graph(rng: &mut InstanceRng, node_count: usize, extra_edge_prob: f64) -> NetworkTopology {
    assert!(node_count >= 2, "need at least two nodes");
    let mut order: Vec<usize> = (0..node_count).collect();
    for k in (1..node_count).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    let mut edges = Vec::new();
    for k in 1..node_count {
        let parent = order[rng.random_range(0..k)];
        let (a, b) = (parent.min(order[k]), parent.max(order[k]));
        edges.push((a, b));
    }
    for i in 0..node_count {
        for j in i + 1..node_count {
            if !edges.contains(&(i, j)) && rng.random_bool(extra_edge_prob) {
                edges.push((i, j));
            }
        }
    }
    NetworkTopology::new(node_count, &edges).expect("spanning tree keeps the graph connected")
}

/// Quadratic payoff with `a` in `[0, 3)` and `c` in `[0.5, 2)`.
pub fn quadratic(rng: &mut InstanceRng) -> PayoffFunction {
    PayoffFunction::quadratic(rng.random_range(0.0..3.0), rng.random_range(0.5..2.0)).expect("valid range")
}

/// Logarithmic payoff with `w` in `[0.5, 2)` and `s` in `[0.5, 1.5)`.
pub fn log(rng: &mut InstanceRng) -> PayoffFunction {
    PayoffFunction::log(rng.random_range(0.5..2.0), rng.random_range(0.5..1.5)).expect("valid range")
}

pub fn quadratic_profile(rng: &mut InstanceRng, node_count: usize) -> PayoffProfile {
    PayoffProfile::new((0..node_count).map(|_| quadratic(rng)).collect())
}

/// Each node independently quadratic or logarithmic.
pub fn mixed_profile(rng: &mut InstanceRng, node_count: usize) -> PayoffProfile {
    PayoffProfile::new(
        (0..node_count)
            .map(|_| if rng.random_bool(0.5) { quadratic(rng) } else { log(rng) })
            .collect(),
    )
}

/// Uniform draw from the simplex (normalized exponentials).
pub fn state(rng: &mut InstanceRng, node_count: usize) -> PopulationState {
    let weights: Vec<f64> = (0..node_count).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    normalize(weights)
}

/// Like [`state`], but each node is emptied with probability `empty_prob`
/// (at least one node stays occupied).
pub fn sparse_state(rng: &mut InstanceRng, node_count: usize, empty_prob: f64) -> PopulationState {
    let keep = rng.random_range(0..node_count);
    let weights: Vec<f64> = (0..node_count)
        .map(|i| {
            let w = -(1.0 - rng.random::<f64>()).ln();
            if i != keep && rng.random_bool(empty_prob) {
                0.0
            } else {
                w
            }
        })
        .collect();
    normalize(weights)
}

fn normalize(mut w: Vec<f64>) -> PopulationState {
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|v| *v /= total);
    } else {
        let n = w.len() as f64;
        w.fill(1.0 / n);
    }
    PopulationState::normalized(w).expect("normalized weights lie on the simplex")
}
