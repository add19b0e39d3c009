//! Fixtures shared by the benchmarks.

use stratnet::{random, PopulationGame, PopulationState};

/// A seeded random game with `n` nodes and a dense state on it.
pub fn fixture(n: usize, seed: u64) -> (PopulationGame, PopulationState) {
    let mut rng = random::instance_rng(seed, n as u64);
    let topo = random::connected_graph(&mut rng, n, 0.3);
    let game = PopulationGame::new(topo, random::mixed_profile(&mut rng, n)).expect("sizes match");
    let x = random::state(&mut rng, n);
    (game, x)
}
