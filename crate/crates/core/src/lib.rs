//! Stratified populations on networks.
//!
//! A unit mass of agents is spread over the nodes of a connected graph. Each
//! node `i` has a concave cumulative payoff `p_i` whose density `u_i = p_i'`
//! is strictly decreasing: later arrivals at a node earn less. Mass moves
//! along edges under one of three rules:
//!
//! * [`ssd`]: stratified Smith dynamics, selfish pairwise switching;
//! * [`nbrd`]: nodal best response, each node reallocates its own mass;
//! * [`nrpm`]: network-restricted payoff maximization, a planner
//!   reallocates all mass one hop at a time.
//!
//! All three ascend the social utility `U(x) = sum_i p_i(x_i) - p_i(0)` and
//! settle on the Nash set, where no occupied node has a neighbor with a
//! higher density. [`integrator`] integrates them, [`analysis`] checks
//! equilibria and flow properties, and [`validation`] runs a randomized
//! property suite.
//!
//! Node indices are 0-based throughout the library.
//!
//! ```
//! use stratnet::{analysis, integrator, DynamicsKind, NetworkTopology, PayoffProfile, PopulationGame, PopulationState};
//!
//! let game = PopulationGame::new(
//!     NetworkTopology::path(3).unwrap(),
//!     PayoffProfile::water_tank(&[0.0, 5.0, 0.0]),
//! )
//! .unwrap();
//! let config = integrator::SimulationConfig::new(DynamicsKind::Nbrd);
//! let traj = integrator::simulate(&game, &PopulationState::vertex(3, 1), &config).unwrap();
//! assert!(traj.converged);
//! assert!(analysis::is_nash(&game, traj.final_state(), 1e-6).is_nash);
//! ```

pub mod analysis;
mod dsu;
pub mod error;
pub mod field;
mod game;
pub mod graph;
pub mod integrator;
pub mod nbrd;
pub mod nrpm;
pub mod oracle;
pub mod payoff;
pub mod random;
pub mod simplex;
pub mod ssd;
mod state;
pub mod validation;

pub use analysis::NashReport;
pub use error::{Error, GraphError, PayoffError};
pub use field::{field_for, DynamicsKind, FieldValue, VectorField};
pub use game::PopulationGame;
pub use graph::{FlowVector, NetworkTopology, OdComponent, OdDecomposition, SupportPattern};
pub use integrator::{SimulationConfig, Trajectory};
pub use nbrd::BestResponse;
pub use nrpm::Reallocation;
pub use payoff::{PayoffFunction, PayoffProfile, SaturatedInverse, Saturation};
pub use state::{PopulationState, NEGATIVE_TOL, SIMPLEX_TOL};
