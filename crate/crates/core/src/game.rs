use crate::error::Error;
use crate::graph::NetworkTopology;
use crate::payoff::PayoffProfile;
use crate::state::PopulationState;

/// A network together with node-aligned payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGame {
    topology: NetworkTopology,
    profile: PayoffProfile,
}

impl PopulationGame {
    pub fn new(topology: NetworkTopology, profile: PayoffProfile) -> Result<Self, Error> {
        if topology.node_count() != profile.len() {
            return Err(Error::ProfileSize {
                profile: profile.len(),
                nodes: topology.node_count(),
            });
        }
        Ok(Self { topology, profile })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn profile(&self) -> &PayoffProfile {
        &self.profile
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn social_utility(&self, x: &[f64]) -> f64 {
        self.profile.social_utility(x)
    }

    pub(crate) fn check_state(&self, x: &PopulationState) -> Result<(), Error> {
        if x.len() != self.node_count() {
            return Err(Error::NotOnSimplex(format!(
                "state has {} components, network has {} nodes",
                x.len(),
                self.node_count()
            )));
        }
        Ok(())
    }
}
