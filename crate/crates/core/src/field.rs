use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::game::PopulationGame;
use crate::graph::FlowVector;
use crate::nrpm::NrpmField;
use crate::state::PopulationState;
use crate::{nbrd, ssd};

/// Which revision rule drives the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    /// Stratified Smith dynamics.
    Ssd,
    /// Nodal best-response dynamics.
    Nbrd,
    /// Network-restricted payoff maximization.
    Nrpm,
}

impl DynamicsKind {
    pub const ALL: [DynamicsKind; 3] = [Self::Ssd, Self::Nbrd, Self::Nrpm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ssd => "ssd",
            Self::Nbrd => "nbrd",
            Self::Nrpm => "nrpm",
        }
    }

    /// Whether the flows satisfy strong positive correlation by construction.
    pub fn is_positively_correlated(self) -> bool {
        !matches!(self, Self::Nrpm)
    }
}

impl std::fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Arc flows at a state and the induced rate of change `xdot = A * delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValue {
    pub delta: FlowVector,
    pub xdot: Vec<f64>,
}

impl FieldValue {
    /// `max_i |xdot_i|`.
    pub fn residual(&self) -> f64 {
        self.xdot.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Right-hand side of a flow-balanced ODE on the simplex.
///
/// Takes `&mut self` so that solvers can carry warm starts between calls.
pub trait VectorField {
    fn evaluate(&mut self, x: &PopulationState) -> Result<FieldValue, Error>;
}

pub struct SsdField<'a>(pub &'a PopulationGame);

impl VectorField for SsdField<'_> {
    fn evaluate(&mut self, x: &PopulationState) -> Result<FieldValue, Error> {
        ssd::field(self.0, x)
    }
}

pub struct NbrdField<'a>(pub &'a PopulationGame);

impl VectorField for NbrdField<'_> {
    fn evaluate(&mut self, x: &PopulationState) -> Result<FieldValue, Error> {
        nbrd::field(self.0, x)
    }
}

/// Boxed field for the selected dynamics.
pub fn field_for(game: &PopulationGame, kind: DynamicsKind) -> Box<dyn VectorField + '_> {
    match kind {
        DynamicsKind::Ssd => Box::new(SsdField(game)),
        DynamicsKind::Nbrd => Box::new(NbrdField(game)),
        DynamicsKind::Nrpm => Box::new(NrpmField::new(game)),
    }
}
