use std::ops::Deref;

use crate::error::Error;

/// Tolerance on `|sum(x) - 1|` for a state to count as on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Most negative component tolerated as round-off debris.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// A point of the probability simplex over the network's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState(Vec<f64>);

impl PopulationState {
    pub fn new(x: Vec<f64>) -> Result<Self, Error> {
        if x.is_empty() {
            return Err(Error::NotOnSimplex("state is empty".into()));
        }
        if let Some((i, v)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -NEGATIVE_TOL)
        {
            return Err(Error::NotOnSimplex(format!("component {} is {v}", i + 1)));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotOnSimplex(format!("components sum to {sum}")));
        }
        Ok(Self(x))
    }

    /// Like [`PopulationState::new`], then clamps debris to zero and rescales
    /// to an exact unit sum.
    pub fn normalized(x: Vec<f64>) -> Result<Self, Error> {
        let mut x = Self::new(x)?.0;
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        let sum: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= sum);
        Ok(Self(x))
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        Self(x)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    // Intermediate Runge-Kutta stages may sit marginally off the simplex.
    pub(crate) fn from_raw(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Nodes with `x_i > threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > threshold).collect()
    }
}

impl Deref for PopulationState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
