//! Cumulative payoffs `p_i`, payoff densities `u_i = p_i'`, their inverses,
//! and the waterfilling level solve shared by the best-response and
//! reallocation solvers.
//!
//! Every density is strictly decreasing on `[0, 1]`, so `u_i` has an inverse
//! on `[u_i(1), u_i(0)]`. Outside that range the inverse saturates at 0 or 1
//! (see [`SaturatedInverse`]).

use serde::{Deserialize, Serialize};

use crate::error::PayoffError;
use crate::state::SIMPLEX_TOL;

/// Bisection stops once the bracket is narrower than this.
pub const ARGUMENT_TOL: f64 = 1e-12;
/// Target residual `|g_M(eta) - mass|` of [`PayoffProfile::level_solve`].
pub const RESIDUAL_TOL: f64 = 1e-11;
pub const MAX_BISECTION_ITERATIONS: usize = 200;

const MIN_CUSTOM_GRID: usize = 101;

/// A strictly concave cumulative payoff on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PayoffSpec", into = "PayoffSpec")]
pub enum PayoffFunction {
    /// `p(y) = -(c/2) y^2 - a y`, `u(y) = -c y - a`.
    Quadratic { a: f64, c: f64 },
    /// `p(y) = w ln(y + s)`, `u(y) = w / (y + s)`.
    Log { w: f64, s: f64 },
    /// Piecewise-linear density on a uniform grid over `[0, 1]`.
    Custom(CustomDensity),
}

/// Serialized form of a [`PayoffFunction`]: `{"type": "quadratic", "a": .., "c": ..}` etc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PayoffSpec {
    Quadratic {
        #[serde(default)]
        a: f64,
        #[serde(default = "unit")]
        c: f64,
    },
    Log {
        w: f64,
        s: f64,
    },
    Custom {
        density: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<PayoffSpec> for PayoffFunction {
    type Error = PayoffError;

    fn try_from(spec: PayoffSpec) -> Result<Self, PayoffError> {
        match spec {
            PayoffSpec::Quadratic { a, c } => Self::quadratic(a, c),
            PayoffSpec::Log { w, s } => Self::log(w, s),
            PayoffSpec::Custom { density } => Self::custom(density),
        }
    }
}

impl From<PayoffFunction> for PayoffSpec {
    fn from(f: PayoffFunction) -> Self {
        match f {
            PayoffFunction::Quadratic { a, c } => PayoffSpec::Quadratic { a, c },
            PayoffFunction::Log { w, s } => PayoffSpec::Log { w, s },
            PayoffFunction::Custom(d) => PayoffSpec::Custom { density: d.values },
        }
    }
}

impl PayoffFunction {
    pub fn quadratic(a: f64, c: f64) -> Result<Self, PayoffError> {
        if !a.is_finite() || !(c.is_finite() && c > 0.0) {
            return Err(PayoffError::InvalidParameter(format!(
                "quadratic needs finite a and c > 0, got a = {a}, c = {c}"
            )));
        }
        Ok(Self::Quadratic { a, c })
    }

    /// Unit-curvature water-tank payoff `u(y) = -y - a`.
    pub fn water_tank(a: f64) -> Self {
        Self::Quadratic { a, c: 1.0 }
    }

    pub fn log(w: f64, s: f64) -> Result<Self, PayoffError> {
        if !(w.is_finite() && w > 0.0 && s.is_finite() && s > 0.0) {
            return Err(PayoffError::InvalidParameter(format!(
                "log needs w > 0 and s > 0, got w = {w}, s = {s}"
            )));
        }
        Ok(Self::Log { w, s })
    }

    pub fn custom(density: Vec<f64>) -> Result<Self, PayoffError> {
        CustomDensity::new(density).map(Self::Custom)
    }

    /// `p(y)` for `y` in `[0, 1]`; arguments outside are clamped.
    pub fn cumulative(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            Self::Quadratic { a, c } => -0.5 * c * y * y - a * y,
            Self::Log { w, s } => w * (y + s).ln(),
            Self::Custom(d) => d.cumulative(y),
        }
    }

    /// `u(y) = p'(y)`, one-sided at the endpoints; arguments are clamped.
    pub fn density(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            Self::Quadratic { a, c } => -c * y - a,
            Self::Log { w, s } => w / (y + s),
            Self::Custom(d) => d.density(y),
        }
    }

    pub fn inverse(&self, v: f64) -> SaturatedInverse {
        if v > self.density(0.0) {
            return SaturatedInverse::new(0.0, Saturation::BelowRange);
        }
        if v < self.density(1.0) {
            return SaturatedInverse::new(1.0, Saturation::AboveRange);
        }
        let y = match self {
            Self::Quadratic { a, c } => -(v + a) / c,
            Self::Log { w, s } => w / v - s,
            Self::Custom(d) => d.inverse(v),
        };
        SaturatedInverse::new(y.clamp(0.0, 1.0), Saturation::Within)
    }

    /// Upper bound on `|u'|` over `[0, 1]`.
    pub fn max_slope(&self) -> f64 {
        match self {
            Self::Quadratic { c, .. } => *c,
            Self::Log { w, s } => w / (s * s),
            Self::Custom(d) => d.max_slope(),
        }
    }

    /// Upper bound on `|u''|` over `[0, 1]`; zero for piecewise-linear densities.
    pub fn max_curvature(&self) -> f64 {
        match self {
            Self::Quadratic { .. } | Self::Custom(_) => 0.0,
            Self::Log { w, s } => 2.0 * w / (s * s * s),
        }
    }
}

/// Density samples on a uniform grid over `[0, 1]`, linearly interpolated.
///
/// The cumulative payoff integrates the interpolant exactly, normalized to
/// `p(0) = 0`; at grid points this is the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomDensity {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    step: f64,
}

impl CustomDensity {
    pub fn new(values: Vec<f64>) -> Result<Self, PayoffError> {
        if values.len() < MIN_CUSTOM_GRID {
            return Err(PayoffError::GridTooCoarse(values.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(PayoffError::InvalidParameter(format!(
                "density sample {k} is not finite"
            )));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(PayoffError::NotDecreasing(k + 1));
        }
        let step = 1.0 / (values.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for w in values.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self {
            values,
            cumulative,
            step,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn cell(&self, y: f64) -> (usize, f64) {
        let cells = self.values.len() - 1;
        let k = ((y / self.step).floor() as usize).min(cells - 1);
        let t = (y - k as f64 * self.step) / self.step;
        (k, t)
    }

    fn density(&self, y: f64) -> f64 {
        let (k, t) = self.cell(y);
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }

    fn cumulative(&self, y: f64) -> f64 {
        let (k, t) = self.cell(y);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        self.cumulative[k] + self.step * t * (v0 + 0.5 * t * (v1 - v0))
    }

    /// Inverse for `v` in `[u(1), u(0)]`: locate the cell by bisection over
    /// the grid, then invert the linear piece.
    fn inverse(&self, v: f64) -> f64 {
        let (mut lo, mut hi) = (0usize, self.values.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.values[mid] >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (v0, v1) = (self.values[lo], self.values[hi]);
        let t = ((v0 - v) / (v0 - v1)).clamp(0.0, 1.0);
        (lo as f64 + t) * self.step
    }

    fn max_slope(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[0] - w[1]) / self.step)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Saturation {
    /// The queried level exceeds `u(0)`; no mass would enter.
    BelowRange,
    Within,
    /// The queried level is below `u(1)`; the node would fill completely.
    AboveRange,
}

/// `u^{-1}(v)` clamped into `[0, 1]`, with a record of which side clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturatedInverse {
    pub value: f64,
    pub flag: Saturation,
}

impl SaturatedInverse {
    fn new(value: f64, flag: Saturation) -> Self {
        Self { value, flag }
    }
}

/// Node-aligned payoff functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PayoffProfile {
    functions: Vec<PayoffFunction>,
}

fn check_domain(y: f64) -> Result<f64, PayoffError> {
    if (0.0..=1.0).contains(&y) {
        Ok(y)
    } else {
        Err(PayoffError::OutOfDomain(y))
    }
}

impl PayoffProfile {
    pub fn new(functions: Vec<PayoffFunction>) -> Self {
        Self { functions }
    }

    /// Water-tank profile `u_i(y) = -y - a_i`.
    pub fn water_tank(offsets: &[f64]) -> Self {
        Self::new(offsets.iter().map(|&a| PayoffFunction::water_tank(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[PayoffFunction] {
        &self.functions
    }

    pub fn function(&self, i: usize) -> &PayoffFunction {
        &self.functions[i]
    }

    pub fn cumulative(&self, i: usize, y: f64) -> Result<f64, PayoffError> {
        check_domain(y).map(|y| self.functions[i].cumulative(y))
    }

    pub fn density(&self, i: usize, y: f64) -> Result<f64, PayoffError> {
        check_domain(y).map(|y| self.functions[i].density(y))
    }

    pub fn inverse_density(&self, i: usize, v: f64) -> SaturatedInverse {
        self.functions[i].inverse(v)
    }

    // Unchecked evaluation for solver inner loops; clamps into [0, 1].
    #[inline]
    pub(crate) fn u(&self, i: usize, y: f64) -> f64 {
        self.functions[i].density(y)
    }

    #[inline]
    pub(crate) fn p(&self, i: usize, y: f64) -> f64 {
        self.functions[i].cumulative(y)
    }

    #[inline]
    pub(crate) fn u_inv(&self, i: usize, v: f64) -> f64 {
        self.functions[i].inverse(v).value
    }

    pub fn max_slope(&self) -> f64 {
        self.functions.iter().map(PayoffFunction::max_slope).fold(0.0, f64::max)
    }

    /// `g_M(eta) = sum_{j in M} u_j^{-1}(eta)` with saturated inverses.
    pub fn aggregate_inverse(&self, nodes: &[usize], eta: f64) -> f64 {
        nodes.iter().map(|&j| self.u_inv(j, eta)).sum()
    }

    /// Solves `g_M(eta) = mass` for the common level `eta`.
    ///
    /// `g_M` is nonincreasing, equals `|M|` at `min_j u_j(1)` and 0 at
    /// `max_j u_j(0)`, so any mass in `[0, |M|]` has a root inside that
    /// bracket. Masses within [`SIMPLEX_TOL`] of that range are clamped
    /// into it.
    pub fn level_solve(&self, nodes: &[usize], mass: f64) -> Result<f64, PayoffError> {
        if nodes.is_empty() {
            return Err(PayoffError::EmptyNodeSet);
        }
        let cap = nodes.len() as f64;
        if !(mass.is_finite() && (-SIMPLEX_TOL..=cap + SIMPLEX_TOL).contains(&mass)) {
            return Err(PayoffError::InfeasibleMass {
                mass,
                nodes: nodes.len(),
            });
        }
        let mass = mass.clamp(0.0, cap);
        if nodes.len() == 1 {
            return Ok(self.u(nodes[0], mass));
        }
        let mut lo = nodes.iter().map(|&j| self.u(j, 1.0)).fold(f64::INFINITY, f64::min);
        let mut hi = nodes.iter().map(|&j| self.u(j, 0.0)).fold(f64::NEG_INFINITY, f64::max);
        if mass == 0.0 {
            return Ok(hi);
        }
        if mass == cap {
            return Ok(lo);
        }
        for _ in 0..MAX_BISECTION_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = self.aggregate_inverse(nodes, mid);
            if g > mass {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= ARGUMENT_TOL && (g - mass).abs() <= RESIDUAL_TOL {
                break;
            }
        }
        // Pick the bracket end with the smaller residual.
        let (rl, rh) = (
            (self.aggregate_inverse(nodes, lo) - mass).abs(),
            (self.aggregate_inverse(nodes, hi) - mass).abs(),
        );
        Ok(if rl < rh { lo } else { hi })
    }

    /// `U(x) = sum_i [p_i(x_i) - p_i(0)]`.
    pub fn social_utility(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.p(i, xi) - self.p(i, 0.0))
            .sum()
    }

    /// `grad U(x)`, i.e. the densities at the current occupation.
    pub fn densities_at(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &xi)| self.u(i, xi)).collect()
    }
}
