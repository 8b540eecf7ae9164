//! Proximal mappings and their generalized Jacobians.
//!
//! Each [`ProxOracle`] provides `g(z)`, `prox_{γg}(x)` and the action `v ↦ Pv`
//! of one fixed element `P` of the B-subdifferential of `prox_{γg}` at `x`.
//! Where `prox_{γg}` is not differentiable the selection is deterministic and
//! favours the more contractive branch (derivative `0` at soft-threshold and
//! box kinks, the zero matrix at the Euclidean-norm kink, the identity on the
//! boundary of the ball, the projector onto the hyperplane on the boundary of
//! a halfspace).

use std::fmt;
use std::ops::Add;

use nalgebra::DVector;

use crate::error::{check_dim, check_gamma, Result};

mod combinators;
mod norms;
mod sets;

pub use combinators::{ConjugateValueFn, MoreauConjugate, SeparableSum};
pub use norms::{EuclideanNorm, GroupNorms, L1Norm, LInfNorm};
pub use sets::{
    project_simplex, soc_jac_vec, soc_project, AffineSet, EuclideanBall, Halfspace, L1Ball,
    SecondOrderCone, SeparableBox, UnitSimplex,
};

/// Absolute tolerance for feasibility and active-set decisions.
pub const ACTIVE_TOL: f64 = 1e-12;

/// An extended-real value: either finite or `+∞`.
///
/// Kept as a flag rather than `f64::INFINITY` so that FBE assembly never sees
/// `∞ − ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal {
    value: f64,
    infinite: bool,
}

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal { value: 0.0, infinite: true };
    pub const ZERO: ExtReal = ExtReal { value: 0.0, infinite: false };

    pub fn finite(value: f64) -> Self {
        Self { value, infinite: false }
    }

    /// `0` when `feasible`, `+∞` otherwise.
    pub fn indicator(feasible: bool) -> Self {
        if feasible {
            Self::ZERO
        } else {
            Self::INFINITY
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    pub fn is_finite(&self) -> bool {
        !self.infinite
    }

    /// The finite value, or `None` for `+∞`.
    pub fn value(&self) -> Option<f64> {
        (!self.infinite).then_some(self.value)
    }

    /// Lossy conversion for display and comparisons.
    pub fn to_f64(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.infinite || rhs.infinite {
            ExtReal::INFINITY
        } else {
            ExtReal::finite(self.value + rhs.value)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.infinite {
            write!(f, "+inf")
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// A proper closed convex function with a cheaply computable proximal mapping.
///
/// Implementors provide the `eval_*` methods, which may assume dimensions
/// are consistent and `gamma > 0`; callers go through the checked
/// [`g_value`](ProxOracle::g_value), [`prox`](ProxOracle::prox) and
/// [`jac_vec`](ProxOracle::jac_vec).
pub trait ProxOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal;

    /// `(prox_{γg}(x), g(prox_{γg}(x)))`.
    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64);

    /// `P v` for the selected `P ∈ ∂_B prox_{γg}(x)`.
    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64>;

    /// Whether [`eval_conjugate`](ProxOracle::eval_conjugate) is available.
    fn has_conjugate(&self) -> bool {
        false
    }

    /// The convex conjugate `g*(y)` when it has a closed form.
    fn eval_conjugate(&self, _y: &DVector<f64>) -> Option<ExtReal> {
        None
    }

    fn g_value(&self, z: &DVector<f64>) -> Result<ExtReal> {
        check_dim(self.dim(), z.len())?;
        Ok(self.eval_g(z))
    }

    fn prox(&self, x: &DVector<f64>, gamma: f64) -> Result<(DVector<f64>, f64)> {
        check_dim(self.dim(), x.len())?;
        check_gamma(gamma)?;
        Ok(self.eval_prox(x, gamma))
    }

    fn jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        check_gamma(gamma)?;
        Ok(self.eval_jac_vec(x, gamma, v))
    }

    fn conjugate_value(&self, y: &DVector<f64>) -> Result<Option<ExtReal>> {
        check_dim(self.dim(), y.len())?;
        Ok(self.eval_conjugate(y))
    }
}

/// `g ≡ 0`: the proximal mapping is the identity.
#[derive(Debug, Clone, Copy)]
pub struct ZeroFunction {
    n: usize,
}

impl ZeroFunction {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl ProxOracle for ZeroFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, _z: &DVector<f64>) -> ExtReal {
        ExtReal::ZERO
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        (x.clone(), 0.0)
    }

    fn eval_jac_vec(&self, _x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // indicator of {0}
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::indicator(y.amax() <= ACTIVE_TOL))
    }
}
