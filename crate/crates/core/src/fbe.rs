//! The forward-backward envelope (FBE) of `φ = f + g`.
//!
//! For a stepsize `γ` the envelope is computed in its minimum form
//!
//! ```text
//! x̄      = prox_{γg}(x − γ∇f(x))
//! φ_γ(x) = f(x) + ⟨∇f(x), x̄ − x⟩ + ‖x̄ − x‖²/(2γ) + g(x̄)
//! ∇φ_γ(x) = (I − γ∇²f(x)) R_γ(x),   R_γ(x) = (x − x̄)/γ
//! ```
//!
//! and the approximate generalized Hessian `H = γ⁻¹Q(I − PQ)`, with
//! `Q = I − γ∇²f(x)` and `P` a generalized Jacobian of the prox at the
//! forward point, is only ever applied to vectors.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::prox::{ExtReal, ProxOracle};
use crate::smooth::SmoothOracle;

/// `γ = GAMMA_FRACTION / L`.
pub const GAMMA_FRACTION: f64 = 0.95;
/// Factor applied to power-iteration estimates so they bound `L_f` from above.
pub const LIPSCHITZ_INFLATION: f64 = 1.01;
/// Initial Lipschitz guess when the smooth term offers no estimate.
pub const DEFAULT_INITIAL_LIPSCHITZ: f64 = 1.0;
/// Halvings of `γ` beyond which `f` is declared non-smooth or non-convex.
pub const MAX_HALVINGS: usize = 60;

/// Everything the solver needs at one iterate, for one value of `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbePoint {
    pub x: DVector<f64>,
    pub fx: f64,
    pub grad_fx: DVector<f64>,
    /// `x − γ∇f(x)`
    pub forward: DVector<f64>,
    /// `T_γ(x) = prox_{γg}(forward)`
    pub tx: DVector<f64>,
    pub g_tx: f64,
    /// `R_γ(x) = (x − T_γ(x))/γ`
    pub residual: DVector<f64>,
    pub fbe: f64,
    pub fbe_grad: DVector<f64>,
    pub gamma: f64,
}

impl FbePoint {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Oracle-call counters, cumulative over the lifetime of a problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub prox: u64,
    pub hess_vec: u64,
    pub halvings: usize,
}

/// A composite problem `f + g` together with the current stepsize and
/// Lipschitz estimate. `γ < 1/L` holds after every public operation.
#[derive(Debug, Clone)]
pub struct FbeProblem {
    smooth: Arc<dyn SmoothOracle>,
    nonsmooth: Arc<dyn ProxOracle>,
    gamma: f64,
    lipschitz: f64,
    counts: CallCounts,
}

impl FbeProblem {
    /// Uses the smooth term's Lipschitz estimate (inflated) when available,
    /// otherwise [`DEFAULT_INITIAL_LIPSCHITZ`] with adaptive correction.
    pub fn new(smooth: Arc<dyn SmoothOracle>, nonsmooth: Arc<dyn ProxOracle>) -> Result<Self> {
        Self::with_initial_guess(smooth, nonsmooth, DEFAULT_INITIAL_LIPSCHITZ)
    }

    /// Like [`new`](FbeProblem::new) but with `fallback` as the initial
    /// Lipschitz guess when no estimate is available.
    pub fn with_initial_guess(
        smooth: Arc<dyn SmoothOracle>,
        nonsmooth: Arc<dyn ProxOracle>,
        fallback: f64,
    ) -> Result<Self> {
        let lipschitz = match smooth.lipschitz_estimate() {
            Some(l) if l > 0.0 => LIPSCHITZ_INFLATION * l,
            _ => fallback,
        };
        Self::with_lipschitz(smooth, nonsmooth, lipschitz)
    }

    /// Starts from the given Lipschitz estimate, `γ = 0.95/L`.
    pub fn with_lipschitz(
        smooth: Arc<dyn SmoothOracle>,
        nonsmooth: Arc<dyn ProxOracle>,
        lipschitz: f64,
    ) -> Result<Self> {
        check_dim(smooth.dim(), nonsmooth.dim())?;
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lipschitz",
                reason: format!("must be positive and finite, got {lipschitz}"),
            });
        }
        Ok(Self {
            smooth,
            nonsmooth,
            gamma: GAMMA_FRACTION / lipschitz,
            lipschitz,
            counts: CallCounts::default(),
        })
    }

    /// Starts from an explicit stepsize; the implied estimate is `L = 0.95/γ`.
    pub fn with_gamma(
        smooth: Arc<dyn SmoothOracle>,
        nonsmooth: Arc<dyn ProxOracle>,
        gamma: f64,
    ) -> Result<Self> {
        crate::error::check_gamma(gamma)?;
        Self::with_lipschitz(smooth, nonsmooth, GAMMA_FRACTION / gamma)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn counts(&self) -> CallCounts {
        self.counts
    }

    pub fn smooth(&self) -> &Arc<dyn SmoothOracle> {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &Arc<dyn ProxOracle> {
        &self.nonsmooth
    }

    /// `φ(x) = f(x) + g(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> Result<ExtReal> {
        Ok(ExtReal::finite(self.smooth.value(x)?) + self.nonsmooth.g_value(x)?)
    }

    /// Forward-backward quantities and the FBE at `x` for the current `γ`.
    pub fn evaluate(&mut self, x: &DVector<f64>) -> Result<FbePoint> {
        let gamma = self.gamma;
        let fx = self.smooth.value(x)?;
        let grad_fx = self.smooth.gradient(x)?;
        let forward = x - &grad_fx * gamma;
        let (tx, g_tx) = self.nonsmooth.prox(&forward, gamma)?;
        self.counts.prox += 1;
        let step = &tx - x;
        let fbe = fx + grad_fx.dot(&step) + step.norm_squared() / (2.0 * gamma) + g_tx;
        if !fbe.is_finite() {
            return Err(Error::NonFinite("forward-backward envelope"));
        }
        let residual = -step / gamma;
        let curvature = self.smooth.hess_vec(x, &residual)?;
        self.counts.hess_vec += 1;
        let fbe_grad = &residual - curvature * gamma;
        Ok(FbePoint { x: x.clone(), fx, grad_fx, forward, tx, g_tx, residual, fbe, fbe_grad, gamma })
    }

    /// `H p` with `H = γ⁻¹Q(I − PQ)` at the cached point.
    pub fn hess_vec_fbe(&mut self, point: &FbePoint, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), p.len())?;
        let gamma = point.gamma;
        let u = self.smooth.hess_vec(&point.x, p)?;
        let v = p - u * gamma;
        let w = p - self.nonsmooth.jac_vec(&point.forward, gamma, &v)?;
        let qw = &w - self.smooth.hess_vec(&point.x, &w)? * gamma;
        self.counts.hess_vec += 2;
        Ok(qw / gamma)
    }

    /// `γ ← γ/2`, `L ← 2L`. Fails once [`MAX_HALVINGS`] is exceeded.
    pub fn halve_gamma(&mut self) -> Result<()> {
        if self.counts.halvings >= MAX_HALVINGS {
            return Err(Error::TooManyHalvings(MAX_HALVINGS));
        }
        self.gamma *= 0.5;
        self.lipschitz *= 2.0;
        self.counts.halvings += 1;
        log::debug!("gamma halved to {:e} (L = {:e})", self.gamma, self.lipschitz);
        Ok(())
    }

    /// Halves `γ` until the quadratic upper bound
    /// `f(x̄) ≤ f(x) + ⟨∇f(x), x̄ − x⟩ + (L/2)‖x̄ − x‖²` holds at `x̄ = T_γ(x)`,
    /// re-evaluating the point after every change. Returns the (possibly new)
    /// point and whether `γ` changed.
    pub fn adapt_gamma(&mut self, point: FbePoint) -> Result<(FbePoint, bool)> {
        let mut point = if point.gamma == self.gamma { point } else { self.evaluate(&point.x)? };
        let mut changed = false;
        loop {
            let step = &point.tx - &point.x;
            let bound = point.fx
                + point.grad_fx.dot(&step)
                + 0.5 * self.lipschitz * step.norm_squared()
                + 1e-12 * (1.0 + point.fx.abs());
            if self.smooth.value(&point.tx)? <= bound {
                return Ok((point, changed));
            }
            self.halve_gamma()?;
            changed = true;
            point = self.evaluate(&point.x)?;
        }
    }
}
