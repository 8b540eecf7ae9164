//! Matrix-free conjugate gradient for the regularized Newton system
//! `(H + δI) d = −∇φ_γ(x)`.
//!
//! The initial residual is the true residual of the warm start,
//! `e₀ = rhs − M d₀`, so a converged result always certifies
//! `‖M d − rhs‖ ≤ ε` whatever the warm start. Convergence of the recursive
//! residual is confirmed against the true residual before returning.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// Directions with `⟨p, Mp⟩ ≤ CURVATURE_TOL·‖p‖²` stop the iteration.
pub const CURVATURE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    MaxIterations,
    NegativeCurvature,
}

impl CgStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CgStatus::Converged => "converged",
            CgStatus::MaxIterations => "max_iterations",
            CgStatus::NegativeCurvature => "negative_curvature",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub d: DVector<f64>,
    pub status: CgStatus,
    pub iterations: usize,
    pub final_residual_norm: f64,
}

/// Solves `M d = rhs` to `‖M d − rhs‖ ≤ eps` starting from `warm_start`.
pub fn cg_solve<F>(
    matvec: F,
    rhs: &DVector<f64>,
    eps: f64,
    warm_start: &DVector<f64>,
    max_iters: usize,
) -> Result<CgOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    cg_solve_observed(matvec, rhs, eps, warm_start, max_iters, |_| {})
}

/// [`cg_solve`], calling `observer` with every iterate (warm start included).
pub fn cg_solve_observed<F, O>(
    mut matvec: F,
    rhs: &DVector<f64>,
    eps: f64,
    warm_start: &DVector<f64>,
    max_iters: usize,
    mut observer: O,
) -> Result<CgOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    O: FnMut(&DVector<f64>),
{
    check_dim(rhs.len(), warm_start.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps", reason: format!("must be positive, got {eps}") });
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter { name: "max_iters", reason: "must be at least 1".into() });
    }
    let mut apply = |p: &DVector<f64>| -> Result<DVector<f64>> {
        let z = matvec(p)?;
        check_dim(p.len(), z.len())?;
        if z.iter().all(|v| v.is_finite()) {
            Ok(z)
        } else {
            Err(Error::NonFinite("conjugate-gradient matvec"))
        }
    };

    let mut d = warm_start.clone();
    observer(&d);
    let mut e = if d.iter().all(|&v| v == 0.0) { rhs.clone() } else { rhs - apply(&d)? };
    let mut e_sq = e.norm_squared();
    let mut iterations = 0;
    if e_sq.sqrt() <= eps {
        return Ok(CgOutcome { d, status: CgStatus::Converged, iterations, final_residual_norm: e_sq.sqrt() });
    }

    let mut p = e.clone();
    let mut best = (e_sq, d.clone());
    while iterations < max_iters {
        let z = apply(&p)?;
        let pz = p.dot(&z);
        if pz <= CURVATURE_TOL * p.norm_squared() {
            return Ok(CgOutcome {
                d,
                status: CgStatus::NegativeCurvature,
                iterations,
                final_residual_norm: e_sq.sqrt(),
            });
        }
        let alpha = e_sq / pz;
        d.axpy(alpha, &p, 1.0);
        e.axpy(-alpha, &z, 1.0);
        iterations += 1;
        observer(&d);
        let next_sq = e.norm_squared();
        if next_sq < best.0 {
            best = (next_sq, d.clone());
        }

        if next_sq.sqrt() <= eps {
            let true_residual = rhs - apply(&d)?;
            let true_norm = true_residual.norm();
            if true_norm <= eps {
                return Ok(CgOutcome {
                    d,
                    status: CgStatus::Converged,
                    iterations,
                    final_residual_norm: true_norm,
                });
            }
            // recursive residual drifted; continue from the true one
            e = true_residual;
            e_sq = e.norm_squared();
            best = (e_sq, d.clone());
            p = e.clone();
            continue;
        }
        let beta = next_sq / e_sq;
        p = &e + p * beta;
        e_sq = next_sq;
    }
    Ok(CgOutcome {
        d: best.1,
        status: CgStatus::MaxIterations,
        iterations,
        final_residual_norm: best.0.sqrt(),
    })
}
