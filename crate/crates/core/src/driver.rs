//! Outer loops: the forward-backward truncated-Newton method and the relaxed
//! forward-backward splitting baseline.

use std::time::Instant;

use nalgebra::DVector;

use crate::cg::{cg_solve, CgStatus};
use crate::error::{check_dim, Error, Result};
use crate::fbe::{CallCounts, FbePoint, FbeProblem};

/// Parameters of the truncated-Newton loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once `‖R_γ(x)‖ ≤ tolerance`.
    pub tolerance: f64,
    /// `σ = sigma_fraction · γ(1 − γL)/2`, recomputed whenever `γ` changes.
    pub sigma_fraction: f64,
    /// `δ_k = ζ‖∇φ_γ(x^k)‖^ν`.
    pub zeta: f64,
    /// `η_k = min(η̄, ‖∇φ_γ(x^k)‖^ρ)`, `ε_k = η_k‖∇φ_γ(x^k)‖`.
    pub eta_bar: f64,
    pub rho: f64,
    pub nu: f64,
    pub max_outer: usize,
    pub max_backtracks: usize,
    /// CG iteration cap; `None` means `2n`.
    pub cg_max_iters: Option<usize>,
    /// Lipschitz guess used when the smooth term has no estimate.
    pub initial_lipschitz: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            sigma_fraction: 0.5,
            zeta: 0.1,
            eta_bar: 0.5,
            rho: 1.0,
            nu: 1.0,
            max_outer: 500,
            max_backtracks: 50,
            cg_max_iters: None,
            initial_lipschitz: crate::fbe::DEFAULT_INITIAL_LIPSCHITZ,
        }
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

fn open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {value}")))
    }
}

fn half_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1], got {value}")))
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("eps", format!("must be positive, got {}", self.tolerance)));
        }
        open_unit("sigma_frac", self.sigma_fraction)?;
        open_unit("zeta", self.zeta)?;
        open_unit("eta_bar", self.eta_bar)?;
        half_open_unit("rho", self.rho)?;
        half_open_unit("nu", self.nu)?;
        if self.cg_max_iters == Some(0) {
            return Err(invalid("cg_max_iters", "must be at least 1".into()));
        }
        if !(self.initial_lipschitz > 0.0 && self.initial_lipschitz.is_finite()) {
            return Err(invalid("initial_lipschitz", format!("must be positive, got {}", self.initial_lipschitz)));
        }
        Ok(())
    }

    /// `σ` for the problem's current `γ` and `L`.
    pub fn sigma(&self, problem: &FbeProblem) -> f64 {
        let gamma = problem.gamma();
        self.sigma_fraction * gamma * (1.0 - gamma * problem.lipschitz()) / 2.0
    }
}

/// One row of the convergence trace. FBS rows carry `cg_status = None` and
/// the relaxation parameter in `tau`; FBTN fallback steps carry `tau = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub fbe: f64,
    pub res_norm: f64,
    pub tau: f64,
    pub cg_iters: usize,
    pub cg_status: Option<CgStatus>,
    pub delta: f64,
    pub eps_inner: f64,
    pub gamma: f64,
    pub hessvec_total: u64,
    pub prox_total: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    ResidualBelowTol,
    MaxOuterIterations,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    pub status: SolveStatus,
    pub trace: Vec<IterationRecord>,
    pub final_point: FbePoint,
    pub counts: CallCounts,
}

fn check_start(problem: &FbeProblem, x0: &DVector<f64>) -> Result<()> {
    check_dim(problem.dim(), x0.len())?;
    if x0.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("x0", "initial point must be finite".into()))
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn finish(problem: &FbeProblem, point: FbePoint, status: SolveStatus, trace: Vec<IterationRecord>) -> Solution {
    log::info!(
        "{:?} after {} iterations: |R| = {:e}, fbe = {:e}",
        status,
        trace.len(),
        point.residual_norm(),
        point.fbe
    );
    Solution { x: point.x.clone(), status, trace, final_point: point, counts: problem.counts() }
}

/// Forward-backward truncated-Newton method.
///
/// Each iteration computes an inexact regularized Newton direction on the
/// FBE by conjugate gradient and accepts the largest `τ ∈ {1, ½, ¼, …}` for
/// which `x⁺ = (1 − τ)T_γ(x) + τ(x + d)` satisfies
/// `φ_γ(x⁺) ≤ φ_γ(x) − σ‖R_γ(x)‖²`. The stepsize adapts whenever the
/// quadratic upper bound on `f` fails or CG meets nonpositive curvature.
pub fn fbtn_solve(problem: &mut FbeProblem, x0: &DVector<f64>, opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    check_start(problem, x0)?;
    let start = Instant::now();
    let n = problem.dim();
    let cg_cap = opts.cg_max_iters.unwrap_or(2 * n).max(1);
    let mut trace = Vec::new();
    let mut warm = DVector::zeros(n);
    let mut point = problem.evaluate(x0)?;

    loop {
        let (adapted, changed) = problem.adapt_gamma(point)?;
        point = adapted;
        if changed {
            warm.fill(0.0);
        }
        let res_norm = point.residual_norm();
        if res_norm <= opts.tolerance {
            return Ok(finish(problem, point, SolveStatus::ResidualBelowTol, trace));
        }
        if trace.len() >= opts.max_outer {
            return Ok(finish(problem, point, SolveStatus::MaxOuterIterations, trace));
        }

        let grad_norm = point.fbe_grad.norm();
        let delta = opts.zeta * grad_norm.powf(opts.nu);
        let eta = opts.eta_bar.min(grad_norm.powf(opts.rho));
        let eps_inner = eta * grad_norm;
        let rhs = -&point.fbe_grad;
        let cg = {
            let point = &point;
            let problem = &mut *problem;
            cg_solve(|p| Ok(problem.hess_vec_fbe(point, p)? + p * delta), &rhs, eps_inner, &warm, cg_cap)?
        };
        if cg.status == CgStatus::NegativeCurvature {
            log::debug!("nonpositive curvature in CG at k = {}", trace.len());
            problem.halve_gamma()?;
            point = problem.evaluate(&point.x)?;
            warm.fill(0.0);
            continue;
        }

        let sigma = opts.sigma(problem);
        let target = point.fbe - sigma * res_norm * res_norm;
        let newton_point = &point.x + &cg.d;
        let mut tau = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let candidate = &point.tx * (1.0 - tau) + &newton_point * tau;
            let next = problem.evaluate(&candidate)?;
            if next.fbe <= target {
                accepted = Some(next);
                break;
            }
            tau *= 0.5;
        }
        let next = match accepted {
            Some(next) => next,
            None => {
                log::debug!("linesearch failed at k = {}; taking a forward-backward step", trace.len());
                tau = 0.0;
                let (adapted, changed) = problem.adapt_gamma(point.clone())?;
                if changed {
                    warm.fill(0.0);
                }
                problem.evaluate(&adapted.tx)?
            }
        };

        let counts = problem.counts();
        trace.push(IterationRecord {
            k: trace.len(),
            fbe: point.fbe,
            res_norm,
            tau,
            cg_iters: cg.iterations,
            cg_status: Some(cg.status),
            delta,
            eps_inner,
            gamma: point.gamma,
            hessvec_total: counts.hess_vec,
            prox_total: counts.prox,
            wall_ms: elapsed_ms(start),
        });
        log::debug!(
            "k = {:>3}  fbe = {:.12e}  |R| = {:.3e}  tau = {}  cg = {}",
            trace.len() - 1,
            point.fbe,
            res_norm,
            tau,
            cg.iterations
        );
        if next.gamma == problem.gamma() {
            warm = cg.d;
        } else {
            warm.fill(0.0);
        }
        point = next;
    }
}

/// Relaxed forward-backward splitting `x⁺ = (1 − λ)x + λT_γ(x)`.
///
/// Requires `λ ∈ (0, 2 − γL/2)`. With `f ≡ 0` this is the proximal point
/// method. The stepsize adapts exactly as in [`fbtn_solve`].
pub fn fbs_solve(
    problem: &mut FbeProblem,
    x0: &DVector<f64>,
    relaxation: f64,
    tolerance: f64,
    max_iters: usize,
) -> Result<Solution> {
    check_start(problem, x0)?;
    if !(tolerance > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {tolerance}")));
    }
    let upper = 2.0 - problem.gamma() * problem.lipschitz() / 2.0;
    if !(relaxation > 0.0 && relaxation < upper) {
        return Err(invalid("relaxation", format!("must lie in (0, {upper}), got {relaxation}")));
    }
    let start = Instant::now();
    let mut trace = Vec::new();
    let mut point = problem.evaluate(x0)?;
    loop {
        let (adapted, _) = problem.adapt_gamma(point)?;
        point = adapted;
        let res_norm = point.residual_norm();
        if res_norm <= tolerance {
            return Ok(finish(problem, point, SolveStatus::ResidualBelowTol, trace));
        }
        if trace.len() >= max_iters {
            return Ok(finish(problem, point, SolveStatus::MaxOuterIterations, trace));
        }
        let next_x = &point.x * (1.0 - relaxation) + &point.tx * relaxation;
        let counts = problem.counts();
        trace.push(IterationRecord {
            k: trace.len(),
            fbe: point.fbe,
            res_norm,
            tau: relaxation,
            cg_iters: 0,
            cg_status: None,
            delta: 0.0,
            eps_inner: 0.0,
            gamma: point.gamma,
            hessvec_total: counts.hess_vec,
            prox_total: counts.prox,
            wall_ms: elapsed_ms(start),
        });
        point = problem.evaluate(&next_x)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{L1Norm, ProxOracle, ZeroFunction};
    use crate::smooth::{QuadraticSmooth, SmoothOracle, ZeroSmooth};
    use nalgebra::{dmatrix, dvector, DMatrix};
    use std::sync::Arc;

    #[test]
    fn already_optimal_start_returns_empty_trace() {
        let f: Arc<dyn SmoothOracle> =
            Arc::new(QuadraticSmooth::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap());
        let mut problem = FbeProblem::new(f, Arc::new(L1Norm::new(2, 1.0).unwrap())).unwrap();
        let sol = fbtn_solve(&mut problem, &DVector::zeros(2), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::ResidualBelowTol);
        assert!(sol.trace.is_empty());
    }

    #[test]
    fn fbs_on_identity_quadratic_halves_each_step() {
        let f: Arc<dyn SmoothOracle> =
            Arc::new(QuadraticSmooth::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap());
        let mut problem = FbeProblem::with_gamma(f, Arc::new(ZeroFunction::new(2)), 0.5).unwrap();
        let x0 = dvector![8.0, -4.0];
        let sol = fbs_solve(&mut problem, &x0, 1.0, 1e-6, 5).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxOuterIterations);
        assert_eq!(sol.x, x0 * 0.5f64.powi(5));
        for pair in sol.trace.windows(2) {
            assert_eq!(pair[1].res_norm / pair[0].res_norm, 0.5);
        }
    }

    #[test]
    fn proximal_point_on_l1_reaches_zero() {
        let g: Arc<dyn ProxOracle> = Arc::new(L1Norm::new(3, 1.0).unwrap());
        let mut problem = FbeProblem::with_gamma(Arc::new(ZeroSmooth::new(3)), g, 0.5).unwrap();
        let sol = fbs_solve(&mut problem, &dvector![2.0, -1.2, 0.3], 1.0, 1e-12, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::ResidualBelowTol);
        assert_eq!(sol.x, DVector::zeros(3));
        assert_eq!(sol.trace.len(), 4);
    }

    #[test]
    fn fbs_rejects_relaxation_outside_window() {
        let f: Arc<dyn SmoothOracle> =
            Arc::new(QuadraticSmooth::new(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap());
        let mut problem = FbeProblem::new(f, Arc::new(ZeroFunction::new(1))).unwrap();
        assert!(fbs_solve(&mut problem, &dvector![1.0], 1.6, 1e-8, 10).is_err());
        assert!(fbs_solve(&mut problem, &dvector![1.0], 0.0, 1e-8, 10).is_err());
    }

    #[test]
    fn options_are_validated() {
        let bad = [
            SolverOptions { zeta: 1.0, ..Default::default() },
            SolverOptions { eta_bar: 0.0, ..Default::default() },
            SolverOptions { rho: 1.5, ..Default::default() },
            SolverOptions { nu: 0.0, ..Default::default() },
            SolverOptions { sigma_fraction: 1.0, ..Default::default() },
            SolverOptions { tolerance: -1.0, ..Default::default() },
        ];
        for opts in bad {
            assert!(opts.validate().is_err(), "{opts:?}");
        }
        SolverOptions::default().validate().unwrap();
    }

    #[test]
    fn small_lasso_converges() {
        let f: Arc<dyn SmoothOracle> = Arc::new(
            crate::smooth::LeastSquaresSmooth::new(
                dmatrix![1.0, 2.0, 0.5; -1.0, 0.3, 2.0; 0.2, 0.1, -1.0],
                dvector![1.0, -2.0, 0.5],
            )
            .unwrap(),
        );
        let g: Arc<dyn ProxOracle> = Arc::new(L1Norm::new(3, 0.3).unwrap());
        let mut problem = FbeProblem::new(f, g).unwrap();
        let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
        let sol = fbtn_solve(&mut problem, &DVector::zeros(3), &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::ResidualBelowTol);
        assert!(sol.final_point.residual_norm() <= 1e-10);
        assert!(sol.trace.len() < 30);
    }

    #[test]
    fn rejects_non_finite_start() {
        let f: Arc<dyn SmoothOracle> = Arc::new(ZeroSmooth::new(1));
        let mut problem = FbeProblem::new(f, Arc::new(ZeroFunction::new(1))).unwrap();
        assert!(fbtn_solve(&mut problem, &dvector![f64::NAN], &SolverOptions::default()).is_err());
        assert!(fbtn_solve(&mut problem, &dvector![1.0, 2.0], &SolverOptions::default()).is_err());
    }
}
