//! The check suites catch deliberately broken generalized-Hessian and CG
//! implementations.

use fbtn::cg::{CgOutcome, CgStatus};
use fbtn::fbe::{FbePoint, FbeProblem};
use fbtn_bench::checks::{self, run_checks, Subjects};
use fbtn_bench::data::{self, gaussian_vector};
use nalgebra::{DMatrix, DVector};

/// `Q(I − PQ)v` with `Q = I − γ∇²f`: the generalized Hessian without `γ⁻¹`.
fn hess_vec_without_inverse_gamma(p: &mut FbeProblem, point: &FbePoint, v: &DVector<f64>) -> fbtn::Result<DVector<f64>> {
    let gamma = point.gamma;
    let f = p.smooth().clone();
    let q = |u: &DVector<f64>| -> fbtn::Result<DVector<f64>> { Ok(u - f.hess_vec(&point.x, u)? * gamma) };
    let w = v - p.nonsmooth().jac_vec(&point.forward, gamma, &q(v)?)?;
    q(&w)
}

/// CG whose initial residual ignores the warm start: `e ← rhs`, `d ← d0`.
fn cg_literal_warm_start(
    matvec: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    rhs: &DVector<f64>,
    eps: f64,
    warm: &DVector<f64>,
    max_iters: usize,
    observer: &mut dyn FnMut(&DVector<f64>),
) -> fbtn::Result<CgOutcome> {
    let mut d = warm.clone();
    let mut e = rhs.clone();
    let mut p = e.clone();
    let mut ee = e.norm_squared();
    observer(&d);
    for k in 0..max_iters {
        if ee.sqrt() <= eps {
            return Ok(CgOutcome { d, status: CgStatus::Converged, iterations: k, final_residual_norm: ee.sqrt() });
        }
        let mp = matvec(&p);
        let curv = p.dot(&mp);
        if curv <= 1e-14 * p.norm_squared() {
            return Ok(CgOutcome { d, status: CgStatus::NegativeCurvature, iterations: k, final_residual_norm: ee.sqrt() });
        }
        let alpha = ee / curv;
        d += &p * alpha;
        e -= mp * alpha;
        let next = e.norm_squared();
        p = &e + &p * (next / ee);
        ee = next;
        observer(&d);
    }
    let converged = ee.sqrt() <= eps;
    let status = if converged { CgStatus::Converged } else { CgStatus::MaxIterations };
    Ok(CgOutcome { d, status, iterations: max_iters, final_residual_norm: ee.sqrt() })
}

#[test]
fn library_subjects_pass_every_suite() {
    let report = run_checks(1, &Subjects::default());
    assert!(report.passed(), "failures: {:?}", report.failures().collect::<Vec<_>>());
}

#[test]
fn dropping_inverse_gamma_fails_psd_bounds() {
    let subjects = Subjects { hess_vec_fbe: hess_vec_without_inverse_gamma, ..Subjects::default() };
    let report = run_checks(1, &subjects);
    assert!(report.failed_names().contains(&"fbe.psd_bounds".to_string()), "{:?}", report.failed_names());
}

#[test]
fn literal_warm_start_fails_exit_contract() {
    let subjects = Subjects { cg: cg_literal_warm_start, ..Subjects::default() };
    let report = run_checks(1, &subjects);
    assert!(report.failed_names().contains(&"cg.exit_contract".to_string()), "{:?}", report.failed_names());
}

#[test]
fn literal_warm_start_agrees_from_zero() {
    // The mutant only differs when the warm start is nonzero.
    let mut rng = data::rng(9);
    let sys = checks::spd_system(&mut rng, 20, 1.0, 9.0);
    let m = &sys.matrix;
    let zero = DVector::zeros(20);
    let a = cg_literal_warm_start(&|p| m * p, &sys.rhs, 1e-10, &zero, 40, &mut |_| {}).unwrap();
    let b = fbtn::cg::cg_solve(|p| Ok(m * p), &sys.rhs, 1e-10, &zero, 40).unwrap();
    assert_eq!(a.status, CgStatus::Converged);
    assert!((a.d - b.d).amax() < 1e-9);
}

fn dense(n: usize, mut apply: impl FnMut(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        out.set_column(j, &apply(&e));
    }
    out
}

#[test]
fn generalized_hessian_matches_dense_assembly() {
    let mut rng = data::rng(21);
    for s in checks::sample_instances(21) {
        let n = s.instance.dim();
        let mut p = FbeProblem::new(s.instance.smooth.clone(), s.instance.nonsmooth.clone()).unwrap();
        let x = gaussian_vector(&mut rng, n);
        let point = p.evaluate(&x).unwrap();
        let gamma = point.gamma;
        let hf = dense(n, |e| s.instance.smooth.hess_vec(&x, e).unwrap());
        let jac = dense(n, |e| s.instance.nonsmooth.jac_vec(&point.forward, gamma, e).unwrap());
        let q = DMatrix::identity(n, n) - &hf * gamma;
        let assembled = &q * (DMatrix::identity(n, n) - &jac * &q) / gamma;
        let product = dense(n, |e| p.hess_vec_fbe(&point, e).unwrap());
        let err = (&assembled - &product).amax();
        assert!(err <= 1e-10 * (1.0 + assembled.amax()), "{}: {err:e}", s.name);
    }
}
