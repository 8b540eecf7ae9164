mod common;

use std::sync::Arc;

use fbtn::driver::*;
use fbtn::fbe::FbeProblem;
use fbtn::prox::*;
use nalgebra::DVector;

fn lasso_problem(seed: u64) -> FbeProblem {
    let l = common::lasso(seed, 40, 100);
    FbeProblem::new(l.f, l.g).unwrap()
}

/// Checks the sufficient decrease condition between consecutive trace rows.
fn assert_linesearch_descent(sol: &Solution, opts: &SolverOptions, lipschitz: f64) {
    let mut fbe: Vec<f64> = sol.trace.iter().map(|r| r.fbe).collect();
    fbe.push(sol.final_point.fbe);
    let mut gammas: Vec<f64> = sol.trace.iter().map(|r| r.gamma).collect();
    gammas.push(sol.final_point.gamma);
    for (k, rec) in sol.trace.iter().enumerate() {
        if rec.tau == 0.0 || gammas[k + 1] != rec.gamma {
            continue;
        }
        let sigma = opts.sigma_fraction * rec.gamma * (1.0 - rec.gamma * lipschitz) / 2.0;
        assert!(fbe[k + 1] <= fbe[k] - sigma * rec.res_norm.powi(2), "k = {k}: {} vs {}", fbe[k + 1], fbe[k]);
    }
}

#[test]
fn accepted_steps_satisfy_sufficient_decrease() {
    let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
    for seed in 0..4 {
        let mut p = lasso_problem(seed);
        let lipschitz = p.lipschitz();
        let sol = fbtn_solve(&mut p, &DVector::zeros(100), &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::ResidualBelowTol);
        assert_eq!(p.lipschitz(), lipschitz);
        assert_linesearch_descent(&sol, &opts, lipschitz);
    }
}

#[test]
fn stepsize_never_increases() {
    let l = common::lasso(7, 30, 60);
    let mut p = FbeProblem::with_lipschitz(l.f, l.g, 1e-2).unwrap();
    let sol = fbtn_solve(&mut p, &DVector::zeros(60), &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::ResidualBelowTol);
    assert!(sol.counts.halvings > 0);
    for w in sol.trace.windows(2) {
        assert!(w[1].gamma <= w[0].gamma);
    }
}

#[test]
fn solutions_satisfy_the_fixed_point_condition() {
    let opts = SolverOptions { tolerance: 1e-9, ..Default::default() };
    let mut p = lasso_problem(3);
    let sol = fbtn_solve(&mut p, &DVector::zeros(100), &opts).unwrap();
    let point = p.evaluate(&sol.x).unwrap();
    assert!(point.residual_norm() <= 1e-9);
    // The forward-backward image has exact zeros.
    let x = &point.tx;
    let lambda = common::lasso(3, 40, 100).lambda;
    let grad = p.smooth().gradient(x).unwrap();
    for i in 0..100 {
        if x[i] != 0.0 {
            assert!((grad[i] + lambda * x[i].signum()).abs() <= 1e-6);
        } else {
            assert!(grad[i].abs() <= lambda + 1e-6);
        }
    }
}

#[test]
fn fbtn_and_fbs_agree_on_the_minimizer() {
    let mut r = common::rng(9);
    let n = 12;
    let f = common::quadratic(9, n, 1.0, 9.0);
    let g: Arc<dyn ProxOracle> = Arc::new(SeparableBox::uniform(n, -0.3, 0.5).unwrap());
    let x0 = common::gaussian_vector(&mut r, n);
    let mut p1 = FbeProblem::new(f.clone(), g.clone()).unwrap();
    let mut p2 = FbeProblem::new(f, g).unwrap();
    let a = fbtn_solve(&mut p1, &x0, &SolverOptions { tolerance: 1e-10, ..Default::default() }).unwrap();
    let b = fbs_solve(&mut p2, &x0, 1.0, 1e-10, 100_000).unwrap();
    assert_eq!(a.status, SolveStatus::ResidualBelowTol);
    assert_eq!(b.status, SolveStatus::ResidualBelowTol);
    assert!((&a.x - &b.x).amax() <= 1e-8);
    assert!(a.trace.len() < b.trace.len());
}

#[test]
fn residuals_decrease_in_the_tail() {
    let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
    for seed in 0..3 {
        let mut p = lasso_problem(seed);
        let sol = fbtn_solve(&mut p, &DVector::zeros(100), &opts).unwrap();
        let tail: Vec<f64> = sol.trace.iter().rev().take(3).map(|r| r.res_norm).collect();
        for w in tail.windows(2) {
            assert!(w[0] < w[1], "seed {seed}: tail {tail:?}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
    let run = || {
        let mut p = lasso_problem(5);
        fbtn_solve(&mut p, &DVector::zeros(100), &opts).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.x, b.x);
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        assert_eq!(
            (x.fbe, x.res_norm, x.tau, x.cg_iters, x.gamma, x.hessvec_total, x.prox_total),
            (y.fbe, y.res_norm, y.tau, y.cg_iters, y.gamma, y.hessvec_total, y.prox_total)
        );
    }
}

#[test]
fn iteration_cap_is_reported() {
    let opts = SolverOptions { tolerance: 1e-14, max_outer: 3, ..Default::default() };
    let mut p = lasso_problem(0);
    let sol = fbtn_solve(&mut p, &DVector::zeros(100), &opts).unwrap();
    assert_eq!(sol.status, SolveStatus::MaxOuterIterations);
    assert_eq!(sol.trace.len(), 3);
}
