mod common;

use common::{gaussian_vector, rng, spd_matrix};
use fbtn::cg::*;
use nalgebra::{DMatrix, DVector};

fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>, eps: f64, warm: &DVector<f64>, cap: usize) -> CgOutcome {
    cg_solve(|p| Ok(m * p), rhs, eps, warm, cap).unwrap()
}

#[test]
fn converged_exit_meets_the_true_residual_tolerance() {
    let mut r = rng(1);
    for n in [1, 5, 30] {
        let m = spd_matrix(&mut r, n, 0.1, 50.0);
        for eps in [1e-2, 1e-6, 1e-10] {
            let rhs = gaussian_vector(&mut r, n);
            let warm = gaussian_vector(&mut r, n);
            let out = solve(&m, &rhs, eps, &warm, 10 * n);
            assert_eq!(out.status, CgStatus::Converged);
            let true_res = (&m * &out.d - &rhs).norm();
            assert!(true_res <= eps, "n = {n}: {true_res} > {eps}");
            assert!((out.final_residual_norm - true_res).abs() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}

#[test]
fn terminates_within_dimension_on_well_conditioned_systems() {
    let mut r = rng(2);
    for _ in 0..5 {
        let m = spd_matrix(&mut r, 30, 1.0, 9.0);
        let rhs = gaussian_vector(&mut r, 30);
        let out = solve(&m, &rhs, 1e-10 * rhs.norm(), &DVector::zeros(30), 60);
        assert_eq!(out.status, CgStatus::Converged);
        assert!(out.iterations <= 30, "{} iterations", out.iterations);
    }
}

#[test]
fn distinct_eigenvalues_bound_the_iteration_count() {
    let mut r = rng(3);
    let q = common::gaussian_matrix(&mut r, 20, 20).qr().q();
    let eig = DVector::from_fn(20, |i, _| [1.0, 2.0, 5.0][i % 3]);
    let m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let rhs = gaussian_vector(&mut r, 20);
    let out = solve(&m, &rhs, 1e-9, &DVector::zeros(20), 40);
    assert_eq!(out.status, CgStatus::Converged);
    assert!(out.iterations <= 4, "{} iterations", out.iterations);
}

#[test]
fn warm_start_gives_the_same_solution() {
    let mut r = rng(4);
    let m = spd_matrix(&mut r, 15, 0.5, 5.0);
    let rhs = gaussian_vector(&mut r, 15);
    let cold = solve(&m, &rhs, 1e-11, &DVector::zeros(15), 100);
    let nearby = &cold.d + gaussian_vector(&mut r, 15) * 1e-3;
    let warm = solve(&m, &rhs, 1e-11, &nearby, 100);
    assert!((&cold.d - &warm.d).amax() <= 1e-10);
    assert!(warm.iterations <= cold.iterations);
    let exact = solve(&m, &rhs, 1e-3, &cold.d, 100);
    assert_eq!(exact.iterations, 0);
    assert_eq!(exact.d, cold.d);
}

#[test]
fn energy_norm_error_is_monotone() {
    let mut r = rng(5);
    let m = spd_matrix(&mut r, 25, 0.01, 10.0);
    let rhs = gaussian_vector(&mut r, 25);
    let star = m.clone().cholesky().unwrap().solve(&rhs);
    let mut errors = Vec::new();
    cg_solve_observed(
        |p| Ok(&m * p),
        &rhs,
        1e-12,
        &gaussian_vector(&mut r, 25),
        200,
        |d| {
            let e = d - &star;
            errors.push(e.dot(&(&m * &e)).sqrt());
        },
    )
    .unwrap();
    assert!(errors.len() > 3);
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-14, "{} > {}", w[1], w[0]);
    }
}

#[test]
fn cap_returns_the_best_iterate_seen() {
    let mut r = rng(6);
    let m = spd_matrix(&mut r, 40, 1e-3, 100.0);
    let rhs = gaussian_vector(&mut r, 40);
    let mut residuals = Vec::new();
    let out = cg_solve_observed(|p| Ok(&m * p), &rhs, 1e-14, &DVector::zeros(40), 5, |d| {
        residuals.push((&m * d - &rhs).norm());
    })
    .unwrap();
    assert_eq!(out.status, CgStatus::MaxIterations);
    assert_eq!(out.iterations, 5);
    let best = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(((&m * &out.d - &rhs).norm() - best).abs() <= 1e-12 * (1.0 + best));
}

#[test]
fn indefinite_operator_reports_negative_curvature() {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 3.0]));
    let rhs = DVector::from_vec(vec![1.0, 1.0, 1.0]);
    let out = solve(&m, &rhs, 1e-10, &DVector::zeros(3), 10);
    assert_eq!(out.status, CgStatus::NegativeCurvature);
}
