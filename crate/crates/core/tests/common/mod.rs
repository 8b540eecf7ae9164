#![allow(dead_code)]

use std::sync::Arc;

use fbtn::prox::{L1Norm, ProxOracle};
use fbtn::smooth::{LeastSquaresSmooth, QuadraticSmooth, SmoothOracle};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rand_xoshiro::SplitMix64;

pub type Rng = SplitMix64;

pub fn rng(seed: u64) -> Rng {
    SplitMix64::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_matrix(rng: &mut Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng))
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new(lo, hi).unwrap().sample(rng)
}

/// Random SPD matrix with eigenvalues in `[mu, mu + spread]`.
pub fn spd_matrix(rng: &mut Rng, n: usize, mu: f64, spread: f64) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, n).qr().q();
    let eig = DVector::from_fn(n, |i, _| mu + spread * i as f64 / (n.max(2) - 1) as f64);
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

pub struct Lasso {
    pub f: Arc<dyn SmoothOracle>,
    pub g: Arc<dyn ProxOracle>,
    pub lambda: f64,
}

pub fn lasso(seed: u64, m: usize, n: usize) -> Lasso {
    let mut r = rng(seed);
    let a = gaussian_matrix(&mut r, m, n);
    let b = gaussian_vector(&mut r, m);
    let lambda = 0.1 * a.tr_mul(&b).amax();
    Lasso {
        f: Arc::new(LeastSquaresSmooth::new(a, b).unwrap()),
        g: Arc::new(L1Norm::new(n, lambda).unwrap()),
        lambda,
    }
}

/// Strongly convex quadratic with eigenvalues in `[mu, mu + spread]`.
pub fn quadratic(seed: u64, n: usize, mu: f64, spread: f64) -> Arc<QuadraticSmooth> {
    let mut r = rng(seed);
    let h = spd_matrix(&mut r, n, mu, spread);
    let lin = gaussian_vector(&mut r, n);
    Arc::new(QuadraticSmooth::new(h, lin).unwrap())
}

/// Dense matrix of a linear map given by its action on vectors.
pub fn dense<F>(n: usize, mut apply: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        m.set_column(j, &apply(&e));
    }
    m
}

/// Symmetric eigenvalues, ascending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// One representative of every proximable function in the library.
pub fn catalogue(seed: u64) -> Vec<(&'static str, Arc<dyn ProxOracle>)> {
    use fbtn::prox::*;
    let mut r = rng(seed);
    let n = 6;
    let lower = DVector::from_fn(n, |_, _| uniform(&mut r, -1.5, -0.2));
    let upper = DVector::from_fn(n, |_, _| uniform(&mut r, 0.2, 1.5));
    let a = gaussian_matrix(&mut r, 2, n);
    let b = &a * gaussian_vector(&mut r, n);
    let normal = gaussian_vector(&mut r, n);
    let blocks: Vec<(Arc<dyn ProxOracle>, Vec<usize>)> = vec![
        (Arc::new(L1Norm::new(2, 0.7).unwrap()), vec![0, 3]),
        (Arc::new(EuclideanBall::new(3, 1.2).unwrap()), vec![1, 4, 5]),
        (Arc::new(ZeroFunction::new(1)), vec![2]),
    ];
    vec![
        ("zero", Arc::new(ZeroFunction::new(n))),
        ("l1", Arc::new(L1Norm::new(n, 0.8).unwrap())),
        ("l2", Arc::new(EuclideanNorm::new(n, 1.3).unwrap())),
        ("group", Arc::new(GroupNorms::new(n, vec![vec![0, 1], vec![2], vec![3, 4, 5]], 0.9).unwrap())),
        ("linf", Arc::new(LInfNorm::new(n, 1.1).unwrap())),
        ("box", Arc::new(SeparableBox::new(lower, upper).unwrap())),
        ("affine", Arc::new(AffineSet::new(a, b).unwrap())),
        ("halfspace", Arc::new(Halfspace::new(normal, 0.3).unwrap())),
        ("simplex", Arc::new(UnitSimplex::new(n).unwrap())),
        ("l1ball", Arc::new(L1Ball::new(n, 1.5).unwrap())),
        ("ball", Arc::new(EuclideanBall::new(n, 0.9).unwrap())),
        ("soc", Arc::new(SecondOrderCone::new(n).unwrap())),
        ("separable", Arc::new(SeparableSum::new(blocks).unwrap())),
        ("conj_l1ball", Arc::new(MoreauConjugate::new(Arc::new(L1Ball::new(n, 1.1).unwrap())).unwrap())),
    ]
}
