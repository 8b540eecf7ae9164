//! Smooth convex terms `f` of the composite objective.
//!
//! Every oracle supplies the value, the gradient and Hessian-vector products.
//! Hessians are never formed except by [`QuadraticSmooth`], which stores its
//! matrix explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Power-iteration cap used by [`SmoothOracle::lipschitz_estimate`].
pub const POWER_ITERATIONS: usize = 100;
/// Relative change at which power iteration stops early.
pub const POWER_TOLERANCE: f64 = 1e-6;

/// A twice continuously differentiable convex function with Lipschitz gradient.
pub trait SmoothOracle: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// `∇²f(x) p`.
    fn hess_vec(&self, x: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>>;

    /// An estimate of the gradient's Lipschitz constant when one is cheap to
    /// obtain, `None` otherwise. The returned value is the raw power-iteration
    /// estimate; callers that need a safe upper bound inflate it.
    fn lipschitz_estimate(&self) -> Option<f64> {
        None
    }
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// The start vector is fixed so the estimate is reproducible.
pub fn power_iteration<F>(n: usize, mut apply: F) -> f64
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= POWER_TOLERANCE * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    estimate
}

/// `f(x) = ½⟨x, Hx⟩ + ⟨h, x⟩ + c` with `H` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct QuadraticSmooth {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadraticSmooth {
    /// Builds the quadratic, replacing `H` by `(H + Hᵀ)/2`.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let n = hessian.nrows();
        check_dim(n, hessian.ncols())?;
        check_dim(n, linear.len())?;
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(Self { hessian, linear, constant: 0.0 })
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }
}

impl SmoothOracle for QuadraticSmooth {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x) + self.constant)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.hessian * x + &self.linear)
    }

    fn hess_vec(&self, x: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), p.len())?;
        Ok(&self.hessian * p)
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(power_iteration(self.dim(), |v| &self.hessian * v))
    }
}

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresSmooth {
    matrix: DMatrix<f64>,
    target: DVector<f64>,
}

impl LeastSquaresSmooth {
    pub fn new(matrix: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        check_dim(matrix.nrows(), target.len())?;
        Ok(Self { matrix, target })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }
}

impl SmoothOracle for LeastSquaresSmooth {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(0.5 * (&self.matrix * x - &self.target).norm_squared())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        let residual = &self.matrix * x - &self.target;
        Ok(self.matrix.tr_mul(&residual))
    }

    fn hess_vec(&self, x: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), p.len())?;
        Ok(self.matrix.tr_mul(&(&self.matrix * p)))
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(power_iteration(self.dim(), |v| self.matrix.tr_mul(&(&self.matrix * v))))
    }
}

/// Logistic loss `f(x) = Σᵢ log(1 + exp(−yᵢ⟨aᵢ, x⟩))` with labels in `{−1, +1}`.
#[derive(Debug, Clone)]
pub struct LogisticSmooth {
    features: DMatrix<f64>,
    labels: DVector<f64>,
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

// log(1 + exp(s)) without overflow
fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

impl LogisticSmooth {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        check_dim(features.nrows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter {
                name: "labels",
                reason: format!("labels must be -1 or +1, found {bad}"),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.features * x).component_mul(&self.labels)
    }
}

impl SmoothOracle for LogisticSmooth {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.margins(x).iter().map(|&t| softplus(-t)).sum())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        let margins = self.margins(x);
        let weights = DVector::from_fn(margins.len(), |i, _| -self.labels[i] * sigmoid(-margins[i]));
        Ok(self.features.tr_mul(&weights))
    }

    fn hess_vec(&self, x: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), p.len())?;
        let margins = self.margins(x);
        let mut ap = &self.features * p;
        for (i, v) in ap.iter_mut().enumerate() {
            let s = sigmoid(margins[i]);
            *v *= s * (1.0 - s);
        }
        Ok(self.features.tr_mul(&ap))
    }
}

/// `f ≡ 0`; with it forward-backward splitting reduces to the proximal point method.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSmooth {
    n: usize,
}

impl ZeroSmooth {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SmoothOracle for ZeroSmooth {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.n, x.len())?;
        Ok(0.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.n, x.len())?;
        Ok(DVector::zeros(self.n))
    }

    fn hess_vec(&self, x: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.n, x.len())?;
        check_dim(self.n, p.len())?;
        Ok(DVector::zeros(self.n))
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(0.0)
    }
}
