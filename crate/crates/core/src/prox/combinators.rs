use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::sets::validate_partition;
use super::{ExtReal, ProxOracle};
use crate::error::{check_dim, Error, Result};

/// `g(x) = Σ_i g_i(x_{B_i})` for index blocks `B_i` partitioning the coordinates.
///
/// Every generalized Jacobian of the prox is block diagonal, so all three
/// operations act block by block.
#[derive(Debug, Clone)]
pub struct SeparableSum {
    n: usize,
    children: Vec<(Arc<dyn ProxOracle>, Vec<usize>)>,
}

impl SeparableSum {
    /// Blocks use zero-based indices and must partition `0..n`, where `n` is
    /// the total length of all blocks.
    pub fn new(children: Vec<(Arc<dyn ProxOracle>, Vec<usize>)>) -> Result<Self> {
        let n = children.iter().map(|(_, block)| block.len()).sum();
        validate_partition(n, children.iter().map(|(_, block)| block.as_slice()))?;
        for (child, block) in &children {
            check_dim(child.dim(), block.len())?;
        }
        Ok(Self { n, children })
    }

    fn gather(x: &DVector<f64>, block: &[usize]) -> DVector<f64> {
        DVector::from_iterator(block.len(), block.iter().map(|&i| x[i]))
    }

    fn scatter(out: &mut DVector<f64>, block: &[usize], values: &DVector<f64>) {
        for (&i, &value) in block.iter().zip(values.iter()) {
            out[i] = value;
        }
    }
}

impl ProxOracle for SeparableSum {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        self.children
            .iter()
            .map(|(child, block)| child.eval_g(&Self::gather(z, block)))
            .fold(ExtReal::ZERO, |acc, v| acc + v)
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let mut z = DVector::zeros(self.n);
        let mut total = 0.0;
        for (child, block) in &self.children {
            let (zb, gb) = child.eval_prox(&Self::gather(x, block), gamma);
            Self::scatter(&mut z, block, &zb);
            total += gb;
        }
        (z, total)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (child, block) in &self.children {
            let pb = child.eval_jac_vec(&Self::gather(x, block), gamma, &Self::gather(v, block));
            Self::scatter(&mut out, block, &pb);
        }
        out
    }

    fn has_conjugate(&self) -> bool {
        self.children.iter().all(|(child, _)| child.has_conjugate())
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        let mut total = ExtReal::ZERO;
        for (child, block) in &self.children {
            total = total + child.eval_conjugate(&Self::gather(y, block))?;
        }
        Some(total)
    }
}

/// Callback supplying `g*(y)` when the inner function has no closed-form conjugate.
pub type ConjugateValueFn = Arc<dyn Fn(&DVector<f64>) -> ExtReal + Send + Sync>;

/// The convex conjugate `g*` of an inner oracle, via Moreau's decomposition:
///
/// `prox_{γg*}(x) = x − γ prox_{g/γ}(x/γ)` and
/// `P* = I − P` with `P` the inner selection at `(x/γ, 1/γ)`.
#[derive(Clone)]
pub struct MoreauConjugate {
    inner: Arc<dyn ProxOracle>,
    value: Option<ConjugateValueFn>,
}

impl fmt::Debug for MoreauConjugate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoreauConjugate")
            .field("inner", &self.inner)
            .field("value", &self.value.as_ref().map(|_| "<callback>"))
            .finish()
    }
}

impl MoreauConjugate {
    /// Fails with [`Error::MissingConjugateValue`] unless the inner oracle
    /// knows its conjugate in closed form.
    pub fn new(inner: Arc<dyn ProxOracle>) -> Result<Self> {
        if !inner.has_conjugate() {
            return Err(Error::MissingConjugateValue);
        }
        Ok(Self { inner, value: None })
    }

    pub fn with_value(inner: Arc<dyn ProxOracle>, value: ConjugateValueFn) -> Self {
        Self { inner, value: Some(value) }
    }

    fn conjugate_of_inner(&self, y: &DVector<f64>) -> ExtReal {
        match &self.value {
            Some(callback) => callback(y),
            // constructor guarantees a closed form exists
            None => self.inner.eval_conjugate(y).unwrap_or(ExtReal::INFINITY),
        }
    }
}

impl ProxOracle for MoreauConjugate {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        self.conjugate_of_inner(z)
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let (inner_z, _) = self.inner.eval_prox(&(x / gamma), 1.0 / gamma);
        let z = x - inner_z * gamma;
        let gz = self.conjugate_of_inner(&z).value().unwrap_or(f64::INFINITY);
        (z, gz)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        v - self.inner.eval_jac_vec(&(x / gamma), 1.0 / gamma, v)
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // g** = g for proper closed convex g
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(self.inner.eval_g(y))
    }
}
