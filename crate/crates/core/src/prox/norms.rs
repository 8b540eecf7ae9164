use nalgebra::DVector;

use super::sets::{project_simplex, validate_partition};
use super::{ExtReal, ProxOracle, ACTIVE_TOL};
use crate::error::{Error, Result};

fn check_weight(weight: f64) -> Result<()> {
    if weight >= 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("weight must be finite and nonnegative, got {weight}"),
        })
    }
}

/// `g(x) = λ‖x‖₁`; the proximal mapping is soft-thresholding at `γλ`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    n: usize,
    weight: f64,
}

impl L1Norm {
    pub fn new(n: usize, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self { n, weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl ProxOracle for L1Norm {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::finite(self.weight * z.lp_norm(1))
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let t = gamma * self.weight;
        let z = x.map(|xi| xi.signum() * (xi.abs() - t).max(0.0));
        let gz = self.weight * z.lp_norm(1);
        (z, gz)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let t = gamma * self.weight;
        DVector::from_fn(self.n, |i, _| if t == 0.0 || x[i].abs() > t { v[i] } else { 0.0 })
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::indicator(y.amax() <= self.weight + ACTIVE_TOL))
    }
}

/// `g(x) = λ‖x‖₂`; block soft-thresholding.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanNorm {
    n: usize,
    weight: f64,
}

impl EuclideanNorm {
    pub fn new(n: usize, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self { n, weight })
    }
}

// (1 - t/‖x‖)x when ‖x‖ > t, else 0
fn block_soft_threshold(x: &[f64], t: f64, out: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t == 0.0 {
        out.copy_from_slice(x);
    } else if norm > t {
        let scale = 1.0 - t / norm;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    } else {
        out.fill(0.0);
    }
}

// I - (t/‖x‖)(I - wwᵀ) when ‖x‖ > t, else 0
fn block_soft_threshold_jac(x: &[f64], t: f64, v: &[f64], out: &mut [f64]) {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if t == 0.0 {
        out.copy_from_slice(v);
    } else if norm > t {
        let wv = x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / norm;
        let ratio = t / norm;
        for ((o, xi), vi) in out.iter_mut().zip(x).zip(v) {
            *o = vi - ratio * (vi - xi / norm * wv);
        }
    } else {
        out.fill(0.0);
    }
}

impl ProxOracle for EuclideanNorm {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::finite(self.weight * z.norm())
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let mut z = DVector::zeros(self.n);
        block_soft_threshold(x.as_slice(), gamma * self.weight, z.as_mut_slice());
        let gz = self.weight * z.norm();
        (z, gz)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        block_soft_threshold_jac(x.as_slice(), gamma * self.weight, v.as_slice(), out.as_mut_slice());
        out
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::indicator(y.norm() <= self.weight + ACTIVE_TOL))
    }
}

/// `g(x) = λ Σ_s ‖x_s‖₂` over a partition of the coordinates (group lasso).
#[derive(Debug, Clone)]
pub struct GroupNorms {
    n: usize,
    groups: Vec<Vec<usize>>,
    weight: f64,
}

impl GroupNorms {
    /// `groups` must partition `0..n` (zero-based indices).
    pub fn new(n: usize, groups: Vec<Vec<usize>>, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        validate_partition(n, groups.iter().map(|g| g.as_slice()))?;
        Ok(Self { n, groups, weight })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn gather(x: &DVector<f64>, group: &[usize]) -> Vec<f64> {
        group.iter().map(|&i| x[i]).collect()
    }

    fn group_sum(&self, z: &DVector<f64>) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&i| z[i] * z[i]).sum::<f64>().sqrt())
            .sum()
    }
}

impl ProxOracle for GroupNorms {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::finite(self.weight * self.group_sum(z))
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let t = gamma * self.weight;
        let mut z = DVector::zeros(self.n);
        for group in &self.groups {
            let xs = Self::gather(x, group);
            let mut zs = vec![0.0; xs.len()];
            block_soft_threshold(&xs, t, &mut zs);
            for (&i, zi) in group.iter().zip(zs) {
                z[i] = zi;
            }
        }
        let gz = self.weight * self.group_sum(&z);
        (z, gz)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let t = gamma * self.weight;
        let mut out = DVector::zeros(self.n);
        for group in &self.groups {
            let xs = Self::gather(x, group);
            let vs = Self::gather(v, group);
            let mut os = vec![0.0; xs.len()];
            block_soft_threshold_jac(&xs, t, &vs, &mut os);
            for (&i, oi) in group.iter().zip(os) {
                out[i] = oi;
            }
        }
        out
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        let worst = self
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Some(ExtReal::indicator(worst <= self.weight + ACTIVE_TOL))
    }
}

/// `g(x) = λ‖x‖∞`.
///
/// The proximal point is obtained from the projection of `|x|/(γλ)` onto the
/// unit simplex: coordinates whose projected value is positive are clipped to
/// a common magnitude, the rest are left untouched.
#[derive(Debug, Clone, Copy)]
pub struct LInfNorm {
    n: usize,
    weight: f64,
}

/// Clipping level and clipped set of the ℓ∞ prox; `None` when the prox is zero.
struct Clipping {
    level: f64,
    clipped: Vec<bool>,
}

impl LInfNorm {
    pub fn new(n: usize, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self { n, weight })
    }

    fn clipping(&self, x: &DVector<f64>, t: f64) -> Option<Clipping> {
        if x.lp_norm(1) <= t {
            return None;
        }
        let scaled = x.map(|xi| xi.abs() / t);
        let (projected, threshold) = project_simplex(&scaled, 1.0);
        Some(Clipping {
            level: t * threshold,
            clipped: projected.iter().map(|&p| p > ACTIVE_TOL).collect(),
        })
    }
}

impl ProxOracle for LInfNorm {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::finite(self.weight * z.amax())
    }

    fn eval_prox(&self, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
        let t = gamma * self.weight;
        if t == 0.0 {
            return (x.clone(), 0.0);
        }
        let z = match self.clipping(x, t) {
            None => DVector::zeros(self.n),
            Some(c) => DVector::from_fn(self.n, |i, _| {
                if c.clipped[i] {
                    x[i].signum() * c.level
                } else {
                    x[i]
                }
            }),
        };
        let gz = self.weight * z.amax();
        (z, gz)
    }

    // P_ij = s_i s_j / |C| on the clipped set C, δ_ij elsewhere
    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let t = gamma * self.weight;
        if t == 0.0 {
            return v.clone();
        }
        match self.clipping(x, t) {
            None => DVector::zeros(self.n),
            Some(c) => {
                let count = c.clipped.iter().filter(|&&b| b).count() as f64;
                let signed_sum: f64 = (0..self.n)
                    .filter(|&i| c.clipped[i])
                    .map(|i| x[i].signum() * v[i])
                    .sum();
                DVector::from_fn(self.n, |i, _| {
                    if c.clipped[i] {
                        x[i].signum() * signed_sum / count
                    } else {
                        v[i]
                    }
                })
            }
        }
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::indicator(y.lp_norm(1) <= self.weight + ACTIVE_TOL))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn soft_thresholding_example() {
        let g = L1Norm::new(2, 1.0).unwrap();
        let (z, gz) = g.prox(&dvector![2.0, -0.3], 0.5).unwrap();
        assert_eq!(z, dvector![1.5, 0.0]);
        assert_eq!(gz, 1.5);
        let pv = g.jac_vec(&dvector![2.0, -0.3], 0.5, &dvector![1.0, 1.0]).unwrap();
        assert_eq!(pv, dvector![1.0, 0.0]);
    }

    #[test]
    fn soft_threshold_kink_selects_zero() {
        let g = L1Norm::new(1, 1.0).unwrap();
        assert_eq!(g.jac_vec(&dvector![0.5], 0.5, &dvector![1.0]).unwrap(), dvector![0.0]);
    }

    #[test]
    fn l1_value() {
        let g = L1Norm::new(2, 2.0).unwrap();
        assert_eq!(g.g_value(&dvector![1.0, -1.0]).unwrap(), ExtReal::finite(4.0));
    }

    #[test]
    fn negative_weight_rejected() {
        let err = L1Norm::new(2, -1.0).unwrap_err();
        assert!(err.to_string().contains("lambda"));
        assert!(EuclideanNorm::new(2, f64::NAN).is_err());
    }

    #[test]
    fn group_norm_value_and_partition() {
        let g = GroupNorms::new(3, vec![vec![0, 1], vec![2]], 1.0).unwrap();
        assert_eq!(g.g_value(&dvector![3.0, 4.0, -2.0]).unwrap(), ExtReal::finite(7.0));
        assert!(GroupNorms::new(3, vec![vec![0, 1], vec![1, 2]], 1.0).is_err());
        assert!(GroupNorms::new(3, vec![vec![0, 1]], 1.0).is_err());
        assert!(GroupNorms::new(3, vec![vec![0, 1], vec![5]], 1.0).is_err());
    }

    #[test]
    fn group_prox_zeroes_small_groups() {
        let g = GroupNorms::new(3, vec![vec![0, 1], vec![2]], 1.0).unwrap();
        let (z, gz) = g.prox(&dvector![3.0, 4.0, 0.5], 1.0).unwrap();
        assert!((z - dvector![2.4, 3.2, 0.0]).norm() < 1e-15);
        assert!((gz - 4.0).abs() < 1e-15);
        let pv = g.jac_vec(&dvector![3.0, 4.0, 0.5], 1.0, &dvector![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(pv, dvector![0.0, 0.0, 0.0]);
    }

    #[test]
    fn euclidean_norm_prox() {
        let g = EuclideanNorm::new(2, 1.0).unwrap();
        let (z, _) = g.prox(&dvector![3.0, 4.0], 1.0).unwrap();
        assert!((z - dvector![2.4, 3.2]).norm() < 1e-15);
        let (z, gz) = g.prox(&dvector![0.3, 0.4], 1.0).unwrap();
        assert_eq!(z, dvector![0.0, 0.0]);
        assert_eq!(gz, 0.0);
        // kink ‖x‖ = γλ picks the zero matrix
        assert_eq!(g.jac_vec(&dvector![0.6, 0.8], 1.0, &dvector![1.0, 1.0]).unwrap(), dvector![0.0, 0.0]);
    }

    #[test]
    fn linf_prox_clips_largest_entries() {
        let g = LInfNorm::new(3, 1.0).unwrap();
        // clip level c solves (3 - c) + (2.5 - c) = 1
        let (z, gz) = g.prox(&dvector![3.0, -2.5, 0.5], 1.0).unwrap();
        assert!((z - dvector![2.25, -2.25, 0.5]).norm() < 1e-14);
        assert!((gz - 2.25).abs() < 1e-14);
        let (z, _) = g.prox(&dvector![0.3, -0.2, 0.1], 1.0).unwrap();
        assert_eq!(z, DVector::zeros(3));
        let pv = g.jac_vec(&dvector![3.0, -2.5, 0.5], 1.0, &dvector![1.0, 0.0, 1.0]).unwrap();
        assert!((pv - dvector![0.5, -0.5, 1.0]).norm() < 1e-15);
    }

    #[test]
    fn zero_weight_gives_identity() {
        let x = dvector![0.0, -1.0];
        let v = dvector![1.0, 2.0];
        let l1 = L1Norm::new(2, 0.0).unwrap();
        assert_eq!(l1.jac_vec(&x, 1.0, &v).unwrap(), v);
        let li = LInfNorm::new(2, 0.0).unwrap();
        assert_eq!(li.prox(&x, 1.0).unwrap().0, x);
        assert_eq!(li.jac_vec(&x, 1.0, &v).unwrap(), v);
    }
}
