//! Indicator functions of closed convex sets. The proximal mapping of an
//! indicator is the Euclidean projection, independent of `γ`.

use nalgebra::{DMatrix, DVector};

use super::{ExtReal, ProxOracle, ACTIVE_TOL};
use crate::error::{check_dim, Error, Result};

pub(crate) fn validate_partition<'a>(
    n: usize,
    blocks: impl IntoIterator<Item = &'a [usize]>,
) -> Result<()> {
    let mut seen = vec![false; n];
    for block in blocks {
        if block.is_empty() {
            return Err(Error::InvalidPartition { n, reason: "empty block".into() });
        }
        for &i in block {
            if i >= n {
                return Err(Error::InvalidPartition { n, reason: format!("index {i} out of range") });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPartition { n, reason: format!("index {i} appears twice") });
            }
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidPartition { n, reason: format!("index {missing} is not covered") });
    }
    Ok(())
}

/// Projection onto `{z ≥ 0, Σ zᵢ = radius}`.
///
/// Returns the projection `[x − θ1]₊` together with the threshold `θ`.
/// Sort-based: `θ = (Σ_{i≤k} x₍ᵢ₎ − radius)/k` for the largest `k` with
/// `x₍ₖ₎ − θ > 0`, entries sorted in decreasing order.
pub fn project_simplex(x: &DVector<f64>, radius: f64) -> (DVector<f64>, f64) {
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = sorted.first().map_or(0.0, |&top| top - radius);
    for (k, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - radius) / (k as f64 + 1.0);
        if value - candidate > 0.0 {
            threshold = candidate;
        }
    }
    (x.map(|xi| (xi - threshold).max(0.0)), threshold)
}

/// Indicator of the box `{ℓ ≤ x ≤ u}`; bounds may be infinite.
#[derive(Debug, Clone)]
pub struct SeparableBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl SeparableBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        for (l, u) in lower.iter().zip(upper.iter()) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!("need lower <= upper with a nonempty interval, got [{l}, {u}]"),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` on every coordinate.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, lower), DVector::from_element(n, upper))
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

impl ProxOracle for SeparableBox {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        let feasible = z
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(zi, (l, u))| *zi >= l - ACTIVE_TOL && *zi <= u + ACTIVE_TOL);
        ExtReal::indicator(feasible)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        let z = DVector::from_fn(x.len(), |i, _| x[i].max(self.lower[i]).min(self.upper[i]));
        (z, 0.0)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let z = x[i].max(self.lower[i]).min(self.upper[i]);
            let active = (z - self.lower[i]).abs() <= ACTIVE_TOL || (self.upper[i] - z).abs() <= ACTIVE_TOL;
            if active {
                0.0
            } else {
                v[i]
            }
        })
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // support function Σ max(ℓᵢyᵢ, uᵢyᵢ)
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        let mut total = ExtReal::ZERO;
        for (i, &yi) in y.iter().enumerate() {
            let bound = if yi > 0.0 {
                self.upper[i]
            } else if yi < 0.0 {
                self.lower[i]
            } else {
                continue;
            };
            if bound.is_infinite() {
                return Some(ExtReal::INFINITY);
            }
            total = total + ExtReal::finite(bound * yi);
        }
        Some(total)
    }
}

/// Indicator of the affine set `{x : Ax = b}`.
///
/// At construction a column-pivoted QR of `Aᵀ` yields an orthonormal basis `U`
/// of the row space of `A` (rank cut at `1e−10‖A‖_F`) and the least-norm
/// solution `x_p = A†b`; then `proj(x) = x_p + (I − UUᵀ)x`.
#[derive(Debug, Clone)]
pub struct AffineSet {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    row_basis: DMatrix<f64>,
    particular: DVector<f64>,
}

/// Relative rank threshold for the QR factorization of `Aᵀ`.
pub const AFFINE_RANK_TOL: f64 = 1e-10;

impl AffineSet {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        check_dim(matrix.nrows(), rhs.len())?;
        let n = matrix.ncols();
        let scale = matrix.norm();
        let qr = matrix.transpose().col_piv_qr();
        let r = qr.r();
        let rank = (0..r.nrows().min(r.ncols()))
            .take_while(|&i| r[(i, i)].abs() > AFFINE_RANK_TOL * scale)
            .count();
        let row_basis = qr.q().columns(0, rank).into_owned();

        let particular = if rank == 0 {
            DVector::zeros(n)
        } else {
            // x_p = U y with min ‖(AU) y − b‖
            let reduced = &matrix * &row_basis;
            let small = reduced.qr();
            let qtb = small.q().tr_mul(&rhs);
            let y = small
                .r()
                .solve_upper_triangular(&qtb)
                .ok_or(Error::NonFinite("affine least-norm solve"))?;
            &row_basis * y
        };
        let mismatch = (&matrix * &particular - &rhs).norm();
        if mismatch > 1e-8 * (1.0 + rhs.norm()) {
            return Err(Error::InvalidParameter {
                name: "affine",
                reason: format!("Ax = b is inconsistent (residual {mismatch:e})"),
            });
        }
        Ok(Self { matrix, rhs, row_basis, particular })
    }

    pub fn rank(&self) -> usize {
        self.row_basis.ncols()
    }

    fn remove_row_component(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.row_basis * self.row_basis.tr_mul(x)
    }
}

impl ProxOracle for AffineSet {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    // Absolute 1e-12 scaled by the magnitude of the terms in Az - b.
    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        let residual = (&self.matrix * z - &self.rhs).amax();
        let scale = 1.0 + self.matrix.norm() * z.norm() + self.rhs.amax();
        ExtReal::indicator(residual <= ACTIVE_TOL * scale)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        (self.remove_row_component(x) + &self.particular, 0.0)
    }

    fn eval_jac_vec(&self, _x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        self.remove_row_component(v)
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // ⟨y, x_p⟩ when y lies in the row space of A, +∞ otherwise
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        let off = self.remove_row_component(y).norm();
        if off <= 1e-10 * (1.0 + y.norm()) {
            Some(ExtReal::finite(y.dot(&self.particular)))
        } else {
            Some(ExtReal::INFINITY)
        }
    }
}

/// Indicator of the halfspace `{x : ⟨a, x⟩ ≤ β}`.
#[derive(Debug, Clone)]
pub struct Halfspace {
    normal: DVector<f64>,
    offset: f64,
    normal_sq: f64,
}

impl Halfspace {
    pub fn new(normal: DVector<f64>, offset: f64) -> Result<Self> {
        let normal_sq = normal.norm_squared();
        if normal_sq == 0.0 || !normal_sq.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidParameter {
                name: "halfspace",
                reason: "normal must be nonzero and finite".into(),
            });
        }
        Ok(Self { normal, offset, normal_sq })
    }
}

impl ProxOracle for Halfspace {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::indicator(self.normal.dot(z) <= self.offset + ACTIVE_TOL)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        let excess = (self.normal.dot(x) - self.offset).max(0.0);
        (x - &self.normal * (excess / self.normal_sq), 0.0)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let (z, _) = self.eval_prox(x, gamma);
        if self.normal.dot(&z) >= self.offset - ACTIVE_TOL {
            v - &self.normal * (self.normal.dot(v) / self.normal_sq)
        } else {
            v.clone()
        }
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // tβ when y = t·a with t ≥ 0, +∞ otherwise
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        let t = self.normal.dot(y) / self.normal_sq;
        let off = (y - &self.normal * t).norm();
        if t >= -ACTIVE_TOL && off <= 1e-10 * (1.0 + y.norm()) {
            Some(ExtReal::finite(t.max(0.0) * self.offset))
        } else {
            Some(ExtReal::INFINITY)
        }
    }
}

/// Indicator of the unit simplex `{x ≥ 0, Σ xᵢ = 1}`.
#[derive(Debug, Clone, Copy)]
pub struct UnitSimplex {
    n: usize,
}

impl UnitSimplex {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "simplex needs n >= 1".into() });
        }
        Ok(Self { n })
    }
}

impl ProxOracle for UnitSimplex {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        let nonneg = z.iter().all(|&zi| zi >= -ACTIVE_TOL);
        ExtReal::indicator(nonneg && (z.sum() - 1.0).abs() <= ACTIVE_TOL)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        (project_simplex(x, 1.0).0, 0.0)
    }

    // P_ij = δ_ij − 1/(n − |J|) off the active set J = {i : zᵢ = 0}, zero on J
    fn eval_jac_vec(&self, x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let (z, _) = project_simplex(x, 1.0);
        let free: Vec<bool> = z.iter().map(|&zi| zi > ACTIVE_TOL).collect();
        let count = free.iter().filter(|&&f| f).count() as f64;
        let mean = (0..self.n).filter(|&i| free[i]).map(|i| v[i]).sum::<f64>() / count;
        DVector::from_fn(self.n, |i, _| if free[i] { v[i] - mean } else { 0.0 })
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::finite(y.max()))
    }
}

/// Indicator of the ℓ1 ball `{‖x‖₁ ≤ r}`, projected through the simplex.
#[derive(Debug, Clone, Copy)]
pub struct L1Ball {
    n: usize,
    radius: f64,
}

impl L1Ball {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter { name: "radius", reason: format!("got {radius}") });
        }
        Ok(Self { n, radius })
    }
}

impl ProxOracle for L1Ball {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::indicator(z.lp_norm(1) <= self.radius + ACTIVE_TOL)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        if x.lp_norm(1) <= self.radius {
            return (x.clone(), 0.0);
        }
        let (p, _) = project_simplex(&x.abs(), self.radius);
        (p.zip_map(x, |pi, xi| xi.signum() * pi), 0.0)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        if x.lp_norm(1) <= self.radius {
            return v.clone();
        }
        let (p, _) = project_simplex(&x.abs(), self.radius);
        let free: Vec<bool> = p.iter().map(|&pi| pi > ACTIVE_TOL).collect();
        let count = free.iter().filter(|&&f| f).count() as f64;
        let signed_mean = (0..self.n)
            .filter(|&i| free[i])
            .map(|i| x[i].signum() * v[i])
            .sum::<f64>()
            / count;
        DVector::from_fn(self.n, |i, _| if free[i] { v[i] - x[i].signum() * signed_mean } else { 0.0 })
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::finite(self.radius * y.amax()))
    }
}

/// Indicator of the Euclidean ball of radius `r` centred at the origin.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanBall {
    n: usize,
    radius: f64,
}

impl EuclideanBall {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter { name: "radius", reason: format!("got {radius}") });
        }
        Ok(Self { n, radius })
    }

    pub fn unit(n: usize) -> Self {
        Self { n, radius: 1.0 }
    }
}

impl ProxOracle for EuclideanBall {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::indicator(z.norm() <= self.radius + ACTIVE_TOL)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        let norm = x.norm();
        if norm <= self.radius {
            (x.clone(), 0.0)
        } else {
            (x * (self.radius / norm), 0.0)
        }
    }

    // (r/‖x‖)(I − wwᵀ) outside, identity on the closed ball
    fn eval_jac_vec(&self, x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let norm = x.norm();
        if norm <= self.radius {
            return v.clone();
        }
        let w = x / norm;
        (v - &w * w.dot(v)) * (self.radius / norm)
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::finite(self.radius * y.norm()))
    }
}

/// Projection onto the second-order cone `{(x₀, x̄) : x₀ ≥ ‖x̄‖}`.
pub fn soc_project(x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "second-order cone needs n >= 2".into() });
    }
    Ok(soc_project_unchecked(x))
}

fn soc_project_unchecked(x: &DVector<f64>) -> DVector<f64> {
    let x0 = x[0];
    let tail = x.rows(1, x.len() - 1);
    let tail_norm = tail.norm();
    if x0 >= tail_norm {
        x.clone()
    } else if x0 <= -tail_norm {
        DVector::zeros(x.len())
    } else {
        let scale = 0.5 * (x0 + tail_norm);
        let mut z = DVector::zeros(x.len());
        z[0] = scale;
        z.rows_mut(1, x.len() - 1).copy_from(&(tail * (scale / tail_norm)));
        z
    }
}

/// Action of the selected B-Jacobian of [`soc_project`]: `I` when
/// `x₀ ≥ ‖x̄‖` (x ≠ 0), `0` when `x₀ ≤ −‖x̄‖` (including x = 0), and
/// `M_{w̄,ᾱ}` with `w̄ = x̄/‖x̄‖`, `ᾱ = −x₀/‖x̄‖` in between, where
/// `M_{w,α} = ½[[1, wᵀ], [w, (1−α)I + αwwᵀ]]`.
pub fn soc_jac_vec(x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "second-order cone needs n >= 2".into() });
    }
    check_dim(x.len(), v.len())?;
    Ok(soc_jac_vec_unchecked(x, v))
}

fn soc_jac_vec_unchecked(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let x0 = x[0];
    let tail = x.rows(1, n - 1);
    let tail_norm = tail.norm();
    if x0 <= -tail_norm {
        return DVector::zeros(n);
    }
    if x0 >= tail_norm {
        return v.clone();
    }
    let w = tail / tail_norm;
    let alpha = -x0 / tail_norm;
    let v0 = v[0];
    let vt = v.rows(1, n - 1);
    let wv = w.dot(&vt);
    let mut out = DVector::zeros(n);
    out[0] = 0.5 * (v0 + wv);
    let lower = (&w * v0 + vt * (1.0 - alpha) + &w * (alpha * wv)) * 0.5;
    out.rows_mut(1, n - 1).copy_from(&lower);
    out
}

/// Indicator of the second-order (Lorentz) cone in `R × R^{n−1}`.
#[derive(Debug, Clone, Copy)]
pub struct SecondOrderCone {
    n: usize,
}

impl SecondOrderCone {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter { name: "n", reason: "second-order cone needs n >= 2".into() });
        }
        Ok(Self { n })
    }
}

impl ProxOracle for SecondOrderCone {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_g(&self, z: &DVector<f64>) -> ExtReal {
        ExtReal::indicator(z[0] >= z.rows(1, self.n - 1).norm() - ACTIVE_TOL)
    }

    fn eval_prox(&self, x: &DVector<f64>, _gamma: f64) -> (DVector<f64>, f64) {
        (soc_project_unchecked(x), 0.0)
    }

    fn eval_jac_vec(&self, x: &DVector<f64>, _gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        soc_jac_vec_unchecked(x, v)
    }

    fn has_conjugate(&self) -> bool {
        true
    }

    // indicator of the polar cone −K
    fn eval_conjugate(&self, y: &DVector<f64>) -> Option<ExtReal> {
        Some(ExtReal::indicator(-y[0] >= y.rows(1, self.n - 1).norm() - ACTIVE_TOL))
    }
}
