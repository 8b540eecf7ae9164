//! Seeded data generation and CSV input.
//!
//! Generated entries are standard normal draws (`rand_distr::StandardNormal`)
//! from a SplitMix64 generator seeded with the configured `seed`
//! (`rand_xoshiro::SplitMix64::seed_from_u64`). Matrices are filled in
//! column-major order, and within one instance the draws are taken in the
//! order the data items are listed for each kind in [`crate::instance`].

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;

use crate::error::{config_error, BenchError, Result};

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

/// `QΛQᵀ` with `Q` the orthogonal factor of a Gaussian matrix and `Λ`
/// evenly spaced on `[mu, mu + spread]`.
pub fn spd_matrix(rng: &mut Rng, n: usize, mu: f64, spread: f64) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, n).qr().q();
    let eig = DVector::from_fn(n, |i, _| if n == 1 { mu } else { mu + spread * i as f64 / (n - 1) as f64 });
    let h = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// Labels in `{−1, 1}` from the signs of Gaussian draws.
pub fn random_labels(rng: &mut Rng, m: usize) -> DVector<f64> {
    gaussian_vector(rng, m).map(|v| if v < 0.0 { -1.0 } else { 1.0 })
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| BenchError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    config_error(path.display().to_string(), format!("bad number `{field}` on line {}: {e}", rows.len() + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn matrix_from_rows(key: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(config_error(key, "matrix is empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(config_error(key, format!("row {i} has {} entries, expected {n}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn read_matrix(key: &str, path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_rows(key, &read_rows(path)?)
}

/// A vector stored either as one row or as one value per line.
pub fn read_vector(key: &str, path: &Path) -> Result<DVector<f64>> {
    let rows = read_rows(path)?;
    let values: Vec<f64> = if rows.len() == 1 {
        rows[0].clone()
    } else if rows.iter().all(|r| r.len() == 1) {
        rows.iter().map(|r| r[0]).collect()
    } else {
        return Err(config_error(key, "expected a single row or a single column"));
    };
    if values.is_empty() {
        return Err(config_error(key, "vector is empty"));
    }
    Ok(DVector::from_vec(values))
}
