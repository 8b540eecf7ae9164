//! Builds oracles from a [`ProblemConfig`].
//!
//! Generated data per kind, in draw order:
//!
//! | kind | draws |
//! |---|---|
//! | `lasso`, `group_lasso` | `a` (m×n), `b` (m) |
//! | `logistic_l1` | `a` (m×n), labels `b` (m, signs of normal draws) |
//! | `box_qp`, `custom_quadratic_prox` | `h` (n×n, spectrum on `[mu, mu + spread]`), `q` (n) |
//!
//! Every item is drawn even when the config supplies it, so supplying one
//! item never changes the others.

use std::sync::Arc;

use fbtn::prox::{
    AffineSet, EuclideanBall, EuclideanNorm, GroupNorms, Halfspace, L1Ball, L1Norm, LInfNorm, ProxOracle,
    SecondOrderCone, SeparableBox, UnitSimplex, ZeroFunction,
};
use fbtn::smooth::{LeastSquaresSmooth, LogisticSmooth, QuadraticSmooth, SmoothOracle};
use nalgebra::{DMatrix, DVector};

use crate::config::{check_lambda, BoundSource, Config, MatrixSource, ProblemKind, ProxConfig, VectorSource};
use crate::data;
use crate::error::{config_error, BenchError, Result};

/// Default fraction of the smallest weight that makes `x = 0` optimal.
pub const LAMBDA_FRACTION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: ProblemKind,
    pub smooth: Arc<dyn SmoothOracle>,
    pub nonsmooth: Arc<dyn ProxOracle>,
    pub x0: DVector<f64>,
    pub lambda: Option<f64>,
    pub rows: Option<usize>,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn describe(&self) -> String {
        let mut s = format!("{} (n = {}", self.kind.as_str(), self.dim());
        if let Some(m) = self.rows {
            s.push_str(&format!(", m = {m}"));
        }
        s.push(')');
        if let Some(l) = self.lambda {
            s.push_str(&format!(", lambda = {l:.6e}"));
        }
        s
    }
}

struct Generated {
    a: Option<DMatrix<f64>>,
    b: Option<DVector<f64>>,
    h: Option<DMatrix<f64>>,
    q: Option<DVector<f64>>,
}

fn generate(config: &Config) -> Result<Generated> {
    let p = &config.problem;
    let mut out = Generated { a: None, b: None, h: None, q: None };
    let Some(gen) = &p.generator else {
        return Ok(out);
    };
    let mut rng = data::rng(gen.seed);
    let n = p.n.ok_or_else(|| config_error("n", "required when data is generated"))?;
    if n == 0 {
        return Err(config_error("n", "must be at least 1"));
    }
    match p.kind {
        ProblemKind::Lasso | ProblemKind::GroupLasso | ProblemKind::LogisticL1 => {
            let m = p.m.ok_or_else(|| config_error("m", "required when data is generated"))?;
            if m == 0 {
                return Err(config_error("m", "must be at least 1"));
            }
            out.a = Some(data::gaussian_matrix(&mut rng, m, n));
            out.b = Some(if p.kind == ProblemKind::LogisticL1 {
                data::random_labels(&mut rng, m)
            } else {
                data::gaussian_vector(&mut rng, m)
            });
        }
        ProblemKind::BoxQp | ProblemKind::CustomQuadraticProx => {
            out.h = Some(data::spd_matrix(&mut rng, n, gen.mu, gen.spread));
            out.q = Some(data::gaussian_vector(&mut rng, n));
        }
    }
    Ok(out)
}

fn matrix(config: &Config, key: &str, source: &Option<MatrixSource>, generated: Option<DMatrix<f64>>) -> Result<DMatrix<f64>> {
    match source {
        Some(MatrixSource::Inline(rows)) => data::matrix_from_rows(key, rows),
        Some(MatrixSource::File(path)) => data::read_matrix(key, &config.resolve(path)),
        None => generated.ok_or_else(|| config_error(key, "missing (give data inline, as a file, or a generator)")),
    }
}

fn vector(config: &Config, key: &str, source: &Option<VectorSource>, generated: Option<DVector<f64>>) -> Result<DVector<f64>> {
    match source {
        Some(VectorSource::Inline(v)) if v.is_empty() => Err(config_error(key, "vector is empty")),
        Some(VectorSource::Inline(v)) => Ok(DVector::from_column_slice(v)),
        Some(VectorSource::File(path)) => data::read_vector(key, &config.resolve(path)),
        None => generated.ok_or_else(|| config_error(key, "missing (give data inline, as a file, or a generator)")),
    }
}

fn bound(key: &str, source: &Option<BoundSource>, n: usize, default: f64) -> Result<DVector<f64>> {
    match source {
        None => Ok(DVector::from_element(n, default)),
        Some(BoundSource::Scalar(v)) => Ok(DVector::from_element(n, *v)),
        Some(BoundSource::Vector(v)) if v.len() == n => Ok(DVector::from_column_slice(v)),
        Some(BoundSource::Vector(v)) => Err(config_error(key, format!("has {} entries, expected {n}", v.len()))),
    }
}

fn expect_len(key: &str, found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(config_error(key, format!("has length {found}, expected {expected}")))
    }
}

fn contiguous_groups(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0..n).step_by(size).map(|s| (s..(s + size).min(n)).collect()).collect()
}

fn solver_error(key: &str) -> impl Fn(fbtn::Error) -> BenchError + '_ {
    move |e| match e {
        fbtn::Error::InvalidParameter { name, reason } => config_error(format!("{key}.{name}"), reason),
        fbtn::Error::InvalidPartition { reason, .. } => config_error(key, reason),
        fbtn::Error::DimensionMismatch { expected, found } => {
            config_error(key, format!("dimension {found}, expected {expected}"))
        }
        other => config_error(key, other.to_string()),
    }
}

fn build_prox(config: &Config, prox: &ProxConfig, n: usize) -> Result<(Arc<dyn ProxOracle>, Option<f64>)> {
    let err = solver_error("prox");
    Ok(match prox {
        ProxConfig::Zero => (Arc::new(ZeroFunction::new(n)), None),
        ProxConfig::L1 { lambda } => {
            check_lambda("prox.lambda", *lambda)?;
            (Arc::new(L1Norm::new(n, *lambda).map_err(&err)?), Some(*lambda))
        }
        ProxConfig::L2 { lambda } => {
            check_lambda("prox.lambda", *lambda)?;
            (Arc::new(EuclideanNorm::new(n, *lambda).map_err(&err)?), Some(*lambda))
        }
        ProxConfig::Linf { lambda } => {
            check_lambda("prox.lambda", *lambda)?;
            (Arc::new(LInfNorm::new(n, *lambda).map_err(&err)?), Some(*lambda))
        }
        ProxConfig::Group { lambda, groups } => {
            check_lambda("prox.lambda", *lambda)?;
            (Arc::new(GroupNorms::new(n, groups.clone(), *lambda).map_err(&err)?), Some(*lambda))
        }
        ProxConfig::Box { lower, upper } => {
            let lower = bound("prox.lower", &Some(lower.clone()), n, 0.0)?;
            let upper = bound("prox.upper", &Some(upper.clone()), n, 0.0)?;
            (Arc::new(SeparableBox::new(lower, upper).map_err(&err)?), None)
        }
        ProxConfig::Simplex => (Arc::new(UnitSimplex::new(n).map_err(&err)?), None),
        ProxConfig::L1Ball { radius } => (Arc::new(L1Ball::new(n, *radius).map_err(&err)?), None),
        ProxConfig::Ball { radius } => (Arc::new(EuclideanBall::new(n, *radius).map_err(&err)?), None),
        ProxConfig::Soc => (Arc::new(SecondOrderCone::new(n).map_err(&err)?), None),
        ProxConfig::Halfspace { normal, offset } => {
            expect_len("prox.normal", normal.len(), n)?;
            (Arc::new(Halfspace::new(DVector::from_column_slice(normal), *offset).map_err(&err)?), None)
        }
        ProxConfig::Affine { a, b } => {
            let a = matrix(config, "prox.a", &Some(a.clone()), None)?;
            let b = vector(config, "prox.b", &Some(b.clone()), None)?;
            expect_len("prox.a", a.ncols(), n)?;
            (Arc::new(AffineSet::new(a, b).map_err(&err)?), None)
        }
    })
}

/// Instantiates the smooth and nonsmooth oracles of a validated config.
pub fn build(config: &Config) -> Result<Instance> {
    let p = &config.problem;
    let generated = generate(config)?;
    let (smooth, nonsmooth, lambda, rows): (Arc<dyn SmoothOracle>, Arc<dyn ProxOracle>, Option<f64>, Option<usize>) =
        match p.kind {
            ProblemKind::Lasso | ProblemKind::GroupLasso | ProblemKind::LogisticL1 => {
                let a = matrix(config, "a", &p.a, generated.a)?;
                let b = vector(config, "b", &p.b, generated.b)?;
                let (m, n) = a.shape();
                if let Some(pm) = p.m {
                    expect_len("m", m, pm)?;
                }
                if let Some(pn) = p.n {
                    expect_len("n", n, pn)?;
                }
                expect_len("b", b.len(), m)?;
                let atb = a.tr_mul(&b);
                match p.kind {
                    ProblemKind::Lasso => {
                        let lambda = p.lambda.unwrap_or(LAMBDA_FRACTION * atb.amax());
                        let f = LeastSquaresSmooth::new(a, b).map_err(solver_error("a"))?;
                        (Arc::new(f), Arc::new(L1Norm::new(n, lambda).map_err(solver_error("lambda"))?), Some(lambda), Some(m))
                    }
                    ProblemKind::GroupLasso => {
                        let groups = match (&p.groups, p.group_size) {
                            (Some(g), _) => g.clone(),
                            (None, size) => contiguous_groups(n, size.unwrap_or(5)),
                        };
                        let lambda = p.lambda.unwrap_or_else(|| {
                            let largest = groups
                                .iter()
                                .map(|g| g.iter().filter(|&&i| i < n).map(|&i| atb[i] * atb[i]).sum::<f64>().sqrt())
                                .fold(0.0, f64::max);
                            LAMBDA_FRACTION * largest
                        });
                        let g = GroupNorms::new(n, groups, lambda).map_err(solver_error("groups"))?;
                        let f = LeastSquaresSmooth::new(a, b).map_err(solver_error("a"))?;
                        (Arc::new(f), Arc::new(g), Some(lambda), Some(m))
                    }
                    _ => {
                        // ∇f(0) = −½Aᵀb for the logistic loss.
                        let lambda = p.lambda.unwrap_or(LAMBDA_FRACTION * 0.5 * atb.amax());
                        let f = LogisticSmooth::new(a, b).map_err(solver_error("b"))?;
                        (Arc::new(f), Arc::new(L1Norm::new(n, lambda).map_err(solver_error("lambda"))?), Some(lambda), Some(m))
                    }
                }
            }
            ProblemKind::BoxQp | ProblemKind::CustomQuadraticProx => {
                let h = matrix(config, "h", &p.h, generated.h)?;
                let n = h.nrows();
                if h.ncols() != n {
                    return Err(config_error("h", format!("must be square, got {}x{}", n, h.ncols())));
                }
                if let Some(pn) = p.n {
                    expect_len("n", n, pn)?;
                }
                let q = vector(config, "q", &p.q, generated.q)?;
                expect_len("q", q.len(), n)?;
                let f = Arc::new(QuadraticSmooth::new(h, q).map_err(solver_error("h"))?);
                if p.kind == ProblemKind::BoxQp {
                    let lower = bound("lower", &p.lower, n, -1.0)?;
                    let upper = bound("upper", &p.upper, n, 1.0)?;
                    let g = SeparableBox::new(lower, upper).map_err(solver_error("lower"))?;
                    (f, Arc::new(g), None, None)
                } else {
                    let prox = p.prox.as_ref().ok_or_else(|| config_error("prox", "required for custom_quadratic_prox"))?;
                    let (g, lambda) = build_prox(config, prox, n)?;
                    (f, g, lambda, None)
                }
            }
        };
    let n = smooth.dim();
    let x0 = match &p.x0 {
        Some(src) => {
            let x0 = vector(config, "x0", &Some(src.clone()), None)?;
            expect_len("x0", x0.len(), n)?;
            x0
        }
        None => DVector::zeros(n),
    };
    Ok(Instance { kind: p.kind, smooth, nonsmooth, x0, lambda, rows })
}
