//! TOML run configuration.
//!
//! ```toml
//! [problem]
//! kind = "lasso"
//! m = 40
//! n = 100
//! generator = { seed = 42 }
//!
//! [solver]
//! name = "both"
//! eps = 1e-10
//! ```
//!
//! Data is either generated (see [`crate::data`]), given inline, or read from
//! CSV files (comma-separated, one matrix row per line, no header). Relative
//! paths are resolved against the directory of the config file. All indices
//! are 0-based.

use std::path::{Path, PathBuf};

use fbtn::driver::SolverOptions;
use serde::Deserialize;

use crate::error::{config_error, BenchError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `½‖Ax − b‖² + λ‖x‖₁`.
    Lasso,
    /// `½xᵀHx + qᵀx` subject to `lower ≤ x ≤ upper`.
    BoxQp,
    /// `½‖Ax − b‖² + λ Σ_g ‖x_g‖`.
    GroupLasso,
    /// Logistic loss with labels `b ∈ {−1, 1}` plus `λ‖x‖₁`.
    LogisticL1,
    /// `½xᵀHx + qᵀx` plus any library prox given under `[problem.prox]`.
    CustomQuadraticProx,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::BoxQp => "box_qp",
            ProblemKind::GroupLasso => "group_lasso",
            ProblemKind::LogisticL1 => "logistic_l1",
            ProblemKind::CustomQuadraticProx => "custom_quadratic_prox",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub generator: Option<GeneratorConfig>,
    /// Data matrix of least-squares and logistic terms.
    pub a: Option<MatrixSource>,
    /// Target vector, or labels for `logistic_l1`.
    pub b: Option<VectorSource>,
    /// Hessian of quadratic terms.
    pub h: Option<MatrixSource>,
    /// Linear coefficient of quadratic terms.
    pub q: Option<VectorSource>,
    pub lower: Option<BoundSource>,
    pub upper: Option<BoundSource>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub group_size: Option<usize>,
    pub prox: Option<ProxConfig>,
    pub x0: Option<VectorSource>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    #[serde(default)]
    pub distribution: Distribution,
    /// Smallest Hessian eigenvalue of generated quadratics.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Width of the generated Hessian spectrum.
    #[serde(default = "default_spread")]
    pub spread: f64,
}

fn default_mu() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    99.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<f64>>),
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BoundSource {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxConfig {
    Zero,
    L1 { lambda: f64 },
    L2 { lambda: f64 },
    Linf { lambda: f64 },
    Group { lambda: f64, groups: Vec<Vec<usize>> },
    Box { lower: BoundSource, upper: BoundSource },
    Simplex,
    L1Ball { radius: f64 },
    Ball { radius: f64 },
    Soc,
    Halfspace { normal: Vec<f64>, offset: f64 },
    Affine { a: MatrixSource, b: VectorSource },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Fbtn,
    Fbs,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub name: SolverChoice,
    pub eps: f64,
    /// Fixed initial stepsize; overrides `lipschitz`.
    pub gamma: Option<f64>,
    /// Initial Lipschitz guess; the estimate from `f` is used when absent.
    pub lipschitz: Option<f64>,
    pub sigma_frac: f64,
    pub zeta: f64,
    pub rho: f64,
    pub nu: f64,
    pub eta_bar: f64,
    pub max_outer: usize,
    pub max_backtracks: usize,
    pub cg_max_iters: Option<usize>,
    /// Relaxation `λ` of forward-backward splitting.
    pub relaxation: f64,
    pub fbs_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            name: SolverChoice::Fbtn,
            eps: o.tolerance,
            gamma: None,
            lipschitz: None,
            sigma_frac: o.sigma_fraction,
            zeta: o.zeta,
            rho: o.rho,
            nu: o.nu,
            eta_bar: o.eta_bar,
            max_outer: o.max_outer,
            max_backtracks: o.max_backtracks,
            cg_max_iters: o.cg_max_iters,
            relaxation: 1.0,
            fbs_max_iters: 100_000,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.eps,
            sigma_fraction: self.sigma_frac,
            zeta: self.zeta,
            eta_bar: self.eta_bar,
            rho: self.rho,
            nu: self.nu,
            max_outer: self.max_outer,
            max_backtracks: self.max_backtracks,
            cg_max_iters: self.cg_max_iters,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub solver: Option<SolverChoice>,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma_frac: Option<f64>,
    pub zeta: Option<f64>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
    pub eta_bar: Option<f64>,
    pub max_outer: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: Config = toml::from_str(text)?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        let s = &mut self.solver;
        if let Some(v) = o.solver {
            s.name = v;
        }
        if let Some(v) = o.eps {
            s.eps = v;
        }
        if let Some(v) = o.gamma {
            s.gamma = Some(v);
        }
        if let Some(v) = o.sigma_frac {
            s.sigma_frac = v;
        }
        if let Some(v) = o.zeta {
            s.zeta = v;
        }
        if let Some(v) = o.rho {
            s.rho = v;
        }
        if let Some(v) = o.nu {
            s.nu = v;
        }
        if let Some(v) = o.eta_bar {
            s.eta_bar = v;
        }
        if let Some(v) = o.max_outer {
            s.max_outer = v;
            s.fbs_max_iters = v;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(seed) = o.seed {
            match &mut self.problem.generator {
                Some(g) => g.seed = seed,
                None => return Err(config_error("seed", "the problem has no generator to seed")),
            }
        }
        Ok(())
    }

    /// Checks values that the type system cannot.
    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        let opts = s.options();
        opts.validate().map_err(|e| match e {
            fbtn::Error::InvalidParameter { name, reason } => config_error(name, reason),
            other => BenchError::Solver(other),
        })?;
        if let Some(g) = s.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(config_error("gamma", format!("must be positive, got {g}")));
            }
        }
        if let Some(l) = s.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(config_error("lipschitz", format!("must be positive, got {l}")));
            }
        }
        if !(s.relaxation > 0.0) {
            return Err(config_error("relaxation", format!("must be positive, got {}", s.relaxation)));
        }
        if s.fbs_max_iters == 0 {
            return Err(config_error("fbs_max_iters", "must be at least 1"));
        }
        if let Some(l) = self.problem.lambda {
            check_lambda("lambda", l)?;
        }
        if let Some(g) = &self.problem.generator {
            if !(g.mu > 0.0) || g.spread < 0.0 {
                return Err(config_error("generator", "mu must be positive and spread nonnegative"));
            }
        }
        if let Some(size) = self.problem.group_size {
            if size == 0 {
                return Err(config_error("group_size", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub(crate) fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

pub(crate) fn check_lambda(key: &str, lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("lambda must be nonnegative and finite, got {lambda}")))
    }
}
