//! Named invariant suites behind `fbtn-bench check`.
//!
//! The generalized-Hessian product and the CG solver are taken from
//! [`Subjects`] so that alternative implementations can be run through the
//! same suites.

use std::sync::Arc;

use fbtn::cg::{cg_solve_observed, CgOutcome, CgStatus};
use fbtn::driver::{fbtn_solve, SolveStatus, Solution, SolverOptions};
use fbtn::fbe::{FbePoint, FbeProblem};
use fbtn::prox::*;
use fbtn::smooth::{QuadraticSmooth, SmoothOracle};
use nalgebra::{DMatrix, DVector};
use rand::RngExt;

use crate::config::{BoundSource, Config, GeneratorConfig, MatrixSource, ProblemConfig, ProblemKind, ProxConfig, VectorSource};
use crate::data::{self, gaussian_vector, Rng};
use crate::instance::{self, Instance};

pub type HessVecFn = fn(&mut FbeProblem, &FbePoint, &DVector<f64>) -> fbtn::Result<DVector<f64>>;

/// `(matvec, rhs, eps, warm_start, max_iters, observer)`.
pub type CgFn = fn(
    &dyn Fn(&DVector<f64>) -> DVector<f64>,
    &DVector<f64>,
    f64,
    &DVector<f64>,
    usize,
    &mut dyn FnMut(&DVector<f64>),
) -> fbtn::Result<CgOutcome>;

#[derive(Clone, Copy)]
pub struct Subjects {
    pub hess_vec_fbe: HessVecFn,
    pub cg: CgFn,
}

fn library_hess_vec(p: &mut FbeProblem, point: &FbePoint, v: &DVector<f64>) -> fbtn::Result<DVector<f64>> {
    p.hess_vec_fbe(point, v)
}

fn library_cg(
    matvec: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    rhs: &DVector<f64>,
    eps: f64,
    warm: &DVector<f64>,
    max_iters: usize,
    observer: &mut dyn FnMut(&DVector<f64>),
) -> fbtn::Result<CgOutcome> {
    cg_solve_observed(|p| Ok(matvec(p)), rhs, eps, warm, max_iters, observer)
}

impl Default for Subjects {
    fn default() -> Self {
        Self { hess_vec_fbe: library_hess_vec, cg: library_cg }
    }
}

pub type CheckResult = Result<String, String>;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub suite: &'static str,
    pub invariant: &'static str,
    /// A short summary on success, the first violation on failure.
    pub result: CheckResult,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub outcomes: Vec<Outcome>,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.failures().map(|o| format!("{}.{}", o.suite, o.invariant)).collect()
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: fbtn::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

// ---------------------------------------------------------------------------
// Instances

/// A generated instance together with the exact spectrum `[μ_f, L_f]` of its
/// Hessian when `f` is quadratic.
#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub instance: Instance,
    pub spectrum: Option<(f64, f64)>,
}

fn base_problem(kind: ProblemKind, m: Option<usize>, n: usize, seed: u64) -> ProblemConfig {
    ProblemConfig {
        kind,
        m,
        n: Some(n),
        lambda: None,
        generator: Some(GeneratorConfig { seed, distribution: Default::default(), mu: 1.0, spread: 19.0 }),
        a: None,
        b: None,
        h: None,
        q: None,
        lower: None,
        upper: None,
        groups: None,
        group_size: Some(3),
        prox: None,
        x0: None,
    }
}

fn config_for(problem: ProblemConfig) -> Config {
    Config { problem, solver: Default::default(), output: Default::default(), base_dir: Default::default() }
}

/// Dense Hessian of `f` at the origin.
pub fn dense_hessian(f: &dyn SmoothOracle) -> DMatrix<f64> {
    let n = f.dim();
    let x = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        h.set_column(j, &f.hess_vec(&x, &e).expect("dimension is consistent"));
    }
    (&h + h.transpose()) * 0.5
}

fn spectrum(f: &dyn SmoothOracle) -> (f64, f64) {
    let ev = dense_hessian(f).symmetric_eigenvalues();
    (ev.min().max(0.0), ev.max())
}

fn custom_proxes(rng: &mut Rng, n: usize) -> Vec<(&'static str, ProxConfig)> {
    let normal: Vec<f64> = gaussian_vector(rng, n).iter().copied().collect();
    let a = data::gaussian_matrix(rng, 2, n);
    let b = &a * gaussian_vector(rng, n);
    let rows: Vec<Vec<f64>> = (0..2).map(|i| a.row(i).iter().copied().collect()).collect();
    vec![
        ("l2", ProxConfig::L2 { lambda: 1.0 }),
        ("linf", ProxConfig::Linf { lambda: 1.0 }),
        ("group", ProxConfig::Group { lambda: 0.7, groups: (0..n).step_by(4).map(|s| (s..(s + 4).min(n)).collect()).collect() }),
        ("simplex", ProxConfig::Simplex),
        ("l1_ball", ProxConfig::L1Ball { radius: 1.0 }),
        ("ball", ProxConfig::Ball { radius: 1.0 }),
        ("soc", ProxConfig::Soc),
        ("halfspace", ProxConfig::Halfspace { normal, offset: 0.5 }),
        ("affine", ProxConfig::Affine { a: MatrixSource::Inline(rows), b: VectorSource::Inline(b.iter().copied().collect()) }),
        ("box", ProxConfig::Box { lower: BoundSource::Scalar(-0.5), upper: BoundSource::Scalar(0.5) }),
    ]
}

/// One instance of every problem kind, and one custom quadratic per prox.
pub fn sample_instances(seed: u64) -> Vec<Sample> {
    let mut rng = data::rng(seed ^ 0x5eed);
    let mut configs = vec![
        ("lasso".to_string(), base_problem(ProblemKind::Lasso, Some(20), 30, seed)),
        ("group_lasso".to_string(), base_problem(ProblemKind::GroupLasso, Some(20), 30, seed + 1)),
        ("logistic_l1".to_string(), base_problem(ProblemKind::LogisticL1, Some(30), 12, seed + 2)),
        ("box_qp".to_string(), base_problem(ProblemKind::BoxQp, None, 20, seed + 3)),
    ];
    for (i, (name, prox)) in custom_proxes(&mut rng, 12).into_iter().enumerate() {
        let mut p = base_problem(ProblemKind::CustomQuadraticProx, None, 12, seed + 10 + i as u64);
        p.prox = Some(prox);
        configs.push((format!("custom_quadratic_prox/{name}"), p));
    }
    configs
        .into_iter()
        .map(|(name, p)| {
            let instance = instance::build(&config_for(p)).expect("sample configs are valid");
            let spectrum = (instance.kind != ProblemKind::LogisticL1).then(|| spectrum(instance.smooth.as_ref()));
            Sample { name, instance, spectrum }
        })
        .collect()
}

/// A point of `dom g` near a random Gaussian point.
fn domain_point(g: &dyn ProxOracle, rng: &mut Rng, scale: f64) -> DVector<f64> {
    let y = gaussian_vector(rng, g.dim()) * scale;
    if g.eval_g(&y).is_finite() {
        y
    } else {
        g.eval_prox(&y, 1.0).0
    }
}

fn fresh_problem(s: &Sample) -> Result<FbeProblem, String> {
    lib(FbeProblem::new(s.instance.smooth.clone(), s.instance.nonsmooth.clone()))
}

// ---------------------------------------------------------------------------
// Smooth oracles

pub fn smooth_symmetry(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for s in samples.iter().filter(|s| !s.name.starts_with("custom")) {
        let f = &s.instance.smooth;
        for _ in 0..count {
            let x = gaussian_vector(rng, f.dim());
            let p = gaussian_vector(rng, f.dim());
            let q = gaussian_vector(rng, f.dim());
            let gap = (lib(f.hess_vec(&x, &p))?.dot(&q) - p.dot(&lib(f.hess_vec(&x, &q))?)).abs();
            let tol = 1e-10 * (1.0 + p.norm() * q.norm());
            ensure(gap <= tol, || format!("{}: asymmetry {gap:e}", s.name))?;
            worst = worst.max(gap / tol);
        }
    }
    Ok(format!("worst gap {worst:.2e} of tolerance"))
}

pub fn smooth_convexity(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    for s in samples.iter().filter(|s| !s.name.starts_with("custom")) {
        let f = &s.instance.smooth;
        for _ in 0..count {
            let x = gaussian_vector(rng, f.dim());
            let p = gaussian_vector(rng, f.dim());
            let curv = p.dot(&lib(f.hess_vec(&x, &p))?);
            ensure(curv >= -1e-12 * p.norm_squared(), || format!("{}: curvature {curv:e}", s.name))?;
        }
    }
    Ok(String::new())
}

pub fn smooth_gradient(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for s in samples.iter().filter(|s| !s.name.starts_with("custom")) {
        let f = &s.instance.smooth;
        let n = f.dim();
        for _ in 0..count {
            let x = gaussian_vector(rng, n);
            let h = 1e-6 * (1.0 + x.amax());
            let grad = lib(f.gradient(&x))?;
            let mut fd = DVector::zeros(n);
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = h;
                fd[i] = (lib(f.value(&(&x + &e)))? - lib(f.value(&(&x - &e)))?) / (2.0 * h);
            }
            let rel = (&grad - &fd).norm() / grad.norm().max(1.0);
            ensure(rel <= 1e-5, || format!("{}: relative error {rel:e}", s.name))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

pub fn smooth_descent_lemma(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    for s in samples.iter().filter(|s| !s.name.starts_with("custom")) {
        let f = &s.instance.smooth;
        let Some(l) = f.lipschitz_estimate() else { continue };
        let l = l * fbtn::fbe::LIPSCHITZ_INFLATION;
        for _ in 0..count {
            let u = gaussian_vector(rng, f.dim());
            let v = gaussian_vector(rng, f.dim());
            let d = &v - &u;
            let gap = lib(f.value(&v))? - lib(f.value(&u))? - lib(f.gradient(&u))?.dot(&d);
            let slack = 1e-10 * (1.0 + lib(f.value(&u))?.abs());
            ensure(gap >= -slack && gap <= 0.5 * l * d.norm_squared() + slack, || {
                format!("{}: gap {gap:e} outside [0, {:e}]", s.name, 0.5 * l * d.norm_squared())
            })?;
        }
    }
    Ok(String::new())
}

// ---------------------------------------------------------------------------
// Prox oracles

/// One representative of every prox in the library, of dimension 6.
pub fn prox_catalogue(seed: u64) -> Vec<(&'static str, Arc<dyn ProxOracle>)> {
    let mut r = data::rng(seed);
    let n = 6;
    let lower = DVector::from_fn(n, |_, _| uniform(&mut r, -1.5, -0.2));
    let upper = DVector::from_fn(n, |_, _| uniform(&mut r, 0.2, 1.5));
    let a = data::gaussian_matrix(&mut r, 2, n);
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
        ("l1_ball", Arc::new(L1Ball::new(n, 1.5).unwrap())),
        ("ball", Arc::new(EuclideanBall::new(n, 0.9).unwrap())),
        ("soc", Arc::new(SecondOrderCone::new(n).unwrap())),
        ("separable_sum", Arc::new(SeparableSum::new(blocks).unwrap())),
        ("conjugate_l1_ball", Arc::new(MoreauConjugate::new(Arc::new(L1Ball::new(n, 1.1).unwrap())).unwrap())),
    ]
}

fn random_gamma(rng: &mut Rng) -> f64 {
    10f64.powf(uniform(rng, -1.0, 0.7))
}

fn prox_objective(g: &dyn ProxOracle, x: &DVector<f64>, gamma: f64, w: &DVector<f64>) -> f64 {
    g.eval_g(w).to_f64() + (w - x).norm_squared() / (2.0 * gamma)
}

pub fn prox_optimality(cat: &[(&'static str, Arc<dyn ProxOracle>)], rng: &mut Rng, count: usize) -> CheckResult {
    for (name, g) in cat {
        for _ in 0..count {
            let x = gaussian_vector(rng, g.dim()) * 2.0;
            let gamma = random_gamma(rng);
            let (z, gz) = lib(g.prox(&x, gamma))?;
            let value = g.eval_g(&z);
            ensure(value.is_finite() && (value.to_f64() - gz).abs() <= 1e-12 * (1.0 + gz.abs()), || {
                format!("{name}: returned g(z) = {gz:e} but g(z) = {value}")
            })?;
            let best = prox_objective(g.as_ref(), &x, gamma, &z);
            for j in 0..20 {
                let scale = 10f64.powi(-(j % 5));
                let w = z.clone() + gaussian_vector(rng, g.dim()) * scale;
                let w = if g.eval_g(&w).is_finite() { w } else { g.eval_prox(&w, 1.0).0 };
                let other = prox_objective(g.as_ref(), &x, gamma, &w);
                ensure(other >= best - 1e-9, || format!("{name}: perturbation improves by {:e}", best - other))?;
            }
        }
    }
    Ok(String::new())
}

pub fn prox_firm_nonexpansiveness(cat: &[(&'static str, Arc<dyn ProxOracle>)], rng: &mut Rng, count: usize) -> CheckResult {
    for (name, g) in cat {
        for _ in 0..count {
            let gamma = random_gamma(rng);
            let x = gaussian_vector(rng, g.dim()) * 2.0;
            let y = gaussian_vector(rng, g.dim()) * 2.0;
            let dz = lib(g.prox(&x, gamma))?.0 - lib(g.prox(&y, gamma))?.0;
            let lhs = dz.dot(&(&x - &y));
            ensure(lhs >= dz.norm_squared() - 1e-10, || format!("{name}: {lhs:e} < {:e}", dz.norm_squared()))?;
        }
    }
    Ok(String::new())
}

pub fn prox_jacobian_bounds(cat: &[(&'static str, Arc<dyn ProxOracle>)], rng: &mut Rng, count: usize) -> CheckResult {
    for (name, g) in cat {
        for _ in 0..count {
            let gamma = random_gamma(rng);
            let x = gaussian_vector(rng, g.dim()) * 2.0;
            let u = gaussian_vector(rng, g.dim());
            let v = gaussian_vector(rng, g.dim());
            let pv = lib(g.jac_vec(&x, gamma, &v))?;
            let pu = lib(g.jac_vec(&x, gamma, &u))?;
            let q = v.dot(&pv);
            ensure(q >= -1e-12 && q <= v.norm_squared() + 1e-12, || {
                format!("{name}: <v,Pv> = {q:e} outside [0, {:e}]", v.norm_squared())
            })?;
            let asym = (u.dot(&pv) - v.dot(&pu)).abs();
            ensure(asym <= 1e-10, || format!("{name}: asymmetry {asym:e}"))?;
            let zero = lib(g.jac_vec(&x, gamma, &DVector::zeros(g.dim())))?;
            ensure(zero.amax() == 0.0, || format!("{name}: P0 != 0"))?;
        }
    }
    Ok(String::new())
}

/// Whether `P v` is stable under coordinate shifts of `x` by `margin`, which
/// holds away from the case boundaries of the prox.
pub fn branch_stable(g: &dyn ProxOracle, x: &DVector<f64>, gamma: f64, v: &DVector<f64>, margin: f64) -> bool {
    let base = g.eval_jac_vec(x, gamma, v);
    let tol = 1e-2 * v.norm();
    (0..x.len()).all(|i| {
        [-margin, margin].iter().all(|&s| {
            let mut y = x.clone();
            y[i] += s;
            (g.eval_jac_vec(&y, gamma, v) - &base).norm() <= tol
        })
    })
}

pub fn prox_directional_derivative(cat: &[(&'static str, Arc<dyn ProxOracle>)], rng: &mut Rng, count: usize) -> CheckResult {
    let t = 1e-6;
    let mut tested = 0;
    for (name, g) in cat {
        let mut done = 0;
        for _ in 0..20 * count {
            if done == count {
                break;
            }
            let gamma = random_gamma(rng);
            let x = gaussian_vector(rng, g.dim()) * 2.0;
            let v = gaussian_vector(rng, g.dim());
            if !branch_stable(g.as_ref(), &x, gamma, &v, 1e-3) {
                continue;
            }
            done += 1;
            let fd = (lib(g.prox(&(&x + &v * t), gamma))?.0 - lib(g.prox(&(&x - &v * t), gamma))?.0) / (2.0 * t);
            let err = (fd - lib(g.jac_vec(&x, gamma, &v))?).norm();
            ensure(err <= 1e-5, || format!("{name}: error {err:e}"))?;
        }
        ensure(done > 0, || format!("{name}: no point with margin 1e-3 found"))?;
        tested += done;
    }
    Ok(format!("{tested} points"))
}

pub fn prox_moreau_sandwich(cat: &[(&'static str, Arc<dyn ProxOracle>)], rng: &mut Rng, count: usize) -> CheckResult {
    let norms = ["zero", "l1", "l2", "group", "linf"];
    for (name, g) in cat.iter().filter(|(n, _)| norms.contains(n)) {
        for _ in 0..count {
            let gamma = random_gamma(rng);
            let x = gaussian_vector(rng, g.dim()) * 2.0;
            let (z, gz) = lib(g.prox(&x, gamma))?;
            let envelope = gz + (&x - &z).norm_squared() / (2.0 * gamma);
            let gx = g.eval_g(&x).to_f64();
            ensure(envelope <= gx + 1e-10, || format!("{name}: envelope {envelope:e} > g(x) = {gx:e}"))?;
        }
    }
    Ok(String::new())
}

/// Where the brute-force oracle searches.
#[derive(Debug, Clone)]
pub enum Region {
    /// A grid over all of `R^n`, `n ≤ 2`.
    Grid,
    /// The points `origin + s·direction` with `lo ≤ s ≤ hi`, for domains of
    /// lower dimension.
    Segment { origin: DVector<f64>, direction: DVector<f64>, lo: f64, hi: f64 },
}

#[derive(Debug, Clone)]
pub struct LowDimensional {
    pub name: &'static str,
    pub oracle: Arc<dyn ProxOracle>,
    pub region: Region,
}

/// Prox instances of dimension one and two.
pub fn low_dimensional_catalogue() -> Vec<LowDimensional> {
    use nalgebra::dvector;
    let grid = |name, oracle: Arc<dyn ProxOracle>| LowDimensional { name, oracle, region: Region::Grid };
    let sqrt2 = 2f64.sqrt();
    vec![
        grid("l1/1", Arc::new(L1Norm::new(1, 0.7).unwrap())),
        grid("box/1", Arc::new(SeparableBox::uniform(1, -0.4, 0.9).unwrap())),
        grid("l2/1", Arc::new(EuclideanNorm::new(1, 0.6).unwrap())),
        grid("l1/2", Arc::new(L1Norm::new(2, 0.7).unwrap())),
        grid("l2/2", Arc::new(EuclideanNorm::new(2, 0.9).unwrap())),
        grid("linf/2", Arc::new(LInfNorm::new(2, 0.9).unwrap())),
        grid("group/2", Arc::new(GroupNorms::new(2, vec![vec![1], vec![0]], 0.4).unwrap())),
        grid("box/2", Arc::new(SeparableBox::new(dvector![-0.5, -1.0], dvector![0.25, 0.5]).unwrap())),
        grid("halfspace/2", Arc::new(Halfspace::new(dvector![1.0, 2.0], 0.5).unwrap())),
        grid("l1_ball/2", Arc::new(L1Ball::new(2, 0.8).unwrap())),
        grid("ball/2", Arc::new(EuclideanBall::new(2, 0.8).unwrap())),
        grid("soc/2", Arc::new(SecondOrderCone::new(2).unwrap())),
        grid("conjugate_ball/2", Arc::new(MoreauConjugate::new(Arc::new(EuclideanBall::unit(2))).unwrap())),
        LowDimensional {
            name: "affine/2",
            oracle: Arc::new(AffineSet::new(nalgebra::dmatrix![1.0, -2.0], dvector![0.3]).unwrap()),
            region: Region::Segment {
                origin: dvector![0.3, 0.0],
                direction: dvector![2.0, 1.0] / 5f64.sqrt(),
                lo: -8.0,
                hi: 8.0,
            },
        },
        LowDimensional {
            name: "simplex/2",
            oracle: Arc::new(UnitSimplex::new(2).unwrap()),
            region: Region::Segment { origin: dvector![0.0, 1.0], direction: dvector![1.0, -1.0] / sqrt2, lo: 0.0, hi: sqrt2 },
        },
    ]
}

/// Minimizes `g(w) + ‖w − x‖²/(2γ)` over `point(c + h·i)` for `|i| ≤ steps`
/// in every coordinate of `c`.
fn grid_search(
    g: &dyn ProxOracle,
    x: &DVector<f64>,
    gamma: f64,
    point: &dyn Fn(&[f64]) -> Option<DVector<f64>>,
    center: &[f64],
    h: f64,
    steps: i64,
) -> (Vec<f64>, f64) {
    let mut best = (center.to_vec(), f64::INFINITY);
    let mut c = center.to_vec();
    let mut visit = |c: &[f64]| {
        if let Some(w) = point(c) {
            let value = prox_objective(g, x, gamma, &w);
            if value < best.1 {
                best = (c.to_vec(), value);
            }
        }
    };
    for i in -steps..=steps {
        c[0] = center[0] + i as f64 * h;
        if c.len() == 1 {
            visit(&c);
        } else {
            for j in -steps..=steps {
                c[1] = center[1] + j as f64 * h;
                visit(&c);
            }
        }
    }
    best
}

/// Grid search for `prox_{γg}(x)`: a coarse grid followed by local grids
/// down to step `1e−6`.
pub fn brute_force_prox(g: &dyn ProxOracle, region: &Region, x: &DVector<f64>, gamma: f64) -> (DVector<f64>, f64) {
    let (point, center, levels): (Box<dyn Fn(&[f64]) -> Option<DVector<f64>>>, Vec<f64>, Vec<(f64, i64)>) = match region {
        Region::Grid if g.dim() == 1 => (
            Box::new(|c: &[f64]| Some(DVector::from_column_slice(c))),
            vec![x[0]],
            vec![(1e-3, 4000), (1e-5, 200), (1e-6, 20)],
        ),
        Region::Grid => (
            Box::new(|c: &[f64]| Some(DVector::from_column_slice(c))),
            vec![0.0, 0.0],
            vec![(2e-2, ((x.amax() + 3.0) / 2e-2).ceil() as i64), (1e-3, 150), (1e-4, 150), (1e-5, 150), (1e-6, 150)],
        ),
        Region::Segment { origin, direction, lo, hi } => {
            let (lo, hi) = (*lo, *hi);
            (
                Box::new(move |c: &[f64]| (lo..=hi).contains(&c[0]).then(|| origin + direction * c[0])),
                vec![(lo.max(-8.0) + hi.min(8.0)) / 2.0],
                vec![(1e-3, 8000), (1e-5, 200), (1e-6, 20)],
            )
        }
    };
    let (h0, steps0) = levels[0];
    let mut best = grid_search(g, x, gamma, &*point, &center, h0, steps0);
    for &(h, steps) in &levels[1..] {
        // Recentre until the minimizer stays inside the window.
        for _ in 0..100 {
            let refined = grid_search(g, x, gamma, &*point, &best.0.clone(), h, steps);
            let moved = refined.0 != best.0;
            if refined.1 <= best.1 {
                best = refined;
            }
            if !moved {
                break;
            }
        }
    }
    let w = point(&best.0).expect("the best grid point is in the region");
    (w, best.1)
}

/// Compares `prox` against [`brute_force_prox`]: the prox value must not
/// exceed the grid minimum and the two points must agree to `1e−3`.
pub fn prox_brute_force(cat: &[LowDimensional], rng: &mut Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for case in cat {
        let g = case.oracle.as_ref();
        for _ in 0..count {
            let gamma = uniform(rng, 0.2, 2.0);
            let x = gaussian_vector(rng, g.dim()) * 1.5;
            let (z, _) = lib(g.prox(&x, gamma))?;
            let value = prox_objective(g, &x, gamma, &z);
            let (w, grid_value) = brute_force_prox(g, &case.region, &x, gamma);
            ensure(grid_value.is_finite(), || format!("{}: no feasible grid point", case.name))?;
            ensure(value <= grid_value + 1e-12, || format!("{}: prox value {value:e} above grid {grid_value:e}", case.name))?;
            let dist = (&z - &w).norm();
            ensure(dist <= 1e-3, || format!("{}: |z - w| = {dist:e}", case.name))?;
            worst = worst.max(dist);
        }
    }
    Ok(format!("largest distance to grid minimizer {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Forward-backward envelope

/// Both sandwich inequalities and the forward-backward sufficient decrease
/// at `count` points in `dom g` spread over `samples`.
pub fn fbe_sandwich(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    for i in 0..count {
        let s = &samples[i % samples.len()];
        let mut p = fresh_problem(s)?;
        let x = domain_point(s.instance.nonsmooth.as_ref(), rng, 2.0);
        let start = lib(p.evaluate(&x))?;
        let (point, _) = lib(p.adapt_gamma(start))?;
        let (gamma, l) = (p.gamma(), p.lipschitz());
        let phi_x = lib(p.objective(&x))?.to_f64();
        let phi_t = lib(p.objective(&point.tx))?.to_f64();
        let d2 = (&x - &point.tx).norm_squared();
        ensure(phi_t <= point.fbe - (1.0 - gamma * l) / (2.0 * gamma) * d2 + 1e-9, || {
            format!("{}: phi(T x) = {phi_t:e} above lower sandwich at fbe {:e}", s.name, point.fbe)
        })?;
        ensure(point.fbe <= phi_x - d2 / (2.0 * gamma) + 1e-9, || {
            format!("{}: fbe {:e} above phi(x) - |x - Tx|^2/(2 gamma) = {:e}", s.name, point.fbe, phi_x - d2 / (2.0 * gamma))
        })?;
        ensure(phi_t <= phi_x - (2.0 - gamma * l) / (2.0 * gamma) * d2 + 1e-9, || {
            format!("{}: forward-backward decrease violated", s.name)
        })?;
    }
    Ok(format!("{count} points"))
}

/// `φ^μ(x) = min_w φ(w) + ‖w − x‖²/(2μ)` by nested golden-section search
/// over the box `bounds` (one or two coordinates), which must contain the
/// minimizer.
pub fn moreau_envelope_oracle(phi: &dyn Fn(&[f64]) -> f64, x: &[f64], mu: f64, bounds: &[(f64, f64)]) -> f64 {
    fn golden(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..iters {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        fc.min(fd).min(f(a)).min(f(b))
    }
    let obj = |w: &[f64]| phi(w) + w.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * mu);
    match bounds {
        [(a, b)] => golden(&mut |t| obj(&[t]), *a, *b, 100),
        [(a0, b0), (a1, b1)] => golden(&mut |s| golden(&mut |t| obj(&[s, t]), *a1, *b1, 80), *a0, *b0, 80),
        _ => unreachable!("the oracle is for one and two dimensions"),
    }
}

/// `φ^{γ/(1−γL)} ≤ φ_γ ≤ φ^γ` on one- and two-dimensional instances whose
/// `dom g` is a box.
pub fn fbe_moreau_bracket(rng: &mut Rng, count: usize) -> CheckResult {
    use nalgebra::{dmatrix, dvector};
    let wide = 8.0;
    let cases: Vec<(Arc<dyn SmoothOracle>, Arc<dyn ProxOracle>, Vec<(f64, f64)>)> = vec![
        (
            Arc::new(QuadraticSmooth::new(dmatrix![3.0], dvector![-1.0]).unwrap()),
            Arc::new(L1Norm::new(1, 0.8).unwrap()),
            vec![(-wide, wide)],
        ),
        (
            Arc::new(QuadraticSmooth::new(dmatrix![0.5], dvector![2.0]).unwrap()),
            Arc::new(SeparableBox::uniform(1, -1.0, 0.5).unwrap()),
            vec![(-1.0, 0.5)],
        ),
        (
            Arc::new(QuadraticSmooth::new(dmatrix![2.0, 0.6; 0.6, 1.0], dvector![0.5, -1.0]).unwrap()),
            Arc::new(L1Norm::new(2, 0.4).unwrap()),
            vec![(-wide, wide); 2],
        ),
        (
            Arc::new(QuadraticSmooth::new(dmatrix![4.0, -1.0; -1.0, 0.5], dvector![-1.0, 0.3]).unwrap()),
            Arc::new(EuclideanNorm::new(2, 0.7).unwrap()),
            vec![(-wide, wide); 2],
        ),
        (
            Arc::new(QuadraticSmooth::new(dmatrix![1.0, 0.9; 0.9, 2.0], dvector![1.0, 1.0]).unwrap()),
            Arc::new(SeparableBox::new(dvector![-0.5, -1.0], dvector![1.0, 0.25]).unwrap()),
            vec![(-0.5, 1.0), (-1.0, 0.25)],
        ),
    ];
    for (f, g, bounds) in cases {
        let mut p = lib(FbeProblem::new(f.clone(), g.clone()))?;
        let (gamma, l) = (p.gamma(), p.lipschitz());
        let phi = |w: &[f64]| {
            let w = DVector::from_column_slice(w);
            f.value(&w).unwrap() + g.eval_g(&w).to_f64()
        };
        for _ in 0..count {
            let x = gaussian_vector(rng, g.dim());
            let fbe = lib(p.evaluate(&x))?.fbe;
            let upper = moreau_envelope_oracle(&phi, x.as_slice(), gamma, &bounds);
            let lower = moreau_envelope_oracle(&phi, x.as_slice(), gamma / (1.0 - gamma * l), &bounds);
            ensure(lower - 1e-8 <= fbe && fbe <= upper + 1e-8, || {
                format!("{g:?}: fbe {fbe:e} outside [{lower:e}, {upper:e}]")
            })?;
        }
    }
    Ok(String::new())
}

pub fn fbe_nonexpansive_forward_backward(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    for s in samples.iter().filter(|s| s.spectrum.is_some()) {
        let (_, lf) = s.spectrum.unwrap();
        // Any stepsize below 2/L_f.
        let gamma = 1.9 / lf;
        let mut p = lib(FbeProblem::with_gamma(s.instance.smooth.clone(), s.instance.nonsmooth.clone(), gamma))?;
        for _ in 0..count {
            let x = gaussian_vector(rng, s.instance.dim()) * 2.0;
            let y = gaussian_vector(rng, s.instance.dim()) * 2.0;
            let tx = lib(p.evaluate(&x))?.tx;
            let ty = lib(p.evaluate(&y))?.tx;
            let (lhs, rhs) = ((&tx - &ty).norm(), (&x - &y).norm());
            ensure(lhs <= rhs + 1e-12 * (1.0 + rhs), || format!("{}: |Tx - Ty| = {lhs:e} > {rhs:e}", s.name))?;
        }
    }
    Ok(String::new())
}

/// Central differences of `φ_γ` against `∇φ_γ` at points whose forward
/// step lies at least `margin` away from prox case boundaries.
pub fn fbe_gradient(samples: &[Sample], rng: &mut Rng, count: usize, margin: f64) -> CheckResult {
    let mut worst = 0.0f64;
    for s in samples {
        let mut p = fresh_problem(s)?;
        let n = s.instance.dim();
        let g = s.instance.nonsmooth.clone();
        let mut done = 0;
        for _ in 0..50 * count {
            if done == count {
                break;
            }
            let x = gaussian_vector(rng, n);
            let start = lib(p.evaluate(&x))?;
            let (point, _) = lib(p.adapt_gamma(start))?;
            let v = gaussian_vector(rng, n);
            if !branch_stable(g.as_ref(), &point.forward, point.gamma, &v, margin) {
                continue;
            }
            done += 1;
            let h = 1e-6 * (1.0 + x.amax());
            let mut fd = DVector::zeros(n);
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = h;
                fd[i] = (lib(p.evaluate(&(&x + &e)))?.fbe - lib(p.evaluate(&(&x - &e)))?.fbe) / (2.0 * h);
            }
            let rel = (&fd - &point.fbe_grad).norm() / point.fbe_grad.norm().max(1.0);
            ensure(rel <= 1e-5, || format!("{}: relative error {rel:e}", s.name))?;
            worst = worst.max(rel);
        }
        ensure(done == count, || format!("{}: only {done} points with margin {margin}", s.name))?;
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

/// Rayleigh quotients of the generalized Hessian within
/// `[min{(1−γμ)μ, (1−γL)L}, (1−γμ)/γ]` on quadratic instances.
pub fn fbe_psd_bounds(samples: &[Sample], subjects: &Subjects, rng: &mut Rng, points: usize, directions: usize) -> CheckResult {
    let mut checked = 0;
    for s in samples.iter().filter(|s| s.spectrum.is_some()) {
        let (mu, lf) = s.spectrum.unwrap();
        let mut p = fresh_problem(s)?;
        let gamma = p.gamma();
        if gamma * lf > 1.0 {
            return Err(format!("{}: stepsize {gamma:e} exceeds 1/L_f", s.name));
        }
        let lower = ((1.0 - gamma * mu) * mu).min((1.0 - gamma * lf) * lf);
        let upper = (1.0 - gamma * mu) / gamma;
        for _ in 0..points {
            let x = gaussian_vector(rng, s.instance.dim()) * 2.0;
            let point = lib(p.evaluate(&x))?;
            for _ in 0..directions {
                let v = gaussian_vector(rng, s.instance.dim());
                let u = gaussian_vector(rng, s.instance.dim());
                let hv = lib((subjects.hess_vec_fbe)(&mut p, &point, &v))?;
                let hu = lib((subjects.hess_vec_fbe)(&mut p, &point, &u))?;
                let q = v.dot(&hv) / v.norm_squared();
                ensure(q >= lower - 1e-8 && q <= upper + 1e-8, || {
                    format!("{}: Rayleigh quotient {q:e} outside [{lower:e}, {upper:e}]", s.name)
                })?;
                let asym = (u.dot(&hv) - v.dot(&hu)).abs();
                ensure(asym <= 1e-8 * (1.0 + upper) * u.norm() * v.norm(), || format!("{}: asymmetry {asym:e}", s.name))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} directions"))
}

pub fn fbe_quadratic_convexity(samples: &[Sample], rng: &mut Rng, count: usize) -> CheckResult {
    for s in samples.iter().filter(|s| s.spectrum.is_some()) {
        let (mu, lf) = s.spectrum.unwrap();
        let mut p = fresh_problem(s)?;
        let gamma = p.gamma();
        let modulus = (mu * (1.0 - gamma * mu)).min(lf * (1.0 - gamma * lf));
        for _ in 0..count {
            let x = gaussian_vector(rng, s.instance.dim()) * 2.0;
            let y = gaussian_vector(rng, s.instance.dim()) * 2.0;
            let gx = lib(p.evaluate(&x))?.fbe_grad;
            let gy = lib(p.evaluate(&y))?.fbe_grad;
            let lhs = (gx - gy).dot(&(&x - &y));
            let rhs = modulus * (&x - &y).norm_squared() - 1e-9;
            ensure(lhs >= rhs, || format!("{}: {lhs:e} < {rhs:e}", s.name))?;
        }
    }
    Ok(String::new())
}

// ---------------------------------------------------------------------------
// Conjugate gradient

pub struct SpdSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

pub fn spd_system(rng: &mut Rng, n: usize, mu: f64, spread: f64) -> SpdSystem {
    SpdSystem { matrix: data::spd_matrix(rng, n, mu, spread), rhs: gaussian_vector(rng, n) }
}

fn run_cg(subjects: &Subjects, sys: &SpdSystem, eps: f64, warm: &DVector<f64>, cap: usize) -> Result<CgOutcome, String> {
    let m = &sys.matrix;
    lib((subjects.cg)(&|p| m * p, &sys.rhs, eps, warm, cap, &mut |_| {}))
}

pub fn cg_exit_contract(subjects: &Subjects, rng: &mut Rng, count: usize) -> CheckResult {
    let mut converged = 0;
    for i in 0..count {
        let mu = 10f64.powf(uniform(rng, -2.0, 0.0));
        let spread = 10f64.powf(uniform(rng, 0.0, 2.0));
        let sys = spd_system(rng, 30, mu, spread);
        let eps = 10f64.powf(uniform(rng, -10.0, -2.0));
        let warm = if i % 4 == 0 { DVector::zeros(30) } else { gaussian_vector(rng, 30) };
        let out = run_cg(subjects, &sys, eps, &warm, 60)?;
        if out.status == CgStatus::Converged {
            converged += 1;
            let res = (&sys.matrix * &out.d - &sys.rhs).norm();
            ensure(res <= eps * (1.0 + 1e-12), || format!("system {i}: residual {res:e} > eps {eps:e}"))?;
        }
    }
    ensure(converged > 0, || "no system converged".into())?;
    Ok(format!("{converged} of {count} converged"))
}

pub fn cg_finite_termination(subjects: &Subjects, rng: &mut Rng, count: usize) -> CheckResult {
    for i in 0..count {
        let sys = spd_system(rng, 30, 1.0, 9.0);
        let out = run_cg(subjects, &sys, 1e-10, &DVector::zeros(30), 35)?;
        ensure(out.status == CgStatus::Converged, || format!("system {i}: {:?} after {}", out.status, out.iterations))?;
    }
    Ok(String::new())
}

pub fn cg_warm_start_consistency(subjects: &Subjects, rng: &mut Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for i in 0..count {
        let sys = spd_system(rng, 30, 1.0, 9.0);
        let d0 = gaussian_vector(rng, 30);
        let eps = 1e-8;
        let warm = run_cg(subjects, &sys, eps, &d0, 60)?;
        let shifted = SpdSystem { matrix: sys.matrix.clone(), rhs: &sys.rhs - &sys.matrix * &d0 };
        let cold = run_cg(subjects, &shifted, eps, &DVector::zeros(30), 60)?;
        let gap = (&warm.d - (&d0 + &cold.d)).amax();
        ensure(gap <= 1e-12 * (1.0 + warm.d.amax()), || format!("system {i}: difference {gap:e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("largest difference {worst:.2e}"))
}

pub fn cg_energy_norm(subjects: &Subjects, rng: &mut Rng, count: usize) -> CheckResult {
    for i in 0..count {
        let sys = spd_system(rng, 25, 0.01, 10.0);
        let star = sys.matrix.clone().cholesky().expect("SPD").solve(&sys.rhs);
        let m = &sys.matrix;
        let mut errors = Vec::new();
        let warm = gaussian_vector(rng, 25);
        lib((subjects.cg)(&|p| m * p, &sys.rhs, 1e-12, &warm, 200, &mut |d| {
            let e = d - &star;
            errors.push(e.dot(&(m * &e)).sqrt());
        }))?;
        for (j, w) in errors.windows(2).enumerate() {
            ensure(w[1] <= w[0] + 1e-12 * (1.0 + w[0]), || format!("system {i}, step {j}: {:e} > {:e}", w[1], w[0]))?;
        }
    }
    Ok(String::new())
}

// ---------------------------------------------------------------------------
// Driver

/// Checks `φ_γ(x⁺) ≤ φ_γ(x) − σ‖R_γ(x)‖²` between consecutive iterates that
/// share a stepsize. Returns the number of steps checked.
pub fn linesearch_violation(solution: &Solution, opts: &SolverOptions, lipschitz_gamma: f64) -> Result<usize, String> {
    let trace = &solution.trace;
    let mut fbe: Vec<f64> = trace.iter().map(|r| r.fbe).collect();
    fbe.push(solution.final_point.fbe);
    let mut gammas: Vec<f64> = trace.iter().map(|r| r.gamma).collect();
    gammas.push(solution.final_point.gamma);
    let mut checked = 0;
    for (k, rec) in trace.iter().enumerate() {
        if rec.tau == 0.0 || gammas[k + 1] != rec.gamma {
            continue;
        }
        let sigma = opts.sigma_fraction * rec.gamma * (1.0 - lipschitz_gamma) / 2.0;
        let target = fbe[k] - sigma * rec.res_norm * rec.res_norm;
        ensure(fbe[k + 1] <= target, || format!("k = {k}: fbe {:e} above target {target:e}", fbe[k + 1]))?;
        checked += 1;
    }
    Ok(checked)
}

fn solve_sample(s: &Sample, opts: &SolverOptions, initial_l: Option<f64>) -> Result<(Solution, FbeProblem), String> {
    let (f, g) = (s.instance.smooth.clone(), s.instance.nonsmooth.clone());
    let mut p = match initial_l {
        Some(l) => lib(FbeProblem::with_lipschitz(f, g, l))?,
        None => lib(FbeProblem::new(f, g))?,
    };
    let sol = lib(fbtn_solve(&mut p, &s.instance.x0, opts))?;
    Ok((sol, p))
}

pub fn driver_linesearch_descent(samples: &[Sample]) -> CheckResult {
    let opts = SolverOptions { tolerance: 1e-8, ..Default::default() };
    let mut checked = 0;
    for s in samples {
        let (sol, p) = solve_sample(s, &opts, None)?;
        let gl = p.gamma() * p.lipschitz();
        checked += linesearch_violation(&sol, &opts, gl).map_err(|e| format!("{}: {e}", s.name))?;
    }
    Ok(format!("{checked} accepted steps"))
}

pub fn driver_stepsize_monotone(samples: &[Sample]) -> CheckResult {
    let opts = SolverOptions { tolerance: 1e-8, ..Default::default() };
    for s in samples {
        let (sol, p) = solve_sample(s, &opts, Some(1e-3))?;
        ensure(sol.status == SolveStatus::ResidualBelowTol, || format!("{}: did not converge", s.name))?;
        for w in sol.trace.windows(2) {
            ensure(w[1].gamma <= w[0].gamma, || format!("{}: gamma increased at k = {}", s.name, w[1].k))?;
        }
        ensure(p.counts().halvings <= fbtn::fbe::MAX_HALVINGS, || format!("{}: too many halvings", s.name))?;
    }
    Ok(String::new())
}

/// Strongly convex quadratic plus `ℓ1` instances used for the tail checks.
pub fn quadratic_l1(seed: u64, n: usize, mu: f64, spread: f64, lambda: f64) -> Instance {
    let mut p = base_problem(ProblemKind::CustomQuadraticProx, None, n, seed);
    if let Some(g) = p.generator.as_mut() {
        g.mu = mu;
        g.spread = spread;
    }
    p.prox = Some(ProxConfig::L1 { lambda });
    p.x0 = Some(VectorSource::Inline(vec![10.0; n]));
    instance::build(&config_for(p)).expect("valid instance")
}

/// Whether the decrease `σ‖R‖²` required by the linesearch is below the
/// resolution of `φ_γ` in double precision, where acceptance is decided by
/// rounding.
pub fn below_rounding_floor(sigma: f64, res_norm: f64, fbe: f64) -> bool {
    sigma * res_norm * res_norm < 4.0 * f64::EPSILON * fbe.abs()
}

/// Unit steps once `‖R‖ ≤ 1e−3`, at iterations above the rounding floor.
pub fn driver_unit_steps(seed: u64, count: u64) -> CheckResult {
    let opts = SolverOptions { tolerance: 1e-8, ..Default::default() };
    let mut skipped = 0;
    for i in 0..count {
        let inst = quadratic_l1(seed * 1000 + i, 50, 1.0, 99.0, 1.0);
        let mut p = lib(FbeProblem::new(inst.smooth.clone(), inst.nonsmooth.clone()))?;
        let sol = lib(fbtn_solve(&mut p, &inst.x0, &opts))?;
        let sigma = opts.sigma(&p);
        if let Some(first) = sol.trace.iter().position(|r| r.res_norm <= 1e-3) {
            for r in &sol.trace[first..] {
                if below_rounding_floor(sigma, r.res_norm, r.fbe) {
                    skipped += 1;
                    continue;
                }
                ensure(r.tau == 1.0, || format!("instance {i}: tau = {} at k = {} after |R| <= 1e-3", r.tau, r.k))?;
            }
        }
    }
    Ok(format!("{skipped} iterations below the rounding floor"))
}

/// `(φ_γ(x⁺) − φ*)/(φ_γ(x) − φ*)` stays below one, with `φ*` the final value.
pub fn driver_q_linear(seed: u64, count: u64) -> CheckResult {
    let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
    let mut worst = 0.0f64;
    for i in 0..count {
        let inst = quadratic_l1(seed * 1000 + 500 + i, 30, 1.0, 19.0, 0.5);
        let mut p = lib(FbeProblem::new(inst.smooth.clone(), inst.nonsmooth.clone()))?;
        let sol = lib(fbtn_solve(&mut p, &inst.x0, &opts))?;
        let star = sol.final_point.fbe;
        let mut values: Vec<f64> = sol.trace.iter().map(|r| r.fbe - star).collect();
        values.push(0.0);
        let floor = 1e-9 * (1.0 + star.abs());
        for w in values.windows(2).filter(|w| w[0] > floor) {
            let ratio = w[1] / w[0];
            ensure(ratio < 1.0, || format!("instance {i}: ratio {ratio}"))?;
            worst = worst.max(ratio);
        }
    }
    Ok(format!("contraction c = {:.3}", 1.0 - worst))
}

pub fn driver_determinism(samples: &[Sample]) -> CheckResult {
    let opts = SolverOptions { tolerance: 1e-8, ..Default::default() };
    for s in samples.iter().take(4) {
        let (a, _) = solve_sample(s, &opts, None)?;
        let (b, _) = solve_sample(s, &opts, None)?;
        let key = |sol: &Solution| -> Vec<[String; 11]> {
            sol.trace
                .iter()
                .map(|r| {
                    let row = crate::run::trace_row(r);
                    std::array::from_fn(|i| row[i].clone())
                })
                .collect()
        };
        ensure(key(&a) == key(&b) && a.x == b.x, || format!("{}: runs differ", s.name))?;
    }
    Ok(String::new())
}

// ---------------------------------------------------------------------------

/// Runs every suite with data derived from `seed`.
pub fn run_checks(seed: u64, subjects: &Subjects) -> CheckReport {
    let samples = sample_instances(seed);
    let catalogue = prox_catalogue(seed);
    let low = low_dimensional_catalogue();
    let mut rng = data::rng(seed);
    let rng = &mut rng;
    let mut report = CheckReport::default();
    let mut record = |suite, invariant, result| report.outcomes.push(Outcome { suite, invariant, result });

    record("smooth", "symmetry", smooth_symmetry(&samples, rng, 100));
    record("smooth", "convexity", smooth_convexity(&samples, rng, 100));
    record("smooth", "gradient_check", smooth_gradient(&samples, rng, 20));
    record("smooth", "descent_lemma", smooth_descent_lemma(&samples, rng, 100));

    record("prox", "optimality", prox_optimality(&catalogue, rng, 200));
    record("prox", "firm_nonexpansiveness", prox_firm_nonexpansiveness(&catalogue, rng, 200));
    record("prox", "jacobian_bounds", prox_jacobian_bounds(&catalogue, rng, 100));
    record("prox", "directional_derivative", prox_directional_derivative(&catalogue, rng, 20));
    record("prox", "moreau_sandwich", prox_moreau_sandwich(&catalogue, rng, 100));
    record("prox", "brute_force", prox_brute_force(&low, rng, 2));

    record("fbe", "sandwich", fbe_sandwich(&samples, rng, 200));
    record("fbe", "moreau_bracket", fbe_moreau_bracket(rng, 5));
    record("fbe", "nonexpansive_forward_backward", fbe_nonexpansive_forward_backward(&samples, rng, 20));
    record("fbe", "gradient", fbe_gradient(&samples, rng, 5, 1e-3));
    record("fbe", "psd_bounds", fbe_psd_bounds(&samples, subjects, rng, 2, 20));
    record("fbe", "quadratic_convexity", fbe_quadratic_convexity(&samples, rng, 20));

    record("cg", "exit_contract", cg_exit_contract(subjects, rng, 100));
    record("cg", "finite_termination", cg_finite_termination(subjects, rng, 10));
    record("cg", "warm_start_consistency", cg_warm_start_consistency(subjects, rng, 20));
    record("cg", "energy_norm", cg_energy_norm(subjects, rng, 10));

    record("driver", "linesearch_descent", driver_linesearch_descent(&samples));
    record("driver", "stepsize_monotone", driver_stepsize_monotone(&samples));
    record("driver", "unit_steps", driver_unit_steps(seed, 3));
    record("driver", "q_linear", driver_q_linear(seed, 3));
    record("driver", "determinism", driver_determinism(&samples));
    report
}
