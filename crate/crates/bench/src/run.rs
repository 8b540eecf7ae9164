//! Solver runs, CSV traces and the text report.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fbtn::driver::{fbs_solve, fbtn_solve, IterationRecord, SolveStatus, Solution};
use fbtn::fbe::FbeProblem;

use crate::config::{Config, SolverChoice, SolverConfig};
use crate::error::{BenchError, Result};
use crate::instance::Instance;

pub const TRACE_HEADER: [&str; 12] = [
    "k",
    "fbe",
    "res_norm",
    "tau",
    "cg_iters",
    "cg_status",
    "delta",
    "eps_inner",
    "gamma",
    "hessvec_total",
    "prox_total",
    "wall_ms",
];

/// Number of trailing residual ratios shown in the report.
pub const RATIO_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Fbtn,
    Fbs,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Fbtn => "fbtn",
            SolverKind::Fbs => "fbs",
        }
    }
}

#[derive(Debug)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub solution: Solution,
    pub wall_ms: f64,
}

impl SolverRun {
    pub fn converged(&self) -> bool {
        self.solution.status == SolveStatus::ResidualBelowTol
    }

    /// `‖R‖` per iteration followed by the final residual.
    pub fn residuals(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.solution.trace.iter().map(|rec| rec.res_norm).collect();
        r.push(self.solution.final_point.residual_norm());
        r
    }

    /// The last [`RATIO_COUNT`] pairs `(‖R⁺‖/‖R‖, ‖R⁺‖/‖R‖²)`.
    pub fn tail_ratios(&self) -> Vec<(usize, f64, f64)> {
        let r = self.residuals();
        let start = r.len().saturating_sub(RATIO_COUNT + 1);
        (start..r.len().saturating_sub(1)).map(|k| (k, r[k + 1] / r[k], r[k + 1] / (r[k] * r[k]))).collect()
    }
}

pub fn problem_for(instance: &Instance, solver: &SolverConfig) -> Result<FbeProblem> {
    let (f, g) = (instance.smooth.clone(), instance.nonsmooth.clone());
    Ok(if let Some(gamma) = solver.gamma {
        FbeProblem::with_gamma(f, g, gamma)?
    } else if let Some(l) = solver.lipschitz {
        FbeProblem::with_lipschitz(f, g, l)?
    } else {
        FbeProblem::new(f, g)?
    })
}

pub fn run_solver(instance: &Instance, solver: &SolverConfig, kind: SolverKind) -> Result<SolverRun> {
    let mut problem = problem_for(instance, solver)?;
    let start = Instant::now();
    let solution = match kind {
        SolverKind::Fbtn => fbtn_solve(&mut problem, &instance.x0, &solver.options())?,
        SolverKind::Fbs => fbs_solve(&mut problem, &instance.x0, solver.relaxation, solver.eps, solver.fbs_max_iters)?,
    };
    Ok(SolverRun { solver: kind, solution, wall_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Runs the configured solvers; `both` runs them on separate threads.
pub fn run_all(instance: &Instance, config: &Config) -> Result<Vec<SolverRun>> {
    let s = &config.solver;
    match s.name {
        SolverChoice::Fbtn => Ok(vec![run_solver(instance, s, SolverKind::Fbtn)?]),
        SolverChoice::Fbs => Ok(vec![run_solver(instance, s, SolverKind::Fbs)?]),
        SolverChoice::Both => {
            let (a, b) = std::thread::scope(|scope| {
                let fbs = scope.spawn(|| run_solver(instance, s, SolverKind::Fbs));
                let fbtn = run_solver(instance, s, SolverKind::Fbtn);
                (fbtn, fbs.join().expect("fbs thread panicked"))
            });
            Ok(vec![a?, b?])
        }
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_row(rec: &IterationRecord) -> [String; 12] {
    [
        rec.k.to_string(),
        float(rec.fbe),
        float(rec.res_norm),
        float(rec.tau),
        rec.cg_iters.to_string(),
        rec.cg_status.map_or("none", |s| s.as_str()).to_string(),
        float(rec.delta),
        float(rec.eps_inner),
        float(rec.gamma),
        rec.hessvec_total.to_string(),
        rec.prox_total.to_string(),
        float(rec.wall_ms),
    ]
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let csv_err = |source| BenchError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for rec in trace {
        w.write_record(trace_row(rec)).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

/// `trace.csv` for a single solver, `trace_<solver>.csv` for each of several.
pub fn trace_paths(dir: &Path, runs: &[SolverRun]) -> Vec<PathBuf> {
    if runs.len() == 1 {
        vec![dir.join("trace.csv")]
    } else {
        runs.iter().map(|r| dir.join(format!("trace_{}.csv", r.solver.as_str()))).collect()
    }
}

fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::ResidualBelowTol => "converged",
        SolveStatus::MaxOuterIterations => "max_outer",
    }
}

pub fn report(instance: &Instance, config: &Config, runs: &[SolverRun]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem: {}", instance.describe());
    let _ = writeln!(out, "tolerance: {:e}", config.solver.eps);
    for run in runs {
        let s = &run.solution;
        let _ = writeln!(out, "\n[{}]", run.solver.as_str());
        let _ = writeln!(out, "status: {}", status_str(s.status));
        let _ = writeln!(out, "outer iterations: {}", s.trace.len());
        let _ = writeln!(out, "prox calls: {}", s.counts.prox);
        let _ = writeln!(out, "hess_vec calls: {}", s.counts.hess_vec);
        let _ = writeln!(out, "gamma halvings: {}", s.counts.halvings);
        let _ = writeln!(out, "final gamma: {:.6e}", s.final_point.gamma);
        let _ = writeln!(out, "final residual: {:.6e}", s.final_point.residual_norm());
        let _ = writeln!(out, "final fbe: {:.16e}", s.final_point.fbe);
        let _ = writeln!(out, "wall-clock ms: {:.3}", run.wall_ms);
        let _ = writeln!(out, "residual ratios (last {RATIO_COUNT}):");
        let _ = writeln!(out, "  {:>6}  {:>22}  {:>22}", "k", "|R(k+1)|/|R(k)|", "|R(k+1)|/|R(k)|^2");
        for (k, linear, quadratic) in run.tail_ratios() {
            let _ = writeln!(out, "  {k:>6}  {linear:>22.6e}  {quadratic:>22.6e}");
        }
    }
    if runs.len() > 1 {
        let _ = writeln!(out, "\n[comparison]");
        let _ = write!(out, "{:<18}", "");
        for run in runs {
            let _ = write!(out, "{:>14}", run.solver.as_str());
        }
        let _ = writeln!(out);
        let rows: [(&str, fn(&SolverRun) -> String); 5] = [
            ("status", |r| status_str(r.solution.status).to_string()),
            ("iterations", |r| r.solution.trace.len().to_string()),
            ("prox calls", |r| r.solution.counts.prox.to_string()),
            ("hess_vec calls", |r| r.solution.counts.hess_vec.to_string()),
            ("final residual", |r| format!("{:.3e}", r.solution.final_point.residual_norm())),
        ];
        for (label, cell) in rows {
            let _ = write!(out, "{label:<18}");
            for run in runs {
                let _ = write!(out, "{:>14}", cell(run));
            }
            let _ = writeln!(out);
        }
    }
    out
}

/// Writes traces and `report.txt` under `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, instance: &Instance, config: &Config, runs: &[SolverRun]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
    for (path, run) in trace_paths(dir, runs).iter().zip(runs) {
        write_trace(path, &run.solution.trace)?;
    }
    let path = dir.join("report.txt");
    let mut file = std::fs::File::create(&path).map_err(|source| BenchError::Io { path: path.clone(), source })?;
    file.write_all(report(instance, config, runs).as_bytes()).map_err(|source| BenchError::Io { path, source })
}
