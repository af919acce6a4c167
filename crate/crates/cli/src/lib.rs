//! Command implementations behind the `basisopt` binary.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use basisopt::optim::{optimize_basis, Method, Status, Trajectory};
use basisopt::Error;
use serde::Serialize;

pub use config::{Loaded, OptimizedBasis, RunConfig};

/// Largest relative disagreement `gradcheck` accepts.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("SCF did not converge: {0}")]
    Scf(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("gradient check failed: {0}")]
    GradientMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Scf(_) => 2,
            CliError::Optimizer(_) => 3,
            CliError::GradientMismatch(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged | Error::NonFiniteEnergy => CliError::Scf(e.to_string()),
            Error::NotDescent(_) | Error::LineSearch(_) => CliError::Optimizer(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    Ok(p)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// Creates `dir` if needed.
pub fn output_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

#[derive(Clone, Debug, Serialize)]
pub struct HfReport {
    pub e_elec: f64,
    pub e_nuc: f64,
    pub e_total: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_functions: usize,
    pub n_primitives: usize,
}

impl std::fmt::Display for HfReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "E_elec     {:.9}", self.e_elec)?;
        writeln!(f, "E_nuc      {:.9}", self.e_nuc)?;
        writeln!(f, "E_total    {:.9}", self.e_total)?;
        writeln!(f, "iterations {}", self.iterations)?;
        write!(f, "converged  {}", self.converged)
    }
}

/// Single-point RHF. Writes `hf.json`; an unconverged SCF is reported and
/// then returned as an error.
pub fn run_hf(loaded: &Loaded, out: &Path) -> Result<HfReport, CliError> {
    let p = &loaded.problem;
    let ev = p.evaluate(&p.x0(), false)?;
    let report = HfReport {
        e_elec: ev.scf.e_elec,
        e_nuc: ev.scf.e_nuc,
        e_total: ev.scf.e_total,
        iterations: ev.scf.iterations,
        converged: ev.scf.converged,
        n_functions: p.basis.w(),
        n_primitives: p.basis.n_gto(),
    };
    output_dir(out)?;
    write(out, "hf.json", &json(&report))?;
    if !report.converged {
        return Err(CliError::Scf(format!("{} iterations", report.iterations)));
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeReport {
    pub method: Method,
    pub status: Status,
    pub steps: usize,
    pub e_elec: f64,
    pub e_nuc: f64,
    pub e_total: f64,
    pub grad_inf: f64,
    pub n_free: usize,
}

/// Basis optimization. Writes `trajectory.csv`, `basis.json` and
/// `optimize.json` whatever the final status; anything but convergence is
/// returned as an error after the files are written.
pub fn run_optimize(loaded: &Loaded, out: &Path) -> Result<(OptimizeReport, Trajectory), CliError> {
    let opt = loaded
        .config
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Validation("config has no `optimize` block".into()))?;
    let p = &loaded.problem;
    let (traj, best) = optimize_basis(p, &opt.optimizer)?;
    let e_nuc = loaded.field.nuclear_repulsion();
    let report = OptimizeReport {
        method: traj.method,
        status: traj.status,
        steps: traj.steps(),
        e_elec: traj.final_energy(),
        e_nuc,
        e_total: traj.final_energy() + e_nuc,
        grad_inf: traj.final_grad.iter().fold(0.0, |m, g| m.max(g.abs())),
        n_free: p.free_indices().len(),
    };
    output_dir(out)?;
    write(out, "trajectory.csv", &traj.to_csv())?;
    let graph = best.basis.graph();
    let slots: BTreeMap<String, f64> =
        graph.slots().iter().zip(best.basis.slot_values()).map(|(s, &v)| (s.name.clone(), v)).collect();
    let saved = OptimizedBasis { spec: best.basis.to_spec(), slots, e_elec: report.e_elec };
    write(out, "basis.json", &json(&saved))?;
    write(out, "optimize.json", &json(&report))?;
    match traj.status {
        Status::Converged => Ok((report, traj)),
        Status::ScfFailure => Err(CliError::Scf(format!("aborted after {} steps", report.steps))),
        s => Err(CliError::Optimizer(format!("{s} after {} steps", report.steps))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradRow {
    pub theta: String,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_err: f64,
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Analytic gradient against central differences with step `h` over the free
/// thetas. Writes `gradcheck.csv`; a row above [`GRADCHECK_TOL`] is an error.
pub fn run_gradcheck(loaded: &Loaded, h: f64, out: &Path) -> Result<Vec<GradRow>, CliError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(CliError::Validation(format!("--step must be positive, got {h}")));
    }
    let p = &loaded.problem;
    let x = p.x0();
    let ev = p.evaluate(&x, true)?;
    if !ev.scf.converged {
        return Err(CliError::Scf(format!("{} iterations", ev.scf.iterations)));
    }
    let analytic = ev.gradient.expect("converged SCF carries a gradient").de_dtheta;
    let fd = p.finite_difference(&x, h)?;
    let thetas = p.basis.graph().thetas();
    let rows: Vec<GradRow> = p
        .free_indices()
        .iter()
        .zip(analytic.iter().zip(&fd))
        .map(|(&i, (&a, &f))| GradRow {
            theta: thetas[i].id.clone(),
            analytic: a,
            finite_difference: f,
            rel_err: rel_err(a, f),
        })
        .collect();
    output_dir(out)?;
    let mut csv = String::from("theta,analytic,finite_difference,rel_err\n");
    for r in &rows {
        csv.push_str(&format!("{},{:e},{:e},{:e}\n", r.theta, r.analytic, r.finite_difference, r.rel_err));
    }
    write(out, "gradcheck.csv", &csv)?;
    if let Some(bad) = rows.iter().filter(|r| r.rel_err > GRADCHECK_TOL).max_by(|a, b| a.rel_err.total_cmp(&b.rel_err)) {
        return Err(CliError::GradientMismatch(format!(
            "theta `{}`: analytic {:e} vs finite difference {:e} (rel err {:e})",
            bad.theta, bad.analytic, bad.finite_difference, bad.rel_err
        )));
    }
    Ok(rows)
}

/// Writes the overlap, core and two-electron tensors as `S.txt`, `A.txt`, `B.txt`.
pub fn run_integrals(loaded: &Loaded, out: &Path) -> Result<[PathBuf; 3], CliError> {
    let p = &loaded.problem;
    let t = basisopt::integrals::build_tensors(&p.basis.expansions(), &loaded.field)?;
    let (s, a, b) = t.dump();
    output_dir(out)?;
    Ok([write(out, "S.txt", &s)?, write(out, "A.txt", &a)?, write(out, "B.txt", &b)?])
}
