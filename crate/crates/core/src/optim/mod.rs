//! Minimizers over the free basis parameters.

pub mod linesearch;

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::HfProblem;
pub use linesearch::{line_search_hz, line_search_strong_wolfe, HagerZhang, LineResult, Sample, StrongWolfe};
use linesearch::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lbfgs-sw")]
    LbfgsSw,
    #[serde(rename = "lbfgs-hz")]
    LbfgsHz,
    #[serde(rename = "adam")]
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { learning_rate: 0.01, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    /// L-BFGS history length.
    pub memory: usize,
    pub grad_inf_tol: f64,
    pub energy_tol: f64,
    pub max_steps: usize,
    pub adam: AdamParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::LbfgsHz,
            memory: 10,
            grad_inf_tol: 1e-5,
            energy_tol: 1e-8,
            max_steps: 500,
            adam: AdamParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_inf_tol", self.grad_inf_tol),
            ("energy_tol", self.energy_tol),
            ("adam.learning_rate", self.adam.learning_rate),
            ("adam.epsilon", self.adam.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_steps < 1 {
            return Err(Error::Invalid("max_steps must be at least 1".into()));
        }
        if self.memory < 1 {
            return Err(Error::Invalid("L-BFGS memory must be at least 1".into()));
        }
        for (name, b) in [("adam.beta1", self.adam.beta1), ("adam.beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Invalid(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxSteps,
    ScfFailure,
    LineSearchFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxSteps => "max-steps",
            Status::ScfFailure => "scf-failure",
            Status::LineSearchFailure => "line-search-failure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub grad_inf: f64,
    /// SCF iterations spent in this step, failed trials included.
    pub scf_iterations: usize,
    pub evaluations: usize,
    /// Wall time since the start of the run.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: Method,
    pub records: Vec<StepRecord>,
    pub status: Status,
    /// Gradient at the final point; empty after an SCF-failure abort.
    pub final_grad: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory holds the initial point")
    }

    pub fn steps(&self) -> usize {
        self.last().step
    }

    pub fn final_energy(&self) -> f64 {
        self.last().energy
    }

    /// `step,E0,grad_inf,scf_iters,seconds`, one row per record.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "E0", "grad_inf", "scf_iters", "seconds"]).expect("in-memory write");
        for r in &self.records {
            w.write_record(&[
                r.step.to_string(),
                format!("{:.12}", r.energy),
                format!("{:.6e}", r.grad_inf),
                r.scf_iterations.to_string(),
                format!("{:.4}", r.seconds),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const MAX_CONSECUTIVE_FAILURES: usize = 3;

/// Wraps an oracle, aborting after too many consecutive failed evaluations.
struct Guard<F> {
    inner: F,
    failures: usize,
    aborted: bool,
}

impl<F> Guard<F>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    fn call(&mut self, x: &[f64]) -> Result<Option<Sample>> {
        let r = (self.inner)(x)?;
        match &r {
            Some(s) if s.value.is_finite() => self.failures = 0,
            _ => {
                self.failures += 1;
                if self.failures >= MAX_CONSECUTIVE_FAILURES {
                    self.aborted = true;
                    return Err(Error::NotConverged);
                }
            }
        }
        Ok(r)
    }
}

struct Recorder {
    start: Instant,
    records: Vec<StepRecord>,
}

impl Recorder {
    fn push(&mut self, x: &[f64], s: &Sample, scf_iterations: usize, evaluations: usize) {
        let step = self.records.len();
        self.records.push(StepRecord {
            step,
            theta: x.to_vec(),
            energy: s.value,
            grad_inf: inf_norm(&s.grad),
            scf_iterations,
            evaluations,
            seconds: self.start.elapsed().as_secs_f64(),
        });
    }
}

/// Minimizes `oracle` from `x0`. The oracle returns `Ok(None)` for a failed
/// evaluation (e.g. unconverged SCF); `Err` aborts the run.
pub fn minimize<F>(oracle: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Trajectory>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    cfg.validate()?;
    let mut guard = Guard { inner: oracle, failures: 0, aborted: false };
    let mut rec = Recorder { start: Instant::now(), records: Vec::new() };
    let first = match guard.call(x0) {
        Ok(Some(s)) if s.value.is_finite() => s,
        Ok(_) | Err(Error::NotConverged) => return Err(Error::NotConverged),
        Err(e) => return Err(e),
    };
    if first.grad.len() != x0.len() {
        return Err(Error::Dimension { expected: x0.len(), got: first.grad.len() });
    }
    rec.push(x0, &first, first.scf_iterations, 1);
    let run = match cfg.method {
        Method::LbfgsSw | Method::LbfgsHz => lbfgs(&mut guard, &mut rec, x0.to_vec(), first, cfg),
        Method::Adam => adam(&mut guard, &mut rec, x0.to_vec(), first, cfg),
    };
    let (status, final_grad) = match run {
        Ok(v) => v,
        // the last record still holds the last accepted point
        Err(Error::NotConverged) if guard.aborted => (Status::ScfFailure, Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(Trajectory { method: cfg.method, records: rec.records, status, final_grad })
}

fn converged(cfg: &OptimizerConfig, g: &[f64], de: Option<f64>) -> bool {
    inf_norm(g) < cfg.grad_inf_tol && de.map_or(true, |d| d.abs() < cfg.energy_tol)
}

fn lbfgs<F>(
    guard: &mut Guard<F>,
    rec: &mut Recorder,
    mut x: Vec<f64>,
    mut cur: Sample,
    cfg: &OptimizerConfig,
) -> Result<(Status, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut last_de = None;
    let mut oracle = |x: &[f64]| guard.call(x);
    for _ in 0..cfg.max_steps {
        if converged(cfg, &cur.grad, last_de) {
            return Ok((Status::Converged, cur.grad));
        }
        let mut restarted = false;
        let step = loop {
            let mut d = two_loop(&cur.grad, &hist);
            let first = hist.is_empty();
            if !(dot(&d, &cur.grad) < 0.0) {
                hist.clear();
                d = cur.grad.iter().map(|g| -g).collect();
            }
            let alpha0 = if first {
                let norm = dot(&cur.grad, &cur.grad).sqrt();
                (1.0 / norm).min(1.0)
            } else {
                1.0
            };
            let r = match cfg.method {
                Method::LbfgsSw => line_search_strong_wolfe(&mut oracle, &x, &cur, &d, alpha0, &StrongWolfe::default()),
                _ => line_search_hz(&mut oracle, &x, &cur, &d, alpha0, &HagerZhang::default()),
            };
            match r {
                Ok(s) => break s,
                Err(Error::LineSearch(msg)) if !restarted && !hist.is_empty() => {
                    log::debug!("line search failed ({msg}); restarting from steepest descent");
                    hist.clear();
                    restarted = true;
                }
                Err(Error::LineSearch(msg)) => {
                    log::warn!("line search failed: {msg}");
                    return Ok((Status::LineSearchFailure, cur.grad));
                }
                Err(e) => return Err(e),
            }
        };
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.sample.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        // curvature pairs that would break positive definiteness are skipped
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        last_de = Some(step.sample.value - cur.value);
        log::info!(
            "step {:4}  E = {:.12}  |g|∞ = {:.3e}  α = {:.3e}",
            rec.records.len(),
            step.sample.value,
            inf_norm(&step.sample.grad),
            step.alpha
        );
        rec.push(&step.x, &step.sample, step.scf_iterations, step.evaluations);
        x = step.x;
        cur = step.sample;
    }
    let status = if converged(cfg, &cur.grad, last_de) { Status::Converged } else { Status::MaxSteps };
    Ok((status, cur.grad))
}

/// `-H g` from the curvature history, initial scaling `sᵀy / yᵀy`.
fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn adam<F>(
    guard: &mut Guard<F>,
    rec: &mut Recorder,
    mut x: Vec<f64>,
    mut cur: Sample,
    cfg: &OptimizerConfig,
) -> Result<(Status, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    let p = cfg.adam;
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut last_de = None;
    for t in 1..=cfg.max_steps {
        if converged(cfg, &cur.grad, last_de) {
            return Ok((Status::Converged, cur.grad));
        }
        let b1t = 1.0 - p.beta1.powi(t as i32);
        let b2t = 1.0 - p.beta2.powi(t as i32);
        for i in 0..n {
            m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * cur.grad[i];
            v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * cur.grad[i] * cur.grad[i];
        }
        let dx: Vec<f64> = (0..n).map(|i| -p.learning_rate * (m[i] / b1t) / ((v[i] / b2t).sqrt() + p.epsilon)).collect();
        // a failed evaluation retries with half the step; the guard aborts the run
        let mut scale = 1.0;
        let mut evals = 0;
        let mut scf = 0;
        let (xn, sn) = loop {
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + scale * d).collect();
            evals += 1;
            match guard.call(&xn)? {
                Some(s) if s.value.is_finite() => {
                    scf += s.scf_iterations;
                    break (xn, s);
                }
                other => {
                    scf += other.map_or(0, |s| s.scf_iterations);
                    scale *= 0.5;
                }
            }
        };
        last_de = Some(sn.value - cur.value);
        if t % 50 == 0 {
            log::info!("adam step {t:5}  E = {:.12}  |g|∞ = {:.3e}", sn.value, inf_norm(&sn.grad));
        }
        rec.push(&xn, &sn, scf, evals);
        x = xn;
        cur = sn;
    }
    let status = if converged(cfg, &cur.grad, last_de) { Status::Converged } else { Status::MaxSteps };
    Ok((status, cur.grad))
}

/// Oracle over the free thetas of `problem`. Unconverged SCF and parameter
/// values outside the valid domain (non-positive exponents, linear
/// dependence, vanishing norms) are reported as failed evaluations.
pub fn hf_objective(problem: &HfProblem) -> impl FnMut(&[f64]) -> Result<Option<Sample>> + '_ {
    move |x: &[f64]| match problem.evaluate(x, true) {
        Ok(ev) if ev.scf.converged => {
            let value = ev.energy();
            let grad = ev.gradient.expect("gradient requested").de_dtheta;
            Ok(Some(Sample { value, grad, scf_iterations: ev.scf.iterations }))
        }
        Ok(ev) => {
            log::debug!("SCF not converged after {} iterations", ev.scf.iterations);
            Ok(None)
        }
        Err(
            e @ (Error::NonPositiveExponent { .. }
            | Error::LinearDependence(_)
            | Error::ZeroNorm(_)
            | Error::NonFiniteEnergy
            | Error::Orbital(_)),
        ) => {
            log::debug!("rejected trial point: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs `minimize` on an RHF problem and returns the trajectory together
/// with the problem's basis moved to the final point.
pub fn optimize_basis(problem: &HfProblem, cfg: &OptimizerConfig) -> Result<(Trajectory, HfProblem)> {
    let traj = minimize(hf_objective(problem), &problem.x0(), cfg)?;
    let mut out = problem.clone();
    out.basis = problem.basis.with_theta(&problem.full_theta(&traj.last().theta)?)?;
    Ok((traj, out))
}
