//! Line searches along a fixed direction for a value-and-gradient oracle.
//!
//! A failed oracle evaluation (`Ok(None)`) is treated as `+∞`: it always
//! shrinks the bracket toward the last good step.

use crate::error::{Error, Result};

/// Objective value and gradient at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub grad: Vec<f64>,
    /// SCF iterations spent producing this sample; 0 for analytic objectives.
    pub scf_iterations: usize,
}

/// Accepted step.
#[derive(Clone, Debug)]
pub struct LineResult {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub sample: Sample,
    /// Oracle calls made by this search, failed ones included.
    pub evaluations: usize,
    pub scf_iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct StrongWolfe {
    pub c1: f64,
    pub c2: f64,
    pub max_evals: usize,
}

impl Default for StrongWolfe {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, max_evals: 40 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HagerZhang {
    pub delta: f64,
    pub sigma: f64,
    /// Relative slack of the approximate-Wolfe energy condition.
    pub epsilon: f64,
    /// Required interval shrink per secant² pass before bisecting.
    pub gamma: f64,
    /// Bracket expansion factor.
    pub rho: f64,
    /// Step shrink after a failed trial during bracketing.
    pub psi3: f64,
    pub max_evals: usize,
}

impl Default for HagerZhang {
    fn default() -> Self {
        Self { delta: 0.1, sigma: 0.9, epsilon: 1e-6, gamma: 0.66, rho: 5.0, psi3: 0.1, max_evals: 50 }
    }
}

/// One trial point on the line; `phi = +∞` marks a failed evaluation.
#[derive(Clone, Debug)]
struct Trial {
    alpha: f64,
    phi: f64,
    dphi: f64,
    point: Option<(Vec<f64>, Sample)>,
}

impl Trial {
    fn ok(&self) -> bool {
        self.point.is_some()
    }
}

struct Line<'a, F> {
    oracle: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    evaluations: usize,
    scf_iterations: usize,
    max_evals: usize,
}

impl<F> Line<'_, F>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    fn eval(&mut self, alpha: f64) -> Result<Trial> {
        if self.evaluations >= self.max_evals {
            return Err(Error::LineSearch(format!("no acceptable step after {} evaluations", self.evaluations)));
        }
        self.evaluations += 1;
        let xa: Vec<f64> = self.x.iter().zip(self.d).map(|(x, d)| x + alpha * d).collect();
        match (self.oracle)(&xa)? {
            Some(s) if s.value.is_finite() && s.grad.iter().all(|g| g.is_finite()) => {
                self.scf_iterations += s.scf_iterations;
                let dphi = dot(&s.grad, self.d);
                Ok(Trial { alpha, phi: s.value, dphi, point: Some((xa, s)) })
            }
            Some(s) => {
                self.scf_iterations += s.scf_iterations;
                Ok(Trial { alpha, phi: f64::INFINITY, dphi: f64::INFINITY, point: None })
            }
            None => Ok(Trial { alpha, phi: f64::INFINITY, dphi: f64::INFINITY, point: None }),
        }
    }

    fn finish(self, t: Trial) -> LineResult {
        let (x, sample) = t.point.expect("accepted trial has a point");
        LineResult { alpha: t.alpha, x, sample, evaluations: self.evaluations, scf_iterations: self.scf_iterations }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_inputs(x: &[f64], f0: &Sample, d: &[f64], alpha0: f64) -> Result<f64> {
    if d.len() != x.len() || f0.grad.len() != x.len() {
        return Err(Error::Dimension { expected: x.len(), got: d.len() });
    }
    if !(alpha0 > 0.0) || !alpha0.is_finite() {
        return Err(Error::Invalid(format!("initial step must be positive, got {alpha0}")));
    }
    let slope = dot(&f0.grad, d);
    if !(slope < 0.0) {
        return Err(Error::NotDescent(slope));
    }
    Ok(slope)
}

/// Minimizer of the cubic through `(a, fa, ga)` and `(b, fb, gb)`, kept inside
/// the middle 80% of the interval; bisection when the data are unusable.
fn safeguarded_cubic(a: &Trial, b: &Trial) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let mid = 0.5 * (lo + hi);
    if !(a.ok() && b.ok()) {
        return mid;
    }
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    let w = hi - lo;
    if t.is_finite() && t >= lo + 0.1 * w && t <= hi - 0.1 * w {
        t
    } else {
        mid
    }
}

/// Bracketing and zoom for `φ(α) ≤ φ(0) + c₁αφ'(0)` and `|φ'(α)| ≤ c₂|φ'(0)|`.
pub fn line_search_strong_wolfe<F>(
    oracle: &mut F,
    x: &[f64],
    f0: &Sample,
    d: &[f64],
    alpha0: f64,
    p: &StrongWolfe,
) -> Result<LineResult>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    let dphi0 = check_inputs(x, f0, d, alpha0)?;
    let phi0 = f0.value;
    let mut line = Line { oracle, x, d, evaluations: 0, scf_iterations: 0, max_evals: p.max_evals };
    let armijo = |t: &Trial| t.phi <= phi0 + p.c1 * t.alpha * dphi0;
    let curvature = |t: &Trial| t.dphi.abs() <= -p.c2 * dphi0;

    let mut prev = Trial { alpha: 0.0, phi: phi0, dphi: dphi0, point: None };
    let mut alpha = alpha0;
    let (mut lo, mut hi) = loop {
        let t = line.eval(alpha)?;
        if !armijo(&t) || (prev.alpha > 0.0 && t.phi >= prev.phi) {
            break (prev, t);
        }
        if curvature(&t) {
            return Ok(line.finish(t));
        }
        if t.dphi >= 0.0 {
            break (t, prev);
        }
        alpha = 2.0 * t.alpha;
        prev = t;
    };

    // zoom: lo satisfies sufficient decrease and has the lowest value so far
    loop {
        let a = safeguarded_cubic(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() <= f64::EPSILON * lo.alpha.abs().max(hi.alpha.abs()) {
            return Err(Error::LineSearch(format!("bracket collapsed at step {a:e}")));
        }
        let t = line.eval(a)?;
        if !armijo(&t) || t.phi >= lo.phi {
            hi = t;
            continue;
        }
        if curvature(&t) {
            return Ok(line.finish(t));
        }
        if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
            hi = lo;
        }
        lo = t;
    }
}

struct HzState<'a, 'b, F> {
    line: Line<'a, F>,
    trials: Vec<Trial>,
    phi0: f64,
    dphi0: f64,
    eps_k: f64,
    p: &'b HagerZhang,
}

impl<F> HzState<'_, '_, F>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    fn push(&mut self, alpha: f64) -> Result<usize> {
        let t = self.line.eval(alpha)?;
        self.trials.push(t);
        Ok(self.trials.len() - 1)
    }

    /// Wolfe or approximate Wolfe, with strict decrease.
    fn accepts(&self, i: usize) -> bool {
        let t = &self.trials[i];
        if !t.ok() || !(t.phi < self.phi0) {
            return false;
        }
        let p = self.p;
        let wolfe = t.phi - self.phi0 <= p.delta * t.alpha * self.dphi0 && t.dphi >= p.sigma * self.dphi0;
        let approx = (2.0 * p.delta - 1.0) * self.dphi0 >= t.dphi
            && t.dphi >= p.sigma * self.dphi0
            && t.phi <= self.phi0 + self.eps_k;
        wolfe || approx
    }

    fn low_enough(&self, i: usize) -> bool {
        self.trials[i].phi <= self.phi0 + self.eps_k
    }

    fn secant(&self, a: usize, b: usize) -> f64 {
        let (ta, tb) = (&self.trials[a], &self.trials[b]);
        let s = (ta.alpha * tb.dphi - tb.alpha * ta.dphi) / (tb.dphi - ta.dphi);
        if s.is_finite() {
            s
        } else {
            0.5 * (ta.alpha + tb.alpha)
        }
    }

    /// Shrink `[a, b]` with φ'(a) < 0 until the upper end has φ' ≥ 0.
    fn bisect(&mut self, mut a: usize, mut b: usize) -> Result<(usize, usize)> {
        loop {
            let (lo, hi) = (self.trials[a].alpha, self.trials[b].alpha);
            if hi - lo <= f64::EPSILON * hi {
                return Ok((a, b));
            }
            let d = self.push(0.5 * (lo + hi))?;
            if self.trials[d].dphi >= 0.0 {
                return Ok((a, d));
            }
            if self.low_enough(d) {
                a = d;
            } else {
                b = d;
            }
        }
    }

    fn update(&mut self, a: usize, b: usize, c: usize) -> Result<(usize, usize)> {
        let (lo, hi, tc) = (self.trials[a].alpha, self.trials[b].alpha, self.trials[c].alpha);
        if !(tc > lo && tc < hi) {
            return Ok((a, b));
        }
        if self.trials[c].dphi >= 0.0 {
            return Ok((a, c));
        }
        if self.low_enough(c) {
            return Ok((c, b));
        }
        self.bisect(a, c)
    }

    /// Returns the accepted trial, or the new bracket.
    fn secant2(&mut self, a: usize, b: usize) -> Result<std::result::Result<usize, (usize, usize)>> {
        let c = self.secant(a, b);
        let ic = self.push(c)?;
        if self.accepts(ic) {
            return Ok(Ok(ic));
        }
        let (na, nb) = self.update(a, b, ic)?;
        let second = if nb == ic {
            Some(self.secant(b, nb))
        } else if na == ic {
            Some(self.secant(a, na))
        } else {
            None
        };
        if let Some(c2) = second {
            let (lo, hi) = (self.trials[na].alpha, self.trials[nb].alpha);
            if c2 > lo && c2 < hi {
                let ic2 = self.push(c2)?;
                if self.accepts(ic2) {
                    return Ok(Ok(ic2));
                }
                return Ok(Err(self.update(na, nb, ic2)?));
            }
        }
        Ok(Err((na, nb)))
    }
}

/// Hager–Zhang search: bracketing, secant² steps and bisection, accepting on
/// the Wolfe or approximate-Wolfe conditions.
pub fn line_search_hz<F>(
    oracle: &mut F,
    x: &[f64],
    f0: &Sample,
    d: &[f64],
    alpha0: f64,
    p: &HagerZhang,
) -> Result<LineResult>
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    let dphi0 = check_inputs(x, f0, d, alpha0)?;
    let phi0 = f0.value;
    let line = Line { oracle, x, d, evaluations: 0, scf_iterations: 0, max_evals: p.max_evals };
    let mut s = HzState {
        line,
        trials: vec![Trial { alpha: 0.0, phi: phi0, dphi: dphi0, point: None }],
        phi0,
        dphi0,
        eps_k: p.epsilon * phi0.abs(),
        p,
    };

    // first trial: shrink until the oracle succeeds
    let mut c = alpha0;
    let mut ic = s.push(c)?;
    while !s.trials[ic].ok() {
        c *= p.psi3;
        ic = s.push(c)?;
    }
    if s.accepts(ic) {
        return Ok(take(s, ic));
    }

    // bracket [a, b]: φ'(a) < 0, φ(a) ≤ φ₀ + ε_k, φ'(b) ≥ 0
    let mut last_good;
    let (mut a, mut b) = loop {
        let t = &s.trials[ic];
        if t.dphi >= 0.0 {
            // the largest earlier step that is low enough
            let a = (0..ic)
                .rev()
                .find(|&j| s.trials[j].alpha < t.alpha && s.trials[j].dphi < 0.0 && s.low_enough(j))
                .unwrap_or(0);
            break (a, ic);
        }
        if !s.low_enough(ic) {
            break s.bisect(0, ic)?;
        }
        last_good = ic;
        c *= p.rho;
        ic = s.push(c)?;
        while !s.trials[ic].ok() {
            let lo = s.trials[last_good].alpha;
            c = lo + p.psi3 * (c - lo);
            ic = s.push(c)?;
        }
        if s.accepts(ic) {
            return Ok(take(s, ic));
        }
    };

    loop {
        let (lo, hi) = (s.trials[a].alpha, s.trials[b].alpha);
        if hi - lo <= f64::EPSILON * hi {
            if a != 0 && s.trials[a].ok() && s.trials[a].phi < phi0 {
                return Ok(take(s, a));
            }
            return Err(Error::LineSearch(format!("bracket collapsed at step {lo:e}")));
        }
        match s.secant2(a, b)? {
            Ok(i) => return Ok(take(s, i)),
            Err((na, nb)) => {
                let (nlo, nhi) = (s.trials[na].alpha, s.trials[nb].alpha);
                if nhi - nlo > p.gamma * (hi - lo) {
                    let m = s.push(0.5 * (nlo + nhi))?;
                    if s.accepts(m) {
                        return Ok(take(s, m));
                    }
                    (a, b) = s.update(na, nb, m)?;
                } else {
                    (a, b) = (na, nb);
                }
            }
        }
    }
}

fn take<F>(mut s: HzState<'_, '_, F>, i: usize) -> LineResult
where
    F: FnMut(&[f64]) -> Result<Option<Sample>>,
{
    let t = std::mem::replace(&mut s.trials[i], Trial { alpha: 0.0, phi: 0.0, dphi: 0.0, point: None });
    s.line.finish(t)
}
