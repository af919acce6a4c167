//! Numerical-quadrature reference integrals. Shares no code with the
//! analytic engine beyond the `Gaussian` container.

use basisopt::integrals::{Expansion, Gaussian};
use nalgebra::{DMatrix, SymmetricEigen};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]`.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut stack = vec![(a, b, 0u32)];
    let (whole, _) = gk15(f, a, b);
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        assert!(v.is_finite() && err.is_finite(), "non-finite integrand on [{lo}, {hi}]");
        let width = (hi - lo) / (b - a);
        let tol = (abs_tol.max(rel_tol * whole.abs())) * width.sqrt();
        if err <= tol || depth >= 40 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Gauss–Hermite nodes and weights for `∫ f(t) e^{-t²} dt` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn mono(x: f64, c: f64, n: u32) -> f64 {
    (x - c).powi(n as i32)
}

/// 1-D overlap factor by adaptive quadrature.
fn overlap_1d(a: &Gaussian, b: &Gaussian, k: usize) -> f64 {
    let p = a.alpha + b.alpha;
    let pc = (a.alpha * a.center[k] + b.alpha * b.center[k]) / p;
    let half = (80.0 / p).sqrt();
    let mut f = |x: f64| {
        mono(x, a.center[k], a.ang[k])
            * mono(x, b.center[k], b.ang[k])
            * (-a.alpha * (x - a.center[k]).powi(2) - b.alpha * (x - b.center[k]).powi(2)).exp()
    };
    integrate(&mut f, pc - half, pc + half, 1e-16, 1e-13)
}

fn d_factor(x: f64, g: &Gaussian, k: usize) -> f64 {
    let c = g.center[k];
    let i = g.ang[k];
    let e = (-g.alpha * (x - c).powi(2)).exp();
    let lower = if i > 0 { i as f64 * mono(x, c, i - 1) } else { 0.0 };
    (lower - 2.0 * g.alpha * mono(x, c, i + 1)) * e
}

fn grad_1d(a: &Gaussian, b: &Gaussian, k: usize) -> f64 {
    let p = a.alpha + b.alpha;
    let pc = (a.alpha * a.center[k] + b.alpha * b.center[k]) / p;
    let half = (80.0 / p).sqrt();
    let mut f = |x: f64| d_factor(x, a, k) * d_factor(x, b, k);
    integrate(&mut f, pc - half, pc + half, 1e-16, 1e-13)
}

pub fn overlap(a: &Gaussian, b: &Gaussian) -> f64 {
    (0..3).map(|k| overlap_1d(a, b, k)).product()
}

/// `½ ∫ ∇a·∇b`.
pub fn kinetic(a: &Gaussian, b: &Gaussian) -> f64 {
    let s: Vec<f64> = (0..3).map(|k| overlap_1d(a, b, k)).collect();
    let mut t = 0.0;
    for k in 0..3 {
        let mut term = grad_1d(a, b, k);
        for m in 0..3 {
            if m != k {
                term *= s[m];
            }
        }
        t += term;
    }
    0.5 * t
}

/// Integral over `u ∈ [0, ∞)` through `u = s / (1 - s)`.
fn half_line(f: &mut dyn FnMut(f64) -> f64) -> f64 {
    let mut g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let u = s / (1.0 - s);
        f(u) / ((1.0 - s) * (1.0 - s))
    };
    integrate(&mut g, 0.0, 1.0, 1e-15, 1e-12)
}

/// `⟨a| 1/|r - C| |b⟩` via `1/r = (2/√π) ∫₀^∞ exp(-u² r²) du`.
pub fn coulomb_point(a: &Gaussian, b: &Gaussian, c: [f64; 3]) -> f64 {
    let gh = gauss_hermite(16);
    let p = a.alpha + b.alpha;
    let mut f = |u: f64| {
        let u2 = u * u;
        let mut prod = 1.0;
        for k in 0..3 {
            let pk = (a.alpha * a.center[k] + b.alpha * b.center[k]) / p;
            let ab = a.alpha * b.alpha / p * (a.center[k] - b.center[k]).powi(2);
            let g = p + u2;
            let qk = (p * pk + u2 * c[k]) / g;
            let pre = (-ab - p * u2 / g * (pk - c[k]).powi(2)).exp() / g.sqrt();
            let mut s = 0.0;
            for &(t, w) in &gh {
                let x = qk + t / g.sqrt();
                s += w * mono(x, a.center[k], a.ang[k]) * mono(x, b.center[k], b.ang[k]);
            }
            prod *= pre * s;
        }
        prod
    };
    2.0 / std::f64::consts::PI.sqrt() * half_line(&mut f)
}

/// `(ab|cd)` via the same Gaussian representation of `1/r₁₂`.
pub fn repulsion(a: &Gaussian, b: &Gaussian, c: &Gaussian, d: &Gaussian) -> f64 {
    let gh = gauss_hermite(12);
    let p = a.alpha + b.alpha;
    let q = c.alpha + d.alpha;
    let mut f = |u: f64| {
        let u2 = u * u;
        // quadratic form p y1² + q y2² + u²(y1 - y2 + D)², y = x - (P, Q)
        let m11 = p + u2;
        let m12 = -u2;
        // closed forms avoid cancellation at large u
        let det = p * q + u2 * (p + q);
        let l11 = m11.sqrt();
        let l21 = m12 / l11;
        let l22 = (q + u2 * p / m11).sqrt();
        let mut prod = 1.0;
        for k in 0..3 {
            let pk = (a.alpha * a.center[k] + b.alpha * b.center[k]) / p;
            let qk = (c.alpha * c.center[k] + d.alpha * d.center[k]) / q;
            let kab = (-a.alpha * b.alpha / p * (a.center[k] - b.center[k]).powi(2)).exp();
            let kcd = (-c.alpha * d.alpha / q * (c.center[k] - d.center[k]).powi(2)).exp();
            let dd = pk - qk;
            // minimizer and minimum of the quadratic form, simplified
            let y1s = -u2 * q * dd / det;
            let y2s = u2 * p * dd / det;
            let cmin = u2 * p * q * dd * dd / det;
            let mut s = 0.0;
            for &(z1, w1) in &gh {
                for &(z2, w2) in &gh {
                    // y - y* = L⁻ᵀ z
                    let e2 = z2 / l22;
                    let e1 = (z1 - l21 * e2) / l11;
                    let x1 = pk + y1s + e1;
                    let x2 = qk + y2s + e2;
                    s += w1
                        * w2
                        * mono(x1, a.center[k], a.ang[k])
                        * mono(x1, b.center[k], b.ang[k])
                        * mono(x2, c.center[k], c.ang[k])
                        * mono(x2, d.center[k], d.ang[k]);
                }
            }
            prod *= kab * kcd * (-cmin).exp() * s / (l11 * l22);
        }
        prod
    };
    2.0 / std::f64::consts::PI.sqrt() * half_line(&mut f)
}

pub fn boys(m: usize, x: f64) -> f64 {
    let mut f = |t: f64| t.powi(2 * m as i32) * (-x * t * t).exp();
    integrate(&mut f, 0.0, 1.0, 1e-17, 1e-14)
}

// Function-level references.

pub fn overlap_fn(a: &Expansion, b: &Expansion) -> f64 {
    let mut s = 0.0;
    for (ca, ga) in &a.terms {
        for (cb, gb) in &b.terms {
            s += ca * cb * overlap(ga, gb);
        }
    }
    s
}

pub fn core_fn(a: &Expansion, b: &Expansion, nuclei: &[([f64; 3], f64)]) -> f64 {
    let mut s = 0.0;
    for (ca, ga) in &a.terms {
        for (cb, gb) in &b.terms {
            let mut v = kinetic(ga, gb);
            for &(c, z) in nuclei {
                v -= z * coulomb_point(ga, gb, c);
            }
            s += ca * cb * v;
        }
    }
    s
}

pub fn repulsion_fn(a: &Expansion, b: &Expansion, c: &Expansion, d: &Expansion) -> f64 {
    let mut s = 0.0;
    for (ca, ga) in &a.terms {
        for (cb, gb) in &b.terms {
            for (cc, gc) in &c.terms {
                for (cd, gd) in &d.terms {
                    s += ca * cb * cc * cd * repulsion(ga, gb, gc, gd);
                }
            }
        }
    }
    s
}
