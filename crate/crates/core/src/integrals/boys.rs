//! Boys function F_m(x) = ∫₀¹ t^{2m} exp(-x t²) dt.

use crate::error::{Error, Result};

/// Below this argument the downward-recursed series is used; above it F_0
/// takes its asymptotic value and higher orders follow by upward recursion.
/// erfc(√30) ≈ 1e-14, so the asymptotic F_0 is exact to ~2e-15 here.
const SERIES_LIMIT: f64 = 30.0;

pub fn boys(m: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Invalid(format!("Boys argument must be finite and >= 0, got {x}")));
    }
    let mut out = vec![0.0; m + 1];
    boys_into(x, &mut out);
    Ok(out[m])
}

/// Fill `out[m] = F_m(x)` for `m = 0..out.len()`. `x >= 0` is assumed.
pub fn boys_into(x: f64, out: &mut [f64]) {
    if x < SERIES_LIMIT {
        series(x, out);
    } else {
        asymptotic(x, out);
    }
}

fn series(x: f64, out: &mut [f64]) {
    let mmax = out.len() - 1;
    let ex = (-x).exp();
    // F_M(x) = e^{-x} Σ_k (2x)^k / ((2M+1)(2M+3)...(2M+2k+1))
    let mut term = 1.0 / (2 * mmax + 1) as f64;
    let mut sum = term;
    let two_x = 2.0 * x;
    let mut k = 1;
    loop {
        term *= two_x / (2 * mmax + 2 * k + 1) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1;
    }
    out[mmax] = ex * sum;
    for m in (0..mmax).rev() {
        out[m] = (two_x * out[m + 1] + ex) / (2 * m + 1) as f64;
    }
}

fn asymptotic(x: f64, out: &mut [f64]) {
    let ex = (-x).exp();
    out[0] = 0.5 * (std::f64::consts::PI / x).sqrt();
    for m in 0..out.len() - 1 {
        out[m + 1] = ((2 * m + 1) as f64 * out[m] - ex) / (2.0 * x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_zero() {
        assert_eq!(boys(0, 0.0).unwrap(), 1.0);
        assert!((boys(2, 0.0).unwrap() - 0.2).abs() < 1e-16);
        for m in 0..12 {
            let want = 1.0 / (2 * m + 1) as f64;
            assert!((boys(m, 0.0).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_negative() {
        assert!(boys(0, -1.0).is_err());
        assert!(boys(0, f64::NAN).is_err());
    }

    #[test]
    fn continuous_across_branch_switch() {
        let mut a = vec![0.0; 12];
        let mut b = vec![0.0; 12];
        series(SERIES_LIMIT, &mut a);
        asymptotic(SERIES_LIMIT, &mut b);
        for m in 0..12 {
            assert!((a[m] - b[m]).abs() < 1e-14, "m={m} {} {}", a[m], b[m]);
        }
    }

    #[test]
    fn bounded_and_decreasing_in_m() {
        for &x in &[1e-3, 0.5, 3.0, 17.0, 45.0] {
            let mut out = vec![0.0; 9];
            boys_into(x, &mut out);
            for m in 0..9 {
                assert!(out[m] > 0.0 && out[m] <= 1.0 / (2 * m + 1) as f64);
                if m > 0 {
                    assert!(out[m] < out[m - 1]);
                }
            }
        }
    }
}
