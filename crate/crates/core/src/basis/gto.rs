//! Primitive, contracted and mixed-contracted Cartesian Gaussians.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrals::{Expansion, Gaussian, PairData};

/// Self-overlaps below this count as a zero-norm function.
pub const ZERO_NORM: f64 = 1e-12;

fn double_factorial_odd(n: u32) -> f64 {
    // (2n-1)!!, with (-1)!! = 1
    (1..=n).map(|k| (2 * k - 1) as f64).product()
}

/// Normalization constant of `x^i y^j z^k exp(-α r²)`.
pub fn gto_norm(alpha: f64, ang: [u32; 3]) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Orbital(format!("exponent must be positive, got {alpha}")));
    }
    let l = ang[0] + ang[1] + ang[2];
    let df: f64 = ang.iter().map(|&a| double_factorial_odd(a)).product();
    Ok((2.0 * alpha / PI).powf(0.75) * (4.0 * alpha).powf(l as f64 / 2.0) / df.sqrt())
}

/// Overlap of two expansions through the integral engine.
pub fn expansion_overlap(a: &Expansion, b: &Expansion) -> f64 {
    let mut s = 0.0;
    for (ca, ga) in &a.terms {
        for (cb, gb) in &b.terms {
            s += ca * cb * PairData::new(ga, gb).overlap;
        }
    }
    s
}

/// Normalized Cartesian primitive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveGTO {
    pub alpha: f64,
    pub ang: [u32; 3],
    pub center: [f64; 3],
    pub norm: f64,
}

impl PrimitiveGTO {
    pub fn new(alpha: f64, ang: [u32; 3], center: [f64; 3]) -> Result<Self> {
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Orbital("non-finite center".into()));
        }
        Ok(Self { alpha, ang, center, norm: gto_norm(alpha, ang)? })
    }

    /// The unnormalized Gaussian this primitive scales.
    pub fn gaussian(&self) -> Gaussian {
        Gaussian { alpha: self.alpha, ang: self.ang, center: self.center }
    }

    pub fn l(&self) -> u32 {
        self.ang[0] + self.ang[1] + self.ang[2]
    }
}

/// Graph slot indices backing one contracted function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CgtoSlots {
    pub center: [usize; 3],
    pub alphas: Vec<usize>,
    pub coeffs: Vec<usize>,
}

/// Concentric primitives with one angular momentum and contraction
/// coefficients, `scale · Σ dₙ Nₙ gₙ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractedGTO {
    pub prims: Vec<PrimitiveGTO>,
    pub coeffs: Vec<f64>,
    pub normalize: bool,
    /// Renormalization factor; 1 when `normalize` is off.
    pub scale: f64,
    pub slots: Option<CgtoSlots>,
}

pub fn make_cgto(
    center: [f64; 3],
    alphas: &[f64],
    coeffs: &[f64],
    ang: [u32; 3],
    normalize: bool,
) -> Result<ContractedGTO> {
    if alphas.len() != coeffs.len() {
        return Err(Error::Orbital(format!(
            "{} exponents but {} contraction coefficients",
            alphas.len(),
            coeffs.len()
        )));
    }
    if alphas.is_empty() {
        return Err(Error::Orbital("contraction without primitives".into()));
    }
    let prims = alphas
        .iter()
        .map(|&a| PrimitiveGTO::new(a, ang, center))
        .collect::<Result<Vec<_>>>()?;
    let mut g = ContractedGTO { prims, coeffs: coeffs.to_vec(), normalize, scale: 1.0, slots: None };
    if normalize {
        let s = g.raw_self_overlap();
        if !(s > ZERO_NORM) {
            return Err(Error::ZeroNorm(s));
        }
        g.scale = 1.0 / s.sqrt();
    }
    Ok(g)
}

impl ContractedGTO {
    pub fn center(&self) -> [f64; 3] {
        self.prims[0].center
    }

    pub fn ang(&self) -> [u32; 3] {
        self.prims[0].ang
    }

    /// `Σ dₙ Nₙ gₙ` without the renormalization factor.
    pub fn raw_expansion(&self) -> Expansion {
        Expansion {
            terms: self
                .prims
                .iter()
                .zip(&self.coeffs)
                .map(|(p, d)| (d * p.norm, p.gaussian()))
                .collect(),
        }
    }

    pub fn expansion(&self) -> Expansion {
        let mut e = self.raw_expansion();
        for t in &mut e.terms {
            t.0 *= self.scale;
        }
        e
    }

    fn raw_self_overlap(&self) -> f64 {
        let e = self.raw_expansion();
        expansion_overlap(&e, &e)
    }
}

/// Weighted sum of contracted functions, optionally renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedContractedGTO {
    pub terms: Vec<ContractedGTO>,
    pub weights: Vec<f64>,
    pub normalize: bool,
    pub scale: f64,
}

pub fn make_mcgto(
    terms: Vec<ContractedGTO>,
    weights: &[f64],
    normalize: bool,
) -> Result<MixedContractedGTO> {
    if terms.is_empty() {
        return Err(Error::Orbital("mixed contraction without terms".into()));
    }
    if terms.len() != weights.len() {
        return Err(Error::Orbital(format!("{} terms but {} weights", terms.len(), weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Orbital("non-finite weight".into()));
    }
    let mut m = MixedContractedGTO { terms, weights: weights.to_vec(), normalize, scale: 1.0 };
    if normalize {
        let e = m.raw_expansion();
        let s = expansion_overlap(&e, &e);
        if !(s > ZERO_NORM) {
            return Err(Error::ZeroNorm(s));
        }
        m.scale = 1.0 / s.sqrt();
    }
    Ok(m)
}

impl MixedContractedGTO {
    /// `Σ wₖ χₖ` without the function-level renormalization factor.
    pub fn raw_expansion(&self) -> Expansion {
        let mut out = Expansion::default();
        for (t, w) in self.terms.iter().zip(&self.weights) {
            out.terms.extend(t.expansion().terms.into_iter().map(|(c, g)| (w * c, g)));
        }
        out
    }

    pub fn expansion(&self) -> Expansion {
        let mut e = self.raw_expansion();
        for t in &mut e.terms {
            t.0 *= self.scale;
        }
        e
    }

    pub fn n_prims(&self) -> usize {
        self.terms.iter().map(|t| t.prims.len()).sum()
    }

    pub fn value_at(&self, r: [f64; 3]) -> f64 {
        self.expansion().value_at(r)
    }
}

impl From<ContractedGTO> for MixedContractedGTO {
    fn from(c: ContractedGTO) -> Self {
        MixedContractedGTO { terms: vec![c], weights: vec![1.0], normalize: false, scale: 1.0 }
    }
}

/// Cartesian exponents of total degree `l`, x-major.
pub fn cartesian_components(l: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for i in (0..=l).rev() {
        for j in (0..=l - i).rev() {
            out.push([i, j, l - i - j]);
        }
    }
    out
}
