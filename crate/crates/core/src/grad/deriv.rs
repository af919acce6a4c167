//! Parameter derivatives of basis functions and the derivative basis set.

use crate::basis::{expansion_overlap, BasisSet, ContractedGTO, MixedContractedGTO, PrimitiveGTO};
use crate::error::{Error, Result};
use crate::integrals::{Expansion, Gaussian};

fn shifted(g: &Gaussian, axis: usize, delta: i32) -> Option<Gaussian> {
    let v = g.ang[axis] as i32 + delta;
    if v < 0 {
        return None;
    }
    let mut out = *g;
    out.ang[axis] = v as u32;
    Some(out)
}

/// Directional derivative of `Σ dₙ Nₙ gₙ` along slot tangent `dp`.
fn d_raw_cgto(c: &ContractedGTO, dp: &[f64]) -> Result<Expansion> {
    let slots = c
        .slots
        .as_ref()
        .ok_or_else(|| Error::Orbital("contracted function has no parameter slots".into()))?;
    let dx = slots.center.map(|i| dp[i]);
    let mut out = Expansion::default();
    for (n, (p, &d)) in c.prims.iter().zip(&c.coeffs).enumerate() {
        let g = p.gaussian();
        let da = dp[slots.alphas[n]];
        let dd = dp[slots.coeffs[n]];
        if dd != 0.0 {
            out.terms.push((dd * p.norm, g));
        }
        if da != 0.0 {
            // N ∝ α^{3/4 + l/2}; ∂g/∂α = -r² g
            let f = d * p.norm * da;
            let l = p.l() as f64;
            out.terms.push((f * (0.75 + 0.5 * l) / p.alpha, g));
            for axis in 0..3 {
                out.terms.push((-f, shifted(&g, axis, 2).unwrap()));
            }
        }
        for axis in 0..3 {
            if dx[axis] == 0.0 {
                continue;
            }
            // ∂/∂X (x-X)^i e^{-α(x-X)²} = 2α (x-X)^{i+1} e − i (x-X)^{i-1} e
            let f = d * p.norm * dx[axis];
            out.terms.push((f * 2.0 * p.alpha, shifted(&g, axis, 1).unwrap()));
            if let Some(lo) = shifted(&g, axis, -1) {
                out.terms.push((-f * g.ang[axis] as f64, lo));
            }
        }
    }
    Ok(out)
}

fn axpy(out: &mut Expansion, a: f64, x: &Expansion) {
    out.terms.extend(x.terms.iter().map(|&(c, g)| (a * c, g)));
}

/// Directional derivative `Σ_s dp_s ∂φ/∂p_s`, including the derivatives of
/// both renormalization factors. Never renormalized.
pub fn d_phi(phi: &MixedContractedGTO, dp: &[f64]) -> Result<Expansion> {
    let mut du = Expansion::default();
    for (t, &w) in phi.terms.iter().zip(&phi.weights) {
        let dv = d_raw_cgto(t, dp)?;
        if dv.is_empty() {
            continue;
        }
        // χ = s v with s = ⟨v|v⟩^{-1/2}: ∂χ = s ∂v − s³ ⟨∂v|v⟩ v
        axpy(&mut du, w * t.scale, &dv);
        if t.normalize {
            let v = t.raw_expansion();
            let k = -t.scale.powi(3) * expansion_overlap(&dv, &v);
            axpy(&mut du, w * k, &v);
        }
    }
    if du.is_empty() {
        return Ok(du);
    }
    let mut out = Expansion::default();
    axpy(&mut out, phi.scale, &du);
    if phi.normalize {
        let u = phi.raw_expansion();
        let k = -phi.scale.powi(3) * expansion_overlap(&du, &u);
        axpy(&mut out, k, &u);
    }
    Ok(out)
}

/// Wrap an expansion as an un-normalized mixed contraction of one-primitive terms.
pub fn mcgto_from_expansion(e: &Expansion) -> Result<MixedContractedGTO> {
    let mut terms = Vec::with_capacity(e.terms.len());
    for &(c, g) in &e.terms {
        let p = PrimitiveGTO::new(g.alpha, g.ang, g.center)?;
        terms.push(ContractedGTO {
            prims: vec![p],
            coeffs: vec![c / p.norm],
            normalize: false,
            scale: 1.0,
            slots: None,
        });
    }
    let n = terms.len();
    Ok(MixedContractedGTO { terms, weights: vec![1.0; n], normalize: false, scale: 1.0 })
}

fn references(phi: &MixedContractedGTO, slot: usize) -> bool {
    phi.terms.iter().any(|t| {
        t.slots.as_ref().is_some_and(|s| {
            s.center.contains(&slot) || s.alphas.contains(&slot) || s.coeffs.contains(&slot)
        })
    })
}

/// `∂φ/∂p` for one slot, as an un-normalized mixed contraction.
pub fn d_phi_d_param(phi: &MixedContractedGTO, slot: usize, n_slots: usize) -> Result<MixedContractedGTO> {
    if slot >= n_slots || !references(phi, slot) {
        return Err(Error::Orbital(format!("function does not depend on slot {slot}")));
    }
    let mut dp = vec![0.0; n_slots];
    dp[slot] = 1.0;
    mcgto_from_expansion(&d_phi(phi, &dp)?)
}

/// The basis functions plus their nonzero derivatives along a set of
/// directions in slot space (one direction per parameter).
#[derive(Clone, Debug)]
pub struct DerivativeBasis {
    pub base: Vec<Expansion>,
    pub psi: Vec<Expansion>,
    /// `index[k][n]`: position in `psi` of ∂φₙ along direction `k`, if nonzero.
    pub index: Vec<Vec<Option<usize>>>,
}

impl DerivativeBasis {
    pub fn n_members(&self) -> usize {
        self.base.len() + self.psi.len()
    }

    pub fn n_directions(&self) -> usize {
        self.index.len()
    }

    fn build(basis: &BasisSet, directions: &[Vec<f64>]) -> Result<Self> {
        let base = basis.expansions();
        let deps: Vec<Vec<usize>> = (0..basis.w()).map(|n| basis.function_slots(n)).collect();
        let mut psi = Vec::new();
        let mut index = Vec::with_capacity(directions.len());
        for dp in directions {
            let mut row = Vec::with_capacity(basis.w());
            for (n, phi) in basis.functions().iter().enumerate() {
                if deps[n].iter().all(|&s| dp[s] == 0.0) {
                    row.push(None);
                    continue;
                }
                let e = d_phi(phi, dp)?;
                if e.is_empty() {
                    row.push(None);
                } else {
                    psi.push(e);
                    row.push(Some(psi.len() - 1));
                }
            }
            index.push(row);
        }
        Ok(Self { base, psi, index })
    }
}

/// Derivatives along each free theta (chain rule through the graph).
pub fn build_derivative_basis(basis: &BasisSet) -> Result<DerivativeBasis> {
    let g = basis.graph();
    let dirs = g
        .free_indices()
        .into_iter()
        .map(|i| g.column(basis.theta(), i))
        .collect::<Result<Vec<_>>>()?;
    DerivativeBasis::build(basis, &dirs)
}

/// Derivatives along each slot.
pub fn build_slot_derivative_basis(basis: &BasisSet) -> Result<DerivativeBasis> {
    let n = basis.graph().n_slots();
    let dirs: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut e = vec![0.0; n];
            e[s] = 1.0;
            e
        })
        .collect();
    DerivativeBasis::build(basis, &dirs)
}
