//! Analytic gradient of the RHF energy with respect to basis parameters.
//!
//! The energy is a function of the orthonormal-basis tensors `A' = X A X`
//! and `B' = X⊗X⊗X⊗X · B` at the converged density. Its gradient is the
//! contraction `Σ ∇_{A'}E ∘ ∂A' + Σ ∇_{B'}E ∘ ∂B'`, where `∂A'` and `∂B'`
//! combine raw-basis integral derivatives over the derivative basis with the
//! derivative of the orthogonalizer.

pub mod deriv;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{BasisSet, NuclearField};
use crate::error::{Error, Result};
use crate::integrals::{mixed_tensors, IntegralTensors, MixedTensors, LINDEP_THRESHOLD};
use crate::scf::{Orthogonalizer, ScfResult};

pub use deriv::{
    build_derivative_basis, build_slot_derivative_basis, d_phi, d_phi_d_param, mcgto_from_expansion,
    DerivativeBasis,
};

/// `∂X` for `X = S^{-1/2}` given `∂S`, from the eigen-decomposition of `S`.
pub fn d_orthogonalizer(orth: &Orthogonalizer, ds: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = orth.lambda.len();
    if ds.nrows() != n || ds.ncols() != n {
        return Err(Error::Dimension { expected: n, got: ds.nrows() });
    }
    if let Some(&l) = orth.lambda.iter().find(|&&l| !(l >= LINDEP_THRESHOLD)) {
        return Err(Error::LinearDependence(l));
    }
    let v = &orth.v;
    let mut m = v.transpose() * ds * v;
    for p in 0..n {
        for q in 0..n {
            let (sp, sq) = (orth.lambda[p].sqrt(), orth.lambda[q].sqrt());
            m[(p, q)] /= sp * sq * (sp + sq);
        }
    }
    Ok(-(v * m * v.transpose()))
}

/// Dense four-index transform `out_{ijkl} = Σ Y1_{ai} Y2_{bj} Y3_{ck} Y4_{dl} B_{abcd}`.
pub fn transform4(b: &[f64], n: usize, y: [&DMatrix<f64>; 4]) -> Vec<f64> {
    let mut cur = b.to_vec();
    let mut next = vec![0.0; n * n * n * n];
    // contract one index at a time, rotating it to the back
    for ym in y {
        next.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..n {
            for rest in 0..n * n * n {
                let v = cur[a * n * n * n + rest];
                if v == 0.0 {
                    continue;
                }
                for i in 0..n {
                    next[rest * n + i] += ym[(a, i)] * v;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// `Q_{abcd} + Q_{bacd} + Q_{cdab} + Q_{dcab}`.
fn symmetrize_one_index(q: &[f64], n: usize) -> Vec<f64> {
    let at = |a: usize, b: usize, c: usize, d: usize| q[((a * n + b) * n + c) * n + d];
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    out[((a * n + b) * n + c) * n + d] =
                        at(a, b, c, d) + at(b, a, c, d) + at(c, d, a, b) + at(d, c, a, b);
                }
            }
        }
    }
    out
}

/// `(∇_{A'}E, ∇_{B'}E)` at the converged orthonormal-basis density.
pub fn grad_wrt_tensors(scf: &ScfResult) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !scf.converged {
        return Err(Error::NotConverged);
    }
    Ok(tensor_gradients(&scf.density_ortho))
}

/// `∇_A E = 2D`, `∇_B E_{abcd} = 2 D_{ab} D_{cd} − ½ (D_{ac} D_{bd} + D_{ad} D_{bc})`.
pub fn tensor_gradients(d: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = d.nrows();
    let mut gb = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    gb[((a * n + b) * n + c) * n + e] =
                        2.0 * d[(a, b)] * d[(c, e)] - 0.5 * (d[(a, c)] * d[(b, e)] + d[(a, e)] * d[(b, c)]);
                }
            }
        }
    }
    (2.0 * d, gb)
}

/// Raw-basis derivatives along one direction of a derivative basis.
#[derive(Clone, Debug)]
pub struct RawDerivatives {
    pub ds: DMatrix<f64>,
    pub da: DMatrix<f64>,
    /// Dense `W⁴`.
    pub db: Vec<f64>,
}

fn raw_derivatives(db: &DerivativeBasis, mixed: &MixedTensors, k: usize) -> RawDerivatives {
    let n = db.base.len();
    let row = &db.index[k];
    let mut ds = DMatrix::zeros(n, n);
    let mut da = DMatrix::zeros(n, n);
    let mut q = vec![0.0; n * n * n * n];
    for (a, slot) in row.iter().enumerate() {
        let Some(m) = *slot else { continue };
        for b in 0..n {
            ds[(a, b)] += mixed.overlap[(m, b)];
            ds[(b, a)] += mixed.overlap[(m, b)];
            da[(a, b)] += mixed.core[(m, b)];
            da[(b, a)] += mixed.core[(m, b)];
            for c in 0..n {
                for d in 0..n {
                    q[((a * n + b) * n + c) * n + d] = mixed.eri_at(m, b, c, d);
                }
            }
        }
    }
    RawDerivatives { ds, da, db: symmetrize_one_index(&q, n) }
}

/// Orthonormal-basis tensor derivatives `(∂A', ∂B')` from raw derivatives.
pub fn d_tensors(
    tensors: &IntegralTensors,
    orth: &Orthogonalizer,
    raw: &RawDerivatives,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let n = tensors.dim();
    let x = &orth.x;
    let dx = d_orthogonalizer(orth, &raw.ds)?;
    let a = &tensors.core;
    let da = &dx * a * x + x * &raw.da * x + x * a * &dx;
    let b = tensors.eri.to_dense();
    let mut dbp = transform4(&raw.db, n, [x, x, x, x]);
    let c = transform4(&b, n, [&dx, x, x, x]);
    for (o, v) in dbp.iter_mut().zip(symmetrize_one_index(&c, n)) {
        *o += v;
    }
    Ok((dx, da, dbp))
}

/// `Σ gA ∘ dA + Σ gB ∘ dB`.
pub fn f4(ga: &DMatrix<f64>, gb: &[f64], da: &DMatrix<f64>, db: &[f64]) -> f64 {
    ga.component_mul(da).sum() + gb.iter().zip(db).map(|(g, d)| g * d).sum::<f64>()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientRoute {
    /// One derivative function per (function, free theta), via graph columns.
    #[default]
    Theta,
    /// One derivative function per (function, slot), then a graph pullback.
    Slot,
}

#[derive(Clone, Debug)]
pub struct GradientParts {
    pub grad_a: DMatrix<f64>,
    pub grad_b: Vec<f64>,
    pub d_a: Vec<DMatrix<f64>>,
    pub d_b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct GradientReport {
    /// dE/dθ for the free thetas, in `free` order.
    pub de_dtheta: Vec<f64>,
    /// Indices of the free thetas.
    pub free: Vec<usize>,
    pub derivative_basis_size: usize,
    pub parts: Option<GradientParts>,
}

impl GradientReport {
    /// Gradient over all thetas, zero for frozen ones.
    pub fn full(&self, n_theta: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_theta];
        for (&i, &v) in self.free.iter().zip(&self.de_dtheta) {
            g[i] = v;
        }
        g
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GradientOptions {
    pub route: GradientRoute,
    pub keep_parts: bool,
}

/// dE₀/dθ at a converged SCF solution.
pub fn energy_gradient(
    basis: &BasisSet,
    field: &NuclearField,
    tensors: &IntegralTensors,
    scf: &ScfResult,
    opts: GradientOptions,
) -> Result<GradientReport> {
    let (ga, gb) = grad_wrt_tensors(scf)?;
    let n = basis.w();
    if tensors.dim() != n || scf.density.nrows() != n {
        return Err(Error::Dimension { expected: n, got: tensors.dim() });
    }
    let free = basis.graph().free_indices();
    let db = match opts.route {
        GradientRoute::Theta => build_derivative_basis(basis)?,
        GradientRoute::Slot => build_slot_derivative_basis(basis)?,
    };
    let mixed = mixed_tensors(&db.psi, &db.base, field);
    let per_dir: Vec<(f64, Option<(DMatrix<f64>, Vec<f64>)>)> = (0..db.n_directions())
        .into_par_iter()
        .map(|k| -> Result<_> {
            if db.index[k].iter().all(Option::is_none) {
                let keep = opts
                    .keep_parts
                    .then(|| (DMatrix::zeros(n, n), vec![0.0; n * n * n * n]));
                return Ok((0.0, keep));
            }
            let raw = raw_derivatives(&db, &mixed, k);
            let (_, da, dbp) = d_tensors(tensors, &scf.orth, &raw)?;
            let g = f4(&ga, &gb, &da, &dbp);
            Ok((g, opts.keep_parts.then_some((da, dbp))))
        })
        .collect::<Result<Vec<_>>>()?;

    let de_dtheta = match opts.route {
        GradientRoute::Theta => per_dir.iter().map(|(g, _)| *g).collect(),
        GradientRoute::Slot => {
            let de_dp: Vec<f64> = per_dir.iter().map(|(g, _)| *g).collect();
            let full = basis.graph().pullback_at(basis.theta(), &de_dp)?;
            free.iter().map(|&i| full[i]).collect()
        }
    };
    let parts = opts.keep_parts.then(|| {
        let (d_a, d_b) = per_dir.into_iter().map(|(_, p)| p.unwrap()).unzip();
        GradientParts { grad_a: ga, grad_b: gb, d_a, d_b }
    });
    Ok(GradientReport { de_dtheta, free, derivative_basis_size: db.n_members(), parts })
}
