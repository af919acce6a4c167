//! Restricted closed-shell Hartree–Fock.

use log::{debug, info};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::NuclearField;
use crate::error::{Error, Result};
use crate::integrals::{IntegralTensors, LINDEP_THRESHOLD};

/// Symmetric orthogonalizer `X = S^{-1/2} = V diag(λ^{-1/2}) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Orthogonalizer {
    pub x: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl Orthogonalizer {
    /// `S^{1/2}`.
    pub fn sqrt_s(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.lambda.map(f64::sqrt));
        &self.v * d * self.v.transpose()
    }
}

pub fn sym_orthogonalizer(s: &DMatrix<f64>) -> Result<Orthogonalizer> {
    if !s.is_square() {
        return Err(Error::Dimension { expected: s.nrows(), got: s.ncols() });
    }
    let eig = SymmetricEigen::new(s.clone());
    let min = eig.eigenvalues.min();
    if !(min >= LINDEP_THRESHOLD) {
        return Err(Error::LinearDependence(min));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let x = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Ok(Orthogonalizer { x, v: eig.eigenvectors, lambda: eig.eigenvalues })
}

/// Dense `n⁴` two-electron array, index `((i n + j) n + k) n + l`.
pub struct DenseEri {
    n: usize,
    data: Vec<f64>,
}

impl DenseEri {
    pub fn new(t: &IntegralTensors) -> Self {
        Self { n: t.dim(), data: t.eri.to_dense() }
    }

    /// `G = 2J - K` for density `d`.
    pub fn two_electron(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        for m in 0..n {
            for v in 0..=m {
                let mut acc = 0.0;
                for l in 0..n {
                    for s in 0..n {
                        let dl = d[(l, s)];
                        if dl == 0.0 {
                            continue;
                        }
                        let j = self.data[((m * n + v) * n + l) * n + s];
                        let k = self.data[((m * n + l) * n + v) * n + s];
                        acc += dl * (2.0 * j - k);
                    }
                }
                g[(m, v)] = acc;
                g[(v, m)] = acc;
            }
        }
        g
    }
}

/// `E = Σ D∘(2A) + Σ D_{μν} D_{λσ} [2(μν|λσ) − (μλ|νσ)]` for per-spin `D`.
pub fn rhf_energy(d: &DMatrix<f64>, tensors: &IntegralTensors) -> Result<f64> {
    let n = tensors.dim();
    if d.nrows() != n || d.ncols() != n {
        return Err(Error::Dimension { expected: n, got: d.nrows() });
    }
    let g = DenseEri::new(tensors).two_electron(d);
    Ok(d.component_mul(&(2.0 * &tensors.core + g)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScfOptions {
    /// Energy change threshold (Hartree).
    pub conv: f64,
    /// Max |FDS − SDF| in the orthonormal basis; `None` uses `sqrt(conv)`.
    pub comm_tol: Option<f64>,
    pub max_iter: usize,
    pub diis_size: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self { conv: 1e-9, comm_tol: None, max_iter: 200, diis_size: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct ScfResult {
    pub e_elec: f64,
    pub e_nuc: f64,
    pub e_total: f64,
    /// Per-spin density `C_occ C_occᵀ` in the raw basis.
    pub density: DMatrix<f64>,
    /// Per-spin density in the orthonormal basis, `S^{1/2} D S^{1/2}`.
    pub density_ortho: DMatrix<f64>,
    pub coeffs: DMatrix<f64>,
    pub orbital_energies: DVector<f64>,
    pub orth: Orthogonalizer,
    pub n_occ: usize,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<f64>,
}

struct Diis {
    size: usize,
    focks: Vec<DMatrix<f64>>,
    errors: Vec<DMatrix<f64>>,
}

impl Diis {
    fn push(&mut self, f: DMatrix<f64>, e: DMatrix<f64>) {
        if self.focks.len() == self.size {
            self.focks.remove(0);
            self.errors.remove(0);
        }
        self.focks.push(f);
        self.errors.push(e);
    }

    fn extrapolate(&self) -> Option<DMatrix<f64>> {
        let m = self.focks.len();
        if m < 2 {
            return None;
        }
        let mut b = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..=i {
                let v = self.errors[i].dot(&self.errors[j]);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
            b[(i, m)] = -1.0;
            b[(m, i)] = -1.0;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        let c = b.lu().solve(&rhs)?;
        if c.iter().any(|v| !v.is_finite()) || c.rows(0, m).amax() > 1e8 {
            return None;
        }
        let mut f = DMatrix::zeros(self.focks[0].nrows(), self.focks[0].ncols());
        for i in 0..m {
            f += c[i] * &self.focks[i];
        }
        Some(f)
    }
}

fn density_from(
    fock: &DMatrix<f64>,
    x: &DMatrix<f64>,
    n_occ: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let fo = x.transpose() * fock * x;
    let eig = SymmetricEigen::new(fo);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = fock.nrows();
    let mut cp = DMatrix::zeros(n, n);
    let mut eps = DVector::zeros(n);
    for (k, &i) in idx.iter().enumerate() {
        cp.set_column(k, &eig.eigenvectors.column(i));
        eps[k] = eig.eigenvalues[i];
    }
    let c = x * cp;
    let occ = c.columns(0, n_occ);
    let d = &occ * occ.transpose();
    (d, c, eps)
}

/// Closed-shell SCF from the core-Hamiltonian guess with DIIS.
pub fn rhf(
    tensors: &IntegralTensors,
    field: &NuclearField,
    n_elec: usize,
    opts: &ScfOptions,
) -> Result<ScfResult> {
    let n = tensors.dim();
    if n_elec % 2 != 0 {
        return Err(Error::Electrons(format!("closed-shell RHF needs an even electron count, got {n_elec}")));
    }
    let n_occ = n_elec / 2;
    if n_occ > n {
        return Err(Error::Electrons(format!("{n_occ} doubly occupied orbitals exceed basis size {n}")));
    }
    let orth = sym_orthogonalizer(&tensors.overlap)?;
    let x = &orth.x;
    let s = &tensors.overlap;
    let h = &tensors.core;
    let eri = DenseEri::new(tensors);
    let comm_tol = opts.comm_tol.unwrap_or(opts.conv.sqrt());
    let e_nuc = field.nuclear_repulsion();

    let (mut d, mut c, mut eps) = density_from(h, x, n_occ);
    let mut diis = Diis { size: opts.diis_size.max(1), focks: Vec::new(), errors: Vec::new() };
    let mut history = Vec::new();
    let mut e_old = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    let mut f_prev: Option<DMatrix<f64>> = None;

    for it in 1..=opts.max_iter {
        iterations = it;
        let f = h + eri.two_electron(&d);
        let e = d.component_mul(&(h + &f)).sum();
        if !e.is_finite() {
            return Err(Error::NonFiniteEnergy);
        }
        history.push(e);
        let err = x.transpose() * (&f * &d * s - s * &d * &f) * x;
        let err_max = err.amax();
        let de = (e - e_old).abs();
        debug!("scf iter {it:3} E_elec {e:.12} dE {de:.3e} diis_err {err_max:.3e}");
        if de < opts.conv && err_max < comm_tol {
            converged = true;
            break;
        }
        e_old = e;
        diis.push(f.clone(), err);
        let f_next = match diis.extrapolate() {
            Some(fx) => fx,
            None => match &f_prev {
                Some(fp) if diis.focks.len() >= 2 => 0.5 * (&f + fp),
                _ => f.clone(),
            },
        };
        f_prev = Some(f);
        (d, c, eps) = density_from(&f_next, x, n_occ);
    }

    // energy and orbitals consistent with the final density
    let f = h + eri.two_electron(&d);
    let e_elec = d.component_mul(&(h + &f)).sum();
    if converged {
        let (_, c2, eps2) = density_from(&f, x, n_occ);
        c = c2;
        eps = eps2;
    }
    let sh = orth.sqrt_s();
    let density_ortho = &sh * &d * &sh;
    info!(
        "RHF {} after {iterations} iterations: E_elec {e_elec:.9} E_nuc {e_nuc:.9} E_total {:.9}",
        if converged { "converged" } else { "NOT converged" },
        e_elec + e_nuc
    );
    Ok(ScfResult {
        e_elec,
        e_nuc,
        e_total: e_elec + e_nuc,
        density: d,
        density_ortho,
        coeffs: c,
        orbital_energies: eps,
        orth,
        n_occ,
        converged,
        iterations,
        history,
    })
}
