//! RHF energy and gradient as a function of the free basis parameters.

use std::time::Instant;

use crate::basis::{BasisSet, NuclearField};
use crate::error::{Error, Result};
use crate::grad::{energy_gradient, GradientOptions, GradientReport};
use crate::integrals::{build_tensors, IntegralTensors};
use crate::scf::{rhf, ScfOptions, ScfResult};

/// One objective evaluation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub basis: BasisSet,
    pub tensors: IntegralTensors,
    pub scf: ScfResult,
    pub gradient: Option<GradientReport>,
    pub seconds: f64,
}

impl Evaluation {
    pub fn energy(&self) -> f64 {
        self.scf.e_elec
    }
}

/// Basis, nuclei, electron count and SCF settings.
#[derive(Clone, Debug)]
pub struct HfProblem {
    pub basis: BasisSet,
    pub field: NuclearField,
    pub n_elec: usize,
    pub scf: ScfOptions,
    pub gradient: GradientOptions,
}

impl HfProblem {
    pub fn new(basis: BasisSet, field: NuclearField, charge: i32, scf: ScfOptions) -> Result<Self> {
        let n_elec = field.n_electrons(charge)?;
        if n_elec % 2 != 0 {
            return Err(Error::Electrons(format!(
                "closed-shell RHF needs an even electron count, got {n_elec}"
            )));
        }
        if n_elec / 2 > basis.w() {
            return Err(Error::Electrons(format!(
                "{} doubly occupied orbitals exceed basis size {}",
                n_elec / 2,
                basis.w()
            )));
        }
        Ok(Self { basis, field, n_elec, scf, gradient: GradientOptions::default() })
    }

    pub fn free_indices(&self) -> Vec<usize> {
        self.basis.graph().free_indices()
    }

    /// Current values of the free thetas.
    pub fn x0(&self) -> Vec<f64> {
        let t = self.basis.theta();
        self.free_indices().iter().map(|&i| t[i]).collect()
    }

    /// Full theta vector with the free entries replaced by `x`.
    pub fn full_theta(&self, x: &[f64]) -> Result<Vec<f64>> {
        let free = self.free_indices();
        if x.len() != free.len() {
            return Err(Error::Dimension { expected: free.len(), got: x.len() });
        }
        let mut t = self.basis.theta().to_vec();
        for (&i, &v) in free.iter().zip(x) {
            t[i] = v;
        }
        Ok(t)
    }

    /// SCF (and optionally the gradient) at free parameters `x`.
    pub fn evaluate(&self, x: &[f64], with_gradient: bool) -> Result<Evaluation> {
        let start = Instant::now();
        let basis = self.basis.with_theta(&self.full_theta(x)?)?;
        let tensors = build_tensors(&basis.expansions(), &self.field)?;
        let scf = rhf(&tensors, &self.field, self.n_elec, &self.scf)?;
        let gradient = if with_gradient && scf.converged {
            Some(energy_gradient(&basis, &self.field, &tensors, &scf, self.gradient)?)
        } else {
            None
        };
        Ok(Evaluation { basis, tensors, scf, gradient, seconds: start.elapsed().as_secs_f64() })
    }

    /// Central finite-difference gradient over the free thetas.
    pub fn finite_difference(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Invalid(format!("finite-difference step must be positive, got {h}")));
        }
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                let ep = self.evaluate(&xp, false)?;
                let em = self.evaluate(&xm, false)?;
                if !ep.scf.converged || !em.scf.converged {
                    return Err(Error::NotConverged);
                }
                Ok((ep.energy() - em.energy()) / (2.0 * h))
            })
            .collect()
    }
}
