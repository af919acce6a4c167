//! Gaussian basis-set construction and variational optimization against the
//! restricted Hartree–Fock energy, with analytic parameter gradients.

pub mod basis;
pub mod error;
pub mod grad;
pub mod integrals;
pub mod optim;
pub mod pgraph;
pub mod problem;
pub mod scf;

pub use error::{Error, Result};
