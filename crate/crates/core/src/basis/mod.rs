//! Orbital hierarchy, basis-set construction and geometry input.

pub mod builders;
pub mod gaussian94;
pub mod geometry;
pub mod gto;
pub mod set;

pub use builders::{
    ao_basis, cdo3_basis, grid_box_basis, AoOptions, Cdo3Options, Cdo3Orientation, GridBoxOptions,
};
pub use gaussian94::{parse_gaussian94, BasisLibrary, Shell};
pub use geometry::{atomic_number, parse_xyz, NuclearField, Nucleus, Units, BOHR_PER_ANGSTROM};
pub use gto::{
    cartesian_components, expansion_overlap, gto_norm, make_cgto, make_mcgto, CgtoSlots,
    ContractedGTO, MixedContractedGTO, PrimitiveGTO,
};
pub use set::{BasisSet, BasisSpec, FunctionSpec, TermSpec};
