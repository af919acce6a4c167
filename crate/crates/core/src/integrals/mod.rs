//! Gaussian integral engine (McMurchie–Davidson).

pub mod boys;
pub mod hermite;
pub mod prim;
pub mod tensors;

pub use boys::boys;
pub use prim::{Gaussian, PairData};
pub use tensors::{
    build_tensors, build_tensors_with, mixed_tensors, n_pairs, pair_index, BuildOptions,
    EriTensor, Expansion, IntegralTensors, MixedTensors, LINDEP_THRESHOLD,
};

use crate::basis::{NuclearField, PrimitiveGTO};

/// `⟨a|b⟩` for normalized primitives.
pub fn overlap_prim(a: &PrimitiveGTO, b: &PrimitiveGTO) -> f64 {
    a.norm * b.norm * PairData::new(&a.gaussian(), &b.gaussian()).overlap
}

/// `⟨a|-½∇²|b⟩` for normalized primitives.
pub fn kinetic_prim(a: &PrimitiveGTO, b: &PrimitiveGTO) -> f64 {
    a.norm * b.norm * PairData::new(&a.gaussian(), &b.gaussian()).kinetic
}

/// `-Σ Z ⟨a| 1/|r-R| |b⟩` for normalized primitives.
pub fn nuclear_prim(a: &PrimitiveGTO, b: &PrimitiveGTO, field: &NuclearField) -> f64 {
    let pd = PairData::new(&a.gaussian(), &b.gaussian());
    let mut r = hermite::HermiteR::new(pd.l);
    a.norm * b.norm * pd.nuclear(&field.point_charges(), &mut r)
}

/// `(ab|cd)` for normalized primitives.
pub fn eri_prim(a: &PrimitiveGTO, b: &PrimitiveGTO, c: &PrimitiveGTO, d: &PrimitiveGTO) -> f64 {
    let ab = PairData::new(&a.gaussian(), &b.gaussian());
    let cd = PairData::new(&c.gaussian(), &d.gaussian());
    let mut r = hermite::HermiteR::new(ab.l + cd.l);
    a.norm * b.norm * c.norm * d.norm * prim::eri(&ab, &cd, &mut r)
}
