#![allow(dead_code)]

pub mod quadrature;

use std::path::PathBuf;

use basisopt::basis::{
    ao_basis, parse_gaussian94, AoOptions, BasisLibrary, BasisSet, BasisSpec, FunctionSpec, NuclearField, TermSpec,
};
use basisopt::integrals::{build_tensors, IntegralTensors};
use basisopt::pgraph::{GraphSpec, SlotRole};
use basisopt::problem::HfProblem;
use basisopt::scf::{rhf, ScfOptions, ScfResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn library(name: &str) -> BasisLibrary {
    let path = data_dir().join("basis").join(format!("{name}.gbs"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_gaussian94(&text).unwrap()
}

/// H2 at 1.4 bohr, centered on the origin along z.
pub fn h2() -> NuclearField {
    NuclearField::from_atoms(&[("H", [0.0, 0.0, -0.7]), ("H", [0.0, 0.0, 0.7])]).unwrap()
}

pub fn ao(field: &NuclearField, name: &str, share_by_element: bool) -> BasisSet {
    let spec = ao_basis(field, &library(name), AoOptions { share_by_element }).unwrap();
    BasisSet::from_spec(spec).unwrap()
}

pub fn tight() -> ScfOptions {
    ScfOptions { conv: 1e-12, comm_tol: Some(1e-9), ..ScfOptions::default() }
}

pub fn hf(basis: &BasisSet, field: &NuclearField, charge: i32, opts: &ScfOptions) -> (IntegralTensors, ScfResult) {
    let t = build_tensors(&basis.expansions(), field).unwrap();
    let n = field.n_electrons(charge).unwrap();
    let r = rhf(&t, field, n, opts).unwrap();
    (t, r)
}

/// H2/STO-3G with exponents and coefficients shared between the atoms and,
/// with `mirror`, the second center the negation of the first.
pub fn h2_sto3g_spec(mirror: bool) -> BasisSpec {
    let f = h2();
    let mut spec = ao_basis(&f, &library("sto-3g"), AoOptions { share_by_element: true }).unwrap();
    if mirror {
        for axis in ["x", "y", "z"] {
            spec.graph
                .rewire(&format!("H2.{axis}"), "negate", &[format!("H1.{axis}")], &[])
                .unwrap();
        }
        spec.graph.prune_unused_thetas();
    }
    spec
}

pub fn h2_problem(roles: &[SlotRole], mirror: bool, scf: ScfOptions) -> HfProblem {
    let mut b = BasisSet::from_spec(h2_sto3g_spec(mirror)).unwrap();
    b.free_by_role(roles);
    HfProblem::new(b, h2(), 0, scf).unwrap()
}

pub const CENTER: [SlotRole; 3] = [SlotRole::X, SlotRole::Y, SlotRole::Z];

pub fn roles(alpha: bool, d: bool, center: bool) -> Vec<SlotRole> {
    let mut r = Vec::new();
    if alpha {
        r.push(SlotRole::Alpha);
    }
    if d {
        r.push(SlotRole::Coeff);
    }
    if center {
        r.extend(CENTER);
    }
    r
}

/// |a - f| / max(|a|, |f|), or the absolute difference when both are below 1e-6.
pub fn rel_err(a: f64, f: f64) -> f64 {
    let m = a.abs().max(f.abs());
    if m < 1e-6 {
        (a - f).abs()
    } else {
        (a - f).abs() / m
    }
}

/// Three mixed contractions over s, p and d primitives on H2, every
/// exponent, coefficient and center coordinate an independent theta.
pub fn random_mcgto_spec(seed: u64) -> BasisSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = GraphSpec::new();
    let mut k = 0;
    let mut term = |g: &mut GraphSpec, rng: &mut ChaCha8Rng, ang: [u32; 3], nprim: usize, weight: f64| {
        let center: [String; 3] = std::array::from_fn(|a| {
            g.add_free(&format!("t{k}.{}", SlotRole::axis(a)), SlotRole::axis(a), rng.gen_range(-0.9..0.9))
        });
        let alphas = (0..nprim)
            .map(|n| g.add_free(&format!("t{k}.a{n}"), SlotRole::Alpha, rng.gen_range(0.3..2.5)))
            .collect();
        let coeffs = (0..nprim)
            .map(|n| g.add_free(&format!("t{k}.d{n}"), SlotRole::Coeff, rng.gen_range(0.3..1.0)))
            .collect();
        k += 1;
        TermSpec { weight, ang, center, alphas, coeffs, normalize: true }
    };
    let f0 = FunctionSpec {
        terms: vec![term(&mut g, &mut rng, [0, 0, 0], 2, 1.0), term(&mut g, &mut rng, [1, 0, 0], 1, 0.4)],
        normalize: true,
    };
    let f1 = FunctionSpec {
        terms: vec![term(&mut g, &mut rng, [0, 0, 1], 2, 1.0), term(&mut g, &mut rng, [0, 0, 0], 1, 0.7)],
        normalize: true,
    };
    let f2 = FunctionSpec {
        terms: vec![term(&mut g, &mut rng, [1, 1, 0], 1, 1.0), term(&mut g, &mut rng, [0, 0, 0], 2, -0.5)],
        normalize: true,
    };
    BasisSpec { graph: g, functions: vec![f0, f1, f2] }
}
