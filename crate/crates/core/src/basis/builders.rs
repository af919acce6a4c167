//! Programmatic basis constructions.

use serde::{Deserialize, Serialize};

use super::gaussian94::BasisLibrary;
use super::geometry::NuclearField;
use super::gto::cartesian_components;
use super::set::{BasisSpec, FunctionSpec, TermSpec};
use crate::error::{Error, Result};
use crate::pgraph::{grid_box, GraphSpec, MappingKind, SlotRole};

#[derive(Clone, Copy, Debug, Default)]
pub struct AoOptions {
    /// One theta per (element, shell, primitive) instead of per atom.
    pub share_by_element: bool,
}

/// Atom-centered contracted functions from a basis library.
///
/// Slots are named `{El}{i}.s{k}.a{n}`, `{El}{i}.s{k}.d{n}` and
/// `{El}{i}.{x|y|z}` with `i` the 1-based atom index and `k` the shell index
/// after SP splitting. Each Cartesian component of a shell is its own
/// function.
pub fn ao_basis(field: &NuclearField, lib: &BasisLibrary, opts: AoOptions) -> Result<BasisSpec> {
    let mut g = GraphSpec::new();
    let mut functions = Vec::new();
    for (ai, nuc) in field.nuclei.iter().enumerate() {
        let el = nuc.symbol.as_str();
        let shells = lib
            .get(el)
            .ok_or_else(|| Error::Invalid(format!("basis library has no entry for {el}")))?;
        let atom = format!("{el}{}", ai + 1);
        let center: [String; 3] = std::array::from_fn(|k| {
            g.add_free(&format!("{atom}.{}", SlotRole::axis(k)), SlotRole::axis(k), nuc.position[k])
        });
        for (k, shell) in shells.iter().enumerate() {
            let mut names = |tag: &str, role: SlotRole, vals: &[f64]| -> Vec<String> {
                vals.iter()
                    .enumerate()
                    .map(|(n, &v)| {
                        let slot = format!("{atom}.s{k}.{tag}{n}");
                        if opts.share_by_element {
                            let id = format!("{el}.s{k}.{tag}{n}");
                            if g.theta(&id).is_none() {
                                g.add_theta(id.clone(), v);
                            }
                            g.add_slot(slot, role, MappingKind::Identity, &[&id])
                        } else {
                            g.add_free(&slot, role, v)
                        }
                    })
                    .collect()
            };
            let alphas = names("a", SlotRole::Alpha, &shell.exponents);
            let coeffs = names("d", SlotRole::Coeff, &shell.coeffs);
            for ang in cartesian_components(shell.l) {
                functions.push(FunctionSpec {
                    terms: vec![TermSpec {
                        weight: 1.0,
                        ang,
                        center: center.clone(),
                        alphas: alphas.clone(),
                        coeffs: coeffs.clone(),
                        normalize: true,
                    }],
                    normalize: false,
                });
            }
        }
    }
    if functions.is_empty() {
        return Err(Error::Orbital("no basis functions generated".into()));
    }
    Ok(BasisSpec { graph: g, functions })
}

/// Orientation of the three CDO3 pair axes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cdo3Orientation {
    /// Pairs along x, y and z.
    #[default]
    Cartesian,
    /// Pairs along an orthonormal frame whose (1,1,1) diagonal is z.
    Diagonal,
}

impl Cdo3Orientation {
    pub fn axes(self) -> [[f64; 3]; 3] {
        match self {
            Cdo3Orientation::Cartesian => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            Cdo3Orientation::Diagonal => {
                // rows: images of x, y, z under a rotation taking (1,1,1)/√3 to z
                let s2 = 2f64.sqrt();
                let s3 = 3f64.sqrt();
                let s6 = 6f64.sqrt();
                let e1 = [1.0 / s2, -1.0 / s2, 0.0];
                let e2 = [1.0 / s6, 1.0 / s6, -2.0 / s6];
                let e3 = [1.0 / s3, 1.0 / s3, 1.0 / s3];
                // pair axis k expressed in the lab frame with z along e3
                std::array::from_fn(|k| [e1[k], e2[k], e3[k]])
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cdo3Options {
    pub alphas: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// Distance from the intersection point to each CGTO center.
    pub distance: f64,
    pub origin: [f64; 3],
    pub orientation: Cdo3Orientation,
}

/// Three functions, each a (1,1)-weighted pair of identical s-type CGTOs
/// mirrored through `origin`, the pair axes mutually perpendicular. All six
/// CGTOs share exponent slots `cdo.a{n}`, coefficient slots `cdo.d{n}`, and
/// the distance theta `cdo.L`.
pub fn cdo3_basis(opts: &Cdo3Options) -> Result<BasisSpec> {
    let n = opts.alphas.len();
    if n < 1 {
        return Err(Error::Invalid("CDO3 needs at least one primitive".into()));
    }
    if opts.coeffs.len() != n {
        return Err(Error::Orbital(format!("{n} exponents but {} coefficients", opts.coeffs.len())));
    }
    if !(opts.distance > 0.0) {
        return Err(Error::Invalid(format!("CDO3 distance must be positive, got {}", opts.distance)));
    }
    let mut g = GraphSpec::new();
    let alphas: Vec<String> =
        (0..n).map(|i| g.add_free(&format!("cdo.a{i}"), SlotRole::Alpha, opts.alphas[i])).collect();
    let coeffs: Vec<String> =
        (0..n).map(|i| g.add_free(&format!("cdo.d{i}"), SlotRole::Coeff, opts.coeffs[i])).collect();
    let l = g.add_theta("cdo.L", opts.distance);
    let axes = opts.orientation.axes();
    let mut functions = Vec::new();
    for (k, axis) in axes.iter().enumerate() {
        let mut terms = Vec::new();
        for (side, sign) in [("p", 1.0), ("m", -1.0)] {
            let center: [String; 3] = std::array::from_fn(|c| {
                g.add_slot(
                    format!("cdo.{k}{side}.{}", SlotRole::axis(c)),
                    SlotRole::axis(c),
                    MappingKind::Affine { scale: sign * axis[c], shift: opts.origin[c] },
                    &[&l],
                )
            });
            terms.push(TermSpec {
                weight: 1.0,
                ang: [0, 0, 0],
                center,
                alphas: alphas.clone(),
                coeffs: coeffs.clone(),
                normalize: true,
            });
        }
        functions.push(FunctionSpec { terms, normalize: true });
    }
    Ok(BasisSpec { graph: g, functions })
}

#[derive(Clone, Debug)]
pub struct GridBoxOptions {
    pub n: [usize; 3],
    pub spacing: f64,
    pub origin: [f64; 3],
    pub alphas: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// One s-type CGTO per grid point; all points share `grid.a{n}`, `grid.d{n}`
/// and the spacing theta `grid.L`.
pub fn grid_box_basis(opts: &GridBoxOptions) -> Result<BasisSpec> {
    if opts.alphas.is_empty() || opts.alphas.len() != opts.coeffs.len() {
        return Err(Error::Orbital("grid box needs matching, non-empty exponents and coefficients".into()));
    }
    let mut g = GraphSpec::new();
    let alphas: Vec<String> = (0..opts.alphas.len())
        .map(|i| g.add_free(&format!("grid.a{i}"), SlotRole::Alpha, opts.alphas[i]))
        .collect();
    let coeffs: Vec<String> = (0..opts.coeffs.len())
        .map(|i| g.add_free(&format!("grid.d{i}"), SlotRole::Coeff, opts.coeffs[i]))
        .collect();
    let l = g.add_theta("grid.L", opts.spacing);
    let centers = grid_box(&mut g, "grid.p", opts.n, &l, opts.origin)?;
    let functions = centers
        .into_iter()
        .map(|center| FunctionSpec {
            terms: vec![TermSpec {
                weight: 1.0,
                ang: [0, 0, 0],
                center,
                alphas: alphas.clone(),
                coeffs: coeffs.clone(),
                normalize: true,
            }],
            normalize: false,
        })
        .collect();
    Ok(BasisSpec { graph: g, functions })
}
