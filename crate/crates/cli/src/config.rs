//! Run configuration: geometry, basis builder, SCF settings and an optional
//! optimization block. Relative paths resolve against the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use basisopt::basis::{
    ao_basis, cdo3_basis, grid_box_basis, parse_gaussian94, parse_xyz, AoOptions, BasisSet, BasisSpec,
    Cdo3Options, Cdo3Orientation, GridBoxOptions, NuclearField, Units,
};
use basisopt::optim::OptimizerConfig;
use basisopt::pgraph::SlotRole;
use basisopt::problem::HfProblem;
use basisopt::scf::ScfOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub charge: i32,
    #[serde(default)]
    pub scf: ScfOptions,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Exactly one of `path`, `atoms` or `chain`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub atoms: Option<Vec<AtomConfig>>,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub units: Units,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub symbol: String,
    pub position: [f64; 3],
}

/// Evenly spaced atoms along z, centered on the origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub element: String,
    pub n: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BasisConfig {
    AoFile {
        path: PathBuf,
        #[serde(default)]
        share_by_element: bool,
    },
    GridBox {
        n: [usize; 3],
        spacing: f64,
        #[serde(default)]
        origin: [f64; 3],
        alphas: Vec<f64>,
        coeffs: Vec<f64>,
    },
    Cdo3 {
        alphas: Vec<f64>,
        coeffs: Vec<f64>,
        distance: f64,
        #[serde(default)]
        origin: [f64; 3],
        #[serde(default)]
        orientation: Cdo3Orientation,
    },
    /// A basis description inline or in a JSON file (plain or as written by
    /// `optimize`).
    Explicit {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        spec: Option<BasisSpec>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeRole {
    Alpha,
    D,
    Center,
    X,
    Y,
    Z,
    Other,
}

impl FreeRole {
    fn roles(self) -> &'static [SlotRole] {
        match self {
            FreeRole::Alpha => &[SlotRole::Alpha],
            FreeRole::D => &[SlotRole::Coeff],
            FreeRole::Center => &[SlotRole::X, SlotRole::Y, SlotRole::Z],
            FreeRole::X => &[SlotRole::X],
            FreeRole::Y => &[SlotRole::Y],
            FreeRole::Z => &[SlotRole::Z],
            FreeRole::Other => &[SlotRole::Other],
        }
    }
}

/// Rewires `slot` to `kind(inputs; constants)`; thetas left unused are dropped.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correlation {
    pub slot: String,
    pub kind: String,
    pub inputs: Vec<String>,
    #[serde(default)]
    pub constants: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeConfig {
    /// Thetas driving a slot of one of these roles are optimized.
    pub free: Vec<FreeRole>,
    #[serde(default)]
    pub correlations: Vec<Correlation>,
    /// Theta ids held fixed regardless of `free`.
    #[serde(default)]
    pub fixed: Vec<String>,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

/// Basis JSON written by `optimize`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizedBasis {
    pub spec: BasisSpec,
    /// Every derived slot value at the final theta.
    pub slots: BTreeMap<String, f64>,
    pub e_elec: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BasisFile {
    Optimized(OptimizedBasis),
    Plain(BasisSpec),
}

/// A config resolved into nuclei, basis and problem.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub field: NuclearField,
    pub problem: HfProblem,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = read(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn field(&self, base: &Path, units: Option<Units>) -> Result<NuclearField, CliError> {
        let g = &self.geometry;
        let units = units.unwrap_or(g.units);
        let given = [g.path.is_some(), g.atoms.is_some(), g.chain.is_some()].iter().filter(|&&b| b).count();
        if given != 1 {
            return Err(CliError::Validation("geometry needs exactly one of `path`, `atoms`, `chain`".into()));
        }
        let field = if let Some(p) = &g.path {
            parse_xyz(&read(&resolve(base, p))?, units)?
        } else if let Some(atoms) = &g.atoms {
            let s = units.to_bohr();
            let list: Vec<(&str, [f64; 3])> =
                atoms.iter().map(|a| (a.symbol.as_str(), a.position.map(|v| v * s))).collect();
            NuclearField::from_atoms(&list)?
        } else {
            let c = g.chain.as_ref().expect("counted above");
            NuclearField::chain(&c.element, c.n, c.spacing * units.to_bohr())?
        };
        Ok(field)
    }

    pub fn basis_spec(&self, base: &Path, field: &NuclearField) -> Result<BasisSpec, CliError> {
        let mut spec = match &self.basis {
            BasisConfig::AoFile { path, share_by_element } => {
                let lib = parse_gaussian94(&read(&resolve(base, path))?)?;
                ao_basis(field, &lib, AoOptions { share_by_element: *share_by_element })?
            }
            BasisConfig::GridBox { n, spacing, origin, alphas, coeffs } => grid_box_basis(&GridBoxOptions {
                n: *n,
                spacing: *spacing,
                origin: *origin,
                alphas: alphas.clone(),
                coeffs: coeffs.clone(),
            })?,
            BasisConfig::Cdo3 { alphas, coeffs, distance, origin, orientation } => cdo3_basis(&Cdo3Options {
                alphas: alphas.clone(),
                coeffs: coeffs.clone(),
                distance: *distance,
                origin: *origin,
                orientation: *orientation,
            })?,
            BasisConfig::Explicit { path, spec } => match (path, spec) {
                (Some(p), None) => {
                    let p = resolve(base, p);
                    match serde_json::from_str::<BasisFile>(&read(&p)?) {
                        Ok(BasisFile::Optimized(o)) => o.spec,
                        Ok(BasisFile::Plain(s)) => s,
                        Err(e) => return Err(CliError::Validation(format!("{}: {e}", p.display()))),
                    }
                }
                (None, Some(s)) => s.clone(),
                _ => return Err(CliError::Validation("explicit basis needs exactly one of `path`, `spec`".into())),
            },
        };
        if let Some(opt) = &self.optimize {
            if !opt.correlations.is_empty() {
                for c in &opt.correlations {
                    spec.graph.rewire(&c.slot, &c.kind, &c.inputs, &c.constants)?;
                }
                spec.graph.prune_unused_thetas();
            }
        }
        Ok(spec)
    }

    /// Nuclei, basis (with free thetas selected) and RHF problem.
    pub fn load(self, base: &Path, units: Option<Units>) -> Result<Loaded, CliError> {
        let field = self.field(base, units)?;
        let spec = self.basis_spec(base, &field)?;
        let mut basis = BasisSet::from_spec(spec)?;
        match &self.optimize {
            Some(opt) => {
                opt.optimizer.validate()?;
                let roles: Vec<SlotRole> = opt.free.iter().flat_map(|r| r.roles().iter().copied()).collect();
                basis.free_by_role(&roles);
                for id in &opt.fixed {
                    let i = basis
                        .graph()
                        .theta_id(id)
                        .ok_or_else(|| CliError::Validation(format!("unknown theta `{id}` in `fixed`")))?;
                    let mut frozen: Vec<bool> = basis.graph().thetas().iter().map(|t| t.frozen).collect();
                    frozen[i] = true;
                    basis.set_frozen(&frozen)?;
                }
            }
            None => basis.free_by_role(&[]),
        }
        let problem = HfProblem::new(basis, field.clone(), self.charge, self.scf)?;
        Ok(Loaded { config: self, field, problem })
    }
}
