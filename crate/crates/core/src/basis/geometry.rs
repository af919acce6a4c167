//! Nuclear geometry and XYZ parsing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOHR_PER_ANGSTROM: f64 = 1.8897259886;

const ELEMENTS: [&str; 36] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr",
];

/// Atomic number of an element symbol (case-insensitive).
pub fn atomic_number(symbol: &str) -> Result<u32> {
    ELEMENTS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
        .ok_or_else(|| Error::UnknownElement(symbol.to_string()))
}

/// Canonical capitalization, e.g. `LI` -> `Li`.
pub fn canonical_symbol(symbol: &str) -> Result<&'static str> {
    Ok(ELEMENTS[atomic_number(symbol)? as usize - 1])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bohr,
    Angstrom,
}

impl Units {
    pub fn to_bohr(self) -> f64 {
        match self {
            Units::Bohr => 1.0,
            Units::Angstrom => BOHR_PER_ANGSTROM,
        }
    }
}

impl std::str::FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bohr" | "au" | "a.u." => Ok(Units::Bohr),
            "angstrom" | "ang" | "a" => Ok(Units::Angstrom),
            _ => Err(Error::Invalid(format!("unknown length unit `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub symbol: String,
    pub charge: f64,
    /// Bohr.
    pub position: [f64; 3],
}

/// Fixed point nuclei.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NuclearField {
    pub nuclei: Vec<Nucleus>,
}

impl NuclearField {
    pub fn new(nuclei: Vec<Nucleus>) -> Result<Self> {
        for n in &nuclei {
            if !(n.charge > 0.0) || n.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!(
                    "nucleus {} needs positive charge and finite position",
                    n.symbol
                )));
            }
        }
        Ok(Self { nuclei })
    }

    /// Build from element symbols and positions in bohr.
    pub fn from_atoms(atoms: &[(&str, [f64; 3])]) -> Result<Self> {
        let nuclei = atoms
            .iter()
            .map(|&(s, position)| {
                Ok(Nucleus {
                    symbol: canonical_symbol(s)?.to_string(),
                    charge: atomic_number(s)? as f64,
                    position,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nuclei)
    }

    /// Linear chain of `n` atoms along z at `0, spacing, 2·spacing, …`.
    pub fn chain(symbol: &str, n: usize, spacing: f64) -> Result<Self> {
        let atoms: Vec<(&str, [f64; 3])> =
            (0..n).map(|i| (symbol, [0.0, 0.0, i as f64 * spacing])).collect();
        Self::from_atoms(&atoms)
    }

    pub fn point_charges(&self) -> Vec<([f64; 3], f64)> {
        self.nuclei.iter().map(|n| (n.position, n.charge)).collect()
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.nuclei.iter().enumerate() {
            for b in &self.nuclei[..i] {
                let r = (0..3)
                    .map(|k| (a.position[k] - b.position[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                e += a.charge * b.charge / r;
            }
        }
        e
    }

    /// Electron count for the given total charge.
    pub fn n_electrons(&self, charge: i32) -> Result<usize> {
        let z: f64 = self.nuclei.iter().map(|n| n.charge).sum();
        let n = z.round() as i64 - charge as i64;
        if n < 0 {
            return Err(Error::Electrons(format!("charge {charge} leaves {n} electrons")));
        }
        Ok(n as usize)
    }

    pub fn translated(&self, shift: [f64; 3]) -> Self {
        let mut out = self.clone();
        for n in &mut out.nuclei {
            for k in 0..3 {
                n.position[k] += shift[k];
            }
        }
        out
    }
}

/// Parse XYZ text: count line, comment line, then `symbol x y z` rows.
pub fn parse_xyz(text: &str, units: Units) -> Result<NuclearField> {
    let mut lines = text.lines().enumerate();
    let (ln, first) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(Error::Parse { line: 1, msg: "empty XYZ input".into() })?;
    let count: usize = first
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad atom count `{}`", first.trim()) })?;
    lines.next(); // comment
    let f = units.to_bohr();
    let mut nuclei = Vec::with_capacity(count);
    for (i, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 4 {
            return Err(Error::Parse { line: i + 1, msg: "expected `symbol x y z`".into() });
        }
        let mut pos = [0.0; 3];
        for k in 0..3 {
            pos[k] = toks[k + 1].parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad coordinate `{}`", toks[k + 1]),
            })? * f;
        }
        nuclei.push(Nucleus {
            symbol: canonical_symbol(toks[0])?.to_string(),
            charge: atomic_number(toks[0])? as f64,
            position: pos,
        });
    }
    if nuclei.len() != count {
        return Err(Error::Parse {
            line: ln + 1,
            msg: format!("header declares {count} atoms, found {}", nuclei.len()),
        });
    }
    NuclearField::new(nuclei)
}
