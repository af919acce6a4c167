//! Parameterized basis sets: a graph plus functions that read its slots.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::gto::{make_cgto, make_mcgto, CgtoSlots, MixedContractedGTO};
use crate::error::{Error, Result};
use crate::integrals::Expansion;
use crate::pgraph::{GraphSpec, ParamGraph, SlotRole};

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

/// One contracted term of a basis function; parameters are slot names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    #[serde(default = "default_one")]
    pub weight: f64,
    pub ang: [u32; 3],
    pub center: [String; 3],
    pub alphas: Vec<String>,
    pub coeffs: Vec<String>,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub terms: Vec<TermSpec>,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

/// Serializable basis description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub graph: GraphSpec,
    pub functions: Vec<FunctionSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ResolvedTerm {
    pub weight: f64,
    pub ang: [u32; 3],
    pub slots: CgtoSlots,
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ResolvedFunction {
    pub terms: Vec<ResolvedTerm>,
    pub normalize: bool,
}

/// Realized basis at one set of theta values.
#[derive(Clone, Debug)]
pub struct BasisSet {
    spec: BasisSpec,
    graph: ParamGraph,
    resolved: Vec<ResolvedFunction>,
    theta: Vec<f64>,
    p: Vec<f64>,
    functions: Vec<MixedContractedGTO>,
}

impl BasisSet {
    pub fn from_spec(spec: BasisSpec) -> Result<Self> {
        let graph = ParamGraph::from_spec(&spec.graph)?;
        let resolved = resolve(&spec, &graph)?;
        let theta = graph.values();
        let mut b = Self { spec, graph, resolved, theta: Vec::new(), p: Vec::new(), functions: Vec::new() };
        b.realize(theta)?;
        Ok(b)
    }

    fn realize(&mut self, theta: Vec<f64>) -> Result<()> {
        let p = self.graph.eval(&theta)?;
        self.functions = self
            .resolved
            .iter()
            .map(|f| realize_function(f, &p))
            .collect::<Result<Vec<_>>>()?;
        self.theta = theta;
        self.p = p;
        Ok(())
    }

    /// Same structure at new theta values.
    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        let mut b = Self {
            spec: self.spec.clone(),
            graph: self.graph.with_values(theta)?,
            resolved: self.resolved.clone(),
            theta: Vec::new(),
            p: Vec::new(),
            functions: Vec::new(),
        };
        b.realize(theta.to_vec())?;
        Ok(b)
    }

    pub fn graph(&self) -> &ParamGraph {
        &self.graph
    }

    /// Freeze or free thetas; values are kept.
    pub fn set_frozen(&mut self, frozen: &[bool]) -> Result<()> {
        if frozen.len() != self.graph.n_theta() {
            return Err(Error::Dimension { expected: self.graph.n_theta(), got: frozen.len() });
        }
        for (i, &f) in frozen.iter().enumerate() {
            self.graph.set_frozen(i, f);
        }
        Ok(())
    }

    /// Free exactly the thetas that drive a slot of one of `roles`.
    pub fn free_by_role(&mut self, roles: &[SlotRole]) {
        let driven = self.graph.theta_roles();
        for (i, r) in driven.iter().enumerate() {
            let free = r.iter().any(|role| roles.contains(role));
            self.graph.set_frozen(i, !free);
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Slot values at the current theta.
    pub fn slot_values(&self) -> &[f64] {
        &self.p
    }

    pub fn functions(&self) -> &[MixedContractedGTO] {
        &self.functions
    }

    pub fn w(&self) -> usize {
        self.functions.len()
    }

    /// Total primitive count, shared parameters counted per use.
    pub fn n_gto(&self) -> usize {
        self.functions.iter().map(|f| f.n_prims()).sum()
    }

    pub fn expansions(&self) -> Vec<Expansion> {
        self.functions.iter().map(|f| f.expansion()).collect()
    }

    /// Slots each function reads.
    pub fn function_slots(&self, n: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.resolved[n]
            .terms
            .iter()
            .flat_map(|t| t.slots.center.iter().chain(&t.slots.alphas).chain(&t.slots.coeffs).copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Description with the current theta values and frozen flags.
    pub fn to_spec(&self) -> BasisSpec {
        BasisSpec { graph: self.graph.to_spec(), functions: self.spec.functions.clone() }
    }
}

fn resolve(spec: &BasisSpec, graph: &ParamGraph) -> Result<Vec<ResolvedFunction>> {
    let index: HashMap<&str, usize> =
        graph.slots().iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
    let lookup = |name: &str, want: &[SlotRole]| -> Result<usize> {
        let i = *index.get(name).ok_or_else(|| Error::UnknownId(name.to_string()))?;
        let role = graph.slots()[i].role;
        if !want.contains(&role) {
            return Err(Error::Graph(format!("slot `{name}` has role {role}, expected {}", want[0])));
        }
        Ok(i)
    };
    if spec.functions.is_empty() {
        return Err(Error::Orbital("basis has no functions".into()));
    }
    spec.functions
        .iter()
        .map(|f| {
            if f.terms.is_empty() {
                return Err(Error::Orbital("basis function without terms".into()));
            }
            let terms = f
                .terms
                .iter()
                .map(|t| {
                    if t.alphas.len() != t.coeffs.len() {
                        return Err(Error::Orbital(format!(
                            "{} exponents but {} contraction coefficients",
                            t.alphas.len(),
                            t.coeffs.len()
                        )));
                    }
                    let center = [
                        lookup(&t.center[0], &[SlotRole::X, SlotRole::Other])?,
                        lookup(&t.center[1], &[SlotRole::Y, SlotRole::Other])?,
                        lookup(&t.center[2], &[SlotRole::Z, SlotRole::Other])?,
                    ];
                    let alphas = t
                        .alphas
                        .iter()
                        .map(|a| lookup(a, &[SlotRole::Alpha]))
                        .collect::<Result<Vec<_>>>()?;
                    let coeffs = t
                        .coeffs
                        .iter()
                        .map(|a| lookup(a, &[SlotRole::Coeff, SlotRole::Other]))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(ResolvedTerm {
                        weight: t.weight,
                        ang: t.ang,
                        slots: CgtoSlots { center, alphas, coeffs },
                        normalize: t.normalize,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ResolvedFunction { terms, normalize: f.normalize })
        })
        .collect()
}

fn realize_function(f: &ResolvedFunction, p: &[f64]) -> Result<MixedContractedGTO> {
    let mut terms = Vec::with_capacity(f.terms.len());
    let mut weights = Vec::with_capacity(f.terms.len());
    for t in &f.terms {
        let center = t.slots.center.map(|i| p[i]);
        let alphas: Vec<f64> = t.slots.alphas.iter().map(|&i| p[i]).collect();
        let coeffs: Vec<f64> = t.slots.coeffs.iter().map(|&i| p[i]).collect();
        let mut c = make_cgto(center, &alphas, &coeffs, t.ang, t.normalize)?;
        c.slots = Some(t.slots.clone());
        terms.push(c);
        weights.push(t.weight);
    }
    make_mcgto(terms, &weights, f.normalize)
}
