//! Parameter-correlation graph.
//!
//! Free real variables (`thetas`) feed small differentiable mapping functions
//! whose outputs are the concrete orbital parameters (`slots`): exponents,
//! contraction coefficients and center coordinates. Several slots may hang off
//! one variable, which is how shared exponents, mirrored centers and grid
//! spacings are expressed. Slots may also take other slots as inputs, so maps
//! compose; the graph must stay acyclic.
//!
//! [`GraphSpec`] is the mutable, string-keyed form used by builders and by the
//! JSON run configuration. [`ParamGraph`] is the validated, index-resolved form
//! used for evaluation and differentiation.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A primitive real variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamNode {
    pub id: String,
    pub value: f64,
    #[serde(default)]
    pub frozen: bool,
}

/// What an orbital-parameter slot controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRole {
    Alpha,
    #[serde(rename = "d")]
    Coeff,
    X,
    Y,
    Z,
    /// Intermediate slot not read by any orbital directly.
    Other,
}

impl SlotRole {
    pub fn is_center(self) -> bool {
        matches!(self, SlotRole::X | SlotRole::Y | SlotRole::Z)
    }

    pub fn axis(axis: usize) -> SlotRole {
        [SlotRole::X, SlotRole::Y, SlotRole::Z][axis]
    }
}

impl fmt::Display for SlotRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SlotRole::Alpha => "alpha",
            SlotRole::Coeff => "d",
            SlotRole::X => "x",
            SlotRole::Y => "y",
            SlotRole::Z => "z",
            SlotRole::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MappingKind {
    Identity,
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
    Negate,
    Exp,
    Product,
    Sum,
}

impl MappingKind {
    fn name(&self) -> &'static str {
        match self {
            MappingKind::Identity => "identity",
            MappingKind::Affine { .. } => "affine",
            MappingKind::Negate => "negate",
            MappingKind::Exp => "exp",
            MappingKind::Product => "product",
            MappingKind::Sum => "sum",
        }
    }

    fn from_parts(kind: &str, constants: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if constants.len() != n {
                return Err(Error::Graph(format!(
                    "mapping `{kind}` takes {n} constants, got {}",
                    constants.len()
                )));
            }
            Ok(())
        };
        let k = match kind {
            "identity" => {
                want(0)?;
                MappingKind::Identity
            }
            "affine" => {
                want(2)?;
                MappingKind::Affine { scale: constants[0], shift: constants[1] }
            }
            "negate" => {
                want(0)?;
                MappingKind::Negate
            }
            "exp" => {
                want(0)?;
                MappingKind::Exp
            }
            "product" => {
                want(0)?;
                MappingKind::Product
            }
            "sum" => {
                want(0)?;
                MappingKind::Sum
            }
            other => return Err(Error::Graph(format!("unknown mapping kind `{other}`"))),
        };
        Ok(k)
    }

    fn constants(&self) -> Vec<f64> {
        match *self {
            MappingKind::Affine { scale, shift } => vec![scale, shift],
            _ => Vec::new(),
        }
    }

    fn check_arity(&self, n: usize) -> bool {
        match self {
            MappingKind::Product | MappingKind::Sum => n >= 1,
            _ => n == 1,
        }
    }

    fn apply(&self, x: &[f64]) -> f64 {
        match *self {
            MappingKind::Identity => x[0],
            MappingKind::Affine { scale, shift } => scale * x[0] + shift,
            MappingKind::Negate => -x[0],
            MappingKind::Exp => x[0].exp(),
            MappingKind::Product => x.iter().product(),
            MappingKind::Sum => x.iter().sum(),
        }
    }

    /// Partial derivative of the map with respect to input `k` at `x`.
    fn partial(&self, x: &[f64], k: usize) -> f64 {
        match *self {
            MappingKind::Identity | MappingKind::Sum => 1.0,
            MappingKind::Affine { scale, .. } => scale,
            MappingKind::Negate => -1.0,
            MappingKind::Exp => x[0].exp(),
            MappingKind::Product => x
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, v)| v)
                .product(),
        }
    }
}

/// Serialized slot: `{slot, kind, inputs, constants}` plus the slot role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub slot: String,
    pub role: SlotRole,
    pub kind: String,
    pub inputs: Vec<String>,
    #[serde(default)]
    pub constants: Vec<f64>,
}

/// String-keyed graph description. Inputs resolve to a theta of that id if
/// one exists, otherwise to a slot of that name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub thetas: Vec<ParamNode>,
    pub slots: Vec<SlotSpec>,
}

impl GraphSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_theta(&mut self, id: impl Into<String>, value: f64) -> String {
        let id = id.into();
        self.thetas.push(ParamNode { id: id.clone(), value, frozen: false });
        id
    }

    pub fn add_slot(
        &mut self,
        slot: impl Into<String>,
        role: SlotRole,
        kind: MappingKind,
        inputs: &[&str],
    ) -> String {
        let slot = slot.into();
        self.slots.push(SlotSpec {
            slot: slot.clone(),
            role,
            kind: kind.name().to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            constants: kind.constants(),
        });
        slot
    }

    /// A slot driven one-to-one by a fresh theta of the same name.
    pub fn add_free(&mut self, name: &str, role: SlotRole, value: f64) -> String {
        self.add_theta(name, value);
        self.add_slot(name, role, MappingKind::Identity, &[name])
    }

    pub fn theta(&self, id: &str) -> Option<&ParamNode> {
        self.thetas.iter().find(|t| t.id == id)
    }

    pub fn theta_mut(&mut self, id: &str) -> Option<&mut ParamNode> {
        self.thetas.iter_mut().find(|t| t.id == id)
    }

    /// Replace the mapping of an existing slot, keeping its role.
    pub fn rewire(&mut self, slot: &str, kind: &str, inputs: &[String], constants: &[f64]) -> Result<()> {
        MappingKind::from_parts(kind, constants)?;
        let s = self
            .slots
            .iter_mut()
            .find(|s| s.slot == slot)
            .ok_or_else(|| Error::UnknownId(slot.to_string()))?;
        s.kind = kind.to_string();
        s.inputs = inputs.to_vec();
        s.constants = constants.to_vec();
        Ok(())
    }

    /// Drop thetas no slot reads.
    pub fn prune_unused_thetas(&mut self) {
        let used: std::collections::HashSet<&str> = self
            .slots
            .iter()
            .flat_map(|s| s.inputs.iter().map(String::as_str))
            .collect();
        let keep: Vec<ParamNode> = self
            .thetas
            .iter()
            .filter(|t| used.contains(t.id.as_str()))
            .cloned()
            .collect();
        self.thetas = keep;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRef {
    Theta(usize),
    Slot(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedSlot {
    pub name: String,
    pub role: SlotRole,
    pub kind: MappingKind,
    pub inputs: Vec<NodeRef>,
}

/// Validated, immutable parameter graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGraph {
    thetas: Vec<ParamNode>,
    slots: Vec<DerivedSlot>,
    order: Vec<usize>,
    slot_index: HashMap<String, usize>,
}

impl ParamGraph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let mut theta_index = HashMap::new();
        for (i, t) in spec.thetas.iter().enumerate() {
            if theta_index.insert(t.id.clone(), i).is_some() {
                return Err(Error::Graph(format!("duplicate parameter id `{}`", t.id)));
            }
            if !t.value.is_finite() {
                return Err(Error::Graph(format!("parameter `{}` is not finite", t.id)));
            }
        }
        let mut slot_index = HashMap::new();
        for (i, s) in spec.slots.iter().enumerate() {
            if slot_index.insert(s.slot.clone(), i).is_some() {
                return Err(Error::Graph(format!("duplicate slot `{}`", s.slot)));
            }
        }
        let mut slots = Vec::with_capacity(spec.slots.len());
        for s in &spec.slots {
            let kind = MappingKind::from_parts(&s.kind, &s.constants)?;
            if !kind.check_arity(s.inputs.len()) {
                return Err(Error::Graph(format!(
                    "slot `{}`: mapping `{}` cannot take {} inputs",
                    s.slot,
                    s.kind,
                    s.inputs.len()
                )));
            }
            let inputs = s
                .inputs
                .iter()
                .map(|name| {
                    if let Some(&i) = theta_index.get(name) {
                        Ok(NodeRef::Theta(i))
                    } else if let Some(&i) = slot_index.get(name) {
                        Ok(NodeRef::Slot(i))
                    } else {
                        Err(Error::UnknownId(name.clone()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            slots.push(DerivedSlot { name: s.slot.clone(), role: s.role, kind, inputs });
        }
        let order = topo_order(&slots)?;
        Ok(Self { thetas: spec.thetas.clone(), slots, order, slot_index })
    }

    pub fn to_spec(&self) -> GraphSpec {
        let name_of = |r: &NodeRef| match *r {
            NodeRef::Theta(i) => self.thetas[i].id.clone(),
            NodeRef::Slot(i) => self.slots[i].name.clone(),
        };
        GraphSpec {
            thetas: self.thetas.clone(),
            slots: self
                .slots
                .iter()
                .map(|s| SlotSpec {
                    slot: s.name.clone(),
                    role: s.role,
                    kind: s.kind.name().to_string(),
                    inputs: s.inputs.iter().map(name_of).collect(),
                    constants: s.kind.constants(),
                })
                .collect(),
        }
    }

    pub fn thetas(&self) -> &[ParamNode] {
        &self.thetas
    }

    pub fn slots(&self) -> &[DerivedSlot] {
        &self.slots
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_id(&self, name: &str) -> Option<usize> {
        self.slot_index.get(name).copied()
    }

    pub fn theta_id(&self, id: &str) -> Option<usize> {
        self.thetas.iter().position(|t| t.id == id)
    }

    /// Current theta values as stored on the nodes.
    pub fn values(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| t.value).collect()
    }

    /// Indices of thetas not frozen, in theta order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.thetas.len()).filter(|&i| !self.thetas[i].frozen).collect()
    }

    /// Copy of the graph with new theta values.
    pub fn with_values(&self, theta: &[f64]) -> Result<Self> {
        self.check_len(theta)?;
        let mut g = self.clone();
        for (node, &v) in g.thetas.iter_mut().zip(theta) {
            node.value = v;
        }
        Ok(g)
    }

    pub fn set_frozen(&mut self, idx: usize, frozen: bool) {
        self.thetas[idx].frozen = frozen;
    }

    /// Roles of the slots each theta drives, directly or through other slots.
    pub fn theta_roles(&self) -> Vec<Vec<SlotRole>> {
        let mut out = vec![Vec::new(); self.thetas.len()];
        for (i, roles) in out.iter_mut().enumerate() {
            let reach = self.reach(i);
            for (j, s) in self.slots.iter().enumerate() {
                if reach[j] && s.role != SlotRole::Other && !roles.contains(&s.role) {
                    roles.push(s.role);
                }
            }
        }
        out
    }

    /// Slots structurally reachable from theta `i`.
    pub fn reach(&self, i: usize) -> Vec<bool> {
        let mut hit = vec![false; self.slots.len()];
        for &j in &self.order {
            hit[j] = self.slots[j].inputs.iter().any(|r| match *r {
                NodeRef::Theta(t) => t == i,
                NodeRef::Slot(s) => hit[s],
            });
        }
        hit
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.thetas.len() {
            return Err(Error::Dimension { expected: self.thetas.len(), got: theta.len() });
        }
        Ok(())
    }

    fn gather(&self, inputs: &[NodeRef], theta: &[f64], p: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(inputs.iter().map(|r| match *r {
            NodeRef::Theta(i) => theta[i],
            NodeRef::Slot(i) => p[i],
        }));
    }

    /// Evaluate every slot, in slot order.
    pub fn eval(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        let mut p = vec![0.0; self.slots.len()];
        let mut buf = Vec::new();
        for &j in &self.order {
            let s = &self.slots[j];
            self.gather(&s.inputs, theta, &p, &mut buf);
            p[j] = s.kind.apply(&buf);
        }
        for (s, &v) in self.slots.iter().zip(&p) {
            if s.role == SlotRole::Alpha && !(v > 0.0) {
                return Err(Error::NonPositiveExponent { slot: s.name.clone(), value: v });
            }
            if !v.is_finite() {
                return Err(Error::Graph(format!("slot `{}` evaluated to {v}", s.name)));
            }
        }
        Ok(p)
    }

    /// Evaluate at the stored theta values.
    pub fn eval_current(&self) -> Result<Vec<f64>> {
        self.eval(&self.values())
    }

    /// Forward-mode directional derivative: dp = J(theta) * dtheta.
    pub fn tangent(&self, theta: &[f64], dtheta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        self.check_len(dtheta)?;
        let p = self.eval_unchecked(theta);
        let mut dp = vec![0.0; self.slots.len()];
        let mut buf = Vec::new();
        for &j in &self.order {
            let s = &self.slots[j];
            self.gather(&s.inputs, theta, &p, &mut buf);
            dp[j] = s
                .inputs
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let d_in = match *r {
                        NodeRef::Theta(i) => dtheta[i],
                        NodeRef::Slot(i) => dp[i],
                    };
                    if d_in == 0.0 {
                        0.0
                    } else {
                        s.kind.partial(&buf, k) * d_in
                    }
                })
                .sum();
        }
        Ok(dp)
    }

    /// Column `i` of the slot Jacobian, dp/dtheta_i.
    pub fn column(&self, theta: &[f64], i: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.thetas.len()];
        e[i] = 1.0;
        self.tangent(theta, &e)
    }

    /// Reverse-mode pullback of slot sensitivities onto thetas. Frozen thetas
    /// receive 0.
    pub fn pullback_at(&self, theta: &[f64], de_dp: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        if de_dp.len() != self.slots.len() {
            return Err(Error::Dimension { expected: self.slots.len(), got: de_dp.len() });
        }
        let p = self.eval_unchecked(theta);
        let mut adj_p = de_dp.to_vec();
        let mut adj_t = vec![0.0; self.thetas.len()];
        let mut buf = Vec::new();
        for &j in self.order.iter().rev() {
            let a = adj_p[j];
            if a == 0.0 {
                continue;
            }
            let s = &self.slots[j];
            self.gather(&s.inputs, theta, &p, &mut buf);
            for (k, r) in s.inputs.iter().enumerate() {
                let c = a * s.kind.partial(&buf, k);
                match *r {
                    NodeRef::Theta(i) => adj_t[i] += c,
                    NodeRef::Slot(i) => adj_p[i] += c,
                }
            }
        }
        for (g, t) in adj_t.iter_mut().zip(&self.thetas) {
            if t.frozen {
                *g = 0.0;
            }
        }
        Ok(adj_t)
    }

    /// Pullback at the stored theta values.
    pub fn pullback(&self, de_dp: &[f64]) -> Result<Vec<f64>> {
        self.pullback_at(&self.values(), de_dp)
    }

    fn eval_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.slots.len()];
        let mut buf = Vec::new();
        for &j in &self.order {
            let s = &self.slots[j];
            self.gather(&s.inputs, theta, &p, &mut buf);
            p[j] = s.kind.apply(&buf);
        }
        p
    }
}

fn topo_order(slots: &[DerivedSlot]) -> Result<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; slots.len()];
    let mut order = Vec::with_capacity(slots.len());
    for root in 0..slots.len() {
        if mark[root] != Mark::New {
            continue;
        }
        // iterative DFS: (node, next input to visit)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let inputs = &slots[node].inputs;
            if *next < inputs.len() {
                let r = inputs[*next];
                *next += 1;
                if let NodeRef::Slot(dep) = r {
                    match mark[dep] {
                        Mark::Active => return Err(Error::Cycle(slots[dep].name.clone())),
                        Mark::New => {
                            mark[dep] = Mark::Active;
                            stack.push((dep, 0));
                        }
                        Mark::Done => {}
                    }
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Center slots for an `nx × ny × nz` box of `(nx+1)(ny+1)(nz+1)` grid points,
/// every coordinate an affine map of the single `spacing` theta, the box
/// centered on `origin`. Points are ordered x-major, z fastest.
pub fn grid_box(
    spec: &mut GraphSpec,
    prefix: &str,
    n: [usize; 3],
    spacing: &str,
    origin: [f64; 3],
) -> Result<Vec<[String; 3]>> {
    let l = spec
        .theta(spacing)
        .ok_or_else(|| Error::UnknownId(spacing.to_string()))?
        .value;
    if !(l > 0.0) {
        return Err(Error::Invalid(format!("grid spacing must be positive, got {l}")));
    }
    let mut out = Vec::new();
    let mut k = 0;
    for i in 0..=n[0] {
        for j in 0..=n[1] {
            for m in 0..=n[2] {
                let idx = [i, j, m];
                let names: [String; 3] = std::array::from_fn(|axis| {
                    let scale = idx[axis] as f64 - n[axis] as f64 / 2.0;
                    spec.add_slot(
                        format!("{prefix}{k}.{}", SlotRole::axis(axis)),
                        SlotRole::axis(axis),
                        MappingKind::Affine { scale, shift: origin[axis] },
                        &[spacing],
                    )
                });
                out.push(names);
                k += 1;
            }
        }
    }
    Ok(out)
}
