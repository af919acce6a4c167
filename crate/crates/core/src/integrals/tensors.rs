//! Assembly of S, A and B over contracted functions.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::prim::{eri, r_scratch, Gaussian, PairData};
use crate::basis::NuclearField;
use crate::error::{Error, Result};

/// Smallest admissible overlap eigenvalue.
pub const LINDEP_THRESHOLD: f64 = 1e-10;

/// A function written as a linear combination of unnormalized primitives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion {
    pub terms: Vec<(f64, Gaussian)>,
}

impl Expansion {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_l(&self) -> usize {
        self.terms.iter().map(|(_, g)| g.l()).max().unwrap_or(0)
    }

    pub fn value_at(&self, r: [f64; 3]) -> f64 {
        self.terms.iter().map(|(c, g)| c * g.value_at(r)).sum()
    }
}

#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

#[inline]
pub fn n_pairs(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Two-electron integrals `(ij|kl)` stored once per permutation class.
#[derive(Clone, Debug, PartialEq)]
pub struct EriTensor {
    n: usize,
    data: Vec<f64>,
}

impl EriTensor {
    pub fn zeros(n: usize) -> Self {
        let np = n_pairs(n);
        Self { n, data: vec![0.0; n_pairs(np)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(i: usize, j: usize, k: usize, l: usize) -> usize {
        pair_index(pair_index(i, j), pair_index(k, l))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[Self::index(i, j, k, l)]
    }

    pub fn unique(&self) -> &[f64] {
        &self.data
    }

    /// Full `n⁴` array, index `((i n + j) n + k) n + l`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[((i * n + j) * n + k) * n + l] = self.get(i, j, k, l);
                    }
                }
            }
        }
        out
    }

    /// Canonical `(i, j, k, l)` with `i >= j`, `k >= l`, `ij >= kl`, in storage order.
    pub fn canonical_indices(n: usize) -> Vec<[usize; 4]> {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
        let mut out = Vec::with_capacity(n_pairs(pairs.len()));
        for (p, &(i, j)) in pairs.iter().enumerate() {
            for &(k, l) in &pairs[..=p] {
                out.push([i, j, k, l]);
            }
        }
        out
    }
}

/// Overlap, one-electron (kinetic + nuclear attraction) and two-electron tensors.
#[derive(Clone, Debug)]
pub struct IntegralTensors {
    pub overlap: DMatrix<f64>,
    pub core: DMatrix<f64>,
    pub eri: EriTensor,
}

impl IntegralTensors {
    pub fn dim(&self) -> usize {
        self.overlap.nrows()
    }

    /// Flat dumps of S, A and unique B: 1-based indices, 15 significant digits.
    pub fn dump(&self) -> (String, String, String) {
        let n = self.dim();
        let mut s = String::new();
        let mut a = String::new();
        for i in 0..n {
            for j in 0..=i {
                let _ = writeln!(s, "{} {} {:.14e}", i + 1, j + 1, self.overlap[(i, j)]);
                let _ = writeln!(a, "{} {} {:.14e}", i + 1, j + 1, self.core[(i, j)]);
            }
        }
        let mut b = String::new();
        for (idx, [i, j, k, l]) in EriTensor::canonical_indices(n).into_iter().enumerate() {
            let _ = writeln!(b, "{} {} {} {} {:.14e}", i + 1, j + 1, k + 1, l + 1, self.eri.data[idx]);
        }
        (s, a, b)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Evaluate each distinct primitive quartet once and reuse it.
    pub dedup: bool,
    /// Report overlap linear dependence as an error.
    pub check_lindep: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { dedup: true, check_lindep: true }
    }
}

/// Distinct primitives plus each function's (primitive, coefficient) list.
struct PrimTable {
    prims: Vec<Gaussian>,
    funcs: Vec<Vec<(usize, f64)>>,
}

impl PrimTable {
    fn new<'a>(funcs: impl IntoIterator<Item = &'a Expansion>) -> Self {
        let mut prims = Vec::new();
        let mut lookup = HashMap::new();
        let mut out = Vec::new();
        for f in funcs {
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(f.terms.len());
            for (c, g) in &f.terms {
                let id = *lookup.entry(g.key()).or_insert_with(|| {
                    prims.push(*g);
                    prims.len() - 1
                });
                match terms.iter_mut().find(|(p, _)| *p == id) {
                    Some(t) => t.1 += c,
                    None => terms.push((id, *c)),
                }
            }
            out.push(terms);
        }
        Self { prims, funcs: out }
    }

    fn max_l(&self) -> usize {
        self.prims.iter().map(|g| g.l()).max().unwrap_or(0)
    }

    /// Merged primitive-pair expansion of the product of functions `a` and `b`.
    fn pair_terms(&self, a: usize, b: usize) -> Vec<(usize, f64)> {
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for &(i, ci) in &self.funcs[a] {
            for &(j, cj) in &self.funcs[b] {
                acc.push((pair_index(i, j), ci * cj));
            }
        }
        acc.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
        for (p, c) in acc {
            match out.last_mut() {
                Some(last) if last.0 == p => last.1 += c,
                _ => out.push((p, c)),
            }
        }
        out
    }
}

fn canonical_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect()
}

fn pair_table(prims: &[Gaussian]) -> Vec<PairData> {
    canonical_pairs(prims.len())
        .par_iter()
        .map(|&(i, j)| PairData::new(&prims[i], &prims[j]))
        .collect()
}

fn one_electron(
    table: &PrimTable,
    pairs: &[PairData],
    nuclei: &[([f64; 3], f64)],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = table.funcs.len();
    let lmax = 2 * table.max_l();
    let prim_nuc: Vec<f64> = pairs
        .par_iter()
        .map_init(|| super::hermite::HermiteR::new(lmax), |r, pd| pd.nuclear(nuclei, r))
        .collect();
    let vals: Vec<(f64, f64)> = canonical_pairs(n)
        .par_iter()
        .map(|&(a, b)| {
            let mut s = 0.0;
            let mut h = 0.0;
            for (p, c) in table.pair_terms(a, b) {
                s += c * pairs[p].overlap;
                h += c * (pairs[p].kinetic + prim_nuc[p]);
            }
            (s, h)
        })
        .collect();
    let mut s = DMatrix::zeros(n, n);
    let mut h = DMatrix::zeros(n, n);
    for (&(a, b), &(sv, hv)) in canonical_pairs(n).iter().zip(&vals) {
        s[(a, b)] = sv;
        s[(b, a)] = sv;
        h[(a, b)] = hv;
        h[(b, a)] = hv;
    }
    (s, h)
}

/// Build S, A and B for `funcs` in the field of `field`.
pub fn build_tensors_with(
    funcs: &[Expansion],
    field: &NuclearField,
    opts: BuildOptions,
) -> Result<IntegralTensors> {
    let n = funcs.len();
    if n == 0 {
        return Err(Error::Invalid("empty basis".into()));
    }
    let table = PrimTable::new(funcs);
    let pairs = pair_table(&table.prims);
    let nuclei = field.point_charges();
    let (overlap, core) = one_electron(&table, &pairs, &nuclei);

    if opts.check_lindep {
        let min = SymmetricEigen::new(overlap.clone()).eigenvalues.min();
        if !(min >= LINDEP_THRESHOLD) {
            return Err(Error::LinearDependence(min));
        }
    }

    let fpairs: Vec<Vec<(usize, f64)>> =
        canonical_pairs(n).iter().map(|&(a, b)| table.pair_terms(a, b)).collect();
    let lmax = 4 * table.max_l();

    let quartet = |p: usize, q: usize, r: &mut super::hermite::HermiteR| -> f64 {
        if p >= q {
            eri(&pairs[p], &pairs[q], r)
        } else {
            eri(&pairs[q], &pairs[p], r)
        }
    };

    let cache: Option<Vec<f64>> = if opts.dedup {
        // only primitive pairs that occur in some function pair
        let mut used = vec![false; pairs.len()];
        for fp in &fpairs {
            for &(p, _) in fp {
                used[p] = true;
            }
        }
        let rows: Vec<Vec<f64>> = (0..pairs.len())
            .into_par_iter()
            .map_init(
                || r_scratch(table.max_l()),
                |r, p| {
                    if !used[p] {
                        return vec![0.0; p + 1];
                    }
                    (0..=p).map(|q| if used[q] { quartet(p, q, r) } else { 0.0 }).collect()
                },
            )
            .collect();
        Some(rows.into_iter().flatten().collect())
    } else {
        None
    };

    let data: Vec<f64> = EriTensor::canonical_indices(n)
        .par_iter()
        .map_init(
            || super::hermite::HermiteR::new(lmax),
            |r, &[i, j, k, l]| {
                let ab = &fpairs[pair_index(i, j)];
                let cd = &fpairs[pair_index(k, l)];
                let mut s = 0.0;
                for &(p, cp) in ab {
                    let mut inner = 0.0;
                    for &(q, cq) in cd {
                        let v = match &cache {
                            Some(c) => c[pair_index(p, q)],
                            None => quartet(p, q, r),
                        };
                        inner += cq * v;
                    }
                    s += cp * inner;
                }
                s
            },
        )
        .collect();

    Ok(IntegralTensors { overlap, core, eri: EriTensor { n, data } })
}

pub fn build_tensors(funcs: &[Expansion], field: &NuclearField) -> Result<IntegralTensors> {
    build_tensors_with(funcs, field, BuildOptions::default())
}

/// Integrals with one index on `left` and the rest on `right`:
/// `⟨l|r⟩`, `⟨l|h|r⟩`, and `(l r₁|r₂ r₃)`.
#[derive(Clone, Debug)]
pub struct MixedTensors {
    pub n_left: usize,
    pub n_right: usize,
    pub overlap: DMatrix<f64>,
    pub core: DMatrix<f64>,
    /// Index `(k * n_right + j) * n_pairs(n_right) + pair_index(c, d)`.
    pub eri: Vec<f64>,
}

impl MixedTensors {
    #[inline]
    pub fn eri_at(&self, k: usize, j: usize, c: usize, d: usize) -> f64 {
        self.eri[(k * self.n_right + j) * n_pairs(self.n_right) + pair_index(c, d)]
    }
}

pub fn mixed_tensors(left: &[Expansion], right: &[Expansion], field: &NuclearField) -> MixedTensors {
    let nl = left.len();
    let nr = right.len();
    let rt = PrimTable::new(right);
    let lt = PrimTable::new(left);
    let nuclei = field.point_charges();
    let lmax_r = rt.max_l();
    let lmax_l = lt.max_l();
    let rpairs = pair_table(&rt.prims);
    let npr = n_pairs(nr);
    let fpairs: Vec<Vec<(usize, f64)>> =
        canonical_pairs(nr).iter().map(|&(a, b)| rt.pair_terms(a, b)).collect();

    let mut used = vec![false; rpairs.len()];
    for fp in &fpairs {
        for &(q, _) in fp {
            used[q] = true;
        }
    }

    // Per left primitive u: one-electron row over right functions, and
    // Y[u][j][cd] = Σ_b c_jb Σ_Q c_Q (u b|Q).
    struct Row {
        s: Vec<f64>,
        h: Vec<f64>,
        y: Vec<f64>,
    }
    let rows: Vec<Row> = lt
        .prims
        .par_iter()
        .map_init(
            || {
                (
                    super::hermite::HermiteR::new(lmax_l + lmax_r),
                    super::hermite::HermiteR::new(lmax_l + 3 * lmax_r),
                )
            },
            |(r1, r2), u| {
                let ub: Vec<PairData> = rt.prims.iter().map(|b| PairData::new(u, b)).collect();
                let mut s = vec![0.0; nr];
                let mut h = vec![0.0; nr];
                let mut y = vec![0.0; nr * npr];
                let nuc: Vec<f64> = ub.iter().map(|pd| pd.nuclear(&nuclei, r1)).collect();
                // (u b|Q) for every right primitive b and used right pair Q
                let mut t = vec![0.0; rt.prims.len() * rpairs.len()];
                for (b, pd) in ub.iter().enumerate() {
                    if pd.negligible {
                        continue;
                    }
                    for (q, qd) in rpairs.iter().enumerate() {
                        if used[q] {
                            t[b * rpairs.len() + q] = eri(pd, qd, r2);
                        }
                    }
                }
                for j in 0..nr {
                    for &(b, cb) in &rt.funcs[j] {
                        s[j] += cb * ub[b].overlap;
                        h[j] += cb * (ub[b].kinetic + nuc[b]);
                        let trow = &t[b * rpairs.len()..(b + 1) * rpairs.len()];
                        for (cd, fp) in fpairs.iter().enumerate() {
                            let mut acc = 0.0;
                            for &(q, cq) in fp {
                                acc += cq * trow[q];
                            }
                            y[j * npr + cd] += cb * acc;
                        }
                    }
                }
                Row { s, h, y }
            },
        )
        .collect();

    let mut overlap = DMatrix::zeros(nl, nr);
    let mut core = DMatrix::zeros(nl, nr);
    let mut eri_out = vec![0.0; nl * nr * npr];
    for k in 0..nl {
        for &(u, w) in &lt.funcs[k] {
            let row = &rows[u];
            for j in 0..nr {
                overlap[(k, j)] += w * row.s[j];
                core[(k, j)] += w * row.h[j];
            }
            let dst = &mut eri_out[k * nr * npr..(k + 1) * nr * npr];
            for (d, v) in dst.iter_mut().zip(&row.y) {
                *d += w * v;
            }
        }
    }
    MixedTensors { n_left: nl, n_right: nr, overlap, core, eri: eri_out }
}
