//! Integrals over unnormalized Cartesian Gaussian primitives.

use std::f64::consts::PI;

use super::hermite::{HermiteE, HermiteR};

/// Gaussian-product prefactors below this are treated as zero.
pub const PAIR_SCREEN: f64 = 1e-14;

/// Unnormalized Cartesian Gaussian `(x-X)^i (y-Y)^j (z-Z)^k exp(-α|r-R|²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub alpha: f64,
    pub ang: [u32; 3],
    pub center: [f64; 3],
}

impl Gaussian {
    pub fn l(&self) -> usize {
        (self.ang[0] + self.ang[1] + self.ang[2]) as usize
    }

    /// Bitwise identity key, for deduplication.
    pub fn key(&self) -> ([u64; 4], [u32; 3]) {
        (
            [
                self.alpha.to_bits(),
                self.center[0].to_bits(),
                self.center[1].to_bits(),
                self.center[2].to_bits(),
            ],
            self.ang,
        )
    }

    pub fn value_at(&self, r: [f64; 3]) -> f64 {
        let mut poly = 1.0;
        let mut r2 = 0.0;
        for a in 0..3 {
            let d = r[a] - self.center[a];
            poly *= d.powi(self.ang[a] as i32);
            r2 += d * d;
        }
        poly * (-self.alpha * r2).exp()
    }
}

/// Gaussian-product data for a primitive pair, shared by every integral kind.
#[derive(Clone, Debug)]
pub struct PairData {
    pub p: f64,
    pub center: [f64; 3],
    pub l: usize,
    pub negligible: bool,
    pub overlap: f64,
    pub kinetic: f64,
    /// Nonzero products `E^x_t E^y_u E^z_v`.
    pub hermite: Vec<(u8, u8, u8, f64)>,
}

impl PairData {
    pub fn new(a: &Gaussian, b: &Gaussian) -> Self {
        let p = a.alpha + b.alpha;
        let center: [f64; 3] =
            std::array::from_fn(|k| (a.alpha * a.center[k] + b.alpha * b.center[k]) / p);
        let l = a.l() + b.l();
        let mut ab2 = 0.0;
        for k in 0..3 {
            let d = a.center[k] - b.center[k];
            ab2 += d * d;
        }
        let kab = (-a.alpha * b.alpha / p * ab2).exp();
        if kab < PAIR_SCREEN {
            return Self {
                p,
                center,
                l,
                negligible: true,
                overlap: 0.0,
                kinetic: 0.0,
                hermite: Vec::new(),
            };
        }
        let e: [HermiteE; 3] = std::array::from_fn(|k| {
            HermiteE::new(
                a.ang[k] as usize,
                b.ang[k] as usize + 2,
                a.alpha,
                b.alpha,
                a.center[k] - b.center[k],
            )
        });
        let sq = (PI / p).sqrt();
        let bexp = b.alpha;
        let mut s1 = [0.0; 3];
        let mut t1 = [0.0; 3];
        for k in 0..3 {
            let i = a.ang[k] as usize;
            let j = b.ang[k] as usize;
            s1[k] = e[k].get(i, j, 0) * sq;
            let mut t = -2.0 * bexp * (2 * j + 1) as f64 * e[k].get(i, j, 0)
                + 4.0 * bexp * bexp * e[k].get(i, j + 2, 0);
            if j >= 2 {
                t += (j * (j - 1)) as f64 * e[k].get(i, j - 2, 0);
            }
            t1[k] = -0.5 * t * sq;
        }
        let overlap = s1[0] * s1[1] * s1[2];
        let kinetic = t1[0] * s1[1] * s1[2] + s1[0] * t1[1] * s1[2] + s1[0] * s1[1] * t1[2];

        let [ix, iy, iz] = a.ang.map(|v| v as usize);
        let [jx, jy, jz] = b.ang.map(|v| v as usize);
        let mut hermite = Vec::new();
        for t in 0..=ix + jx {
            let ex = e[0].get(ix, jx, t);
            if ex == 0.0 {
                continue;
            }
            for u in 0..=iy + jy {
                let ey = e[1].get(iy, jy, u);
                if ey == 0.0 {
                    continue;
                }
                for v in 0..=iz + jz {
                    let ez = e[2].get(iz, jz, v);
                    if ez == 0.0 {
                        continue;
                    }
                    hermite.push((t as u8, u as u8, v as u8, ex * ey * ez));
                }
            }
        }
        Self { p, center, l, negligible: false, overlap, kinetic, hermite }
    }

    /// `Σ_C -Z_C <a| 1/|r-C| |b>`.
    pub fn nuclear(&self, nuclei: &[([f64; 3], f64)], r: &mut HermiteR) -> f64 {
        if self.negligible {
            return 0.0;
        }
        let mut total = 0.0;
        for &(c, z) in nuclei {
            let pc = [self.center[0] - c[0], self.center[1] - c[1], self.center[2] - c[2]];
            r.compute(self.p, pc);
            let mut s = 0.0;
            for &(t, u, v, e) in &self.hermite {
                s += e * r.get(t as usize, u as usize, v as usize);
            }
            total -= z * s;
        }
        2.0 * PI / self.p * total
    }
}

/// Chemist-notation `(ab|cd)` from two pairs. `r` must have `lmax >= ab.l + cd.l`.
pub fn eri(ab: &PairData, cd: &PairData, r: &mut HermiteR) -> f64 {
    if ab.negligible || cd.negligible {
        return 0.0;
    }
    let p = ab.p;
    let q = cd.p;
    let alpha = p * q / (p + q);
    let pq = [
        ab.center[0] - cd.center[0],
        ab.center[1] - cd.center[1],
        ab.center[2] - cd.center[2],
    ];
    r.compute(alpha, pq);
    let mut s = 0.0;
    for &(t, u, v, e1) in &ab.hermite {
        let mut inner = 0.0;
        for &(tt, uu, vv, e2) in &cd.hermite {
            let val = e2 * r.get((t + tt) as usize, (u + uu) as usize, (v + vv) as usize);
            if (tt + uu + vv) % 2 == 1 {
                inner -= val;
            } else {
                inner += val;
            }
        }
        s += e1 * inner;
    }
    2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt()) * s
}

/// Scratch sized for any quartet of the given maximum primitive angular momentum.
pub fn r_scratch(max_prim_l: usize) -> HermiteR {
    HermiteR::new(4 * max_prim_l)
}
