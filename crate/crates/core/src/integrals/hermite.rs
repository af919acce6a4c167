//! McMurchie–Davidson Hermite expansion coefficients and Hermite Coulomb
//! integrals.

use super::boys::boys_into;

/// `E^{ij}_t` for one Cartesian axis, `i <= imax`, `j <= jmax`,
/// `t <= i + j`, including the `exp(-μ X_AB²)` prefactor.
#[derive(Clone, Debug)]
pub struct HermiteE {
    jmax: usize,
    tdim: usize,
    data: Vec<f64>,
}

impl HermiteE {
    pub fn new(imax: usize, jmax: usize, a: f64, b: f64, x_ab: f64) -> Self {
        let p = a + b;
        let mu = a * b / p;
        let x_pa = -b / p * x_ab;
        let x_pb = a / p * x_ab;
        let inv2p = 0.5 / p;
        let tdim = imax + jmax + 1;
        let mut e = Self { jmax, tdim, data: vec![0.0; (imax + 1) * (jmax + 1) * tdim] };
        let k = (-mu * x_ab * x_ab).exp();
        let idx = |i: usize, j: usize, t: usize| (i * (jmax + 1) + j) * tdim + t;
        e.data[idx(0, 0, 0)] = k;
        for i in 0..imax {
            for t in 0..=i + 1 {
                let mut v = 0.0;
                if t > 0 {
                    v += inv2p * e.data[idx(i, 0, t - 1)];
                }
                if t <= i {
                    v += x_pa * e.data[idx(i, 0, t)];
                }
                if t + 1 <= i {
                    v += (t + 1) as f64 * e.data[idx(i, 0, t + 1)];
                }
                e.data[idx(i + 1, 0, t)] = v;
            }
        }
        for i in 0..=imax {
            for j in 0..jmax {
                for t in 0..=i + j + 1 {
                    let mut v = 0.0;
                    if t > 0 {
                        v += inv2p * e.data[idx(i, j, t - 1)];
                    }
                    if t <= i + j {
                        v += x_pb * e.data[idx(i, j, t)];
                    }
                    if t + 1 <= i + j {
                        v += (t + 1) as f64 * e.data[idx(i, j, t + 1)];
                    }
                    e.data[idx(i, j + 1, t)] = v;
                }
            }
        }
        e
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        if t > i + j {
            return 0.0;
        }
        self.data[(i * (self.jmax + 1) + j) * self.tdim + t]
    }
}

/// Hermite Coulomb integrals `R_{tuv}` (order n = 0) for `t + u + v <= lmax`.
pub struct HermiteR {
    dim: usize,
    lmax: usize,
    work: Vec<f64>,
    boys: Vec<f64>,
}

impl HermiteR {
    pub fn new(lmax: usize) -> Self {
        let dim = lmax + 1;
        Self { dim, lmax, work: vec![0.0; dim * dim * dim * dim], boys: vec![0.0; dim] }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    fn at(&self, n: usize, t: usize, u: usize, v: usize) -> usize {
        ((n * self.dim + t) * self.dim + u) * self.dim + v
    }

    /// Compute the table for exponent `alpha` and separation `pc = P - C`.
    pub fn compute(&mut self, alpha: f64, pc: [f64; 3]) {
        let l = self.lmax;
        let r2 = pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2];
        boys_into(alpha * r2, &mut self.boys);
        let mut f = 1.0;
        for n in 0..=l {
            let i = self.at(n, 0, 0, 0);
            self.work[i] = f * self.boys[n];
            f *= -2.0 * alpha;
        }
        let [x, y, z] = pc;
        for t in 1..=l {
            for n in 0..=l - t {
                let mut v = x * self.work[self.at(n + 1, t - 1, 0, 0)];
                if t >= 2 {
                    v += (t - 1) as f64 * self.work[self.at(n + 1, t - 2, 0, 0)];
                }
                let i = self.at(n, t, 0, 0);
                self.work[i] = v;
            }
        }
        for u in 1..=l {
            for t in 0..=l - u {
                for n in 0..=l - t - u {
                    let mut v = y * self.work[self.at(n + 1, t, u - 1, 0)];
                    if u >= 2 {
                        v += (u - 1) as f64 * self.work[self.at(n + 1, t, u - 2, 0)];
                    }
                    let i = self.at(n, t, u, 0);
                    self.work[i] = v;
                }
            }
        }
        for v in 1..=l {
            for t in 0..=l - v {
                for u in 0..=l - v - t {
                    for n in 0..=l - t - u - v {
                        let mut r = z * self.work[self.at(n + 1, t, u, v - 1)];
                        if v >= 2 {
                            r += (v - 1) as f64 * self.work[self.at(n + 1, t, u, v - 2)];
                        }
                        let i = self.at(n, t, u, v);
                        self.work[i] = r;
                    }
                }
            }
        }
    }

    #[inline]
    pub fn get(&self, t: usize, u: usize, v: usize) -> f64 {
        self.work[((t * self.dim) + u) * self.dim + v]
    }
}
