//! Packed two-electron integrals in chemists' notation.

use serde::{Deserialize, Serialize};

use crate::linalg::RMat;

#[inline]
fn pair(p: usize, r: usize) -> usize {
    if p >= r {
        p * (p + 1) / 2 + r
    } else {
        r * (r + 1) / 2 + p
    }
}

/// Canonical compound index of `(pr|qs)` under 8-fold permutational symmetry.
#[inline]
pub fn eri_index(p: usize, r: usize, q: usize, s: usize) -> usize {
    pair(pair(p, r), pair(q, s))
}

pub fn packed_len(n: usize) -> usize {
    let np = n * (n + 1) / 2;
    np * (np + 1) / 2
}

/// Real two-electron integrals `(pr|qs)` stored once per symmetry class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eri {
    n: usize,
    data: Vec<f64>,
}

impl Eri {
    pub fn zeros(n: usize) -> Self {
        Eri {
            n,
            data: vec![0.0; packed_len(n)],
        }
    }

    /// Wraps an already-packed buffer. Returns `None` on a length mismatch.
    pub fn from_packed(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == packed_len(n)).then_some(Eri { n, data })
    }

    /// Packs a dense `n^4` array (index order p, r, q, s). The caller is
    /// responsible for the array actually having 8-fold symmetry; see
    /// [`Eri::symmetry_violation`].
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let mut eri = Eri::zeros(n);
        for p in 0..n {
            for r in 0..=p {
                for q in 0..n {
                    for s in 0..=q {
                        if pair(p, r) >= pair(q, s) {
                            eri.data[eri_index(p, r, q, s)] = dense[((p * n + r) * n + q) * n + s];
                        }
                    }
                }
            }
        }
        eri
    }

    /// Largest deviation from 8-fold symmetry in a dense `n^4` array.
    pub fn symmetry_violation(n: usize, dense: &[f64]) -> f64 {
        let at = |p: usize, r: usize, q: usize, s: usize| dense[((p * n + r) * n + q) * n + s];
        let mut worst = 0.0f64;
        for p in 0..n {
            for r in 0..n {
                for q in 0..n {
                    for s in 0..n {
                        let v = at(p, r, q, s);
                        worst = worst
                            .max((v - at(r, p, q, s)).abs())
                            .max((v - at(p, r, s, q)).abs())
                            .max((v - at(q, s, p, r)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for p in 0..n {
            for r in 0..n {
                for q in 0..n {
                    for s in 0..n {
                        out[((p * n + r) * n + q) * n + s] = self.get(p, r, q, s);
                    }
                }
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, p: usize, r: usize, q: usize, s: usize) -> f64 {
        self.data[eri_index(p, r, q, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, r: usize, q: usize, s: usize, value: f64) {
        self.data[eri_index(p, r, q, s)] = value;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    /// `(pr|qs)' = Σ C_ap C_br C_cq C_ds (ab|cd)` via four quarter
    /// transformations. `c` is `n × m`.
    pub fn transform(&self, c: &RMat) -> Eri {
        let n = self.n;
        assert_eq!(c.nrows(), n, "coefficient rows must match integral dimension");
        let m = c.ncols();
        let dense = self.to_dense();
        // step 1: (ib|cd)
        let mut t1 = vec![0.0; m * n * n * n];
        for i in 0..m {
            for a in 0..n {
                let cai = c[(a, i)];
                if cai == 0.0 {
                    continue;
                }
                let src = &dense[a * n * n * n..(a + 1) * n * n * n];
                let dst = &mut t1[i * n * n * n..(i + 1) * n * n * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += cai * s;
                }
            }
        }
        // step 2: (ij|cd)
        let mut t2 = vec![0.0; m * m * n * n];
        for i in 0..m {
            for j in 0..m {
                for b in 0..n {
                    let cbj = c[(b, j)];
                    if cbj == 0.0 {
                        continue;
                    }
                    let src = &t1[(i * n + b) * n * n..(i * n + b + 1) * n * n];
                    let dst = &mut t2[(i * m + j) * n * n..(i * m + j + 1) * n * n];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += cbj * s;
                    }
                }
            }
        }
        drop(t1);
        // step 3 and 4 per (ij) block: C^T X C
        let mut out = Eri::zeros(m);
        for i in 0..m {
            for j in 0..=i {
                let block = RMat::from_row_slice(n, n, &t2[(i * m + j) * n * n..(i * m + j + 1) * n * n]);
                let tb = c.transpose() * block * c;
                for k in 0..m {
                    for l in 0..=k {
                        if pair(i, j) >= pair(k, l) {
                            out.set(i, j, k, l, tb[(k, l)]);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_symmetric() {
        for (p, r, q, s) in [(0, 1, 2, 3), (3, 1, 0, 2), (2, 2, 1, 0)] {
            let k = eri_index(p, r, q, s);
            assert_eq!(k, eri_index(r, p, q, s));
            assert_eq!(k, eri_index(p, r, s, q));
            assert_eq!(k, eri_index(q, s, p, r));
        }
        assert_eq!(packed_len(1), 1);
        assert_eq!(packed_len(2), 6);
    }

    #[test]
    fn identity_transform_is_exact() {
        let n = 3;
        let mut e = Eri::zeros(n);
        for (k, v) in e.data.iter_mut().enumerate() {
            *v = 0.1 * k as f64 - 0.3;
        }
        let t = e.transform(&RMat::identity(n, n));
        for (a, b) in t.packed().iter().zip(e.packed()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
