//! Deterministic random problem generators shared by unit, integration and
//! acceptance tests. Not part of the stable API.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::integrals::Eri;
use crate::linalg::{RMat, C64};
use crate::orbital_space::MOIntegrals;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random orthogonal matrix from the QR factorization of a Gaussian-like
/// sample.
pub fn random_orthogonal(n: usize, seed: u64) -> RMat {
    let mut r = rng(seed);
    let a = RMat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let q = a.qr().q();
    q
}

/// Random symmetric integrals with 8-fold symmetric ERIs built as a Gram
/// tensor so that `(pr|qs)` is positive semidefinite over pairs.
pub fn random_mo(n: usize, n_elec: usize, seed: u64) -> MOIntegrals {
    let mut r = rng(seed);
    let mut h = RMat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    h = (&h + h.transpose()) * 0.5;
    for p in 0..n {
        h[(p, p)] -= 1.5 - 0.6 * p as f64;
    }
    let npair = n * (n + 1) / 2;
    let rank = npair + 1;
    let l = RMat::from_fn(npair, rank, |_, _| r.random_range(-0.4..0.4));
    let g = &l * l.transpose();
    let pair = |p: usize, q: usize| if p >= q { p * (p + 1) / 2 + q } else { q * (q + 1) / 2 + p };
    let mut eri = Eri::zeros(n);
    for p in 0..n {
        for q in 0..=p {
            for rr in 0..n {
                for s in 0..=rr {
                    eri.set(p, q, rr, s, g[(pair(p, q), pair(rr, s))]);
                }
            }
        }
    }
    MOIntegrals { e0: r.random_range(-1.0..1.0), h, eri, n_elec, restricted: n_elec % 2 == 0 }
}

/// Normalized random statevector on `n` qubits.
pub fn random_state(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    let mut v: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    v
}

pub fn random_angles(k: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..k).map(|_| r.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
