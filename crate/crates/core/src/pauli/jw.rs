//! Jordan–Wigner images of fermionic operators.
//!
//! Spin orbital `(p, up)` sits on qubit `p` and `(p, down)` on qubit `n + p`;
//! `|1⟩` marks an occupied spin orbital.

use serde::{Deserialize, Serialize};

use super::{PauliString, PauliSum};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::orbital_space::MOIntegrals;

pub const DEFAULT_QUBIT_BUDGET: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn qubit(self, p: usize, n: usize) -> usize {
        match self {
            Spin::Up => p,
            Spin::Down => n + p,
        }
    }
}

fn check_index(p: usize, n: usize) -> Result<()> {
    if p >= n {
        return Err(Error::Invalid(format!("orbital {p} out of range for {n} spatial orbitals")));
    }
    Ok(())
}

fn low_mask(q: usize) -> u64 {
    (1u64 << q) - 1
}

/// Ladder operator `(X ∓ iY)/2` on qubit `q` with a Z string on all lower
/// qubits; `raise` selects `|0⟩ → |1⟩`.
fn ladder(q: usize, width: usize, raise: bool) -> PauliSum {
    let b = 1u64 << q;
    let tail = low_mask(q);
    let mut s = PauliSum::zero(width);
    s.add_term(PauliString::from_masks(width, b, tail), C64::new(0.5, 0.0));
    let sign = if raise { -0.5 } else { 0.5 };
    s.add_term(PauliString::from_masks(width, b, tail | b), C64::new(0.0, sign));
    s
}

/// `a†_{p,σ}` on `2n` qubits.
pub fn jw_creation(p: usize, spin: Spin, n: usize) -> Result<PauliSum> {
    check_index(p, n)?;
    Ok(ladder(spin.qubit(p, n), 2 * n, true))
}

/// `a_{p,σ}`, the adjoint of [`jw_creation`].
pub fn jw_annihilation(p: usize, spin: Spin, n: usize) -> Result<PauliSum> {
    check_index(p, n)?;
    Ok(ladder(spin.qubit(p, n), 2 * n, false))
}

/// `X^σ_{pr} = a†_{pσ} a_{rσ}`, written per case: for `p = r` the number
/// operator `(1 − Z)/2`; otherwise `σ⁺` on the `p` qubit, `σ⁻` on the `r`
/// qubit and Z on every qubit strictly between them.
pub fn jw_excitation(p: usize, r: usize, spin: Spin, n: usize) -> Result<PauliSum> {
    check_index(p, n)?;
    check_index(r, n)?;
    let width = 2 * n;
    let qp = spin.qubit(p, n);
    let qr = spin.qubit(r, n);
    let mut s = PauliSum::zero(width);
    if qp == qr {
        let b = 1u64 << qp;
        s.add_term(PauliString::identity(width), C64::new(0.5, 0.0));
        s.add_term(PauliString::from_masks(width, 0, b), C64::new(-0.5, 0.0));
        return Ok(s);
    }
    let (lo, hi) = (qp.min(qr), qp.max(qr));
    let between = low_mask(hi) & !low_mask(lo + 1);
    let (bp, br) = (1u64 << qp, 1u64 << qr);
    let x = bp | br;
    // σ⁺ = (X − iY)/2, σ⁻ = (X + iY)/2, expanded over the two qubits
    let terms: [(u64, f64, f64); 4] = [
        (0, 0.25, 0.0),         // X X
        (br, 0.0, 0.25),        // X_p (iY_r)
        (bp, 0.0, -0.25),       // (−iY_p) X_r
        (bp | br, 0.25, 0.0),   // (−iY_p)(iY_r)
    ];
    for (ymask, re, im) in terms {
        s.add_term(PauliString::from_masks(width, x, between | ymask), C64::new(re, im));
    }
    Ok(s)
}

/// `Σ_{στ} a†_{pσ} a†_{qτ} a_{sτ} a_{rσ}`, built from excitation operators.
pub fn two_body_operator(p: usize, r: usize, q: usize, s: usize, n: usize) -> Result<PauliSum> {
    let mut out = PauliSum::zero(2 * n);
    for sigma in Spin::BOTH {
        let epr = jw_excitation(p, r, sigma, n)?;
        for tau in Spin::BOTH {
            let eqs = jw_excitation(q, s, tau, n)?;
            out = out.add(&epr.multiply(&eqs)?)?;
        }
        if q == r {
            out = out.sub(&jw_excitation(p, s, sigma, n)?)?;
        }
    }
    Ok(out.simplify(1e-15))
}

pub fn map_hamiltonian(mo: &MOIntegrals) -> Result<PauliSum> {
    map_hamiltonian_with_budget(mo, DEFAULT_QUBIT_BUDGET)
}

/// `E0 + Σ h_pq Σ_σ a†a + ½ Σ (pr|qs) Σ_στ a†_{pσ} a†_{qτ} a_{sτ} a_{rσ}`.
pub fn map_hamiltonian_with_budget(mo: &MOIntegrals, budget: usize) -> Result<PauliSum> {
    let n = mo.n_orb();
    if 2 * n > budget {
        return Err(Error::Budget { required: 2 * n, budget });
    }
    let width = 2 * n;
    let mut exc = Vec::with_capacity(2 * n * n);
    for sigma in Spin::BOTH {
        for p in 0..n {
            for r in 0..n {
                exc.push(jw_excitation(p, r, sigma, n)?);
            }
        }
    }
    let e = |sigma: usize, p: usize, r: usize| &exc[(sigma * n + p) * n + r];
    let mut h = PauliSum::scalar(width, C64::new(mo.e0, 0.0));
    for p in 0..n {
        for r in 0..n {
            let v = mo.h[(p, r)];
            if v != 0.0 {
                for sigma in 0..2 {
                    h = h.add(&e(sigma, p, r).scale_real(v))?;
                }
            }
        }
    }
    for p in 0..n {
        for r in 0..n {
            for q in 0..n {
                for s in 0..n {
                    let v = 0.5 * mo.eri.get(p, r, q, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            h = h.add(&e(sigma, p, r).multiply(e(tau, q, s))?.scale_real(v))?;
                        }
                        if q == r {
                            h = h.sub(&e(sigma, p, s).scale_real(v))?;
                        }
                    }
                }
            }
        }
    }
    Ok(h.simplified())
}

/// Total particle number on `2n` qubits.
pub fn number_operator(n: usize) -> PauliSum {
    let width = 2 * n;
    let mut s = PauliSum::scalar(width, C64::new(n as f64, 0.0));
    for q in 0..width {
        s.add_term(PauliString::from_masks(width, 0, 1 << q), C64::new(-0.5, 0.0));
    }
    s
}

/// `Ŝ_z = ½ (N_up − N_down)`.
pub fn sz_operator(n: usize) -> PauliSum {
    let width = 2 * n;
    let mut s = PauliSum::zero(width);
    for p in 0..n {
        s.add_term(PauliString::from_masks(width, 0, 1 << p), C64::new(-0.25, 0.0));
        s.add_term(PauliString::from_masks(width, 0, 1 << (n + p)), C64::new(0.25, 0.0));
    }
    s.simplify(0.0)
}

/// `Ŝ² = Ŝ_z² + Ŝ_z + Ŝ₋Ŝ₊` with `Ŝ₊ = Σ_p a†_{p↑} a_{p↓}`.
pub fn s_squared_operator(n: usize) -> Result<PauliSum> {
    if 2 * n > DEFAULT_QUBIT_BUDGET {
        return Err(Error::Budget { required: 2 * n, budget: DEFAULT_QUBIT_BUDGET });
    }
    let width = 2 * n;
    let mut s_plus = PauliSum::zero(width);
    for p in 0..n {
        let op = jw_creation(p, Spin::Up, n)?.multiply(&jw_annihilation(p, Spin::Down, n)?)?;
        s_plus = s_plus.add(&op)?;
    }
    let s_minus = s_plus.adjoint();
    let sz = sz_operator(n);
    let out = sz
        .multiply(&sz)?
        .add(&sz)?
        .add(&s_minus.multiply(&s_plus)?)?;
    Ok(out.simplified())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_c, CMat};

    #[test]
    fn creation_on_single_orbital() {
        let a = jw_creation(0, Spin::Up, 1).unwrap();
        assert_eq!(a.coeff(&"IX".parse().unwrap()), C64::new(0.5, 0.0));
        assert_eq!(a.coeff(&"IY".parse().unwrap()), C64::new(0.0, -0.5));
        // |0⟩ → |1⟩
        let psi = a.apply(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(psi[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn diagonal_excitation_is_number_operator() {
        let e = jw_excitation(0, 0, Spin::Up, 1).unwrap();
        assert_eq!(e.coeff(&"II".parse().unwrap()), C64::new(0.5, 0.0));
        assert_eq!(e.coeff(&"IZ".parse().unwrap()), C64::new(-0.5, 0.0));
    }

    #[test]
    fn excitation_equals_ladder_product() {
        let n = 3;
        for spin in Spin::BOTH {
            for p in 0..n {
                for r in 0..n {
                    let direct = jw_excitation(p, r, spin, n).unwrap().to_dense();
                    let prod = jw_creation(p, spin, n)
                        .unwrap()
                        .multiply(&jw_annihilation(r, spin, n).unwrap())
                        .unwrap()
                        .to_dense();
                    assert!(max_abs_c(&(direct - prod)) < 1e-14, "{p}{r}{spin:?}");
                }
            }
        }
    }

    #[test]
    fn sz_of_single_up_electron() {
        let psi: Vec<C64> = (0..4).map(|b| C64::new(if b == 1 { 1.0 } else { 0.0 }, 0.0)).collect();
        assert!((sz_operator(1).expectation(&psi).re - 0.5).abs() < 1e-15);
        assert!((s_squared_operator(1).unwrap().expectation(&psi).re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn constant_only_hamiltonian() {
        let mo = MOIntegrals::new(1.25, crate::linalg::RMat::zeros(2, 2), crate::integrals::Eri::zeros(2), 2).unwrap();
        let h = map_hamiltonian(&mo).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.constant(), C64::new(1.25, 0.0));
    }

    #[test]
    fn budget_is_enforced() {
        let mo = MOIntegrals::new(0.0, crate::linalg::RMat::zeros(8, 8), crate::integrals::Eri::zeros(8), 2).unwrap();
        assert!(matches!(map_hamiltonian(&mo), Err(Error::Budget { required: 16, budget: 14 })));
    }

    #[test]
    fn number_operator_counts() {
        let n = number_operator(2).to_dense();
        let expected = CMat::from_fn(16, 16, |i, j| {
            if i == j { C64::new((i as u32).count_ones() as f64, 0.0) } else { C64::new(0.0, 0.0) }
        });
        assert!(max_abs_c(&(n - expected)) < 1e-15);
    }
}
