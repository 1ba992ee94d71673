//! Registers that fermionic operators are mapped onto.
//!
//! Besides plain Jordan–Wigner there is a two-orbital, two-electron pair
//! sector: one up electron and one down electron in two spatial orbitals.
//! Reduced qubit 0 holds the orbital of the up electron and reduced qubit 1
//! the orbital of the down electron, so the closed-shell reference in orbital
//! 0 is `|00⟩`. Any operator that conserves `N_up` and `N_down` is carried
//! over by projecting its Jordan–Wigner image onto the sector.

use serde::{Deserialize, Serialize};

use super::{jw::map_hamiltonian, PauliSum};
use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat, C64};
use crate::orbital_space::MOIntegrals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FermionEncoding {
    JordanWigner { n_orb: usize },
    PairSector,
}

/// JW basis index of sector state `i + 2j`.
fn embed(k: usize) -> u64 {
    let (i, j) = (k & 1, k >> 1);
    (1u64 << i) | (1u64 << (2 + j))
}

impl FermionEncoding {
    pub fn n_orb(&self) -> usize {
        match self {
            FermionEncoding::JordanWigner { n_orb } => *n_orb,
            FermionEncoding::PairSector => 2,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            FermionEncoding::JordanWigner { n_orb } => 2 * n_orb,
            FermionEncoding::PairSector => 2,
        }
    }

    /// Register basis index of the closed-shell determinant with the lowest
    /// `n_elec / 2` orbitals doubly occupied.
    pub fn reference_index(&self, n_elec: usize) -> Result<u64> {
        match self {
            FermionEncoding::JordanWigner { n_orb } => {
                let k = n_elec / 2;
                if n_elec % 2 != 0 || k > *n_orb {
                    return Err(Error::Invalid(format!("no closed-shell reference for {n_elec} electrons")));
                }
                let occ = (1u64 << k) - 1;
                Ok(occ | (occ << n_orb))
            }
            FermionEncoding::PairSector => {
                if n_elec != 2 {
                    return Err(Error::Invalid("pair sector holds exactly 2 electrons".into()));
                }
                Ok(0)
            }
        }
    }

    /// Register image of a Jordan–Wigner operator on `2 · n_orb` qubits.
    pub fn encode(&self, jw: &PauliSum) -> Result<PauliSum> {
        match self {
            FermionEncoding::JordanWigner { n_orb } => {
                if jw.n_qubits() != 2 * n_orb {
                    return Err(Error::Dimension(format!(
                        "operator on {} qubits, encoding expects {}",
                        jw.n_qubits(),
                        2 * n_orb
                    )));
                }
                Ok(jw.clone())
            }
            FermionEncoding::PairSector => {
                if jw.n_qubits() != 4 {
                    return Err(Error::Dimension("pair sector reduces 4-qubit operators only".into()));
                }
                let mut m = CMat::zeros(4, 4);
                let mut leak = 0.0f64;
                for col in 0..4 {
                    let mut basis = vec![C64::new(0.0, 0.0); 16];
                    basis[embed(col) as usize] = C64::new(1.0, 0.0);
                    let image = jw.apply(&basis);
                    let mut inside = 0.0;
                    for row in 0..4 {
                        let v = image[embed(row) as usize];
                        m[(row, col)] = v;
                        inside += v.norm_sqr();
                    }
                    let total: f64 = image.iter().map(|v| v.norm_sqr()).sum();
                    leak = leak.max((total - inside).max(0.0).sqrt());
                }
                if leak > 1e-10 {
                    return Err(Error::Invalid(format!(
                        "operator leaves the pair sector (leakage {leak:.3e})"
                    )));
                }
                Ok(PauliSum::from_dense(&m)?.simplify(1e-14))
            }
        }
    }

    /// Hamiltonian of `mo` on this register.
    pub fn hamiltonian(&self, mo: &MOIntegrals) -> Result<PauliSum> {
        if mo.n_orb() != self.n_orb() {
            return Err(Error::Dimension(format!(
                "{} orbitals for an encoding of {}",
                mo.n_orb(),
                self.n_orb()
            )));
        }
        match self {
            FermionEncoding::JordanWigner { .. } => map_hamiltonian(mo),
            FermionEncoding::PairSector => {
                if mo.n_elec != 2 {
                    return Err(Error::Invalid("pair sector holds exactly 2 electrons".into()));
                }
                let m = pair_sector_matrix(mo);
                Ok(PauliSum::from_dense(&m.map(|x| C64::new(x, 0.0)))?.simplify(1e-14))
            }
        }
    }
}

/// Determinant-basis matrix of a 2-orbital Hamiltonian in the pair sector:
/// `H[(i,j),(k,l)] = (ik|jl) + δ_jl h_ik + δ_ik h_jl + δ_ik δ_jl E0`,
/// row index `i + 2j`.
pub fn pair_sector_matrix(mo: &MOIntegrals) -> RMat {
    let mut m = RMat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = mo.eri.get(i, k, j, l);
                    if j == l {
                        v += mo.h[(i, k)];
                    }
                    if i == k {
                        v += mo.h[(j, l)];
                    }
                    if i == k && j == l {
                        v += mo.e0;
                    }
                    m[(i + 2 * j, k + 2 * l)] = v;
                }
            }
        }
    }
    m
}
