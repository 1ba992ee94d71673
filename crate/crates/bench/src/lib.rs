//! Shared inputs for the benchmark harness: fixture paths and small
//! problems that are cheap to rebuild.

use std::path::{Path, PathBuf};

use iaoqsim::fci::{fci, Sector};
use iaoqsim::simulator::QuantumState;
use iaoqsim::{load_bundle, FermionEncoding, IntegralBundle, MOIntegrals, PauliSum};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Folded two-qubit NH3 Hamiltonian near equilibrium.
pub fn nh3_pair() -> PauliSum {
    PauliSum::load(fixtures().join("nh3_honoluno/R1.000.pauli")).expect("fixture loads")
}

pub fn h2_bundle() -> IntegralBundle {
    load_bundle(fixtures().join("h2_sto6g/R0.740")).expect("fixture loads")
}

pub fn h2_ccpvdz_bundle() -> IntegralBundle {
    load_bundle(fixtures().join("h2_ccpvdz/R0.740")).expect("fixture loads")
}

/// Random `n`-orbital, two-electron integrals and their JW Hamiltonian.
pub fn random_jw(n_orb: usize, seed: u64) -> (MOIntegrals, PauliSum) {
    let mo = iaoqsim::testing::random_mo(n_orb, 2, seed);
    let h = FermionEncoding::JordanWigner { n_orb }.hamiltonian(&mo).expect("encodes");
    (mo, h)
}

/// Exact ground state of `h` in `sector`.
pub fn ground_state(h: &PauliSum, sector: Sector) -> QuantumState {
    let res = fci(h, sector).expect("diagonalizes");
    QuantumState::from_amplitudes(res.state(0)).expect("normalized")
}
