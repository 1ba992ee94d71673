//! Intrinsic-atomic-orbital active spaces, qubit Hamiltonians and
//! small-register quantum algorithms (VQE, QITE, qEOM, VQSE) on a built-in
//! noisy circuit simulator, with exact diagonalization as the reference.

pub mod analysis;
pub mod bundle;
pub mod error;
pub mod fci;
pub mod iao;
pub mod kak;
pub mod integrals;
pub mod linalg;
pub mod orbital_space;
pub mod pauli;
pub mod qeom;
pub mod qite;
pub mod simulator;
#[doc(hidden)]
pub mod testing;
pub mod vqe;
pub mod vqse;

pub use bundle::{load_bundle, load_fcidump, save_bundle, write_fcidump, IntegralBundle, PESGrid};
pub use error::{Error, ErrorCategory, Result};
pub use iao::IAOBasis;
pub use integrals::Eri;
pub use orbital_space::{ActiveSelector, ActiveSpace, MOIntegrals};
pub use pauli::{FermionEncoding, PauliString, PauliSum, Spin};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
