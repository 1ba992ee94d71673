use super::measure::{CalibrationMatrix, Estimator};
use super::noise::NoiseModel;
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::pauli::PauliString;

pub const MAX_TOMOGRAPHY_QUBITS: usize = 3;

/// Reconstructs `ρ = Σ_P ⟨P⟩ P / 2^n` from Pauli expectations over the
/// `3^n` measurement settings. `shots = 0` uses exact expectations. The
/// result is Hermitian but not projected onto the positive cone.
pub fn qst(
    state: &QuantumState,
    shots: usize,
    seed: u64,
    noise: Option<&NoiseModel>,
    calibration: Option<&CalibrationMatrix>,
) -> Result<CMat> {
    let n = state.n_qubits();
    if n > MAX_TOMOGRAPHY_QUBITS {
        return Err(Error::Budget { required: n, budget: MAX_TOMOGRAPHY_QUBITS });
    }
    let mut est = Estimator::sampled(state, shots, seed, noise).with_calibration(calibration);
    let dim = 1usize << n;
    let mut rho = CMat::zeros(dim, dim);
    for x in 0..dim as u64 {
        for z in 0..dim as u64 {
            let p = PauliString::from_masks(n, x, z);
            let v = est.string(&p)?;
            rho += p.to_dense() * C64::new(v / dim as f64, 0.0);
        }
    }
    Ok(rho)
}

/// `Tr ρ²`.
pub fn purity(rho: &CMat) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum::<f64>()
}
