//! Circuit simulation on statevectors and density matrices, shot sampling,
//! readout calibration and state tomography.

mod measure;
mod noise;
mod state;
mod tomography;

pub use measure::{
    build_calibration, derive_seed, mitigate, sample, CalibrationMatrix, CountsHistogram, Estimator,
    MeasurementBasis, Sampling, MAX_CALIBRATION_QUBITS,
};
pub use noise::{NoiseModel, ReadoutError};
pub use state::{QuantumState, MAX_DENSITY_QUBITS, MAX_STATEVECTOR_QUBITS};
pub use tomography::{purity, qst};

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    H { qubit: usize },
    S { qubit: usize },
    Sdg { qubit: usize },
    X { qubit: usize },
    U3 { qubit: usize, theta: f64, phi: f64, lambda: f64 },
    Cnot { control: usize, target: usize },
    /// Two-qubit real-orthogonal block on `(q0, q1)`: two U3 gates wrapped
    /// in the magic-basis change.
    So4 { q0: usize, q1: usize, angles: [f64; 6] },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rx_matrix(theta: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

pub fn ry_matrix(theta: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

pub fn rz_matrix(theta: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[C64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, theta / 2.0)],
    )
}

/// `Rz(φ) Rx(−π/2) Rz(θ) Rx(π/2) Rz(λ)`.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> CMat {
    rz_matrix(phi) * rx_matrix(-FRAC_PI_2) * rz_matrix(theta) * rx_matrix(FRAC_PI_2) * rz_matrix(lambda)
}

fn h_matrix() -> CMat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)])
}

fn phase_matrix(im: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, im)])
}

fn x_matrix() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::H { qubit }
            | Gate::S { qubit }
            | Gate::Sdg { qubit }
            | Gate::X { qubit }
            | Gate::U3 { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::So4 { q0, q1, .. } => vec![q0, q1],
        }
    }

    fn angles_finite(&self) -> bool {
        match self {
            Gate::Rx { theta, .. } | Gate::Ry { theta, .. } | Gate::Rz { theta, .. } => theta.is_finite(),
            Gate::U3 { theta, phi, lambda, .. } => theta.is_finite() && phi.is_finite() && lambda.is_finite(),
            Gate::So4 { angles, .. } => angles.iter().all(|a| a.is_finite()),
            _ => true,
        }
    }

    /// 2×2 matrix of a single-qubit gate.
    pub fn single_qubit_matrix(&self) -> Option<CMat> {
        Some(match *self {
            Gate::Rx { theta, .. } => rx_matrix(theta),
            Gate::Ry { theta, .. } => ry_matrix(theta),
            Gate::Rz { theta, .. } => rz_matrix(theta),
            Gate::H { .. } => h_matrix(),
            Gate::S { .. } => phase_matrix(1.0),
            Gate::Sdg { .. } => phase_matrix(-1.0),
            Gate::X { .. } => x_matrix(),
            Gate::U3 { theta, phi, lambda, .. } => u3_matrix(theta, phi, lambda),
            _ => return None,
        })
    }

    /// Primitive gates making up this one (itself unless composite).
    pub fn expand(&self) -> Vec<Gate> {
        match *self {
            Gate::So4 { q0, q1, angles } => {
                let mut g = magic_prefix(q0, q1);
                g.push(Gate::U3 { qubit: q0, theta: angles[0], phi: angles[1], lambda: angles[2] });
                g.push(Gate::U3 { qubit: q1, theta: angles[3], phi: angles[4], lambda: angles[5] });
                g.extend(magic_suffix(q0, q1));
                g
            }
            g => vec![g],
        }
    }
}

/// Circuit-order gates mapping computational states to the magic basis
/// frame: `S ⊗ S`, `H` on `q1`, `CNOT(q1 → q0)`.
pub fn magic_prefix(q0: usize, q1: usize) -> Vec<Gate> {
    vec![
        Gate::S { qubit: q0 },
        Gate::S { qubit: q1 },
        Gate::H { qubit: q1 },
        Gate::Cnot { control: q1, target: q0 },
    ]
}

/// Inverse of [`magic_prefix`].
pub fn magic_suffix(q0: usize, q1: usize) -> Vec<Gate> {
    vec![
        Gate::Cnot { control: q1, target: q0 },
        Gate::H { qubit: q1 },
        Gate::Sdg { qubit: q0 },
        Gate::Sdg { qubit: q1 },
    ]
}

/// Ordered gate list on a fixed register. Gates apply left to right.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) -> &mut Self {
        self.gates.push(g);
        self
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        self.gates.extend(gates);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (k, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            if qs.iter().any(|&q| q >= self.n_qubits) {
                return Err(Error::Invalid(format!("gate {k} acts outside the {}-qubit register", self.n_qubits)));
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::Invalid(format!("gate {k} uses qubit {} twice", qs[0])));
            }
            if !g.angles_finite() {
                return Err(Error::Invalid(format!("gate {k} has a non-finite angle")));
            }
        }
        Ok(())
    }

    /// Gates with composites expanded.
    pub fn primitive_gates(&self) -> Vec<Gate> {
        self.gates.iter().flat_map(|g| g.expand()).collect()
    }

    pub fn cnot_count(&self) -> usize {
        self.primitive_gates().iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    pub fn count_where(&self, f: impl Fn(&Gate) -> bool) -> usize {
        self.primitive_gates().iter().filter(|g| f(g)).count()
    }

    /// Dense unitary (qubit 0 is the least significant index bit).
    pub fn unitary(&self) -> Result<CMat> {
        self.validate()?;
        if self.n_qubits > 10 {
            return Err(Error::Budget { required: self.n_qubits, budget: 10 });
        }
        let dim = 1usize << self.n_qubits;
        let mut u = CMat::identity(dim, dim);
        for k in 0..dim {
            let mut col: Vec<C64> = (0..dim).map(|i| u[(i, k)]).collect();
            for g in self.primitive_gates() {
                state::apply_gate_vec(&mut col, &g);
            }
            for i in 0..dim {
                u[(i, k)] = col[i];
            }
        }
        Ok(u)
    }
}

/// Two-qubit matrix with `a` acting on the less significant qubit.
pub fn two_qubit_product(low: &CMat, high: &CMat) -> CMat {
    kron(high, low)
}

/// Runs `circuit` from `initial`. Gate noise promotes the state to a
/// density matrix; readout noise is left for sampling.
pub fn run(circuit: &Circuit, initial: &QuantumState, noise: Option<&NoiseModel>) -> Result<QuantumState> {
    circuit.validate()?;
    if circuit.n_qubits != initial.n_qubits() {
        return Err(Error::Dimension(format!(
            "circuit on {} qubits, state on {}",
            circuit.n_qubits,
            initial.n_qubits()
        )));
    }
    let gate_noise = noise.filter(|m| m.has_gate_noise());
    let mut st = match gate_noise {
        Some(_) => initial.to_density()?,
        None => initial.clone(),
    };
    for g in circuit.primitive_gates() {
        st.apply_gate(&g);
        if let Some(m) = gate_noise {
            st.apply_gate_noise(&g, m);
        }
    }
    Ok(st)
}

/// `⟨op⟩` on a state; `op` must be Hermitian.
pub fn expectation(state: &QuantumState, op: &crate::pauli::PauliSum) -> Result<f64> {
    state.expectation(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_c, RMat};

    #[test]
    fn ry_on_zero_closed_form() {
        let theta = 0.7;
        let mut c = Circuit::new(1);
        c.push(Gate::Ry { qubit: 0, theta });
        let st = run(&c, &QuantumState::zero(1), None).unwrap();
        let psi = st.amplitudes().unwrap();
        assert!((psi[0].re - (theta / 2.0).cos()).abs() < 1e-15);
        assert!((psi[1].re - (theta / 2.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn cnot_is_an_involution() {
        let psi = crate::testing::random_state(3, 4);
        let mut c = Circuit::new(3);
        c.push(Gate::Cnot { control: 2, target: 0 }).push(Gate::Cnot { control: 2, target: 0 });
        let out = run(&c, &QuantumState::from_amplitudes(psi.clone()).unwrap(), None).unwrap();
        let got = out.amplitudes().unwrap();
        for (a, b) in got.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut c = Circuit::new(2);
        c.push(Gate::X { qubit: 1 }).push(Gate::Cnot { control: 1, target: 0 });
        let st = run(&c, &QuantumState::zero(2), None).unwrap();
        assert!((st.amplitudes().unwrap()[3].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn so4_gate_is_real_orthogonal() {
        for seed in 0..20 {
            let a = crate::testing::random_angles(6, seed);
            let mut c = Circuit::new(2);
            c.push(Gate::So4 { q0: 0, q1: 1, angles: a.clone().try_into().unwrap() });
            let u = c.unitary().unwrap();
            let im = u.map(|z| z.im).amax();
            assert!(im < 1e-10, "imaginary part {im}");
            let r: RMat = u.map(|z| z.re);
            assert!((r.transpose() * &r - RMat::identity(4, 4)).amax() < 1e-10);
            assert!((r.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn so4_gate_census() {
        let mut c = Circuit::new(2);
        c.push(Gate::So4 { q0: 0, q1: 1, angles: [0.1; 6] });
        assert_eq!(c.cnot_count(), 2);
        assert_eq!(c.count_where(|g| matches!(g, Gate::H { .. })), 2);
        assert_eq!(c.count_where(|g| matches!(g, Gate::S { .. } | Gate::Sdg { .. })), 4);
        assert_eq!(c.count_where(|g| matches!(g, Gate::U3 { .. })), 2);
    }

    #[test]
    fn u3_spans_su2() {
        // U3(θ,0,0) must be a genuine rotation away from the identity
        let u = u3_matrix(0.4, 0.0, 0.0);
        assert!(max_abs_c(&(u - CMat::identity(2, 2))) > 0.1);
    }
}
