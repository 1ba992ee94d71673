use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};
use crate::pauli::PauliSum;

use super::noise::NoiseModel;
use super::Gate;

pub const MAX_STATEVECTOR_QUBITS: usize = 14;
pub const MAX_DENSITY_QUBITS: usize = 6;

/// Pure statevector or density matrix over `n` qubits. Basis index bit `q`
/// is qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure { n: usize, amps: Vec<C64> },
    Mixed { n: usize, rho: CMat },
}

/// Applies a 2×2 matrix to qubit `q` of a vector whose index bits are
/// qubits, visiting indices with a stride (1 for kets).
fn apply_1q(v: &mut [C64], q: usize, u: &[C64; 4]) {
    let b = 1usize << q;
    for i in 0..v.len() {
        if i & b == 0 {
            let (a0, a1) = (v[i], v[i | b]);
            v[i] = u[0] * a0 + u[1] * a1;
            v[i | b] = u[2] * a0 + u[3] * a1;
        }
    }
}

fn apply_cnot(v: &mut [C64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for i in 0..v.len() {
        if i & cb != 0 && i & tb == 0 {
            v.swap(i, i | tb);
        }
    }
}

fn flat(m: &CMat) -> [C64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Applies a primitive gate to a ket vector.
pub(crate) fn apply_gate_vec(v: &mut [C64], g: &Gate) {
    match *g {
        Gate::Cnot { control, target } => apply_cnot(v, control, target),
        Gate::So4 { .. } => {
            for p in g.expand() {
                apply_gate_vec(v, &p);
            }
        }
        _ => {
            let m = g.single_qubit_matrix().expect("single-qubit gate");
            apply_1q(v, g.qubits()[0], &flat(&m));
        }
    }
}

/// `ρ ← K ρ K†` summed over Kraus operators `ks` acting on qubit `q`.
fn apply_kraus_1q(rho: &mut CMat, q: usize, ks: &[[C64; 4]]) {
    let dim = rho.nrows();
    let mut acc = CMat::zeros(dim, dim);
    for k in ks {
        let mut t = rho.clone();
        conjugate_1q(&mut t, q, k);
        acc += t;
    }
    *rho = acc;
}

/// `ρ ← U ρ U†` for a single-qubit `U`.
fn conjugate_1q(rho: &mut CMat, q: usize, u: &[C64; 4]) {
    let dim = rho.nrows();
    let uc = [u[0].conj(), u[1].conj(), u[2].conj(), u[3].conj()];
    for j in 0..dim {
        let mut col: Vec<C64> = rho.column(j).iter().copied().collect();
        apply_1q(&mut col, q, u);
        rho.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    for i in 0..dim {
        let mut row: Vec<C64> = rho.row(i).iter().copied().collect();
        apply_1q(&mut row, q, &uc);
        for (j, v) in row.into_iter().enumerate() {
            rho[(i, j)] = v;
        }
    }
}

fn conjugate_gate(rho: &mut CMat, g: &Gate) {
    let dim = rho.nrows();
    for j in 0..dim {
        let mut col: Vec<C64> = rho.column(j).iter().copied().collect();
        apply_gate_vec(&mut col, g);
        rho.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    // right multiplication by U†: rows transform with conj(U)
    for i in 0..dim {
        let mut row: Vec<C64> = rho.row(i).iter().map(|z| z.conj()).collect();
        apply_gate_vec(&mut row, g);
        for (j, v) in row.into_iter().enumerate() {
            rho[(i, j)] = v.conj();
        }
    }
}

impl QuantumState {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Self {
        QuantumState::basis(n, 0)
    }

    pub fn basis(n: usize, index: u64) -> Self {
        assert!(n <= MAX_STATEVECTOR_QUBITS, "statevector budget is {MAX_STATEVECTOR_QUBITS} qubits");
        let mut amps = vec![ZERO; 1 << n];
        amps[index as usize] = C64::new(1.0, 0.0);
        QuantumState::Pure { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(Error::Dimension(format!("{dim} amplitudes is not a qubit register")));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_STATEVECTOR_QUBITS {
            return Err(Error::Budget { required: n, budget: MAX_STATEVECTOR_QUBITS });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("statevector norm² is {norm}")));
        }
        Ok(QuantumState::Pure { n, amps })
    }

    pub fn from_density(rho: CMat) -> Result<Self> {
        let dim = rho.nrows();
        if rho.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::Dimension("density matrix must be square with power-of-two size".into()));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::Budget { required: n, budget: MAX_DENSITY_QUBITS });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Invalid(format!("trace is {tr}")));
        }
        if (&rho - rho.adjoint()).iter().any(|z| z.norm() > 1e-10) {
            return Err(Error::Invalid("density matrix not Hermitian".into()));
        }
        Ok(QuantumState::Mixed { n, rho })
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        QuantumState::Mixed { n, rho: CMat::identity(dim, dim) / C64::new(dim as f64, 0.0) }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure { n, .. } | QuantumState::Mixed { n, .. } => *n,
        }
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match self {
            QuantumState::Pure { amps, .. } => Some(amps),
            QuantumState::Mixed { .. } => None,
        }
    }

    pub fn to_density(&self) -> Result<QuantumState> {
        match self {
            QuantumState::Mixed { .. } => Ok(self.clone()),
            QuantumState::Pure { n, amps } => {
                if *n > MAX_DENSITY_QUBITS {
                    return Err(Error::Budget { required: *n, budget: MAX_DENSITY_QUBITS });
                }
                let dim = amps.len();
                let rho = CMat::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
                Ok(QuantumState::Mixed { n: *n, rho })
            }
        }
    }

    pub fn density_matrix(&self) -> Result<CMat> {
        match self.to_density()? {
            QuantumState::Mixed { rho, .. } => Ok(rho),
            QuantumState::Pure { .. } => unreachable!(),
        }
    }

    /// Probability of each computational basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure { amps, .. } => amps.iter().map(|a| a.norm_sqr()).collect(),
            QuantumState::Mixed { rho, .. } => (0..rho.nrows()).map(|i| rho[(i, i)].re.max(0.0)).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        match self {
            QuantumState::Pure { amps, .. } => apply_gate_vec(amps, g),
            QuantumState::Mixed { rho, .. } => conjugate_gate(rho, g),
        }
    }

    /// Channels following gate `g`: amplitude and phase damping on every
    /// touched qubit, then two-qubit depolarizing after a CNOT.
    pub(crate) fn apply_gate_noise(&mut self, g: &Gate, m: &NoiseModel) {
        let QuantumState::Mixed { rho, .. } = self else {
            panic!("gate noise requires a density matrix");
        };
        let z = ZERO;
        let one = C64::new(1.0, 0.0);
        for q in g.qubits() {
            if m.amplitude_damping > 0.0 {
                let gam = m.amplitude_damping;
                let k0 = [one, z, z, C64::new((1.0 - gam).sqrt(), 0.0)];
                let k1 = [z, C64::new(gam.sqrt(), 0.0), z, z];
                apply_kraus_1q(rho, q, &[k0, k1]);
            }
            if m.dephasing > 0.0 {
                let lam = m.dephasing;
                let k0 = [one, z, z, C64::new((1.0 - lam).sqrt(), 0.0)];
                let k1 = [z, z, z, C64::new(lam.sqrt(), 0.0)];
                apply_kraus_1q(rho, q, &[k0, k1]);
            }
        }
        if let Gate::Cnot { control, target } = *g {
            if m.depolarizing_2q > 0.0 {
                depolarize_2q(rho, control, target, m.depolarizing_2q);
            }
        }
    }

    /// `⟨op⟩`; `op` must be Hermitian within 1e-10.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        if op.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension(format!(
                "operator on {} qubits, state on {}",
                op.n_qubits(),
                self.n_qubits()
            )));
        }
        if !op.is_hermitian(1e-10) {
            return Err(Error::Invalid(format!(
                "operator is not Hermitian (max |Im c| = {:.3e})",
                op.max_imag()
            )));
        }
        let v = self.expectation_complex(op);
        if v.im.abs() > 1e-10 * (1.0 + op.one_norm()) {
            return Err(Error::Numerical(format!("expectation has imaginary residue {:.3e}", v.im)));
        }
        Ok(v.re)
    }

    /// `⟨op⟩` without Hermiticity checks.
    pub fn expectation_complex(&self, op: &PauliSum) -> C64 {
        match self {
            QuantumState::Pure { amps, .. } => op.expectation(amps),
            QuantumState::Mixed { rho, .. } => {
                // Tr(ρ P) = Σ_b phase(b) ρ[b, b ⊕ x]
                let mut acc = ZERO;
                for (p, c) in op.terms() {
                    let mut s = ZERO;
                    for b in 0..rho.nrows() as u64 {
                        let (ph, b2) = p.apply_basis(b);
                        s += ph * rho[(b as usize, b2 as usize)];
                    }
                    acc += c * s;
                }
                acc
            }
        }
    }
}

/// `ρ ← (1 − p) ρ + p/15 Σ_{P ≠ I} P ρ P` on qubits `a`, `b`.
fn depolarize_2q(rho: &mut CMat, a: usize, b: usize, p: f64) {
    use crate::pauli::PauliString;
    let n = rho.nrows().trailing_zeros() as usize;
    let mut acc = rho.clone() * C64::new(1.0 - p, 0.0);
    let (ba, bb) = (1u64 << a, 1u64 << b);
    for k in 1..16u64 {
        let (la, lb) = (k & 3, k >> 2);
        let bits = |l: u64, bit: u64| -> (u64, u64) {
            match l {
                1 => (bit, 0),
                2 => (bit, bit),
                3 => (0, bit),
                _ => (0, 0),
            }
        };
        let (xa, za) = bits(la, ba);
        let (xb, zb) = bits(lb, bb);
        let ps = PauliString::from_masks(n, xa | xb, za | zb);
        let dense = ps.to_dense();
        acc += (&dense * &*rho * &dense) * C64::new(p / 15.0, 0.0);
    }
    *rho = acc;
}
