//! Quantum imaginary-time evolution. Each step replaces `e^{−Δτ h}` by a
//! unitary `exp(i Σ x_μ P_μ)` fitted from measured expectation values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kak::{kak_compact, KakCircuit};
use crate::linalg::{expi_hermitian, CMat, RMat, C64, ONE};
use crate::pauli::{PauliString, PauliSum};
use crate::simulator::{derive_seed, Circuit, QuantumState, Sampling};

/// Largest register evolved with the full Pauli expansion basis.
pub const MAX_FULL_BASIS_QUBITS: usize = 4;
pub const TIKHONOV: f64 = 1e-8;
/// Linear-system residual above which a step is flagged.
pub const RESIDUAL_FLAG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QiteConfig {
    /// Imaginary-time step, inverse Hartree.
    pub dtau: f64,
    /// Total imaginary time, inverse Hartree.
    pub beta_total: f64,
    /// Evolve term by term on each term's support instead of the whole
    /// Hamiltonian at once.
    pub trotterize: bool,
}

impl Default for QiteConfig {
    fn default() -> Self {
        QiteConfig { dtau: 0.5, beta_total: 7.0, trotterize: false }
    }
}

impl QiteConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dtau > 0.0) {
            bad.push(format!("dtau must be positive (got {})", self.dtau));
        }
        if !(self.beta_total >= self.dtau) {
            bad.push(format!("beta_total must be at least dtau (got {})", self.beta_total));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(bad.join("; ")))
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.beta_total / self.dtau).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiteStep {
    pub beta: f64,
    pub energy: f64,
    pub x_norm: f64,
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QiteTrace {
    pub steps: Vec<QiteStep>,
}

impl QiteTrace {
    pub fn final_energy(&self) -> f64 {
        self.steps.last().map(|s| s.energy).unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("beta,energy,x_norm,residual\n");
        for st in &self.steps {
            let _ = writeln!(s, "{},{},{},{}", st.beta, st.energy, st.x_norm, st.residual);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct QiteResult {
    pub trace: QiteTrace,
    pub state: QuantumState,
    /// Product of all step unitaries.
    pub unitary: CMat,
    /// Compacted circuit for the accumulated unitary (2-qubit registers).
    pub circuit: Option<KakCircuit>,
}

/// All non-identity Pauli strings supported on the qubits of `mask`.
pub fn pauli_basis(n: usize, mask: u64) -> Vec<PauliString> {
    let qubits: Vec<usize> = (0..n).filter(|&q| mask >> q & 1 == 1).collect();
    let mut out = Vec::new();
    for code in 1..4u64.pow(qubits.len() as u32) {
        let (mut x, mut z, mut c) = (0u64, 0u64, code);
        for &q in &qubits {
            match c % 4 {
                1 => x |= 1 << q,
                2 => {
                    x |= 1 << q;
                    z |= 1 << q
                }
                3 => z |= 1 << q,
                _ => {}
            }
            c /= 4;
        }
        out.push(PauliString::from_masks(n, x, z));
    }
    out
}

/// Step parameters: solves `(2 Re S + ε) x = −b / √c` with
/// `S_μν = ⟨P_μ P_ν⟩`, `b_μ = 2 Δτ Im⟨P_μ h⟩` and
/// `c = 1 − 2Δτ⟨h⟩ + 2Δτ²⟨h²⟩`; `h` excludes its identity part.
pub fn qite_coefficients(
    state: &QuantumState,
    h: &PauliSum,
    dtau: f64,
    basis: &[PauliString],
    sampling: &Sampling,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let h = h.without_constant();
    let mut est = sampling.estimator(state, seed);
    let m = basis.len();
    let mut s = RMat::zeros(m, m);
    let mut b = nalgebra::DVector::zeros(m);
    for (mu, pm) in basis.iter().enumerate() {
        for (nu, pn) in basis.iter().enumerate().skip(mu) {
            let (ph, p) = pm.mul(pn);
            // Re⟨P_μ P_ν⟩ vanishes unless the product is Hermitian
            let v = if ph.im.abs() < 0.5 { ph.re * est.string(&p)? } else { 0.0 };
            s[(mu, nu)] = v;
            s[(nu, mu)] = v;
        }
        let pmo = PauliSum::from_string(pm.clone(), ONE);
        // Im⟨P h⟩ = ⟨[P, h] / 2i⟩
        let comm = pmo.commutator(&h)?.scale(C64::new(0.0, -0.5)).simplified();
        b[mu] = 2.0 * dtau * est.expectation(&comm)?;
    }
    let e = est.expectation(&h)?;
    let h2 = h.multiply(&h)?.simplified();
    let e2 = est.expectation(&h2)?;
    let c = 1.0 - 2.0 * dtau * e + 2.0 * dtau * dtau * e2;
    if !(c > 0.0) {
        return Err(Error::Numerical(format!("step norm estimate {c} is not positive; reduce dtau")));
    }
    let a = &s * 2.0;
    let rhs = -&b / c.sqrt();
    let reg = &a + RMat::identity(m, m) * TIKHONOV;
    let x = reg
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .or_else(|| reg.lu().solve(&rhs))
        .ok_or_else(|| Error::Numerical("QITE linear system is singular".into()))?;
    let residual = (&a * &x - &rhs).norm();
    Ok((x.iter().copied().collect(), residual))
}

/// `exp(i Σ x_μ P_μ)` as a dense matrix.
pub fn step_unitary(n: usize, basis: &[PauliString], x: &[f64]) -> CMat {
    let mut a = PauliSum::zero(n);
    for (p, &v) in basis.iter().zip(x) {
        a.add_term(p.clone(), C64::new(v, 0.0));
    }
    expi_hermitian(&a.to_dense())
}

/// One step on a pure state. Returns the step parameters, residual, the
/// step unitary and the new state.
pub fn qite_step(
    state: &QuantumState,
    h: &PauliSum,
    dtau: f64,
    basis: &[PauliString],
    sampling: &Sampling,
    seed: u64,
) -> Result<(Vec<f64>, f64, CMat, QuantumState)> {
    let (x, residual) = qite_coefficients(state, h, dtau, basis, sampling, seed)?;
    let u = step_unitary(h.n_qubits(), basis, &x);
    let amps = state
        .amplitudes()
        .ok_or_else(|| Error::Invalid("QITE steps act on statevectors".into()))?;
    let v = &u * nalgebra::DVector::from_column_slice(amps);
    let next = QuantumState::from_amplitudes(v.iter().copied().collect())?;
    Ok((x, residual, u, next))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Evolves `initial` to `β = beta_total`. Expectation values come from
/// `sampling`; the evolved state is tracked exactly, and under gate noise
/// it is re-prepared each step from the compacted circuit.
pub fn qite_run(
    h: &PauliSum,
    initial: &QuantumState,
    config: &QiteConfig,
    sampling: &Sampling,
    seed: u64,
) -> Result<QiteResult> {
    config.validate()?;
    let n = h.n_qubits();
    if initial.n_qubits() != n {
        return Err(Error::Dimension(format!("Hamiltonian on {n} qubits, state on {}", initial.n_qubits())));
    }
    if !config.trotterize && n > MAX_FULL_BASIS_QUBITS {
        return Err(Error::Budget { required: n, budget: MAX_FULL_BASIS_QUBITS });
    }
    let full_mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let pieces: Vec<(PauliSum, Vec<PauliString>)> = if config.trotterize {
        h.without_constant()
            .terms()
            .map(|(p, c)| (PauliSum::from_string(p.clone(), *c), pauli_basis(n, p.support())))
            .collect()
    } else {
        vec![(h.clone(), pauli_basis(n, full_mask))]
    };
    let dim = 1usize << n;
    let noisy_gates = sampling.noise.as_ref().is_some_and(|m| m.has_gate_noise());
    if noisy_gates && n != 2 {
        return Err(Error::Invalid("gate noise in QITE needs a 2-qubit register".into()));
    }
    if noisy_gates && initial.amplitudes().is_none() {
        return Err(Error::Invalid("QITE starts from a statevector".into()));
    }
    let mut ideal = initial.clone();
    let mut unitary = CMat::identity(dim, dim);
    let mut current = initial.clone();
    let mut circuit = None;
    let mut steps = vec![QiteStep {
        beta: 0.0,
        energy: sampling.expectation(&current, h, derive_seed(seed, 0))?,
        x_norm: 0.0,
        residual: 0.0,
        flagged: false,
    }];
    for k in 1..=config.n_steps() {
        let step_seed = derive_seed(seed, k as u64);
        let mut xs = Vec::new();
        let mut residual = 0.0f64;
        for (j, (piece, basis)) in pieces.iter().enumerate() {
            let (x, r) = qite_coefficients(&current, piece, config.dtau, basis, sampling, derive_seed(step_seed, j as u64 + 1))?;
            let u = step_unitary(n, basis, &x);
            let amps = ideal.amplitudes().ok_or_else(|| Error::Invalid("QITE starts from a statevector".into()))?;
            let v = &u * nalgebra::DVector::from_column_slice(amps);
            ideal = QuantumState::from_amplitudes(v.iter().copied().collect())?;
            unitary = &u * &unitary;
            xs.extend(x);
            residual = residual.max(r);
            if noisy_gates {
                let kc = kak_compact(&unitary)?;
                current = sampling.prepare(&kc.circuit, initial)?;
                circuit = Some(kc);
            } else {
                current = ideal.clone();
            }
        }
        let energy = sampling.expectation(&current, h, derive_seed(step_seed, 0))?;
        steps.push(QiteStep {
            beta: k as f64 * config.dtau,
            energy,
            x_norm: norm(&xs),
            residual,
            flagged: residual > RESIDUAL_FLAG,
        });
    }
    if circuit.is_none() && n == 2 {
        circuit = Some(kak_compact(&unitary)?);
    }
    Ok(QiteResult { trace: QiteTrace { steps }, state: current, unitary, circuit })
}

/// State prepared by a compacted circuit from `initial`.
pub fn replay(circuit: &Circuit, initial: &QuantumState) -> Result<QuantumState> {
    crate::simulator::run(circuit, initial, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{fci, Sector};
    use crate::pauli::FermionEncoding;
    use crate::simulator::{Gate, NoiseModel};

    fn plus() -> QuantumState {
        let mut c = Circuit::new(1);
        c.push(Gate::H { qubit: 0 });
        crate::simulator::run(&c, &QuantumState::zero(1), None).unwrap()
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(pauli_basis(2, 0b11).len(), 15);
        assert_eq!(pauli_basis(3, 0b101).len(), 15);
        assert!(pauli_basis(3, 0b101).iter().all(|p| p.support() & 0b010 == 0));
    }

    #[test]
    fn vanishing_step_is_identity() {
        let h = PauliSum::parse("1 0 Z\n0.4 0 X\n").unwrap();
        let (x, _, _, next) = qite_step(&plus(), &h, 1e-12, &pauli_basis(1, 1), &Sampling::exact(), 0).unwrap();
        assert!(norm(&x) < 1e-8);
        let a = next.amplitudes().unwrap();
        let b = plus();
        let b = b.amplitudes().unwrap();
        assert!(a.iter().zip(b).all(|(u, v)| (u - v).norm() < 1e-8));
    }

    #[test]
    fn single_qubit_tracks_exact_evolution() {
        // e^{-βZ}|+⟩ has ⟨Z⟩ = −tanh(2β)
        let h = PauliSum::from_label("Z", ONE).unwrap();
        let cfg = QiteConfig { dtau: 0.01, beta_total: 1.0, trotterize: false };
        let res = qite_run(&h, &plus(), &cfg, &Sampling::exact(), 0).unwrap();
        for st in &res.trace.steps {
            assert!((st.energy + (2.0 * st.beta).tanh()).abs() < 1e-4, "β = {}: {}", st.beta, st.energy);
        }
    }

    #[test]
    fn ground_state_is_a_fixed_point() {
        let mo = crate::testing::random_mo(2, 2, 12);
        let h = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let r = fci(&h, Sector::All { n_qubits: 2 }).unwrap();
        let gs = QuantumState::from_amplitudes(r.state(0)).unwrap();
        let (_, _, _, next) = qite_step(&gs, &h, 0.5, &pauli_basis(2, 3), &Sampling::exact(), 0).unwrap();
        let e0 = gs.expectation(&h).unwrap();
        assert!((next.expectation(&h).unwrap() - e0).abs() < 1e-9);
    }

    #[test]
    fn two_qubit_run_converges_with_two_cnot_circuit() {
        let mo = crate::testing::random_mo(2, 2, 13);
        let h = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let exact = fci(&h, Sector::All { n_qubits: 2 }).unwrap().ground_energy();
        let init = QuantumState::zero(2);
        let res = qite_run(&h, &init, &QiteConfig::default(), &Sampling::exact(), 0).unwrap();
        let es: Vec<f64> = res.trace.steps.iter().map(|s| s.energy).collect();
        assert!(es.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{es:?}");
        assert!((res.trace.final_energy() - exact).abs() < 1e-4);
        let k = res.circuit.unwrap();
        assert!(k.two_cnot && k.circuit.cnot_count() == 2);
        let replayed = replay(&k.circuit, &init).unwrap();
        let a = replayed.amplitudes().unwrap();
        let b = res.state.amplitudes().unwrap();
        let overlap: C64 = a.iter().zip(b).map(|(u, v)| u.conj() * v).sum();
        assert!(overlap.norm_sqr() > 1.0 - 1e-9);
        assert_eq!(res.trace.steps.len(), 15);
    }

    #[test]
    fn trotterized_run_on_local_terms() {
        // uncoupled qubits: single-support steps are exact up to Trotter error
        let h = PauliSum::parse("1 0 IIX\n1 0 IIZ\n1 0 IXI\n1 0 IZI\n1 0 XII\n1 0 ZII\n").unwrap();
        let cfg = QiteConfig { dtau: 0.01, beta_total: 4.0, trotterize: true };
        let res = qite_run(&h, &QuantumState::zero(3), &cfg, &Sampling::exact(), 0).unwrap();
        let es: Vec<f64> = res.trace.steps.iter().map(|s| s.energy).collect();
        assert!(es.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!((res.trace.final_energy() + 3.0 * 2f64.sqrt()).abs() < 1e-3, "{}", res.trace.final_energy());
    }

    #[test]
    fn gate_noise_runs_through_compacted_circuit() {
        let mo = crate::testing::random_mo(2, 2, 15);
        let h = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let noise = NoiseModel { amplitude_damping: 0.01, ..Default::default() };
        let cfg = QiteConfig { dtau: 0.5, beta_total: 2.0, trotterize: false };
        let res = qite_run(&h, &QuantumState::zero(2), &cfg, &Sampling { shots: 0, noise: Some(noise), mitigation: None }, 0)
            .unwrap();
        assert!(res.state.amplitudes().is_none());
    }
}
