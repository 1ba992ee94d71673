//! Variational eigensolver: hardware-efficient Ry, SO(4) and q-UCCSD
//! Ansätze, parameter-shift gradients and two optimizers.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::pauli::{jw_creation, jw_annihilation, PauliString, PauliSum, Spin};
use crate::simulator::{derive_seed, Circuit, Gate, QuantumState, Sampling};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnsatzKind {
    Ry { depth: usize },
    So4 { depth: usize, pairs: Vec<(usize, usize)> },
    Quccsd { occupied: Vec<usize>, virtuals: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n_qubits: usize,
    /// Basis index of the reference determinant.
    pub reference: u64,
}

/// One rotation angle in the built circuit that depends linearly on a
/// parameter: `angle = coeff · θ[param]`.
#[derive(Debug, Clone, Copy)]
struct Site {
    gate: usize,
    slot: usize,
    param: usize,
    coeff: f64,
}

impl AnsatzSpec {
    pub fn ry(n_qubits: usize, depth: usize, reference: u64) -> Self {
        AnsatzSpec { kind: AnsatzKind::Ry { depth }, n_qubits, reference }
    }

    /// SO(4) blocks on the linear chain `(i, i+1)`.
    pub fn so4(n_qubits: usize, depth: usize, reference: u64) -> Self {
        let pairs = (0..n_qubits.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        AnsatzSpec { kind: AnsatzKind::So4 { depth, pairs }, n_qubits, reference }
    }

    /// q-UCCSD on the Jordan–Wigner register of `n_orb` spatial orbitals
    /// with the lowest `n_elec / 2` doubly occupied.
    pub fn quccsd(n_orb: usize, n_elec: usize) -> Self {
        let k = n_elec / 2;
        let occ_bits = (1u64 << k) - 1;
        AnsatzSpec {
            kind: AnsatzKind::Quccsd { occupied: (0..k).collect(), virtuals: (k..n_orb).collect() },
            n_qubits: 2 * n_orb,
            reference: occ_bits | (occ_bits << n_orb),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::simulator::MAX_STATEVECTOR_QUBITS {
            return Err(Error::Invalid(format!("{} qubits is outside the simulator range", self.n_qubits)));
        }
        if self.n_qubits < 64 && self.reference >> self.n_qubits != 0 {
            return Err(Error::Invalid("reference sets bits beyond the register".into()));
        }
        match &self.kind {
            AnsatzKind::Ry { depth } => {
                if *depth == 0 {
                    return Err(Error::Invalid("ry depth must be at least 1".into()));
                }
            }
            AnsatzKind::So4 { depth, pairs } => {
                if *depth == 0 {
                    return Err(Error::Invalid("so4 depth must be at least 1".into()));
                }
                if pairs.is_empty() {
                    return Err(Error::Invalid("so4 needs at least one qubit pair".into()));
                }
                for &(a, b) in pairs {
                    if a == b || a >= self.n_qubits || b >= self.n_qubits {
                        return Err(Error::Invalid(format!("so4 pair ({a}, {b}) is not a pair of register qubits")));
                    }
                }
            }
            AnsatzKind::Quccsd { occupied, virtuals } => {
                if self.n_qubits % 2 != 0 {
                    return Err(Error::Invalid("q-UCCSD needs an even (spin-orbital) register".into()));
                }
                let n_orb = self.n_qubits / 2;
                if occupied.iter().chain(virtuals).any(|&p| p >= n_orb) {
                    return Err(Error::Invalid("q-UCCSD orbital index outside the register".into()));
                }
                if occupied.iter().any(|p| virtuals.contains(p)) {
                    return Err(Error::Invalid("q-UCCSD occupied and virtual lists overlap".into()));
                }
            }
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        match &self.kind {
            AnsatzKind::Ry { depth } => self.n_qubits * (depth + 1),
            AnsatzKind::So4 { depth, pairs } => 6 * pairs.len() * depth,
            AnsatzKind::Quccsd { occupied, virtuals } => {
                let (o, v) = (occupied.len(), virtuals.len());
                o * v + o * (o + 1) / 2 * (v * (v + 1) / 2)
            }
        }
    }

    /// The reference determinant; built circuits prepare it from `|0…0⟩`.
    pub fn reference_state(&self) -> QuantumState {
        QuantumState::basis(self.n_qubits, self.reference)
    }

    fn layout(&self, theta: &[f64]) -> Result<(Circuit, Vec<Site>)> {
        self.validate()?;
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "{} parameters given, ansatz takes {}",
                theta.len(),
                self.n_params()
            )));
        }
        let n = self.n_qubits;
        let mut c = Circuit::new(n);
        let mut sites = Vec::new();
        for q in 0..n {
            if self.reference >> q & 1 == 1 {
                c.push(Gate::X { qubit: q });
            }
        }
        match &self.kind {
            AnsatzKind::Ry { depth } => {
                let mut k = 0;
                for layer in 0..=*depth {
                    if layer > 0 {
                        for q in 0..n - 1 {
                            c.push(Gate::Cnot { control: q, target: q + 1 });
                        }
                    }
                    for q in 0..n {
                        sites.push(Site { gate: c.gates.len(), slot: 0, param: k, coeff: 1.0 });
                        c.push(Gate::Ry { qubit: q, theta: theta[k] });
                        k += 1;
                    }
                }
            }
            AnsatzKind::So4 { depth, pairs } => {
                let mut k = 0;
                for _ in 0..*depth {
                    for &(q0, q1) in pairs {
                        let mut angles = [0.0; 6];
                        for (s, a) in angles.iter_mut().enumerate() {
                            *a = theta[k + s];
                            sites.push(Site { gate: c.gates.len(), slot: s, param: k + s, coeff: 1.0 });
                        }
                        c.push(Gate::So4 { q0, q1, angles });
                        k += 6;
                    }
                }
            }
            AnsatzKind::Quccsd { .. } => {
                for (k, gen) in self.generators()?.iter().enumerate() {
                    // exp(θ G) with G = i Σ c_j P_j, one rotation per string
                    for (p, coef) in gen.terms() {
                        let weight = coef.im;
                        if weight == 0.0 {
                            continue;
                        }
                        pauli_rotation(&mut c, p, -2.0 * weight * theta[k], |gate| {
                            sites.push(Site { gate, slot: 0, param: k, coeff: -2.0 * weight });
                        });
                    }
                }
            }
        }
        Ok((c, sites))
    }

    /// Anti-Hermitian generators `T − T†` of the q-UCCSD amplitudes, singles
    /// then doubles, each in lexicographic index order.
    pub fn generators(&self) -> Result<Vec<PauliSum>> {
        let AnsatzKind::Quccsd { occupied, virtuals } = &self.kind else {
            return Err(Error::Invalid("generators exist for q-UCCSD only".into()));
        };
        let n_orb = self.n_qubits / 2;
        let mut out = Vec::new();
        for &i in occupied {
            for &a in virtuals {
                let mut t = PauliSum::zero(self.n_qubits);
                for s in Spin::BOTH {
                    t = t.add(&jw_creation(a, s, n_orb)?.multiply(&jw_annihilation(i, s, n_orb)?)?)?;
                }
                out.push(t.sub(&t.adjoint())?.simplified());
            }
        }
        for (ii, &i) in occupied.iter().enumerate() {
            for &j in &occupied[ii..] {
                for (aa, &a) in virtuals.iter().enumerate() {
                    for &b in &virtuals[aa..] {
                        let mut t = PauliSum::zero(self.n_qubits);
                        for s in Spin::BOTH {
                            for u in Spin::BOTH {
                                let op = jw_creation(a, s, n_orb)?
                                    .multiply(&jw_creation(b, u, n_orb)?)?
                                    .multiply(&jw_annihilation(j, u, n_orb)?)?
                                    .multiply(&jw_annihilation(i, s, n_orb)?)?;
                                t = t.add(&op)?;
                            }
                        }
                        out.push(t.sub(&t.adjoint())?.simplified());
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Appends `exp(−i φ P / 2)` as basis changes, a CNOT ladder and one Rz;
/// `on_rz` receives the gate index of the Rz.
fn pauli_rotation(c: &mut Circuit, p: &PauliString, phi: f64, mut on_rz: impl FnMut(usize)) {
    let support: Vec<usize> = (0..p.n_qubits()).filter(|&q| p.support() >> q & 1 == 1).collect();
    let Some(&last) = support.last() else {
        return;
    };
    for &q in &support {
        match p.letter(q) {
            'X' => {
                c.push(Gate::H { qubit: q });
            }
            'Y' => {
                c.push(Gate::Rx { qubit: q, theta: FRAC_PI_2 });
            }
            _ => {}
        }
    }
    for w in support.windows(2) {
        c.push(Gate::Cnot { control: w[0], target: w[1] });
    }
    on_rz(c.gates.len());
    c.push(Gate::Rz { qubit: last, theta: phi });
    for w in support.windows(2).rev() {
        c.push(Gate::Cnot { control: w[0], target: w[1] });
    }
    for &q in &support {
        match p.letter(q) {
            'X' => {
                c.push(Gate::H { qubit: q });
            }
            'Y' => {
                c.push(Gate::Rx { qubit: q, theta: -FRAC_PI_2 });
            }
            _ => {}
        }
    }
}

fn shift_site(c: &mut Circuit, site: &Site, delta: f64) {
    match &mut c.gates[site.gate] {
        Gate::Rx { theta, .. } | Gate::Ry { theta, .. } | Gate::Rz { theta, .. } => *theta += delta,
        Gate::So4 { angles, .. } => angles[site.slot] += delta,
        g => unreachable!("no angle to shift in {g:?}"),
    }
}

pub fn build_circuit(spec: &AnsatzSpec, theta: &[f64]) -> Result<Circuit> {
    Ok(spec.layout(theta)?.0)
}

/// Prepared state `U(θ)|ref⟩` under the gate noise of `sampling`.
pub fn prepare_state(spec: &AnsatzSpec, theta: &[f64], sampling: &Sampling) -> Result<QuantumState> {
    let c = build_circuit(spec, theta)?;
    sampling.prepare(&c, &QuantumState::zero(spec.n_qubits))
}

fn circuit_energy(spec: &AnsatzSpec, c: &Circuit, h: &PauliSum, sampling: &Sampling, seed: u64) -> Result<f64> {
    let st = sampling.prepare(c, &QuantumState::zero(spec.n_qubits))?;
    sampling.expectation(&st, h, seed)
}

/// `E(θ) = ⟨Ψ(θ)|H|Ψ(θ)⟩`, exact or sampled per `sampling`.
pub fn energy(spec: &AnsatzSpec, theta: &[f64], h: &PauliSum, sampling: &Sampling, seed: u64) -> Result<f64> {
    if h.n_qubits() != spec.n_qubits {
        return Err(Error::Dimension(format!(
            "Hamiltonian on {} qubits, ansatz on {}",
            h.n_qubits(),
            spec.n_qubits
        )));
    }
    circuit_energy(spec, &build_circuit(spec, theta)?, h, sampling, seed)
}

/// Gradient together with the number of energy evaluations it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    pub evaluations: usize,
}

/// `∂E/∂θ_k = Σ_sites coeff · [E(φ + π/2) − E(φ − π/2)] / 2`, shifting each
/// rotation angle that depends on `θ_k`.
pub fn parameter_shift_gradient(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &PauliSum,
    sampling: &Sampling,
    seed: u64,
) -> Result<Gradient> {
    let (base, sites) = spec.layout(theta)?;
    let mut g = vec![0.0; theta.len()];
    let mut evaluations = 0;
    for (s, site) in sites.iter().enumerate() {
        let mut plus = base.clone();
        shift_site(&mut plus, site, FRAC_PI_2);
        let mut minus = base.clone();
        shift_site(&mut minus, site, -FRAC_PI_2);
        let ep = circuit_energy(spec, &plus, h, sampling, derive_seed(seed, 2 * s as u64))?;
        let em = circuit_energy(spec, &minus, h, sampling, derive_seed(seed, 2 * s as u64 + 1))?;
        evaluations += 2;
        g[site.param] += site.coeff * 0.5 * (ep - em);
    }
    Ok(Gradient { values: g, evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VQEResult {
    pub energy: f64,
    pub parameters: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub evaluations: usize,
    #[serde(skip)]
    pub state: Option<QuantumState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearch {
    pub grid_points: usize,
    pub lambda_max: f64,
    pub golden_tol: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch { grid_points: 21, lambda_max: 2.0, golden_tol: 1e-4 }
    }
}

impl LineSearch {
    /// Minimizes `f` on `[0, λ_max]`: grid scan, then golden-section
    /// refinement inside the bracket around the best grid point.
    pub fn minimize(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64, usize)> {
        let m = self.grid_points.max(3);
        let step = self.lambda_max / (m - 1) as f64;
        let mut best = (0.0, f64::INFINITY);
        let mut evals = 0;
        let mut values = Vec::with_capacity(m);
        for k in 0..m {
            let l = k as f64 * step;
            let v = f(l)?;
            evals += 1;
            values.push(v);
            if v < best.1 {
                best = (l, v);
            }
        }
        let k = (best.0 / step).round() as usize;
        let (mut a, mut b) = (k.saturating_sub(1) as f64 * step, ((k + 1).min(m - 1)) as f64 * step);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - gr * (b - a);
        let mut x2 = a + gr * (b - a);
        let mut f1 = f(x1)?;
        let mut f2 = f(x2)?;
        evals += 2;
        while b - a > self.golden_tol {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = f(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = f(x2)?;
            }
            evals += 1;
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best.1 {
                best = (x, v);
            }
        }
        Ok((best.0, best.1, evals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    pub line_search: LineSearch,
    pub max_iter: usize,
    /// Stop once an iteration lowers the energy by less than this.
    pub tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { line_search: LineSearch::default(), max_iter: 200, tol: 1e-10 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Steepest descent `θ ← θ − λ* g` with `λ*` from [`LineSearch`]. Each
/// iteration draws its seeds from `derive_seed(seed, iteration)`.
pub fn gradient_descent(
    spec: &AnsatzSpec,
    h: &PauliSum,
    theta0: &[f64],
    opts: &DescentOptions,
    sampling: &Sampling,
    seed: u64,
) -> Result<VQEResult> {
    let mut theta = theta0.to_vec();
    let mut e = energy(spec, &theta, h, sampling, derive_seed(seed, u64::MAX))?;
    let mut evaluations = 1;
    let mut trace = Vec::new();
    let mut converged = false;
    for it in 0..opts.max_iter {
        let it_seed = derive_seed(seed, it as u64);
        let g = parameter_shift_gradient(spec, &theta, h, sampling, derive_seed(it_seed, 0))?;
        evaluations += g.evaluations;
        let gn = norm(&g.values);
        trace.push(TraceEntry { energy: e, gradient_norm: gn });
        if gn < 1e-12 {
            converged = true;
            break;
        }
        let ls_seed = derive_seed(it_seed, 1);
        let mut probe = 0u64;
        let (lam, e_new, n_ls) = opts.line_search.minimize(|l| {
            if l == 0.0 {
                return Ok(e);
            }
            probe += 1;
            let t: Vec<f64> = theta.iter().zip(&g.values).map(|(t, gi)| t - l * gi).collect();
            energy(spec, &t, h, sampling, derive_seed(ls_seed, probe))
        })?;
        evaluations += n_ls;
        if lam > 0.0 {
            for (t, gi) in theta.iter_mut().zip(&g.values) {
                *t -= lam * gi;
            }
        }
        let de = e - e_new;
        e = e_new.min(e);
        if de.abs() < opts.tol {
            converged = true;
            break;
        }
    }
    trace.push(TraceEntry { energy: e, gradient_norm: f64::NAN });
    let state = prepare_state(spec, &theta, sampling).ok();
    Ok(VQEResult { energy: e, parameters: theta, trace, converged, evaluations, state })
}

/// Quasi-Newton (BFGS) minimization of the exact energy with
/// parameter-shift gradients and a backtracking line search.
pub fn minimize_exact(spec: &AnsatzSpec, h: &PauliSum, theta0: &[f64]) -> Result<VQEResult> {
    minimize_exact_with(spec, h, theta0, 500, 1e-9)
}

pub fn minimize_exact_with(
    spec: &AnsatzSpec,
    h: &PauliSum,
    theta0: &[f64],
    max_iter: usize,
    gtol: f64,
) -> Result<VQEResult> {
    let exact = Sampling::exact();
    let n = theta0.len();
    let f = |t: &[f64]| energy(spec, t, h, &exact, 0);
    let grad = |t: &[f64]| parameter_shift_gradient(spec, t, h, &exact, 0);
    let mut x = theta0.to_vec();
    let mut fx = f(&x)?;
    let g0 = grad(&x)?;
    let mut evaluations = 1 + g0.evaluations;
    let mut g = g0.values;
    let mut hinv = RMat::identity(n, n);
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let gn = norm(&g);
        trace.push(TraceEntry { energy: fx, gradient_norm: gn });
        if gn < gtol {
            converged = true;
            break;
        }
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut d = -(&hinv * &gv);
        let mut slope = d.dot(&gv);
        if slope >= 0.0 {
            hinv = RMat::identity(n, n);
            d = -gv.clone();
            slope = -gv.norm_squared();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
            let fn_ = f(&xn)?;
            evaluations += 1;
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            converged = gn < gtol.sqrt();
            break;
        };
        let gn_new = grad(&xn)?;
        evaluations += gn_new.evaluations;
        let s = nalgebra::DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let y = nalgebra::DVector::from_iterator(n, gn_new.values.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let id = RMat::identity(n, n);
            let a = &id - &s * y.transpose() * rho;
            let b = &id - &y * s.transpose() * rho;
            hinv = &a * &hinv * &b + &s * s.transpose() * rho;
        }
        let df = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn_new.values;
        if df.abs() < 1e-15 && norm(&g) < gtol.sqrt() {
            converged = true;
            trace.push(TraceEntry { energy: fx, gradient_norm: norm(&g) });
            break;
        }
    }
    let state = prepare_state(spec, &x, &exact).ok();
    Ok(VQEResult { energy: fx, parameters: x, trace, converged, evaluations, state })
}

/// Central finite-difference gradient of the exact energy.
pub fn finite_difference_gradient(spec: &AnsatzSpec, theta: &[f64], h: &PauliSum, step: f64) -> Result<Vec<f64>> {
    let exact = Sampling::exact();
    let mut g = vec![0.0; theta.len()];
    for k in 0..theta.len() {
        let mut tp = theta.to_vec();
        tp[k] += step;
        let mut tm = theta.to_vec();
        tm[k] -= step;
        g[k] = (energy(spec, &tp, h, &exact, 0)? - energy(spec, &tm, h, &exact, 0)?) / (2.0 * step);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{fci, Sector};
    use crate::linalg::{expi_hermitian, max_abs_c, C64, ONE};
    use crate::pauli::{map_hamiltonian, FermionEncoding};

    #[test]
    fn pauli_rotation_matches_matrix_exponential() {
        for label in ["XYZ", "YIY", "ZZI", "IXI", "YXX"] {
            let p: PauliString = label.parse().unwrap();
            let phi = 0.37;
            let mut c = Circuit::new(3);
            pauli_rotation(&mut c, &p, phi, |_| {});
            let expect = expi_hermitian(&(p.to_dense() * C64::new(-phi / 2.0, 0.0)));
            assert!(max_abs_c(&(c.unitary().unwrap() - expect)) < 1e-12, "{label}");
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(AnsatzSpec::ry(4, 2, 0).n_params(), 12);
        let so4 = AnsatzSpec::so4(2, 1, 0);
        assert_eq!(so4.n_params(), 6);
        let c = build_circuit(&so4, &[0.1; 6]).unwrap();
        assert_eq!(c.cnot_count(), 2);
        assert_eq!(AnsatzSpec::quccsd(2, 2).n_params(), 2);
        assert_eq!(AnsatzSpec::quccsd(4, 4).n_params(), 4 + 3 * 3);
        assert!(build_circuit(&so4, &[0.0; 5]).is_err());
    }

    #[test]
    fn zero_parameters_keep_reference() {
        let ry = AnsatzSpec::ry(3, 2, 0);
        let st = prepare_state(&ry, &[0.0; 9], &Sampling::exact()).unwrap();
        assert!((st.probabilities()[0] - 1.0).abs() < 1e-14);
        let uccsd = AnsatzSpec::quccsd(3, 2);
        let st = prepare_state(&uccsd, &vec![0.0; uccsd.n_params()], &Sampling::exact()).unwrap();
        assert!((st.probabilities()[uccsd.reference as usize] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_ry_gradient_closed_form() {
        let spec = AnsatzSpec::ry(1, 1, 0);
        let h = PauliSum::from_label("Z", ONE).unwrap();
        // E = cos(θ0 + θ1)
        let g = parameter_shift_gradient(&spec, &[0.3, 0.0], &h, &Sampling::exact(), 0).unwrap();
        assert!((g.values[0] + 0.3f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn shift_rule_matches_finite_differences() {
        let mo = crate::testing::random_mo(2, 2, 3);
        let h4 = map_hamiltonian(&mo).unwrap();
        let h2 = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let specs = [
            (AnsatzSpec::ry(4, 2, 0), &h4),
            (AnsatzSpec::so4(2, 2, 0), &h2),
            (AnsatzSpec::quccsd(2, 2), &h4),
        ];
        for (spec, h) in specs {
            let theta = crate::testing::random_angles(spec.n_params(), 8);
            let g = parameter_shift_gradient(&spec, &theta, h, &Sampling::exact(), 0).unwrap();
            let fd = finite_difference_gradient(&spec, &theta, h, 1e-5).unwrap();
            for (a, b) in g.values.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{:?}", spec.kind);
            }
        }
    }

    #[test]
    fn so4_gradient_cost() {
        let mo = crate::testing::random_mo(2, 2, 4);
        let h = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let g = parameter_shift_gradient(&AnsatzSpec::so4(2, 1, 0), &[0.2; 6], &h, &Sampling::exact(), 0).unwrap();
        assert_eq!(g.evaluations, 12);
    }

    #[test]
    fn quccsd_is_exact_for_two_electrons() {
        let mo = crate::testing::random_mo(2, 2, 5);
        let h = map_hamiltonian(&mo).unwrap();
        let spec = AnsatzSpec::quccsd(2, 2);
        let res = minimize_exact(&spec, &h, &[0.0; 2]).unwrap();
        let exact = crate::fci::fci_mo(&mo, 0).unwrap().ground_energy();
        assert!((res.energy - exact).abs() < 1e-7, "{} vs {}", res.energy, exact);
        let rhf = crate::orbital_space::rhf_energy(&mo, 1);
        assert!((energy(&spec, &[0.0; 2], &h, &Sampling::exact(), 0).unwrap() - rhf).abs() < 1e-10);
    }

    #[test]
    fn so4_descent_reaches_ground_state() {
        let mo = crate::testing::random_mo(2, 2, 6);
        let h = FermionEncoding::PairSector.hamiltonian(&mo).unwrap();
        let exact = fci(&h, Sector::All { n_qubits: 2 }).unwrap().ground_energy();
        let spec = AnsatzSpec::so4(2, 1, 0);
        let res = gradient_descent(&spec, &h, &[0.0; 6], &DescentOptions::default(), &Sampling::exact(), 1).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-15));
        assert!((res.energy - exact).abs() < 1e-8, "{} vs {exact}", res.energy);
    }

    #[test]
    fn quadratic_landscape_line_search() {
        let ls = LineSearch::default();
        let (l, v, _) = ls.minimize(|l| Ok((l - 0.734).powi(2) + 1.0)).unwrap();
        assert!((l - 0.734).abs() < 1e-4 && (v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn variational_bound() {
        let mo = crate::testing::random_mo(2, 2, 7);
        let h = map_hamiltonian(&mo).unwrap();
        let e0 = fci(&h, Sector::All { n_qubits: 4 }).unwrap().ground_energy();
        let spec = AnsatzSpec::ry(4, 1, 0);
        for s in 0..50 {
            let th = crate::testing::random_angles(spec.n_params(), 100 + s);
            assert!(energy(&spec, &th, &h, &Sampling::exact(), 0).unwrap() >= e0 - 1e-9);
        }
    }
}
