//! Equation-of-motion excited states on top of a prepared ground state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, CMat, C64};
use crate::pauli::{jw_annihilation, jw_creation, FermionEncoding, PauliSum, Spin};
use crate::simulator::{QuantumState, Sampling};

/// Metric condition number above which the pencil is rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Excitation operators `E_μ` on the register.
#[derive(Debug, Clone)]
pub struct ExcitationBasis {
    pub ops: Vec<PauliSum>,
    pub labels: Vec<String>,
}

fn spin_tag(s: Spin) -> &'static str {
    match s {
        Spin::Up => "a",
        Spin::Down => "b",
    }
}

impl ExcitationBasis {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn custom(ops: Vec<PauliSum>) -> Self {
        let labels = (0..ops.len()).map(|k| format!("E{k}")).collect();
        ExcitationBasis { ops, labels }
    }

    /// Spin-summed singles `Σ_σ a†_aσ a_iσ` and doubles
    /// `Σ_στ a†_aσ a†_bτ a_jτ a_iσ` (`i ≤ j`, `a ≤ b`).
    pub fn spin_summed(occupied: &[usize], virtuals: &[usize], encoding: FermionEncoding) -> Result<Self> {
        let n = encoding.n_orb();
        let mut ops = Vec::new();
        let mut labels = Vec::new();
        for &i in occupied {
            for &a in virtuals {
                let mut t = PauliSum::zero(2 * n);
                for s in Spin::BOTH {
                    t = t.add(&jw_creation(a, s, n)?.multiply(&jw_annihilation(i, s, n)?)?)?;
                }
                ops.push(encoding.encode(&t.simplified())?);
                labels.push(format!("{i}->{a}"));
            }
        }
        for (ii, &i) in occupied.iter().enumerate() {
            for &j in &occupied[ii..] {
                for (aa, &a) in virtuals.iter().enumerate() {
                    for &b in &virtuals[aa..] {
                        let mut t = PauliSum::zero(2 * n);
                        for s in Spin::BOTH {
                            for u in Spin::BOTH {
                                let op = jw_creation(a, s, n)?
                                    .multiply(&jw_creation(b, u, n)?)?
                                    .multiply(&jw_annihilation(j, u, n)?)?
                                    .multiply(&jw_annihilation(i, s, n)?)?;
                                t = t.add(&op)?;
                            }
                        }
                        let t = t.simplified();
                        if t.is_empty() {
                            continue;
                        }
                        ops.push(encoding.encode(&t)?);
                        labels.push(format!("{i}{j}->{a}{b}"));
                    }
                }
            }
        }
        Ok(ExcitationBasis { ops, labels })
    }

    /// Spin-resolved singles `a†_aσ a_iσ` and `S_z`-conserving doubles
    /// `a†_A a†_B a_J a_I` over spin-orbital pairs `I < J`, `A < B`. Unlike
    /// the spin-summed set it also reaches triplet excitations.
    pub fn spin_resolved(occupied: &[usize], virtuals: &[usize], encoding: FermionEncoding) -> Result<Self> {
        let n = encoding.n_orb();
        let mut ops = Vec::new();
        let mut labels = Vec::new();
        for s in Spin::BOTH {
            for &i in occupied {
                for &a in virtuals {
                    let t = jw_creation(a, s, n)?.multiply(&jw_annihilation(i, s, n)?)?;
                    ops.push(encoding.encode(&t.simplified())?);
                    labels.push(format!("{i}{t}->{a}{t}", t = spin_tag(s)));
                }
            }
        }
        let so = |orbs: &[usize]| -> Vec<(usize, Spin)> {
            Spin::BOTH.iter().flat_map(|&s| orbs.iter().map(move |&p| (p, s))).collect()
        };
        let (occ, vir) = (so(occupied), so(virtuals));
        for (x, &(i, si)) in occ.iter().enumerate() {
            for &(j, sj) in &occ[x + 1..] {
                for (y, &(a, sa)) in vir.iter().enumerate() {
                    for &(b, sb) in &vir[y + 1..] {
                        let dz = |s: Spin| if s == Spin::Up { 1i32 } else { -1 };
                        if dz(si) + dz(sj) != dz(sa) + dz(sb) {
                            continue;
                        }
                        let t = jw_creation(a, sa, n)?
                            .multiply(&jw_creation(b, sb, n)?)?
                            .multiply(&jw_annihilation(j, sj, n)?)?
                            .multiply(&jw_annihilation(i, si, n)?)?
                            .simplified();
                        if t.is_empty() {
                            continue;
                        }
                        ops.push(encoding.encode(&t)?);
                        labels.push(format!(
                            "{i}{}{j}{}->{a}{}{b}{}",
                            spin_tag(si),
                            spin_tag(sj),
                            spin_tag(sa),
                            spin_tag(sb)
                        ));
                    }
                }
            }
        }
        Ok(ExcitationBasis { ops, labels })
    }
}

/// `V_μν = ⟨[E†_μ, E_ν]⟩`, `M_μν = ⟨[E†_μ, H, E_ν]⟩`,
/// `W_μν = −⟨[E†_μ, E†_ν]⟩`, `Q_μν = −⟨[E†_μ, H, E†_ν]⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeomMatrices {
    pub m: CMat,
    pub q: CMat,
    pub v: CMat,
    pub w: CMat,
}

/// `([[A, B], C] + [A, [B, C]]) / 2`.
pub fn triple_commutator(a: &PauliSum, b: &PauliSum, c: &PauliSum) -> Result<PauliSum> {
    let left = a.commutator(b)?.commutator(c)?;
    let right = a.commutator(&b.commutator(c)?)?;
    Ok(left.add(&right)?.scale_real(0.5).simplified())
}

/// Expands every element into a Pauli operator and measures it on
/// `state`; one estimator is shared so measurement settings are reused.
pub fn build_matrices(
    state: &QuantumState,
    basis: &ExcitationBasis,
    h: &PauliSum,
    sampling: &Sampling,
    seed: u64,
) -> Result<QeomMatrices> {
    let k = basis.len();
    if k == 0 {
        return Err(Error::Invalid("empty excitation basis".into()));
    }
    let mut est = sampling.estimator(state, seed);
    let mut m = CMat::zeros(k, k);
    let mut q = CMat::zeros(k, k);
    let mut v = CMat::zeros(k, k);
    let mut w = CMat::zeros(k, k);
    let adj: Vec<PauliSum> = basis.ops.iter().map(|e| e.adjoint()).collect();
    for mu in 0..k {
        for nu in 0..k {
            let (ed_mu, e_nu, ed_nu) = (&adj[mu], &basis.ops[nu], &adj[nu]);
            v[(mu, nu)] = est.complex_expectation(&ed_mu.commutator(e_nu)?.simplified())?;
            w[(mu, nu)] = -est.complex_expectation(&ed_mu.commutator(ed_nu)?.simplified())?;
            m[(mu, nu)] = est.complex_expectation(&triple_commutator(ed_mu, h, e_nu)?)?;
            q[(mu, nu)] = -est.complex_expectation(&triple_commutator(ed_mu, h, ed_nu)?)?;
        }
    }
    Ok(QeomMatrices { m, q, v, w })
}

fn block(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let k = a.nrows();
    let mut out = CMat::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(a);
    out.view_mut((0, k), (k, k)).copy_from(b);
    out.view_mut((k, 0), (k, k)).copy_from(c);
    out.view_mut((k, k), (k, k)).copy_from(d);
    out
}

impl QeomMatrices {
    /// `[[M, Q], [Q*, M*]]`.
    pub fn hamiltonian_block(&self) -> CMat {
        block(&self.m, &self.q, &self.q.map(|z| z.conj()), &self.m.map(|z| z.conj()))
    }

    /// `[[V, W], [−W*, −V*]]`.
    pub fn metric_block(&self) -> CMat {
        block(&self.v, &self.w, &-self.w.map(|z| z.conj()), &-self.v.map(|z| z.conj()))
    }
}

/// `det G` of the metric block matrix (real for a Hermitian metric).
pub fn metric_determinant(qm: &QeomMatrices) -> f64 {
    qm.metric_block().determinant().re
}

/// Condition number `max|s| / min|s|` over metric eigenvalues.
pub fn metric_condition(qm: &QeomMatrices) -> f64 {
    let g = qm.metric_block();
    let gh = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let (s, _) = herm_eigen(&gh);
    let amax = s.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let amin = s.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if amin == 0.0 {
        f64::INFINITY
    } else {
        amax / amin
    }
}

/// Positive excitation energies of the pencil, ascending. The metric is
/// whitened (`X = U |s|^{-1/2}`) and the reduced problem
/// `X† A X z = ω J z` with `J = sign(s)` is solved through a Cholesky
/// factor of `X† A X`, or a general eigen-solve if that is indefinite.
pub fn solve(qm: &QeomMatrices) -> Result<Vec<f64>> {
    let g = qm.metric_block();
    let a = qm.hamiltonian_block();
    let gh = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let ah = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let (s, u) = herm_eigen(&gh);
    let amax = s.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let amin = s.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    let condition = if amin == 0.0 { f64::INFINITY } else { amax / amin };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition, determinant: metric_determinant(qm) });
    }
    let dim = s.len();
    let x = CMat::from_fn(dim, dim, |i, j| u[(i, j)] / s[j].abs().sqrt());
    let j_sign: Vec<f64> = s.iter().map(|v| v.signum()).collect();
    let hred = x.adjoint() * &ah * &x;
    let hred = (&hred + hred.adjoint()) * C64::new(0.5, 0.0);
    let mut omegas: Vec<f64> = match hred.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let jm = CMat::from_diagonal(&nalgebra::DVector::from_iterator(dim, j_sign.iter().map(|&v| C64::new(v, 0.0))));
            let t = l.adjoint() * jm * &l;
            let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
            herm_eigen(&t).0
        }
        None => {
            // J Hred z = ω z; real when the pencil is real
            let jh = CMat::from_fn(dim, dim, |i, k| hred[(i, k)] * j_sign[i]);
            let imag = jh.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if imag > 1e-10 {
                return Err(Error::Numerical("indefinite complex qEOM pencil".into()));
            }
            let ev = jh.map(|z| z.re).complex_eigenvalues();
            let worst = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if worst > 1e-8 {
                return Err(Error::Numerical(format!("complex excitation energy (|Im ω| = {worst:.3e})")));
            }
            ev.iter().map(|z| z.re).collect()
        }
    };
    omegas.retain(|&w| w > 0.0);
    omegas.sort_by(f64::total_cmp);
    Ok(omegas)
}
