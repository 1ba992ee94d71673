//! Subspace expansion of a two-electron active-space reference into the
//! orbitals of the large basis.
//!
//! The reference `Ψ0` lives in the active orbitals `A` (lowercase indices)
//! and is expanded as `[α + β_{Pr} E_{Pr} + γ_{TuVw} E_{TuVw}] Ψ0` with
//! `E_{Pr} = Σ_σ a†_{Pσ} a_{rσ}` and
//! `E_{TuVw} = Σ_{στ} a†_{Tσ} a†_{Vτ} a_{wτ} a_{uσ}` over every orbital `P`,
//! `T`, `V` of the large basis. With two electrons, every overlap and
//! Hamiltonian element contracts to the active-space one- and two-body
//! density matrices. The contractions below are written over spin
//! orbitals; the spin-summed operators are recovered by summing over the
//! spin labels of each operator.

use serde::{Deserialize, Serialize};

use crate::analysis::{measure_rdms, RDMPair};
use crate::error::{Error, Result};
use crate::linalg::{canonical_generalized_eigenvalues, orthogonal_complement, orthonormality_error, RMat};
use crate::orbital_space::MOIntegrals;
use crate::pauli::FermionEncoding;
use crate::simulator::{derive_seed, QuantumState, Sampling};

/// Relative overlap eigenvalue cut used by [`solve`].
pub const OVERLAP_THRESHOLD: f64 = 1e-8;

/// Compact two-body form `T_{EFGH}` of a two-electron Hamiltonian,
/// `Ĥ − e0 = Σ T_{EFGH} a†_{Eσ} a†_{Gτ} a_{Hτ} a_{Fσ}`, as a dense `n⁴`
/// array in `EFGH` order:
/// `T = (EF|GH)/2 + [δ_{GH} h_{EF} + δ_{EF} h_{GH}] / (2 (N − 1))`.
pub fn absorb_one_body(h: &RMat, eri: &crate::integrals::Eri, n_elec: usize) -> Result<Vec<f64>> {
    if n_elec != 2 {
        return Err(Error::Invalid(format!("compact form needs 2 electrons, got {n_elec}")));
    }
    let n = h.nrows();
    if eri.n() != n {
        return Err(Error::Dimension(format!("h over {n} orbitals, eri over {}", eri.n())));
    }
    let w = 1.0 / (2.0 * (n_elec as f64 - 1.0));
    let mut t = vec![0.0; n.pow(4)];
    for e in 0..n {
        for f in 0..n {
            for g in 0..n {
                for k in 0..n {
                    let mut v = 0.5 * eri.get(e, f, g, k);
                    if g == k {
                        v += w * h[(e, f)];
                    }
                    if e == f {
                        v += w * h[(g, k)];
                    }
                    t[((e * n + f) * n + g) * n + k] = v;
                }
            }
        }
    }
    Ok(t)
}

/// Which expansion operators enter the subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub singles: bool,
    pub doubles: bool,
    /// Restrict created orbitals (`P`, `T`, `V`) to the active space.
    pub active_only: bool,
}

impl Expansion {
    pub fn full() -> Self {
        Expansion { singles: true, doubles: true, active_only: false }
    }

    pub fn reference_only() -> Self {
        Expansion { singles: false, doubles: false, active_only: false }
    }

    pub fn active_only() -> Self {
        Expansion { singles: true, doubles: true, active_only: true }
    }
}

impl Default for Expansion {
    fn default() -> Self {
        Self::full()
    }
}

/// Expansion operator in spatial indices; active indices count from 0 in
/// the rotated full basis, whose first orbitals are the active ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionOp {
    Reference,
    Single { p: usize, r: usize },
    Double { t: usize, u: usize, v: usize, w: usize },
}

/// Two-electron expansion problem in a full basis rotated so the active
/// orbitals come first.
#[derive(Debug, Clone)]
pub struct VqseProblem {
    pub n_full: usize,
    pub n_active: usize,
    pub e0: f64,
    /// Compact two-body tensor over the rotated full basis.
    pub t: Vec<f64>,
    pub rdms: RDMPair,
    pub expansion: Expansion,
}

impl VqseProblem {
    /// `active` holds the active orbitals as orthonormal columns in the
    /// orbital basis of `full`; `rdms` are over those columns.
    pub fn new(full: &MOIntegrals, active: &RMat, rdms: RDMPair, expansion: Expansion) -> Result<Self> {
        let n = full.n_orb();
        let na = active.ncols();
        if active.nrows() != n {
            return Err(Error::Dimension(format!("active columns have {} rows, basis has {n}", active.nrows())));
        }
        if rdms.n_orb != na {
            return Err(Error::Dimension(format!("RDMs over {} orbitals, {na} active", rdms.n_orb)));
        }
        let err = orthonormality_error(active, &RMat::identity(n, n));
        if err > 1e-8 {
            return Err(Error::Invalid(format!("active orbitals not orthonormal (deviation {err:.3e})")));
        }
        let tr = rdms.spin_summed_one().trace();
        if (tr - 2.0).abs() > 1e-6 {
            return Err(Error::Invalid(format!("reference holds {tr:.6} electrons, expansion needs 2")));
        }
        let mut u = RMat::zeros(n, n);
        u.columns_mut(0, na).copy_from(active);
        if na < n {
            u.columns_mut(na, n - na).copy_from(&orthogonal_complement(active));
        }
        let rot = full.rotate(&u);
        let t = absorb_one_body(&rot.h, &rot.eri, 2)?;
        Ok(VqseProblem { n_full: n, n_active: na, e0: full.e0, t, rdms, expansion })
    }

    /// Operator list: the reference, singles `(P, r)`, then doubles with
    /// `(T, u) ≤ (V, w)` since `E_{TuVw} = E_{VwTu}`.
    pub fn operators(&self) -> Vec<ExpansionOp> {
        let created = if self.expansion.active_only { self.n_active } else { self.n_full };
        let na = self.n_active;
        let mut ops = vec![ExpansionOp::Reference];
        if self.expansion.singles {
            for p in 0..created {
                for r in 0..na {
                    ops.push(ExpansionOp::Single { p, r });
                }
            }
        }
        if self.expansion.doubles {
            let pairs: Vec<(usize, usize)> = (0..created).flat_map(|t| (0..na).map(move |u| (t, u))).collect();
            for (i, &(t, u)) in pairs.iter().enumerate() {
                for &(v, w) in &pairs[i..] {
                    ops.push(ExpansionOp::Double { t, u, v, w });
                }
            }
        }
        ops
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqseMatrices {
    pub h: RMat,
    pub s: RMat,
    pub operators: Vec<ExpansionOp>,
}

#[derive(Clone, Copy)]
enum SoOp {
    Ref,
    S(usize, usize),
    D(usize, usize, usize, usize),
}

/// Spin-orbital contraction engine over the rotated full basis. Spin
/// orbitals are `p + n·spin`.
struct Forms<'a> {
    n: usize,
    na: usize,
    t: &'a [f64],
    rho1: RMat,
    rho2: Vec<f64>,
    /// Active spin orbitals in full spin-orbital numbering.
    act: Vec<usize>,
}

impl Forms<'_> {
    fn spatial(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    fn active_index(&self, k: usize) -> Option<usize> {
        let (p, s) = self.spatial(k);
        (p < self.na).then_some(p + self.na * s)
    }

    fn tt(&self, e: usize, f: usize, g: usize, h: usize) -> f64 {
        let (e, se) = self.spatial(e);
        let (f, sf) = self.spatial(f);
        let (g, sg) = self.spatial(g);
        let (h, sh) = self.spatial(h);
        if se != sf || sg != sh {
            return 0.0;
        }
        let n = self.n;
        self.t[((e * n + f) * n + g) * n + h]
    }

    fn r1(&self, a: usize, b: usize) -> f64 {
        match (self.active_index(a), self.active_index(b)) {
            (Some(i), Some(j)) => self.rho1[(i, j)],
            _ => 0.0,
        }
    }

    /// `⟨a†_A a†_C a_D a_B⟩`.
    fn r2(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        match (self.active_index(a), self.active_index(b), self.active_index(c), self.active_index(d)) {
            (Some(i), Some(j), Some(k), Some(l)) => {
                let m = 2 * self.na;
                self.rho2[((i * m + j) * m + k) * m + l]
            }
            _ => 0.0,
        }
    }

    /// `(⟨O_bra† O_ket⟩, ⟨O_bra† Ĥ' O_ket⟩)` with `Ĥ'` the compact operator.
    /// A bra double `(X, y, Z, a)` enters as `E_{yXaZ}` and a bra single
    /// `(Q, s)` as `E_{sQ}`.
    fn element(&self, bra: SoOp, ket: SoOp) -> (f64, f64) {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let act = &self.act;
        match (bra, ket) {
            (SoOp::Ref, SoOp::Ref) => {
                let mut h = 0.0;
                for &e in act {
                    for &f in act {
                        for &g in act {
                            for &k in act {
                                h += self.tt(e, f, g, k) * self.r2(e, f, g, k);
                            }
                        }
                    }
                }
                (1.0, h)
            }
            (SoOp::Ref, SoOp::S(p, r)) => {
                let mut h = 0.0;
                for &e in act {
                    for &g in act {
                        for &k in act {
                            h += self.tt(e, p, g, k) * self.r2(e, r, g, k);
                        }
                        for &f in act {
                            h += self.tt(e, f, g, p) * self.r2(e, f, g, r);
                        }
                    }
                }
                (self.r1(p, r), h)
            }
            (SoOp::Ref, SoOp::D(t, u, v, w)) => {
                let mut h = 0.0;
                for &e in act {
                    for &g in act {
                        h += self.tt(e, v, g, t) * self.r2(e, w, g, u) + self.tt(e, t, g, v) * self.r2(e, u, g, w);
                    }
                }
                (self.r2(t, u, v, w), h)
            }
            (SoOp::S(q, s), SoOp::Ref) => {
                let mut h = 0.0;
                for &f in act {
                    for &g in act {
                        for &k in act {
                            h += self.tt(q, f, g, k) * self.r2(g, k, s, f);
                        }
                    }
                    for &e in act {
                        for &k in act {
                            h += self.tt(e, f, q, k) * self.r2(e, f, s, k);
                        }
                    }
                }
                (self.r1(s, q), h)
            }
            (SoOp::S(q, s), SoOp::S(p, r)) => {
                let ov = d(p, q) * self.r1(s, r) + self.r2(p, r, s, q);
                let mut h = 0.0;
                for &a in act {
                    for &b in act {
                        h += self.tt(q, b, a, p) * self.r2(a, r, s, b)
                            + self.tt(q, p, a, b) * self.r2(a, b, s, r)
                            + self.tt(a, b, q, p) * self.r2(a, b, s, r)
                            + self.tt(a, p, q, b) * self.r2(a, r, s, b);
                    }
                }
                (ov, h)
            }
            (SoOp::S(q, s), SoOp::D(t, u, v, w)) => {
                let ov = d(q, t) * self.r2(s, u, v, w) - d(q, v) * self.r2(s, u, t, w);
                let mut h = 0.0;
                for &g in act {
                    h += self.tt(q, t, g, v) * self.r2(g, w, s, u)
                        + self.tt(g, v, q, t) * self.r2(g, w, s, u)
                        + self.tt(q, v, g, t) * self.r2(g, u, s, w)
                        + self.tt(g, t, q, v) * self.r2(g, u, s, w);
                }
                (ov, h)
            }
            (SoOp::D(x, y, z, a), SoOp::Ref) => {
                let mut h = 0.0;
                for &f in act {
                    for &k in act {
                        h += self.tt(x, f, z, k) * self.r2(a, k, y, f) + self.tt(z, f, x, k) * self.r2(a, f, y, k);
                    }
                }
                (self.r2(a, z, y, x), h)
            }
            (SoOp::D(x, y, z, a), SoOp::S(p, r)) => {
                let ov = d(x, p) * self.r2(a, z, y, r) - d(z, p) * self.r2(y, r, a, x);
                let mut h = 0.0;
                for &f in act {
                    h += self.tt(x, f, z, p) * self.r2(a, r, y, f)
                        + self.tt(z, f, x, p) * self.r2(a, f, y, r)
                        + self.tt(z, p, x, f) * self.r2(a, r, y, f)
                        + self.tt(x, p, z, f) * self.r2(a, f, y, r);
                }
                (ov, h)
            }
            (SoOp::D(x, y, z, a), SoOp::D(t, u, v, w)) => {
                let ov = (d(x, t) * d(v, z) - d(z, t) * d(x, v)) * self.r2(a, w, y, u);
                let h = (self.tt(z, v, x, t) + self.tt(x, t, z, v)) * self.r2(a, w, y, u)
                    + (self.tt(z, t, x, v) + self.tt(x, v, z, t)) * self.r2(a, u, y, w);
                (ov, h)
            }
        }
    }

    /// Spin-orbital components of a spin-summed operator.
    fn components(&self, op: ExpansionOp) -> Vec<SoOp> {
        let n = self.n;
        match op {
            ExpansionOp::Reference => vec![SoOp::Ref],
            ExpansionOp::Single { p, r } => (0..2).map(|s| SoOp::S(p + n * s, r + n * s)).collect(),
            ExpansionOp::Double { t, u, v, w } => (0..2)
                .flat_map(|s| (0..2).map(move |z| SoOp::D(t + n * s, u + n * s, v + n * z, w + n * z)))
                .collect(),
        }
    }
}

/// Assembles the overlap and Hamiltonian forms. `H` includes `e0 · S`.
pub fn build_forms(problem: &VqseProblem) -> Result<VqseMatrices> {
    let n = problem.n_full;
    let na = problem.n_active;
    if problem.t.len() != n.pow(4) {
        return Err(Error::Dimension(format!("T has {} entries for {n} orbitals", problem.t.len())));
    }
    let act: Vec<usize> = (0..2).flat_map(|s| (0..na).map(move |p| p + n * s)).collect();
    let forms = Forms {
        n,
        na,
        t: &problem.t,
        rho1: problem.rdms.spin_orbital_one(),
        rho2: problem.rdms.spin_orbital_two(),
        act,
    };
    let ops = problem.operators();
    let comps: Vec<Vec<SoOp>> = ops.iter().map(|&o| forms.components(o)).collect();
    let dim = ops.len();
    let mut s = RMat::zeros(dim, dim);
    let mut h = RMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (mut sv, mut hv) = (0.0, 0.0);
            for &b in &comps[i] {
                for &k in &comps[j] {
                    let (a, c) = forms.element(b, k);
                    sv += a;
                    hv += c;
                }
            }
            s[(i, j)] = sv;
            h[(i, j)] = hv + problem.e0 * sv;
        }
    }
    Ok(VqseMatrices { h, s, operators: ops })
}

/// Lowest root of `H v = E S v` after dropping overlap directions below
/// `OVERLAP_THRESHOLD · max`.
pub fn solve(vm: &VqseMatrices) -> Result<f64> {
    let h = (&vm.h + vm.h.transpose()) * 0.5;
    let s = (&vm.s + vm.s.transpose()) * 0.5;
    let e = canonical_generalized_eigenvalues(&h, &s, OVERLAP_THRESHOLD)?;
    Ok(e[0])
}

/// Measures the reference RDMs on `state` and returns the expanded energy.
pub fn vqse_energy(
    full: &MOIntegrals,
    active: &RMat,
    state: &QuantumState,
    encoding: FermionEncoding,
    expansion: Expansion,
    sampling: &Sampling,
    seed: u64,
) -> Result<f64> {
    let rdms = measure_rdms(state, encoding, sampling, seed)?;
    let problem = VqseProblem::new(full, active, rdms, expansion)?;
    solve(&build_forms(&problem)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStatistics {
    pub mean: f64,
    /// Sample standard deviation over √n.
    pub std_error: f64,
    pub samples: Vec<f64>,
}

/// Re-measures the RDMs `n_repeats` times with independent seeds and
/// re-solves each time. On the exact path a single evaluation is used.
#[allow(clippy::too_many_arguments)]
pub fn sample_statistics(
    full: &MOIntegrals,
    active: &RMat,
    state: &QuantumState,
    encoding: FermionEncoding,
    expansion: Expansion,
    sampling: &Sampling,
    n_repeats: usize,
    seed: u64,
) -> Result<SampleStatistics> {
    if n_repeats == 0 {
        return Err(Error::Invalid("n_repeats must be positive".into()));
    }
    let repeats = if sampling.is_exact() { 1 } else { n_repeats };
    let mut samples = Vec::with_capacity(repeats);
    for k in 0..repeats {
        samples.push(vqse_energy(full, active, state, encoding, expansion, sampling, derive_seed(seed, k as u64))?);
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let std_error = if samples.len() > 1 {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(SampleStatistics { mean, std_error, samples })
}
