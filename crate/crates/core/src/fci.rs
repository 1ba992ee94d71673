//! Exact diagonalization in fixed particle-number / `S_z` sectors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, CMat, C64, ZERO};
use crate::orbital_space::MOIntegrals;
use crate::pauli::{s_squared_operator, FermionEncoding, PauliSum, DEFAULT_QUBIT_BUDGET};

/// Subspace of the register to diagonalize in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Sector {
    /// Whole register, no fermionic labels.
    All { n_qubits: usize },
    /// Jordan–Wigner register of `n_orb` spatial orbitals with fixed
    /// electron count and `2 S_z`.
    JordanWigner { n_orb: usize, n_elec: usize, two_sz: i32 },
    /// Two-electron pair sector (`N = 2`, `S_z = 0`) on two qubits.
    PairSector,
}

impl Sector {
    pub fn n_qubits(&self) -> usize {
        match self {
            Sector::All { n_qubits } => *n_qubits,
            Sector::JordanWigner { n_orb, .. } => 2 * n_orb,
            Sector::PairSector => 2,
        }
    }

    /// Register basis states of the sector, ascending.
    pub fn basis(&self) -> Vec<u64> {
        match *self {
            Sector::All { n_qubits } => (0..1u64 << n_qubits).collect(),
            Sector::PairSector => (0..4).collect(),
            Sector::JordanWigner { n_orb, n_elec, two_sz } => {
                let mask = (1u64 << n_orb) - 1;
                (0..1u64 << (2 * n_orb))
                    .filter(|&b| {
                        let up = (b & mask).count_ones() as i32;
                        let dn = (b >> n_orb).count_ones() as i32;
                        (up + dn) as usize == n_elec && up - dn == two_sz
                    })
                    .collect()
            }
        }
    }

    fn s_squared(&self) -> Result<Option<PauliSum>> {
        match *self {
            Sector::All { .. } => Ok(None),
            Sector::JordanWigner { n_orb, .. } => Ok(Some(s_squared_operator(n_orb)?)),
            Sector::PairSector => Ok(Some(FermionEncoding::PairSector.encode(&s_squared_operator(2)?)?)),
        }
    }

    fn labels(&self) -> (Option<usize>, Option<f64>) {
        match *self {
            Sector::All { .. } => (None, None),
            Sector::JordanWigner { n_elec, two_sz, .. } => (Some(n_elec), Some(two_sz as f64 / 2.0)),
            Sector::PairSector => (Some(2), Some(0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub n_elec: Option<usize>,
    pub sz: Option<f64>,
    pub s2: Option<f64>,
}

/// Eigenpairs of a sector, ascending in energy.
#[derive(Debug, Clone)]
pub struct FCIResult {
    pub energies: Vec<f64>,
    /// Column `k` is eigenvector `k` over [`FCIResult::basis`].
    pub vectors: CMat,
    pub basis: Vec<u64>,
    pub n_qubits: usize,
    pub labels: Vec<StateLabel>,
}

impl FCIResult {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Eigenvector `k` as a full register statevector.
    pub fn state(&self, k: usize) -> Vec<C64> {
        assert!(self.n_qubits <= 26, "register too wide for a dense statevector");
        let mut psi = vec![ZERO; 1usize << self.n_qubits];
        for (i, &b) in self.basis.iter().enumerate() {
            psi[b as usize] = self.vectors[(i, k)];
        }
        psi
    }

    /// Lowest state whose `S²` label is within `tol` of `s2`.
    pub fn lowest_with_s2(&self, s2: f64, tol: f64) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.s2.map(|v| (v - s2).abs() < tol).unwrap_or(false))
    }
}

fn sector_matrix(op: &PauliSum, basis: &[u64], index: &HashMap<u64, usize>) -> CMat {
    let d = basis.len();
    let mut m = CMat::zeros(d, d);
    for (col, &b) in basis.iter().enumerate() {
        for (p, c) in op.terms() {
            let (ph, b2) = p.apply_basis(b);
            if let Some(&row) = index.get(&b2) {
                m[(row, col)] += c * ph;
            }
        }
    }
    m
}

const DEGENERACY_TOL: f64 = 1e-8;

/// Diagonalizes `op` in each block of numerically degenerate energies and
/// rotates the eigenvectors to diagonalize it within the block.
fn resolve_degeneracies(energies: &[f64], vectors: &mut CMat, op: &CMat) {
    let n = energies.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (energies[end] - energies[start]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let small = block.adjoint() * op * &block;
            let (_, u) = herm_eigen(&small);
            let rotated = block * u;
            vectors.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }
}

fn finish(energies: Vec<f64>, mut vectors: CMat, basis: Vec<u64>, n_qubits: usize, s2: Option<CMat>, sector: (Option<usize>, Option<f64>)) -> FCIResult {
    let s2_values: Vec<Option<f64>> = match &s2 {
        Some(s2m) => {
            resolve_degeneracies(&energies, &mut vectors, s2m);
            (0..energies.len())
                .map(|k| {
                    let v = vectors.column(k);
                    Some((v.adjoint() * s2m * v)[(0, 0)].re)
                })
                .collect()
        }
        None => vec![None; energies.len()],
    };
    let labels = s2_values
        .into_iter()
        .map(|s2| StateLabel { n_elec: sector.0, sz: sector.1, s2 })
        .collect();
    FCIResult { energies, vectors, basis, n_qubits, labels }
}

/// Exact spectrum of a qubit operator restricted to `sector`.
pub fn fci(h: &PauliSum, sector: Sector) -> Result<FCIResult> {
    let n = sector.n_qubits();
    if h.n_qubits() != n {
        return Err(Error::Dimension(format!("operator on {} qubits, sector on {n}", h.n_qubits())));
    }
    if n > DEFAULT_QUBIT_BUDGET {
        return Err(Error::Budget { required: n, budget: DEFAULT_QUBIT_BUDGET });
    }
    if !h.is_hermitian(1e-10) {
        return Err(Error::Invalid(format!("operator is not Hermitian (max |Im c| = {:.3e})", h.max_imag())));
    }
    let basis = sector.basis();
    if basis.is_empty() {
        return Err(Error::Invalid("empty sector".into()));
    }
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let m = sector_matrix(h, &basis, &index);
    let (energies, vectors) = herm_eigen(&m);
    let s2 = sector.s_squared()?.map(|op| sector_matrix(&op, &basis, &index));
    Ok(finish(energies, vectors, basis, n, s2, sector.labels()))
}

/// Sign and result of `a_q |det⟩` under the Jordan–Wigner ordering.
#[inline]
fn annihilate(q: usize, det: u64) -> Option<(f64, u64)> {
    if det & (1 << q) == 0 {
        return None;
    }
    let sign = if (det & ((1u64 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, det ^ (1 << q)))
}

#[inline]
fn create(q: usize, det: u64) -> Option<(f64, u64)> {
    if det & (1 << q) != 0 {
        return None;
    }
    let sign = if (det & ((1u64 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, det | (1 << q)))
}

/// Determinant-space FCI straight from integrals, in the `(N, 2S_z)`
/// sector. Determinants use the Jordan–Wigner bit layout and sign
/// convention, so vectors agree with the Pauli path when both apply.
pub fn fci_mo(mo: &MOIntegrals, two_sz: i32) -> Result<FCIResult> {
    let n = mo.n_orb();
    if 2 * n > 62 {
        return Err(Error::Budget { required: 2 * n, budget: 62 });
    }
    let sector = Sector::JordanWigner { n_orb: n, n_elec: mo.n_elec, two_sz };
    let basis = sector.basis();
    if basis.is_empty() {
        return Err(Error::Invalid("empty sector".into()));
    }
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let d = basis.len();
    let m_so = 2 * n;
    let spatial = |q: usize| q % n;
    let spin = |q: usize| q / n;
    let mut h = CMat::zeros(d, d);
    for (col, &det) in basis.iter().enumerate() {
        h[(col, col)] += C64::new(mo.e0, 0.0);
        // one-body
        for r in 0..m_so {
            let Some((s1, d1)) = annihilate(r, det) else { continue };
            for p in 0..m_so {
                if spin(p) != spin(r) {
                    continue;
                }
                let v = mo.h[(spatial(p), spatial(r))];
                if v == 0.0 {
                    continue;
                }
                if let Some((s2, d2)) = create(p, d1) {
                    if let Some(&row) = index.get(&d2) {
                        h[(row, col)] += C64::new(v * s1 * s2, 0.0);
                    }
                }
            }
        }
        // two-body: ½ (pr|qs) a†_p a†_q a_s a_r with spin(p)=spin(r), spin(q)=spin(s)
        for r in 0..m_so {
            let Some((s1, d1)) = annihilate(r, det) else { continue };
            for s in 0..m_so {
                let Some((s2, d2)) = annihilate(s, d1) else { continue };
                for q in 0..m_so {
                    if spin(q) != spin(s) {
                        continue;
                    }
                    let Some((s3, d3)) = create(q, d2) else { continue };
                    for p in 0..m_so {
                        if spin(p) != spin(r) {
                            continue;
                        }
                        let v = mo.eri.get(spatial(p), spatial(r), spatial(q), spatial(s));
                        if v == 0.0 {
                            continue;
                        }
                        let Some((s4, d4)) = create(p, d3) else { continue };
                        if let Some(&row) = index.get(&d4) {
                            h[(row, col)] += C64::new(0.5 * v * s1 * s2 * s3 * s4, 0.0);
                        }
                    }
                }
            }
        }
    }
    let (energies, vectors) = herm_eigen(&h);
    let s2 = spin_squared_matrix(n, &basis, &index);
    Ok(finish(energies, vectors, basis, 2 * n, Some(s2), sector.labels()))
}

/// `Ŝ²` over a determinant basis, applied with fermionic bit operations.
fn spin_squared_matrix(n: usize, basis: &[u64], index: &HashMap<u64, usize>) -> CMat {
    let d = basis.len();
    let mut m = CMat::zeros(d, d);
    let mask = (1u64 << n) - 1;
    for (col, &det) in basis.iter().enumerate() {
        let sz = ((det & mask).count_ones() as f64 - (det >> n).count_ones() as f64) / 2.0;
        m[(col, col)] += C64::new(sz * sz + sz, 0.0);
        // S₋S₊ = Σ_pq a†_{p↓} a_{p↑} a†_{q↑} a_{q↓}
        for q in 0..n {
            let Some((s1, d1)) = annihilate(n + q, det) else { continue };
            let Some((s2, d2)) = create(q, d1) else { continue };
            for p in 0..n {
                let Some((s3, d3)) = annihilate(p, d2) else { continue };
                let Some((s4, d4)) = create(n + p, d3) else { continue };
                if let Some(&row) = index.get(&d4) {
                    m[(row, col)] += C64::new(s1 * s2 * s3 * s4, 0.0);
                }
            }
        }
    }
    m
}

/// FCI of `mo` on a given register encoding, through its Pauli image.
pub fn fci_encoded(mo: &MOIntegrals, encoding: FermionEncoding) -> Result<FCIResult> {
    let h = encoding.hamiltonian(mo)?;
    let sector = match encoding {
        FermionEncoding::JordanWigner { n_orb } => Sector::JordanWigner { n_orb, n_elec: mo.n_elec, two_sz: 0 },
        FermionEncoding::PairSector => Sector::PairSector,
    };
    fci(&h, sector)
}
