//! Orbital-basis Hamiltonians: integral transformation, frozen core, MP2
//! natural orbitals and active-space selection.

use serde::{Deserialize, Serialize};

use crate::bundle::IntegralBundle;
use crate::error::{Error, Result};
use crate::integrals::Eri;
use crate::linalg::{fix_column_signs, orthogonal_complement, orthonormality_error, sym_eigen, RMat};

/// `H = e0 + Σ h_pq a†_p a_q + ½ Σ (pr|qs) a†_p a†_q a_s a_r` over an
/// orthonormal spatial-orbital set.
#[derive(Debug, Clone, PartialEq)]
pub struct MOIntegrals {
    pub e0: f64,
    pub h: RMat,
    pub eri: Eri,
    pub n_elec: usize,
    pub restricted: bool,
}

impl MOIntegrals {
    pub fn new(e0: f64, h: RMat, eri: Eri, n_elec: usize) -> Result<Self> {
        let mo = MOIntegrals { e0, h, eri, n_elec, restricted: true };
        mo.validate()?;
        Ok(mo)
    }

    pub fn n_orb(&self) -> usize {
        self.h.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_orb();
        if self.h.ncols() != n || self.eri.n() != n {
            return Err(Error::Dimension(format!(
                "h is {}x{}, eri built for {}",
                self.h.nrows(),
                self.h.ncols(),
                self.eri.n()
            )));
        }
        let asym = (&self.h - self.h.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::format("h", format!("not symmetric (max asymmetry {asym:.3e})")));
        }
        if self.restricted && self.n_elec % 2 != 0 {
            return Err(Error::format("n_elec", "restricted reference needs an even electron count"));
        }
        if self.n_elec > 2 * n {
            return Err(Error::format("n_elec", "more electrons than spin orbitals"));
        }
        Ok(())
    }

    /// Integrals in the orbital basis `φ'_j = Σ_i φ_i c_ij`.
    pub fn rotate(&self, c: &RMat) -> MOIntegrals {
        MOIntegrals {
            e0: self.e0,
            h: c.transpose() * &self.h * c,
            eri: self.eri.transform(c),
            n_elec: self.n_elec,
            restricted: self.restricted,
        }
    }

    /// Keeps only the listed orbitals (no folding). Electron count unchanged.
    pub fn select(&self, keep: &[usize]) -> MOIntegrals {
        let m = keep.len();
        let h = RMat::from_fn(m, m, |i, j| self.h[(keep[i], keep[j])]);
        let mut eri = Eri::zeros(m);
        for p in 0..m {
            for r in 0..=p {
                for q in 0..=p {
                    for s in 0..=q {
                        eri.set(p, r, q, s, self.eri.get(keep[p], keep[r], keep[q], keep[s]));
                    }
                }
            }
        }
        MOIntegrals { e0: self.e0, h, eri, n_elec: self.n_elec, restricted: self.restricted }
    }

    /// Closed-shell Fock matrix for the density `2 C Cᵀ` of the orthonormal
    /// occupied columns `occ` (expressed in this orbital basis).
    pub fn fock(&self, occ: &RMat) -> RMat {
        let n = self.n_orb();
        let d = occ * occ.transpose();
        let mut f = self.h.clone();
        for p in 0..n {
            for q in 0..=p {
                let mut v = 0.0;
                for r in 0..n {
                    for s in 0..n {
                        let drs = d[(r, s)];
                        if drs != 0.0 {
                            v += drs * (2.0 * self.eri.get(p, q, r, s) - self.eri.get(p, r, s, q));
                        }
                    }
                }
                f[(p, q)] += v;
                if p != q {
                    f[(q, p)] += v;
                }
            }
        }
        f
    }
}

/// `h = Cᵀ hcore C`, `(pr|qs)` by quarter transformations, `e0 = E_nuc`.
pub fn ao2mo(bundle: &IntegralBundle, coeffs: &RMat) -> Result<MOIntegrals> {
    if coeffs.nrows() != bundle.n_b1 {
        return Err(Error::Dimension(format!(
            "coefficients have {} rows, bundle has {} functions",
            coeffs.nrows(),
            bundle.n_b1
        )));
    }
    let err = orthonormality_error(coeffs, &bundle.s1);
    if err > 1e-8 {
        return Err(Error::Invalid(format!(
            "orbital coefficients not orthonormal under s1 (deviation {err:.3e})"
        )));
    }
    Ok(MOIntegrals {
        e0: bundle.e_nuc,
        h: coeffs.transpose() * &bundle.hcore * coeffs,
        eri: bundle.eri.transform(coeffs),
        n_elec: 2 * bundle.n_occ,
        restricted: true,
    })
}

/// Folds doubly occupied `core` orbitals into `e0` and an effective
/// one-body operator; their rows and columns are removed.
pub fn freeze_core(mo: &MOIntegrals, core: &[usize]) -> Result<MOIntegrals> {
    let n = mo.n_orb();
    let mut is_core = vec![false; n];
    for &c in core {
        if c >= n {
            return Err(Error::Invalid(format!("core index {c} out of range for {n} orbitals")));
        }
        if is_core[c] {
            return Err(Error::Invalid(format!("core index {c} listed twice")));
        }
        is_core[c] = true;
    }
    if 2 * core.len() > mo.n_elec {
        return Err(Error::Invalid("more core electrons than electrons".into()));
    }
    let g = &mo.eri;
    let mut e0 = mo.e0;
    for &i in core {
        e0 += 2.0 * mo.h[(i, i)];
        for &j in core {
            e0 += 2.0 * g.get(i, i, j, j) - g.get(i, j, j, i);
        }
    }
    let mut h = mo.h.clone();
    for p in 0..n {
        for q in 0..n {
            for &i in core {
                h[(p, q)] += 2.0 * g.get(p, q, i, i) - g.get(p, i, i, q);
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&p| !is_core[p]).collect();
    let dressed = MOIntegrals { e0, h, eri: mo.eri.clone(), n_elec: mo.n_elec, restricted: mo.restricted };
    let mut out = dressed.select(&keep);
    out.n_elec -= 2 * core.len();
    Ok(out)
}

/// Energy of the closed-shell determinant occupying orbitals `0..n_occ`.
pub fn rhf_energy(mo: &MOIntegrals, n_occ: usize) -> f64 {
    let g = &mo.eri;
    let mut e = mo.e0;
    for i in 0..n_occ {
        e += 2.0 * mo.h[(i, i)];
        for j in 0..n_occ {
            e += 2.0 * g.get(i, i, j, j) - g.get(i, j, j, i);
        }
    }
    e
}

/// Orbitals rotated so the Fock matrix of `occ` is diagonal within the
/// occupied and virtual blocks.
#[derive(Debug, Clone)]
pub struct Semicanonical {
    pub mo: MOIntegrals,
    /// Orbital energies, occupied block first, each block ascending.
    pub energies: Vec<f64>,
    /// Columns are the new orbitals in the input basis.
    pub rotation: RMat,
    pub n_occ: usize,
}

/// Builds the Fock matrix from `occ` (orthonormal columns in the orbital
/// basis of `mo`) and diagonalizes its occupied and virtual blocks.
pub fn semicanonicalize(mo: &MOIntegrals, occ: &RMat) -> Result<Semicanonical> {
    let n = mo.n_orb();
    if occ.nrows() != n {
        return Err(Error::Dimension(format!("occupied coefficients have {} rows, expected {n}", occ.nrows())));
    }
    let err = orthonormality_error(occ, &RMat::identity(n, n));
    if err > 1e-8 {
        return Err(Error::Invalid(format!("occupied orbitals not orthonormal (deviation {err:.3e})")));
    }
    let f = mo.fock(occ);
    let vir = orthogonal_complement(occ);
    let (eo, uo) = sym_eigen(&(occ.transpose() * &f * occ));
    let (ev, uv) = sym_eigen(&(vir.transpose() * &f * &vir));
    let mut co = occ * uo;
    let mut cv = vir * uv;
    fix_column_signs(&mut co);
    fix_column_signs(&mut cv);
    let k = occ.ncols();
    let mut rotation = RMat::zeros(n, n);
    rotation.columns_mut(0, k).copy_from(&co);
    rotation.columns_mut(k, n - k).copy_from(&cv);
    let energies = eo.into_iter().chain(ev).collect();
    Ok(Semicanonical { mo: mo.rotate(&rotation), energies, rotation, n_occ: k })
}

#[derive(Debug, Clone)]
pub struct Mp2Result {
    pub corr_energy: f64,
    /// Unrelaxed one-body density in the input orbital basis.
    pub rdm1: RMat,
}

/// Closed-shell MP2 with orbitals `0..n_occ` occupied. Orbital energies come
/// from the Fock matrix of those orbitals, made block diagonal first.
pub fn mp2(mo: &MOIntegrals, n_occ: usize) -> Result<Mp2Result> {
    let n = mo.n_orb();
    if n_occ > n {
        return Err(Error::Invalid(format!("{n_occ} occupied orbitals requested, only {n} available")));
    }
    let occ = RMat::identity(n, n).columns(0, n_occ).into_owned();
    let sc = semicanonicalize(mo, &occ)?;
    // in the semicanonical basis the occupied block is spanned by 0..n_occ
    let (no, nv) = (n_occ, n - n_occ);
    let eps = &sc.energies;
    let g = &sc.mo.eri;
    let idx = |i: usize, a: usize, j: usize, b: usize| ((i * nv + a) * no + j) * nv + b;
    let mut t = vec![0.0; no * nv * no * nv];
    let mut ecorr = 0.0;
    for i in 0..no {
        for a in 0..nv {
            for j in 0..no {
                for b in 0..nv {
                    let denom = eps[i] + eps[j] - eps[no + a] - eps[no + b];
                    let iajb = g.get(i, no + a, j, no + b);
                    if denom.abs() < 1e-12 {
                        if iajb.abs() < 1e-14 {
                            continue;
                        }
                        return Err(Error::Numerical(format!(
                            "MP2 denominator vanishes for ({i},{j})->({a},{b})"
                        )));
                    }
                    let tv = iajb / denom;
                    t[idx(i, a, j, b)] = tv;
                    ecorr += tv * (2.0 * iajb - g.get(i, no + b, j, no + a));
                }
            }
        }
    }
    let tt = |i: usize, a: usize, j: usize, b: usize| 2.0 * t[idx(i, a, j, b)] - t[idx(i, b, j, a)];
    let mut d = RMat::zeros(n, n);
    for i in 0..no {
        for j in 0..no {
            let mut v = 0.0;
            for k in 0..no {
                for a in 0..nv {
                    for b in 0..nv {
                        v += t[idx(i, a, k, b)] * tt(j, a, k, b);
                    }
                }
            }
            d[(i, j)] = if i == j { 2.0 } else { 0.0 } - 2.0 * v;
        }
    }
    for a in 0..nv {
        for b in 0..nv {
            let mut v = 0.0;
            for i in 0..no {
                for j in 0..no {
                    for c in 0..nv {
                        v += t[idx(i, a, j, c)] * tt(i, b, j, c);
                    }
                }
            }
            d[(no + a, no + b)] = 2.0 * v;
        }
    }
    let d = (&d + d.transpose()) * 0.5;
    let rdm1 = &sc.rotation * d * sc.rotation.transpose();
    Ok(Mp2Result { corr_energy: ecorr, rdm1 })
}

/// Eigen-decomposition of a one-body density with occupations descending.
/// Ties keep the lower index first; each column's largest component is
/// made positive.
pub fn natural_orbitals(rdm1: &RMat) -> (Vec<f64>, RMat) {
    let (w, v) = sym_eigen(rdm1);
    let n = w.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let occ = order.iter().map(|&k| w[k]).collect();
    let mut rot = RMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    fix_column_signs(&mut rot);
    (occ, rot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveLabel {
    FullIao,
    HonoLuno,
    HfLowe,
    Custom,
}

/// Orbitals retained in an active space, and those folded in as core.
#[derive(Debug, Clone)]
pub struct ActiveSpace {
    /// Active orbitals as columns in the source orbital basis.
    pub coeff: RMat,
    /// Frozen doubly occupied orbitals in the same basis.
    pub core: RMat,
    pub label: ActiveLabel,
    /// Natural occupations of the active orbitals when an MP2 density was used.
    pub occupations: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "size")]
pub enum ActiveSelector {
    Full,
    /// `k` semicanonical orbitals around the Fermi level.
    HfWindow(usize),
    /// Highest occupied and lowest unoccupied MP2 natural orbitals.
    HonoLuno,
}

fn fold_into_active(mo: &MOIntegrals, rotation: &RMat, n_core: usize, n_active: usize) -> Result<MOIntegrals> {
    let rotated = mo.rotate(rotation);
    let core: Vec<usize> = (0..n_core).collect();
    let frozen = freeze_core(&rotated, &core)?;
    let keep: Vec<usize> = (0..n_active).collect();
    Ok(frozen.select(&keep))
}

/// Carves an active space with `n_active_elec` electrons out of `mo`, whose
/// first `n_elec / 2` orbitals are taken as the occupied reference.
pub fn make_active_space(
    mo: &MOIntegrals,
    selector: ActiveSelector,
    n_active_elec: usize,
) -> Result<(MOIntegrals, ActiveSpace)> {
    let n = mo.n_orb();
    let n_occ = mo.n_elec / 2;
    if n_active_elec % 2 != 0 || n_active_elec > mo.n_elec {
        return Err(Error::Invalid(format!(
            "active electron count {n_active_elec} incompatible with {} electrons",
            mo.n_elec
        )));
    }
    let n_act_occ = n_active_elec / 2;
    let n_core = n_occ - n_act_occ;
    match selector {
        ActiveSelector::Full => {
            if n_active_elec != mo.n_elec {
                return Err(Error::Invalid("full selector keeps every electron".into()));
            }
            let space = ActiveSpace {
                coeff: RMat::identity(n, n),
                core: RMat::zeros(n, 0),
                label: ActiveLabel::FullIao,
                occupations: None,
            };
            Ok((mo.clone(), space))
        }
        ActiveSelector::HfWindow(k) => {
            if k > n - n_core || k < n_act_occ {
                return Err(Error::Invalid(format!(
                    "window of {k} orbitals does not fit {n} orbitals with {n_core} core"
                )));
            }
            let occ = RMat::identity(n, n).columns(0, n_occ).into_owned();
            let sc = semicanonicalize(mo, &occ)?;
            let act = fold_into_active(mo, &sc.rotation, n_core, k)?;
            let space = ActiveSpace {
                coeff: sc.rotation.columns(n_core, k).into_owned(),
                core: sc.rotation.columns(0, n_core).into_owned(),
                label: ActiveLabel::HfLowe,
                occupations: None,
            };
            Ok((act, space))
        }
        ActiveSelector::HonoLuno => {
            if n_active_elec != 2 {
                return Err(Error::Invalid("HONO/LUNO space holds exactly 2 electrons".into()));
            }
            if n_occ == 0 || n_occ >= n {
                return Err(Error::Invalid("HONO/LUNO needs occupied and virtual orbitals".into()));
            }
            let res = mp2(mo, n_occ)?;
            let (occs, rot) = natural_orbitals(&res.rdm1);
            let act = fold_into_active(mo, &rot, n_core, 2)?;
            let space = ActiveSpace {
                coeff: rot.columns(n_core, 2).into_owned(),
                core: rot.columns(0, n_core).into_owned(),
                label: ActiveLabel::HonoLuno,
                occupations: Some(occs[n_core..n_core + 2].to_vec()),
            };
            Ok((act, space))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64, n_elec: usize) -> MOIntegrals {
        crate::testing::random_mo(n, n_elec, seed)
    }

    #[test]
    fn empty_core_is_identity() {
        let mo = toy(3, 1, 2);
        assert_eq!(freeze_core(&mo, &[]).unwrap(), mo);
    }

    #[test]
    fn single_core_energy_shift() {
        let mut mo = MOIntegrals::new(0.0, RMat::zeros(2, 2), Eri::zeros(2), 2).unwrap();
        mo.h[(0, 0)] = -2.0;
        mo.eri.set(0, 0, 0, 0, 1.0);
        let f = freeze_core(&mo, &[0]).unwrap();
        assert_eq!(f.e0, -3.0);
        assert_eq!(f.n_orb(), 1);
        assert_eq!(f.n_elec, 0);
    }

    #[test]
    fn core_index_out_of_range() {
        assert!(freeze_core(&toy(2, 0, 2), &[2]).is_err());
    }

    #[test]
    fn rhf_with_no_occupied_is_e0() {
        let mo = toy(2, 3, 2);
        assert_eq!(rhf_energy(&mo, 0), mo.e0);
    }

    #[test]
    fn mp2_vanishes_without_interaction() {
        let mut h = RMat::zeros(3, 3);
        h[(0, 0)] = -1.0;
        h[(1, 1)] = 0.5;
        h[(2, 2)] = 1.0;
        let mo = MOIntegrals::new(0.0, h, Eri::zeros(3), 2).unwrap();
        let r = mp2(&mo, 1).unwrap();
        assert_eq!(r.corr_energy, 0.0);
        let mut hf = RMat::zeros(3, 3);
        hf[(0, 0)] = 2.0;
        assert!((r.rdm1 - hf).amax() < 1e-14);
    }

    #[test]
    fn natural_orbitals_of_diagonal_density() {
        let d = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0]));
        let (occ, rot) = natural_orbitals(&d);
        assert_eq!(occ, vec![2.0, 0.0]);
        assert!((rot - RMat::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn full_selector_is_identity() {
        let mo = toy(3, 5, 2);
        let (act, space) = make_active_space(&mo, ActiveSelector::Full, 2).unwrap();
        assert_eq!(act, mo);
        assert_eq!(space.label, ActiveLabel::FullIao);
    }
}
