//! Intrinsic atomic orbitals: projector construction, Löwdin
//! orthonormalization and Foster–Boys localization.

use crate::bundle::IntegralBundle;
use crate::error::{Error, Result};
use crate::linalg::{inv_spd, inv_sqrt_spd, orthonormality_error, RMat};
use crate::orbital_space::{ao2mo, MOIntegrals};

/// IAO expansion coefficients in the large basis (`n_b1 × n_b2`).
#[derive(Debug, Clone, PartialEq)]
pub struct IAOBasis {
    pub coeff: RMat,
    pub orthonormalized: bool,
    pub localized: bool,
    /// Boys functional at the start and after each sweep (empty until
    /// localized).
    pub boys_history: Vec<f64>,
}

pub const BOYS_TOL: f64 = 1e-8;
pub const BOYS_MAX_SWEEPS: usize = 100;

/// Raw, non-orthogonal IAOs `(O Õ + (1 − O)(1 − Õ)) S1⁻¹ S12`.
pub fn build_iao(bundle: &IntegralBundle) -> Result<IAOBasis> {
    if bundle.n_occ == 0 {
        return Err(Error::Invalid("IAO construction needs at least one occupied orbital".into()));
    }
    let s1 = &bundle.s1;
    let n1 = bundle.n_b1;
    let s1_inv = inv_spd(s1, "s1")?;
    let s2_inv = inv_spd(&bundle.s2, "s2")?;
    let p12 = &s1_inv * &bundle.s12;
    let c = bundle.occupied_coeff();

    // depolarized occupied MOs, then re-orthonormalized under s1
    let ct = &p12 * (&s2_inv * (bundle.s12.transpose() * &c));
    let gram = ct.transpose() * s1 * &ct;
    let x = inv_sqrt_spd(&gram, 1e-10, "depolarized occupied orbitals")
        .map_err(|_| Error::Numerical("depolarized occupied MOs are rank deficient".into()))?;
    let ct = ct * x;

    let o = &c * c.transpose() * s1;
    let ot = &ct * ct.transpose() * s1;
    let id = RMat::identity(n1, n1);
    let proj = &o * &ot + (&id - &o) * (&id - &ot);
    Ok(IAOBasis {
        coeff: proj * p12,
        orthonormalized: false,
        localized: false,
        boys_history: Vec::new(),
    })
}

/// Symmetric orthonormalization `C ← C (Cᵀ S1 C)^{-1/2}`.
pub fn lowdin_orthonormalize(basis: &IAOBasis, s1: &RMat) -> Result<IAOBasis> {
    let g = basis.coeff.transpose() * s1 * &basis.coeff;
    let x = inv_sqrt_spd(&g, 1e-10, "IAO Gram matrix")?;
    Ok(IAOBasis {
        coeff: &basis.coeff * x,
        orthonormalized: true,
        localized: false,
        boys_history: Vec::new(),
    })
}

fn boys_functional(d: &[RMat; 3]) -> f64 {
    let n = d[0].nrows();
    (0..n).map(|i| d.iter().map(|m| m[(i, i)].powi(2)).sum::<f64>()).sum()
}

fn rotate_pair(m: &mut RMat, i: usize, j: usize, c: f64, s: f64) {
    // columns then rows: M ← Gᵀ M G
    for k in 0..m.nrows() {
        let (a, b) = (m[(k, i)], m[(k, j)]);
        m[(k, i)] = c * a + s * b;
        m[(k, j)] = -s * a + c * b;
    }
    for k in 0..m.ncols() {
        let (a, b) = (m[(i, k)], m[(j, k)]);
        m[(i, k)] = c * a + s * b;
        m[(j, k)] = -s * a + c * b;
    }
}

/// Jacobi sweeps maximizing `Σ_i |⟨i|r|i⟩|²` over orthonormal rotations of
/// the basis.
pub fn boys_localize(
    basis: &IAOBasis,
    dipole: &[RMat; 3],
    s1: &RMat,
    max_sweeps: usize,
    tol: f64,
) -> Result<IAOBasis> {
    let err = orthonormality_error(&basis.coeff, s1);
    if err > 1e-8 {
        return Err(Error::Invalid(format!(
            "Boys localization needs an orthonormal basis (deviation {err:.3e})"
        )));
    }
    let mut coeff = basis.coeff.clone();
    let n = coeff.ncols();
    let mut d: [RMat; 3] = [0, 1, 2].map(|k| coeff.transpose() * &dipole[k] * &coeff);
    let mut history = vec![boys_functional(&d)];
    for _ in 0..max_sweeps {
        for i in 0..n {
            for j in (i + 1)..n {
                let mut p = 0.0;
                let mut q = 0.0;
                for m in &d {
                    let half_diff = 0.5 * (m[(i, i)] - m[(j, j)]);
                    let off = m[(i, j)];
                    p += 0.5 * (half_diff * half_diff - off * off);
                    q += half_diff * off;
                }
                let amp = p.hypot(q);
                // gain is amp - p; nothing to do at a stationary maximum
                if amp - p <= 1e-14 * amp.max(1.0) {
                    continue;
                }
                let gamma = 0.25 * q.atan2(p);
                let (s, c) = gamma.sin_cos();
                for m in d.iter_mut() {
                    rotate_pair(m, i, j, c, s);
                }
                for k in 0..coeff.nrows() {
                    let (a, b) = (coeff[(k, i)], coeff[(k, j)]);
                    coeff[(k, i)] = c * a + s * b;
                    coeff[(k, j)] = -s * a + c * b;
                }
            }
        }
        let f = boys_functional(&d);
        let gain = f - history.last().copied().unwrap_or(f);
        history.push(f);
        if gain < tol {
            break;
        }
    }
    Ok(IAOBasis {
        coeff,
        orthonormalized: true,
        localized: true,
        boys_history: history,
    })
}

/// Build, orthonormalize and localize with default settings.
pub fn localized_iaos(bundle: &IntegralBundle) -> Result<IAOBasis> {
    let raw = build_iao(bundle)?;
    let orth = lowdin_orthonormalize(&raw, &bundle.s1)?;
    boys_localize(&orth, &bundle.dipole, &bundle.s1, BOYS_MAX_SWEEPS, BOYS_TOL)
}

/// Full-basis Hamiltonian together with the IAO active space expressed in
/// its orbitals.
#[derive(Debug, Clone)]
pub struct IaoActiveSpace {
    /// Hamiltonian over the reference MOs of the large basis.
    pub full: MOIntegrals,
    /// Localized IAOs as orthonormal columns in the MO basis.
    pub coeff: RMat,
    /// Hamiltonian over the IAOs, all electrons kept.
    pub active: MOIntegrals,
}

/// Localized IAOs of `bundle` used as an all-electron active space.
pub fn iao_active_space(bundle: &IntegralBundle) -> Result<IaoActiveSpace> {
    let iaos = localized_iaos(bundle)?;
    let full = ao2mo(bundle, &bundle.mo_coeff)?;
    let coeff = bundle.mo_coeff.transpose() * &bundle.s1 * &iaos.coeff;
    let active = full.rotate(&coeff);
    Ok(IaoActiveSpace { full, coeff, active })
}

/// `‖(1 − P) C_occ‖_F` with `P` the s1-orthogonal projector onto the span
/// of the (orthonormal) basis.
pub fn occupied_span_residual(basis: &IAOBasis, bundle: &IntegralBundle) -> f64 {
    let c = bundle.occupied_coeff();
    let a = &basis.coeff;
    let projected = a * (a.transpose() * &bundle.s1 * &c);
    (c - projected).norm()
}

/// s1-orthogonal projector `A Aᵀ S1` onto the span of orthonormal columns.
pub fn span_projector(coeff: &RMat, s1: &RMat) -> RMat {
    coeff * coeff.transpose() * s1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn lowdin_of_overlapping_pair() {
        let s1 = RMat::identity(2, 2);
        let c = RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, (0.75f64).sqrt()]);
        let basis = IAOBasis { coeff: c, orthonormalized: false, localized: false, boys_history: vec![] };
        let g = basis.coeff.transpose() * &basis.coeff;
        assert!((g[(0, 1)] - 0.5).abs() < 1e-15);
        let o = lowdin_orthonormalize(&basis, &s1).unwrap();
        assert!(orthonormality_error(&o.coeff, &s1) < 1e-12);
    }

    #[test]
    fn lowdin_fixed_point_and_scale_invariance() {
        let s1 = RMat::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0]);
        let raw = RMat::from_row_slice(3, 2, &[1.0, 0.1, 0.2, 1.0, -0.3, 0.4]);
        let b = IAOBasis { coeff: raw.clone(), orthonormalized: false, localized: false, boys_history: vec![] };
        let o = lowdin_orthonormalize(&b, &s1).unwrap();
        let again = lowdin_orthonormalize(&o, &s1).unwrap();
        assert!(max_abs(&(&again.coeff - &o.coeff)) < 1e-12);
        let scaled = IAOBasis { coeff: raw * 2.0, ..b };
        let os = lowdin_orthonormalize(&scaled, &s1).unwrap();
        assert!(max_abs(&(span_projector(&os.coeff, &s1) - span_projector(&o.coeff, &s1))) < 1e-12);
        assert!(orthonormality_error(&os.coeff, &s1) < 1e-12);
    }

    #[test]
    fn boys_single_orbital_unchanged() {
        let s1 = RMat::identity(2, 2);
        let c = RMat::from_column_slice(2, 1, &[0.6, 0.8]);
        let b = IAOBasis { coeff: c.clone(), orthonormalized: true, localized: false, boys_history: vec![] };
        let dip = [RMat::identity(2, 2), RMat::zeros(2, 2), RMat::zeros(2, 2)];
        let l = boys_localize(&b, &dip, &s1, 100, 1e-8).unwrap();
        assert_eq!(l.coeff, c);
    }

    #[test]
    fn boys_stationary_when_already_local() {
        let s1 = RMat::identity(2, 2);
        let b = IAOBasis { coeff: RMat::identity(2, 2), orthonormalized: true, localized: false, boys_history: vec![] };
        let dip = [RMat::zeros(2, 2), RMat::zeros(2, 2), RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]))];
        let l = boys_localize(&b, &dip, &s1, 100, 1e-8).unwrap();
        assert!(max_abs(&(l.coeff - RMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn boys_localizes_delocalized_pair() {
        // two sites at z = ±1, basis rotated by 45 degrees
        let s1 = RMat::identity(2, 2);
        let h = 0.5f64.sqrt();
        let c = RMat::from_row_slice(2, 2, &[h, h, h, -h]);
        let b = IAOBasis { coeff: c, orthonormalized: true, localized: false, boys_history: vec![] };
        let z = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]));
        let dip = [RMat::zeros(2, 2), RMat::zeros(2, 2), z];
        let l = boys_localize(&b, &dip, &s1, 100, 1e-8).unwrap();
        assert!((l.boys_history.last().unwrap() - 2.0).abs() < 1e-12);
        for w in l.boys_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-14);
        }
        for j in 0..2 {
            let col_max = l.coeff.column(j).amax();
            assert!((col_max - 1.0).abs() < 1e-10);
        }
    }
}
