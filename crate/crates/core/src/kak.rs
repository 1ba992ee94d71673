//! Two-qubit gate synthesis. Real orthogonal operators compile to a single
//! SO(4) block (2 CNOTs); anything else goes through the canonical
//! decomposition `K1 · exp(i(a XX + b YY + c ZZ)) · K2` (3 CNOTs).

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{max_abs_c, sym_eigen, CMat, RMat, C64, ZERO};
use crate::pauli::PauliString;
use crate::simulator::{magic_prefix, Circuit, Gate};

/// Imaginary content tolerated before an operator counts as complex.
pub const REAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct KakCircuit {
    pub circuit: Circuit,
    /// True when the operator was real orthogonal up to phase and compiled
    /// to the 2-CNOT form.
    pub two_cnot: bool,
}

/// Magic-frame change `P`: `P U P†` is local exactly when `U` is real
/// orthogonal with unit determinant.
pub fn magic_matrix() -> CMat {
    let mut c = Circuit::new(2);
    c.extend(magic_prefix(0, 1));
    c.unitary().expect("fixed circuit")
}

fn unitarity_error(u: &CMat) -> f64 {
    max_abs_c(&(u.adjoint() * u - CMat::identity(u.nrows(), u.ncols())))
}

/// `U / e^{iφ}` with `φ` chosen so the largest entry is real and positive.
fn strip_phase(u: &CMat) -> (C64, CMat) {
    let big = u.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
    let ph = if big.norm() > 0.0 { big / big.norm() } else { C64::new(1.0, 0.0) };
    (ph, u / ph)
}

/// Splits a local 4×4 unitary into `(A, B)` with `L ∝ B ⊗ A`, `A` acting on
/// qubit 0.
pub fn factor_local(l: &CMat) -> Result<(CMat, CMat)> {
    let block = |i: usize, j: usize| l.view((2 * i, 2 * j), (2, 2)).into_owned();
    let (bi, bj) = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .max_by(|&(a, b), &(c, d)| block(a, b).norm().total_cmp(&block(c, d).norm()))
        .unwrap();
    let mut a = block(bi, bj);
    let det = a.determinant();
    if det.norm() < 1e-12 {
        return Err(Error::Numerical("local factor is singular".into()));
    }
    a /= det.sqrt();
    let b = CMat::from_fn(2, 2, |i, j| (a.adjoint() * block(i, j)).trace() / C64::new(2.0, 0.0));
    let err = max_abs_c(&(crate::linalg::kron(&b, &a) - l));
    if err > 1e-8 {
        return Err(Error::Numerical(format!("operator is not a tensor product (residual {err:.3e})")));
    }
    Ok((a, b))
}

/// `(θ, φ, λ)` with `u3(θ, φ, λ) = e^{iγ} U`.
pub fn u3_angles(u: &CMat) -> (f64, f64, f64) {
    let det = u.determinant();
    let v = u / det.sqrt();
    // v = [[e^{-i(φ+λ)/2} cos, -e^{-i(φ-λ)/2} sin], [e^{i(φ-λ)/2} sin, e^{i(φ+λ)/2} cos]]
    let (a, b) = (v[(0, 0)], v[(1, 0)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    let (sum, diff) = if b.norm() < 1e-14 {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() < 1e-14 {
        (0.0, 2.0 * b.arg())
    } else {
        (-2.0 * a.arg(), 2.0 * b.arg())
    };
    (theta, (sum + diff) / 2.0, (sum - diff) / 2.0)
}

/// `exp(i(a XX + b YY + c ZZ))` as dense matrix.
pub fn canonical_matrix(a: f64, b: f64, c: f64) -> CMat {
    let xx: PauliString = "XX".parse().unwrap();
    let yy: PauliString = "YY".parse().unwrap();
    let zz: PauliString = "ZZ".parse().unwrap();
    let h = xx.to_dense() * C64::new(a, 0.0) + yy.to_dense() * C64::new(b, 0.0) + zz.to_dense() * C64::new(c, 0.0);
    crate::linalg::expi_hermitian(&h)
}

/// 3-CNOT circuit equal to `exp(i(a XX + b YY + c ZZ))` up to phase.
pub fn canonical_circuit(a: f64, b: f64, c: f64) -> Vec<Gate> {
    vec![
        Gate::Rz { qubit: 1, theta: -FRAC_PI_2 },
        Gate::Cnot { control: 1, target: 0 },
        Gate::Rz { qubit: 0, theta: FRAC_PI_2 - 2.0 * c },
        Gate::Ry { qubit: 1, theta: 2.0 * a - FRAC_PI_2 },
        Gate::Cnot { control: 0, target: 1 },
        Gate::Ry { qubit: 1, theta: FRAC_PI_2 - 2.0 * b },
        Gate::Cnot { control: 1, target: 0 },
        Gate::Rz { qubit: 0, theta: FRAC_PI_2 },
    ]
}

fn local_gates(l: &CMat) -> Result<Vec<Gate>> {
    let (a, b) = factor_local(l)?;
    let (t0, p0, l0) = u3_angles(&a);
    let (t1, p1, l1) = u3_angles(&b);
    Ok(vec![
        Gate::U3 { qubit: 0, theta: t0, phi: p0, lambda: l0 },
        Gate::U3 { qubit: 1, theta: t1, phi: p1, lambda: l1 },
    ])
}

/// Compiles a two-qubit unitary. Real orthogonal operators (up to phase,
/// determinant +1) give one SO(4) block with 2 CNOTs; others fall back to
/// the general 3-CNOT form.
pub fn kak_compact(u: &CMat) -> Result<KakCircuit> {
    if u.shape() != (4, 4) {
        return Err(Error::Dimension(format!("expected a 4×4 unitary, got {:?}", u.shape())));
    }
    let uerr = unitarity_error(u);
    if uerr > 1e-10 {
        return Err(Error::Invalid(format!("matrix is not unitary (‖U†U − I‖ = {uerr:.3e})")));
    }
    let p = magic_matrix();
    let (_, o) = strip_phase(u);
    let imag = o.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag < REAL_TOL && o.determinant().re > 0.0 {
        let l = &p * &o * p.adjoint();
        let (a, b) = factor_local(&l)?;
        let (t0, p0, l0) = u3_angles(&a);
        let (t1, p1, l1) = u3_angles(&b);
        let mut c = Circuit::new(2);
        c.push(Gate::So4 { q0: 0, q1: 1, angles: [t0, p0, l0, t1, p1, l1] });
        return Ok(KakCircuit { circuit: c, two_cnot: true });
    }
    Ok(KakCircuit { circuit: general_kak(u)?, two_cnot: false })
}

/// `U = K1 · N(a, b, c) · K2` with local `K1`, `K2`.
fn general_kak(u: &CMat) -> Result<Circuit> {
    let p = magic_matrix();
    let det = u.determinant();
    let su = u / det.powf(0.25);
    // in the magic frame locals are real orthogonal and N is diagonal
    let um = p.adjoint() * &su * &p;
    let g = um.transpose() * &um;
    let (re, im) = (g.map(|z| z.re), g.map(|z| z.im));
    // commuting real symmetric parts share eigenvectors; a generic mix
    // separates degenerate eigenvalues of either part
    let mut o2t = None;
    for mix in [0.6180339887498949, 1.324717957244746, 0.271828182845904, 3.3] {
        let (_, v) = sym_eigen(&(&re + &im * mix));
        let vc = v.map(|x| C64::new(x, 0.0));
        let d = vc.transpose() * &g * &vc;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-9 {
            o2t = Some(v);
            break;
        }
    }
    let mut o2t: RMat = o2t.ok_or_else(|| Error::Numerical("could not diagonalize the magic-frame square".into()))?;
    if o2t.determinant() < 0.0 {
        let mut col = o2t.column_mut(0);
        col *= -1.0;
    }
    let o2 = o2t.transpose();
    let o2c = o2.map(|x| C64::new(x, 0.0));
    let d2 = &o2c * &g * o2c.transpose();
    let mut d: Vec<C64> = (0..4).map(|k| d2[(k, k)].sqrt()).collect();
    let prod: C64 = d.iter().product();
    if prod.re < 0.0 {
        d[0] = -d[0];
    }
    let dinv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|z| z.inv())));
    let o1 = &um * o2c.transpose() * dinv;
    let o1_imag = o1.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if o1_imag > 1e-7 {
        return Err(Error::Numerical(format!("left factor not real ({o1_imag:.3e})")));
    }
    // phases of the magic-frame eigenvalues → (a, b, c)
    let pauli = |l: &str| -> CMat { l.parse::<PauliString>().unwrap().to_dense() };
    let (xx, yy, zz) = (pauli("XX"), pauli("YY"), pauli("ZZ"));
    let mut sys = RMat::zeros(4, 4);
    let mut rhs = nalgebra::DVector::zeros(4);
    for k in 0..4 {
        let col = p.column(k);
        let ev = |m: &CMat| (col.adjoint() * m * col)[(0, 0)].re;
        sys[(k, 0)] = 1.0;
        sys[(k, 1)] = ev(&xx);
        sys[(k, 2)] = ev(&yy);
        sys[(k, 3)] = ev(&zz);
        rhs[k] = d[k].arg();
    }
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("magic frame does not diagonalize XX, YY, ZZ".into()))?;
    let k1 = &p * &o1 * p.adjoint();
    let k2 = &p * &o2c * p.adjoint();
    let mut c = Circuit::new(2);
    c.extend(local_gates(&k2)?);
    c.extend(canonical_circuit(sol[1], sol[2], sol[3]));
    c.extend(local_gates(&k1)?);
    Ok(c)
}

/// `max |U − e^{iφ} V|` minimized over the global phase.
pub fn phase_distance(u: &CMat, v: &CMat) -> f64 {
    let ip = (v.adjoint() * u).trace();
    let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
    max_abs_c(&(u - v * ph))
}
