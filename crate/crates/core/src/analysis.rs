//! Density matrices, spin and fidelity diagnostics, potential-energy scans
//! and equilibrium fits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundle::PESGrid;
use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};
use crate::orbital_space::MOIntegrals;
use crate::pauli::{jw_excitation, s_squared_operator, FermionEncoding, Spin};
use crate::simulator::{derive_seed, QuantumState, Sampling};

/// One- and two-body reduced density matrices per spin,
/// `ρ^σ_{pr} = ⟨a†_{pσ} a_{rσ}⟩` and
/// `ρ^{στ}_{prqs} = ⟨a†_{pσ} a†_{qτ} a_{sτ} a_{rσ}⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RDMPair {
    pub n_orb: usize,
    /// `[up, down]`.
    pub rdm1: [RMat; 2],
    /// Blocks `[↑↑, ↑↓, ↓↑, ↓↓]`, each `n⁴` values in `prqs` row-major order.
    pub rdm2: [Vec<f64>; 4],
    /// Largest Hermiticity defect removed by symmetrization, including
    /// discarded imaginary parts.
    pub hermiticity_defect: f64,
}

fn spin_index(s: Spin) -> usize {
    match s {
        Spin::Up => 0,
        Spin::Down => 1,
    }
}

impl RDMPair {
    pub fn zeros(n_orb: usize) -> Self {
        let n4 = n_orb.pow(4);
        RDMPair {
            n_orb,
            rdm1: [RMat::zeros(n_orb, n_orb), RMat::zeros(n_orb, n_orb)],
            rdm2: [vec![0.0; n4], vec![0.0; n4], vec![0.0; n4], vec![0.0; n4]],
            hermiticity_defect: 0.0,
        }
    }

    fn idx(&self, p: usize, r: usize, q: usize, s: usize) -> usize {
        let n = self.n_orb;
        ((p * n + r) * n + q) * n + s
    }

    pub fn one(&self, spin: Spin, p: usize, r: usize) -> f64 {
        self.rdm1[spin_index(spin)][(p, r)]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn two(&self, s1: Spin, s2: Spin, p: usize, r: usize, q: usize, s: usize) -> f64 {
        self.rdm2[2 * spin_index(s1) + spin_index(s2)][self.idx(p, r, q, s)]
    }

    fn set_two(&mut self, s1: Spin, s2: Spin, p: usize, r: usize, q: usize, s: usize, v: f64) {
        let k = self.idx(p, r, q, s);
        self.rdm2[2 * spin_index(s1) + spin_index(s2)][k] = v;
    }

    /// Spin-summed `Σ_σ ρ^σ`.
    pub fn spin_summed_one(&self) -> RMat {
        &self.rdm1[0] + &self.rdm1[1]
    }

    /// Spin-orbital 1-RDM with the Jordan–Wigner layout (`p` up, `n + p`
    /// down).
    pub fn spin_orbital_one(&self) -> RMat {
        let n = self.n_orb;
        let mut out = RMat::zeros(2 * n, 2 * n);
        for s in Spin::BOTH {
            for p in 0..n {
                for r in 0..n {
                    out[(s.qubit(p, n), s.qubit(r, n))] = self.one(s, p, r);
                }
            }
        }
        out
    }

    /// Spin-orbital 2-RDM `⟨a†_P a†_Q a_S a_R⟩` as a dense `(2n)⁴` array in
    /// `PRQS` order, every spin arrangement included.
    pub fn spin_orbital_two(&self) -> Vec<f64> {
        let n = self.n_orb;
        let m = 2 * n;
        let mut out = vec![0.0; m.pow(4)];
        for s1 in Spin::BOTH {
            for s2 in Spin::BOTH {
                for p in 0..n {
                    for r in 0..n {
                        for q in 0..n {
                            for s in 0..n {
                                let (pp, rr, qq, ss) = (s1.qubit(p, n), s1.qubit(r, n), s2.qubit(q, n), s2.qubit(s, n));
                                out[((pp * m + rr) * m + qq) * m + ss] = self.two(s1, s2, p, r, q, s);
                                if s1 != s2 {
                                    // ⟨a†_{pσ} a†_{qτ} a_{sσ} a_{rτ}⟩ by swapping the annihilators
                                    let (rx, sx) = (s2.qubit(r, n), s1.qubit(s, n));
                                    out[((pp * m + rx) * m + qq) * m + sx] = -self.two(s1, s2, p, s, q, r);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self, spin: Spin) -> f64 {
        self.rdm1[spin_index(spin)].trace()
    }

    /// Largest `|ρ^{σσ}_{prqs} + ρ^{σσ}_{qrps}|`.
    pub fn antisymmetry_error(&self) -> f64 {
        let n = self.n_orb;
        let mut worst = 0.0f64;
        for s in Spin::BOTH {
            for p in 0..n {
                for r in 0..n {
                    for q in 0..n {
                        for t in 0..n {
                            worst = worst.max((self.two(s, s, p, r, q, t) + self.two(s, s, q, r, p, t)).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Measures every RDM element as Pauli expectations of products of
/// excitation operators, `ρ^{στ}_{prqs} = ⟨X^σ_{pr} X^τ_{qs}⟩ − δ_{qr} δ_{στ} ⟨X^σ_{ps}⟩`,
/// then symmetrizes.
pub fn measure_rdms(state: &QuantumState, encoding: FermionEncoding, sampling: &Sampling, seed: u64) -> Result<RDMPair> {
    let n = encoding.n_orb();
    if state.n_qubits() != encoding.n_qubits() {
        return Err(Error::Dimension(format!(
            "state on {} qubits, encoding needs {}",
            state.n_qubits(),
            encoding.n_qubits()
        )));
    }
    let mut est = sampling.estimator(state, seed);
    let mut x = vec![Vec::new(); 2];
    for s in Spin::BOTH {
        for p in 0..n {
            for r in 0..n {
                x[spin_index(s)].push(jw_excitation(p, r, s, n)?);
            }
        }
    }
    let xo = |s: Spin, p: usize, r: usize| &x[spin_index(s)][p * n + r];
    let mut out = RDMPair::zeros(n);
    let mut defect = 0.0f64;
    let mut one_c = vec![CMat::zeros(n, n), CMat::zeros(n, n)];
    for s in Spin::BOTH {
        for p in 0..n {
            for r in 0..n {
                one_c[spin_index(s)][(p, r)] = est.complex_expectation(&encoding.encode(xo(s, p, r))?)?;
            }
        }
    }
    for (k, m) in one_c.iter().enumerate() {
        defect = defect.max((m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max));
        out.rdm1[k] = RMat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        defect = defect.max(m.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
    }
    let n4 = n.pow(4);
    let mut raw = [vec![crate::linalg::ZERO; n4], vec![crate::linalg::ZERO; n4], vec![crate::linalg::ZERO; n4], vec![crate::linalg::ZERO; n4]];
    for s1 in Spin::BOTH {
        for s2 in Spin::BOTH {
            for p in 0..n {
                for r in 0..n {
                    for q in 0..n {
                        for t in 0..n {
                            let mut op = xo(s1, p, r).multiply(xo(s2, q, t))?;
                            if q == r && s1 == s2 {
                                op = op.sub(xo(s1, p, t))?;
                            }
                            let v = est.complex_expectation(&encoding.encode(&op.simplified())?)?;
                            raw[2 * spin_index(s1) + spin_index(s2)][out.idx(p, r, q, t)] = v;
                        }
                    }
                }
            }
        }
    }
    // (ρ^{στ}_{prqs})* = ρ^{στ}_{rpsq}
    for s1 in Spin::BOTH {
        for s2 in Spin::BOTH {
            let b = &raw[2 * spin_index(s1) + spin_index(s2)];
            for p in 0..n {
                for r in 0..n {
                    for q in 0..n {
                        for t in 0..n {
                            let a = b[out.idx(p, r, q, t)];
                            let c = b[out.idx(r, p, t, q)].conj();
                            defect = defect.max((a - c).norm()).max(a.im.abs());
                            out.set_two(s1, s2, p, r, q, t, 0.5 * (a.re + c.re));
                        }
                    }
                }
            }
        }
    }
    out.hermiticity_defect = defect;
    Ok(out)
}

/// RDMs of a state vector in the Jordan–Wigner layout, from fermionic
/// bit operations rather than Pauli algebra.
pub fn rdms_from_amplitudes(amps: &[crate::linalg::C64], n_orb: usize) -> Result<RDMPair> {
    let m = 2 * n_orb;
    if amps.len() != 1usize << m {
        return Err(Error::Dimension(format!("{} amplitudes for {m} spin orbitals", amps.len())));
    }
    let ann = |q: usize, det: u64| -> Option<(f64, u64)> {
        if det >> q & 1 == 0 {
            return None;
        }
        let sign = if (det & ((1u64 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, det & !(1 << q)))
    };
    let cre = |q: usize, det: u64| -> Option<(f64, u64)> {
        if det >> q & 1 == 1 {
            return None;
        }
        let sign = if (det & ((1u64 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, det | (1 << q)))
    };
    let mut out = RDMPair::zeros(n_orb);
    for s1 in Spin::BOTH {
        for p in 0..n_orb {
            for r in 0..n_orb {
                let mut v = crate::linalg::ZERO;
                for (det, a) in amps.iter().enumerate() {
                    let Some((x1, d1)) = ann(s1.qubit(r, n_orb), det as u64) else { continue };
                    let Some((x2, d2)) = cre(s1.qubit(p, n_orb), d1) else { continue };
                    v += amps[d2 as usize].conj() * a * (x1 * x2);
                }
                out.rdm1[spin_index(s1)][(p, r)] = v.re;
            }
        }
        for s2 in Spin::BOTH {
            for p in 0..n_orb {
                for r in 0..n_orb {
                    for q in 0..n_orb {
                        for t in 0..n_orb {
                            let mut v = crate::linalg::ZERO;
                            for (det, a) in amps.iter().enumerate() {
                                let Some((x1, d1)) = ann(s1.qubit(r, n_orb), det as u64) else { continue };
                                let Some((x2, d2)) = ann(s2.qubit(t, n_orb), d1) else { continue };
                                let Some((x3, d3)) = cre(s2.qubit(q, n_orb), d2) else { continue };
                                let Some((x4, d4)) = cre(s1.qubit(p, n_orb), d3) else { continue };
                                v += amps[d4 as usize].conj() * a * (x1 * x2 * x3 * x4);
                            }
                            out.set_two(s1, s2, p, r, q, t, v.re);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `E = e0 + Σ_σ h_{pr} ρ^σ_{pr} + ½ Σ_{στ} (pr|qs) ρ^{στ}_{prqs}`.
pub fn energy_from_rdms(rdms: &RDMPair, mo: &MOIntegrals) -> Result<f64> {
    let n = rdms.n_orb;
    if mo.n_orb() != n {
        return Err(Error::Dimension(format!("RDMs over {n} orbitals, integrals over {}", mo.n_orb())));
    }
    let mut e = mo.e0;
    let d1 = rdms.spin_summed_one();
    e += mo.h.component_mul(&d1).sum();
    for s1 in Spin::BOTH {
        for s2 in Spin::BOTH {
            for p in 0..n {
                for r in 0..n {
                    for q in 0..n {
                        for t in 0..n {
                            e += 0.5 * mo.eri.get(p, r, q, t) * rdms.two(s1, s2, p, r, q, t);
                        }
                    }
                }
            }
        }
    }
    Ok(e)
}

/// `⟨Ŝ²⟩` on the register.
pub fn s_squared(state: &QuantumState, encoding: FermionEncoding, sampling: &Sampling, seed: u64) -> Result<f64> {
    let op = encoding.encode(&s_squared_operator(encoding.n_orb())?)?;
    sampling.expectation(state, &op, seed)
}

/// `⟨Φ|ρ|Φ⟩` for the computational basis state `reference`.
pub fn fidelity(rho: &CMat, reference: u64) -> Result<f64> {
    let k = reference as usize;
    if rho.nrows() != rho.ncols() || k >= rho.nrows() {
        return Err(Error::Dimension(format!("reference {reference} outside a {}-dim density matrix", rho.nrows())));
    }
    Ok(rho[(k, k)].re.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PESPoint {
    pub r: f64,
    pub energy: f64,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
}

/// Energies along a bond coordinate, R strictly increasing (Å, Hartree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PESCurve {
    pub method: String,
    pub points: Vec<PESPoint>,
}

impl PESCurve {
    pub fn new(method: impl Into<String>, points: Vec<PESPoint>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(Error::format("curve", format!("R not increasing at {} → {}", w[0].r, w[1].r)));
            }
        }
        Ok(PESCurve { method: method.into(), points })
    }

    pub fn from_pairs(method: impl Into<String>, rs: &[f64], es: &[f64]) -> Result<Self> {
        if rs.len() != es.len() {
            return Err(Error::Dimension(format!("{} R values, {} energies", rs.len(), es.len())));
        }
        let points = rs.iter().zip(es).map(|(&r, &energy)| PESPoint { r, energy, sigma: None, seed: None }).collect();
        Self::new(method, points)
    }

    pub fn rs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    /// `r,energy,sigma,seed` with empty columns for absent values. Floats
    /// use their shortest exact representation, so the text round-trips.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,energy,sigma,seed\n");
        for p in &self.points {
            let sigma = p.sigma.map(|v| v.to_string()).unwrap_or_default();
            let seed = p.seed.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", p.r, p.energy, sigma, seed);
        }
        s
    }

    pub fn from_csv(method: impl Into<String>, text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (k == 0 && t.starts_with('r')) || t.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = t.split(',').map(str::trim).collect();
            let bad = || Error::format("curve", format!("line {}: {t:?}", k + 1));
            if cols.len() < 2 {
                return Err(bad());
            }
            let r = cols[0].parse().map_err(|_| bad())?;
            let energy = cols[1].parse().map_err(|_| bad())?;
            let sigma = match cols.get(2) {
                Some(v) if !v.is_empty() => Some(v.parse().map_err(|_| bad())?),
                _ => None,
            };
            let seed = match cols.get(3) {
                Some(v) if !v.is_empty() => Some(v.parse().map_err(|_| bad())?),
                _ => None,
            };
            points.push(PESPoint { r, energy, sigma, seed });
        }
        Self::new(method, points)
    }

    pub fn load_csv(method: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(method, &text)
    }
}

/// Evaluates `f` at every grid point with its own derived seed.
pub fn scan<T>(
    grid: &PESGrid<T>,
    method: impl Into<String>,
    seed: u64,
    mut f: impl FnMut(f64, &T, u64) -> Result<(f64, Option<f64>)>,
) -> Result<PESCurve> {
    let mut points = Vec::with_capacity(grid.len());
    for (k, (r, item)) in grid.iter().enumerate() {
        let s = derive_seed(seed, k as u64);
        let (energy, sigma) = f(*r, item, s)?;
        points.push(PESPoint { r: *r, energy, sigma, seed: Some(s) });
    }
    PESCurve::new(method, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumFit {
    pub r_eq: f64,
    pub e_min: f64,
    /// `E(R_max) − E_min`.
    pub delta_e: f64,
    pub coefficients: [f64; 5],
}

fn poly(c: &[f64; 5], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn dpoly(c: &[f64; 5], x: f64) -> f64 {
    ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1]
}

fn ddpoly(c: &[f64; 5], x: f64) -> f64 {
    (12.0 * c[4] * x + 6.0 * c[3]) * x + 2.0 * c[2]
}

/// Quartic least-squares fit through the five points nearest the discrete
/// minimum; the fitted minimum must lie inside their span.
pub fn fit_equilibrium(curve: &PESCurve) -> Result<EquilibriumFit> {
    let pts = &curve.points;
    if pts.len() < 5 {
        return Err(Error::Invalid(format!("{} points, at least 5 needed", pts.len())));
    }
    let imin = (0..pts.len()).min_by(|&a, &b| pts[a].energy.total_cmp(&pts[b].energy)).unwrap_or(0);
    if imin == 0 || imin == pts.len() - 1 {
        return Err(Error::NoInteriorMinimum);
    }
    let lo = imin.saturating_sub(2).min(pts.len() - 5);
    let window = &pts[lo..lo + 5];
    let r0 = pts[imin].r;
    let scale = window.iter().map(|p| (p.r - r0).abs()).fold(0.0, f64::max).max(1e-12);
    let x: Vec<f64> = window.iter().map(|p| (p.r - r0) / scale).collect();
    let a = RMat::from_fn(5, 5, |i, j| x[i].powi(j as i32));
    let b = nalgebra::DVector::from_iterator(5, window.iter().map(|p| p.energy));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(format!("quartic fit: {e}")))?;
    let c = [sol[0], sol[1], sol[2], sol[3], sol[4]];
    let (xa, xb) = (x[0], x[4]);
    // coarse bracket search, then Newton on the derivative
    let n = 4000;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=n {
        let t = xa + (xb - xa) * k as f64 / n as f64;
        let v = poly(&c, t);
        if v < best.0 {
            best = (v, t);
        }
    }
    let mut t = best.1;
    for _ in 0..50 {
        let d2 = ddpoly(&c, t);
        if d2 <= 0.0 {
            break;
        }
        let step = dpoly(&c, t) / d2;
        let next = (t - step).clamp(xa, xb);
        if (next - t).abs() < 1e-15 {
            t = next;
            break;
        }
        t = next;
    }
    let edge = 1e-9 * (xb - xa);
    if t <= xa + edge || t >= xb - edge {
        return Err(Error::NoInteriorMinimum);
    }
    let e_min = poly(&c, t);
    let e_end = pts[pts.len() - 1].energy;
    Ok(EquilibriumFit { r_eq: r0 + scale * t, e_min, delta_e: e_end - e_min, coefficients: c })
}

/// Mean absolute pointwise deviation over the R values both curves share.
pub fn mean_deviation(a: &PESCurve, b: &PESCurve) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in &a.points {
        if let Some(q) = b.points.iter().find(|q| (q.r - p.r).abs() < 1e-9) {
            sum += (p.energy - q.energy).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Invalid("curves share no grid points".into()));
    }
    Ok(sum / count as f64)
}

/// Largest pointwise `|a − b|` over shared R values.
pub fn max_deviation(a: &PESCurve, b: &PESCurve) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for p in &a.points {
        if let Some(q) = b.points.iter().find(|q| (q.r - p.r).abs() < 1e-9) {
            worst = Some(worst.unwrap_or(0.0).max((p.energy - q.energy).abs()));
        }
    }
    worst.ok_or_else(|| Error::Invalid("curves share no grid points".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{fci, fci_mo, Sector};
    use crate::linalg::C64;
    use crate::orbital_space::rhf_energy;

    fn curve(rs: &[f64], f: impl Fn(f64) -> f64) -> PESCurve {
        let es: Vec<f64> = rs.iter().map(|&r| f(r)).collect();
        PESCurve::from_pairs("t", rs, &es).unwrap()
    }

    #[test]
    fn parabola_vertex() {
        let rs: Vec<f64> = (0..12).map(|k| 0.5 + 0.1 * k as f64).collect();
        let fit = fit_equilibrium(&curve(&rs, |r| 0.7 * (r - 0.937).powi(2) - 1.1)).unwrap();
        assert!((fit.r_eq - 0.937).abs() < 1e-10);
        assert!((fit.e_min + 1.1).abs() < 1e-12);
        let shifted = fit_equilibrium(&curve(&rs, |r| 0.7 * (r - 0.937).powi(2) + 3.0)).unwrap();
        assert!((shifted.r_eq - fit.r_eq).abs() < 1e-12);
        assert!((shifted.delta_e - fit.delta_e).abs() < 1e-10);
    }

    #[test]
    fn monotone_curve_has_no_minimum() {
        let rs: Vec<f64> = (0..8).map(|k| 1.0 + 0.2 * k as f64).collect();
        assert!(matches!(fit_equilibrium(&curve(&rs, |r| -1.0 / r)), Err(Error::NoInteriorMinimum)));
    }

    #[test]
    fn deviations() {
        let rs = [1.0, 2.0, 3.0];
        let a = curve(&rs, |r| r);
        let b = curve(&rs, |r| r + 0.25);
        assert_eq!(mean_deviation(&a, &a).unwrap(), 0.0);
        assert!((mean_deviation(&a, &b).unwrap() - 0.25).abs() < 1e-15);
        assert!(PESCurve::from_pairs("x", &[1.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut c = curve(&[0.5, 0.75], |r| -r);
        c.points[0].energy = -1.137_283_834_488_503_2;
        c.points[1].sigma = Some(1e-3);
        c.points[1].seed = Some(u64::MAX - 7);
        let back = PESCurve::from_csv("t", &c.to_csv()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hf_determinant_rdms() {
        let n = 3;
        let enc = FermionEncoding::JordanWigner { n_orb: n };
        let st = QuantumState::basis(2 * n, enc.reference_index(2).unwrap());
        let d = measure_rdms(&st, enc, &Sampling::exact(), 0).unwrap();
        for s in Spin::BOTH {
            assert_eq!(d.one(s, 0, 0), 1.0);
            assert!((d.trace(s) - 1.0).abs() < 1e-12);
        }
        // ρ^{↑↓}_{0000} = 1 and every same-spin pair vanishes for one electron per spin
        assert!((d.two(Spin::Up, Spin::Down, 0, 0, 0, 0) - 1.0).abs() < 1e-12);
        assert!(d.rdm2[0].iter().all(|v| v.abs() < 1e-12));
        let mo = crate::testing::random_mo(n, 2, 5);
        assert!((energy_from_rdms(&d, &mo).unwrap() - rhf_energy(&mo, 1)).abs() < 1e-10);
    }

    #[test]
    fn eigenstate_rdms_match_oracle_and_energy() {
        let mo = crate::testing::random_mo(3, 2, 9);
        let r = fci_mo(&mo, 0).unwrap();
        let amps = r.state(0);
        let st = QuantumState::from_amplitudes(amps.clone()).unwrap();
        let enc = FermionEncoding::JordanWigner { n_orb: 3 };
        let measured = measure_rdms(&st, enc, &Sampling::exact(), 0).unwrap();
        let oracle = rdms_from_amplitudes(&amps, 3).unwrap();
        for k in 0..4 {
            for (a, b) in measured.rdm2[k].iter().zip(&oracle.rdm2[k]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(measured.antisymmetry_error() < 1e-10);
        assert!((energy_from_rdms(&measured, &mo).unwrap() - r.ground_energy()).abs() < 1e-9);
    }

    #[test]
    fn pair_sector_rdms_match_jordan_wigner() {
        let mo = crate::testing::random_mo(2, 2, 12);
        let enc = FermionEncoding::PairSector;
        let h = enc.hamiltonian(&mo).unwrap();
        let r = fci(&h, Sector::PairSector).unwrap();
        let st = QuantumState::from_amplitudes(r.state(0)).unwrap();
        let d = measure_rdms(&st, enc, &Sampling::exact(), 0).unwrap();
        assert!((energy_from_rdms(&d, &mo).unwrap() - r.ground_energy()).abs() < 1e-9);
        assert!(s_squared(&st, enc, &Sampling::exact(), 0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn sampled_rdm_traces_within_shot_noise() {
        let mo = crate::testing::random_mo(2, 2, 14);
        let amps = fci_mo(&mo, 0).unwrap().state(0);
        let st = QuantumState::from_amplitudes(amps).unwrap();
        let enc = FermionEncoding::JordanWigner { n_orb: 2 };
        let shots = 4000;
        let d = measure_rdms(&st, enc, &Sampling::shots(shots, None), 3).unwrap();
        // each diagonal is an independent Z estimate; 5σ on the sum of two
        let bound = 5.0 * (2.0f64).sqrt() * 0.5 / (shots as f64).sqrt();
        for s in Spin::BOTH {
            assert!((d.trace(s) - 1.0).abs() < bound);
        }
        assert!(d.antisymmetry_error() < 1e-12);
    }

    #[test]
    fn fidelity_bounds() {
        let mixed = QuantumState::maximally_mixed(2).density_matrix().unwrap();
        assert!((fidelity(&mixed, 0).unwrap() - 0.25).abs() < 1e-15);
        let mut pure = CMat::zeros(4, 4);
        pure[(2, 2)] = C64::new(1.0, 0.0);
        assert_eq!(fidelity(&pure, 2).unwrap(), 1.0);
        assert!(fidelity(&pure, 4).is_err());
    }
}
