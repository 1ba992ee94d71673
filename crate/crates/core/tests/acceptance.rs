//! Acceptance report: one PASS/FAIL line per criterion, with wall time.
//!
//! Set `ACCEPTANCE_STRICT=1` to exit nonzero when any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use iaoqsim::analysis::{energy_from_rdms, fit_equilibrium, measure_rdms, rdms_from_amplitudes, s_squared, PESCurve};
use iaoqsim::bundle::{load_bundle_grid, load_pauli_grid};
use iaoqsim::fci::{fci, fci_mo, Sector};
use iaoqsim::iao::{iao_active_space, localized_iaos, occupied_span_residual};
use iaoqsim::linalg::{C64, ZERO};
use iaoqsim::orbital_space::{ao2mo, rhf_energy};
use iaoqsim::pauli::{
    jw_annihilation, jw_creation, jw_excitation, map_hamiltonian, number_operator, sz_operator, two_body_operator,
};
use iaoqsim::qeom::{build_matrices, metric_determinant, solve as qeom_solve, ExcitationBasis};
use iaoqsim::qite::{qite_run, QiteConfig};
use iaoqsim::simulator::purity;
use iaoqsim::simulator::{derive_seed, NoiseModel, QuantumState, Sampling};
use iaoqsim::testing::{random_mo, rng};
use iaoqsim::vqe::{
    finite_difference_gradient, minimize_exact, parameter_shift_gradient, prepare_state, AnsatzSpec,
};
use iaoqsim::vqse::{build_forms, solve as vqse_solve, Expansion, ExpansionOp, VqseProblem};
use iaoqsim::{FermionEncoding, PauliSum, Spin};
use rand::Rng;

type Outcome = Result<(bool, String), String>;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let t0 = Instant::now();
        let out = f();
        let dt = t0.elapsed();
        let (mut ok, mut detail) = match out {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(b) = budget {
            if dt > b {
                ok = false;
                detail = format!("{detail}; over budget {:.1} s", b.as_secs_f64());
            }
        }
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {detail} [{:.2} s]", dt.as_secs_f64());
    }
}

fn h2_sto6g_fci() -> Result<(Vec<f64>, Vec<f64>), String> {
    let grid = load_bundle_grid(fixtures().join("h2_sto6g")).map_err(err)?;
    let mut es = Vec::new();
    for (_, b) in grid.iter() {
        let mo = ao2mo(b, &b.mo_coeff).map_err(err)?;
        es.push(fci_mo(&mo, 0).map_err(err)?.ground_energy());
    }
    Ok((grid.rs(), es))
}

fn nh3() -> Result<Vec<(f64, PauliSum)>, String> {
    let grid = load_pauli_grid(fixtures().join("nh3_honoluno")).map_err(err)?;
    Ok(grid.entries().to_vec())
}

fn pair_fci(h: &PauliSum) -> Result<iaoqsim::fci::FCIResult, String> {
    fci(h, Sector::PairSector).map_err(err)
}

fn table1_fci() -> Outcome {
    let (rs, es) = h2_sto6g_fci()?;
    let fit = fit_equilibrium(&PESCurve::from_pairs("fci", &rs, &es).map_err(err)?).map_err(err)?;
    let ok = (fit.delta_e - 0.2092).abs() <= 0.003 && (fit.r_eq - 0.715).abs() <= 0.015;
    Ok((ok, format!("ΔE = {:.4} Eh (0.2092 ± 0.003), R_eq = {:.4} Å (0.715 ± 0.015)", fit.delta_e, fit.r_eq)))
}

fn table1_quccsd() -> Outcome {
    let grid = load_bundle_grid(fixtures().join("h2_sto6g")).map_err(err)?;
    let spec = AnsatzSpec::quccsd(2, 2);
    let mut worst = 0.0f64;
    let (mut rs, mut ev, mut ef) = (Vec::new(), Vec::new(), Vec::new());
    for (r, b) in grid.iter() {
        let mo = ao2mo(b, &b.mo_coeff).map_err(err)?;
        let exact = fci_mo(&mo, 0).map_err(err)?.ground_energy();
        let h = map_hamiltonian(&mo).map_err(err)?;
        let res = minimize_exact(&spec, &h, &vec![0.0; spec.n_params()]).map_err(err)?;
        worst = worst.max((res.energy - exact).abs());
        rs.push(*r);
        ev.push(res.energy);
        ef.push(exact);
    }
    let fv = fit_equilibrium(&PESCurve::from_pairs("vqe", &rs, &ev).map_err(err)?).map_err(err)?;
    let ff = fit_equilibrium(&PESCurve::from_pairs("fci", &rs, &ef).map_err(err)?).map_err(err)?;
    Ok((
        worst < 1e-6,
        format!(
            "max |E_vqe − E_fci| = {worst:.2e} (< 1e-6); fitted ΔE diff {:.1e}, R_eq diff {:.1e}",
            (fv.delta_e - ff.delta_e).abs(),
            (fv.r_eq - ff.r_eq).abs()
        ),
    ))
}

fn table2_fci() -> Outcome {
    let pts = nh3()?;
    let mut rs = Vec::new();
    let mut es = Vec::new();
    for (r, h) in &pts {
        rs.push(*r);
        es.push(pair_fci(h)?.ground_energy());
    }
    let fit = fit_equilibrium(&PESCurve::from_pairs("fci", &rs, &es).map_err(err)?).map_err(err)?;
    let ok = (fit.delta_e - 0.180).abs() <= 0.008 && (fit.r_eq - 0.996).abs() <= 0.015;
    Ok((ok, format!("ΔE = {:.4} Eh (0.180 ± 0.008), R_eq = {:.4} Å (0.996 ± 0.015)", fit.delta_e, fit.r_eq)))
}

fn vqe_so4() -> Outcome {
    let spec = AnsatzSpec::so4(2, 1, 0);
    let mut worst = 0.0f64;
    for (_, h) in nh3()? {
        let exact = pair_fci(&h)?.ground_energy();
        let res = minimize_exact(&spec, &h, &vec![0.1; spec.n_params()]).map_err(err)?;
        worst = worst.max((res.energy - exact).abs());
    }
    Ok((worst < 1e-7, format!("max |E_vqe − E_fci| over 13 geometries = {worst:.2e} (< 1e-7)")))
}

fn qite() -> Outcome {
    let cfg = QiteConfig { dtau: 0.5, beta_total: 7.0, trotterize: false };
    let noise = NoiseModel::readout_only(0.02);
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    let mut wins = 0;
    let pts = nh3()?;
    for (k, (r, h)) in pts.iter().enumerate() {
        let exact = pair_fci(h)?.ground_energy();
        let init = QuantumState::zero(2);
        let e = qite_run(h, &init, &cfg, &Sampling::exact(), 0).map_err(err)?.trace.final_energy();
        let d = (e - exact).abs();
        worst = worst.max(d);
        if d >= 1e-4 {
            misses.push(format!("{r:.2} Å: {d:.1e}"));
        }
        let seed = derive_seed(2024, k as u64);
        let raw = Sampling::shots(8192, Some(noise.clone()));
        let mit = raw.clone().with_mitigation(2, 8192, derive_seed(seed, 99)).map_err(err)?;
        let eu = qite_run(h, &init, &cfg, &raw, seed).map_err(err)?.trace.final_energy();
        let em = qite_run(h, &init, &cfg, &mit, seed).map_err(err)?.trace.final_energy();
        if (em - exact).abs() < (eu - exact).abs() {
            wins += 1;
        }
    }
    let ok = misses.is_empty() && wins >= 11;
    let miss = if misses.is_empty() { String::new() } else { format!(" misses [{}]", misses.join(", ")) };
    Ok((
        ok,
        format!("noiseless max |ΔE| = {worst:.1e} (< 1e-4){miss}; mitigated better at {wins}/{} (≥ 11)", pts.len()),
    ))
}

fn qeom() -> Outcome {
    let enc = FermionEncoding::PairSector;
    let basis = ExcitationBasis::spin_resolved(&[0], &[1], enc).map_err(err)?;
    let mut worst = 0.0f64;
    let (mut det1, mut det3) = (None, None);
    for (r, h) in nh3()? {
        let res = pair_fci(&h)?;
        let gs = QuantumState::from_amplitudes(res.state(0)).map_err(err)?;
        let qm = build_matrices(&gs, &basis, &h, &Sampling::exact(), 0).map_err(err)?;
        let gaps = qeom_solve(&qm).map_err(|e| format!("R = {r}: {e}"))?;
        if gaps.len() != 3 {
            return Ok((false, format!("R = {r}: {} excitation energies, expected 3", gaps.len())));
        }
        for (k, g) in gaps.iter().enumerate() {
            worst = worst.max((g - (res.energies[k + 1] - res.energies[0])).abs());
        }
        let d = metric_determinant(&qm).abs();
        if (r - 1.0).abs() < 1e-9 {
            det1 = Some(d);
        }
        if (r - 3.0).abs() < 1e-9 {
            det3 = Some(d);
        }
    }
    let (d1, d3) = match (det1, det3) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err("fixture grid lacks R = 1.0 or R = 3.0".into()),
    };
    let ratio = d1 / d3;
    Ok((
        worst < 1e-8 && ratio >= 10.0,
        format!("max gap error {worst:.1e} (< 1e-8); |det G| 1.0 Å {d1:.3e}, 3.0 Å {d3:.3e}, ratio {ratio:.1} (≥ 10)"),
    ))
}

/// Random real two-electron state on the first `na` orbitals, returned in
/// the active register and embedded in the `n`-orbital register.
fn random_reference(n: usize, na: usize, seed: u64) -> (Vec<C64>, Vec<C64>) {
    let mut r = rng(seed);
    let mut small = vec![ZERO; 1 << (2 * na)];
    let mut big = vec![ZERO; 1 << (2 * n)];
    let mut norm = 0.0;
    for det in 0..small.len() {
        if (det as u64).count_ones() == 2 {
            let v: f64 = r.random_range(-1.0..1.0);
            small[det] = C64::new(v, 0.0);
            norm += v * v;
        }
    }
    for (det, a) in small.iter_mut().enumerate() {
        *a /= norm.sqrt();
        big[(det & ((1 << na) - 1)) | ((det >> na) << n)] = *a;
    }
    (small, big)
}

fn expansion_operator(op: ExpansionOp, n: usize) -> Result<PauliSum, String> {
    Ok(match op {
        ExpansionOp::Reference => PauliSum::identity(2 * n),
        ExpansionOp::Single { p, r } => jw_excitation(p, r, Spin::Up, n)
            .map_err(err)?
            .add(&jw_excitation(p, r, Spin::Down, n).map_err(err)?)
            .map_err(err)?,
        ExpansionOp::Double { t, u, v, w } => two_body_operator(t, u, v, w, n).map_err(err)?,
    })
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

fn vqse() -> Outcome {
    let grid = load_bundle_grid(fixtures().join("h2_ccpvdz")).map_err(err)?;
    let mut worst = 0.0f64;
    for (_, b) in grid.iter() {
        let space = iao_active_space(b).map_err(err)?;
        let na = space.active.n_orb();
        let exact = fci_mo(&space.full, 0).map_err(err)?.ground_energy();
        let act = fci_mo(&space.active, 0).map_err(err)?;
        let st = QuantumState::from_amplitudes(act.state(0)).map_err(err)?;
        let rdms = measure_rdms(&st, FermionEncoding::JordanWigner { n_orb: na }, &Sampling::exact(), 0).map_err(err)?;
        let prob = VqseProblem::new(&space.full, &space.coeff, rdms, Expansion::full()).map_err(err)?;
        let e = vqse_solve(&build_forms(&prob).map_err(err)?).map_err(err)?;
        worst = worst.max((e - exact).abs());
    }
    let mut elem = 0.0f64;
    for case in 0..25u64 {
        let na = 2 + (case % 2) as usize;
        let n = (na + 1 + (case % 3) as usize).min(5);
        let mo = random_mo(n, 2, 5000 + case);
        let (small, big) = random_reference(n, na, 7000 + case);
        let rdms = rdms_from_amplitudes(&small, na).map_err(err)?;
        let cols = iaoqsim::linalg::RMat::identity(n, n).columns(0, na).into_owned();
        let vm = build_forms(&VqseProblem::new(&mo, &cols, rdms, Expansion::full()).map_err(err)?).map_err(err)?;
        let hq = map_hamiltonian(&mo).map_err(err)?;
        let mut vecs = Vec::new();
        for &o in &vm.operators {
            vecs.push(expansion_operator(o, n)?.apply(&big));
        }
        let hv: Vec<Vec<C64>> = vecs.iter().map(|v| hq.apply(v)).collect();
        for i in 0..vecs.len() {
            for j in 0..vecs.len() {
                elem = elem.max((vm.s[(i, j)] - dot(&vecs[i], &vecs[j])).abs());
                elem = elem.max((vm.h[(i, j)] - dot(&vecs[i], &hv[j])).abs());
            }
        }
    }
    Ok((
        worst < 1e-8 && elem < 1e-9,
        format!("max |E_vqse − E_fci| over {} points = {worst:.1e} (< 1e-8); max element error on 25 toys {elem:.1e} (< 1e-9)", grid.len()),
    ))
}

fn iao() -> Outcome {
    let mut resid = 0.0f64;
    let mut n_bundles = 0;
    for name in ["h2_sto6g", "h2_ccpvdz"] {
        for (_, b) in load_bundle_grid(fixtures().join(name)).map_err(err)?.iter() {
            resid = resid.max(occupied_span_residual(&localized_iaos(b).map_err(err)?, b));
            n_bundles += 1;
        }
    }
    let mut bad = Vec::new();
    for (r, b) in load_bundle_grid(fixtures().join("h2_ccpvdz")).map_err(err)?.iter() {
        let space = iao_active_space(b).map_err(err)?;
        let rhf = rhf_energy(&space.full, 1);
        let e_iao = fci_mo(&space.active, 0).map_err(err)?.ground_energy();
        let e_full = fci_mo(&space.full, 0).map_err(err)?.ground_energy();
        if !(e_iao <= rhf + 1e-10 && e_iao >= e_full - 1e-10) {
            bad.push(format!("{r:.2}"));
        }
    }
    Ok((
        resid < 1e-8 && bad.is_empty(),
        format!(
            "max span residual over {n_bundles} bundles {resid:.1e} (< 1e-8); ordering violated at [{}]",
            bad.join(", ")
        ),
    ))
}

fn gradients() -> Outcome {
    let (_, h_nh3) = nh3()?.into_iter().find(|(r, _)| (r - 1.0).abs() < 1e-9).ok_or("no R = 1.0 point")?;
    let b = load_bundle_grid(fixtures().join("h2_sto6g")).map_err(err)?.entries()[5].1.clone();
    let h_h2 = map_hamiltonian(&ao2mo(&b, &b.mo_coeff).map_err(err)?).map_err(err)?;
    let cases = [
        (AnsatzSpec::ry(2, 2, 0), &h_nh3),
        (AnsatzSpec::so4(2, 2, 0), &h_nh3),
        (AnsatzSpec::quccsd(2, 2), &h_h2),
    ];
    let mut r = rng(77);
    let mut worst = 0.0f64;
    for (spec, h) in &cases {
        for _ in 0..50 {
            let theta: Vec<f64> = (0..spec.n_params()).map(|_| r.random_range(-3.1..3.1)).collect();
            let ps = parameter_shift_gradient(spec, &theta, h, &Sampling::exact(), 0).map_err(err)?;
            let fd = finite_difference_gradient(spec, &theta, h, 1e-4).map_err(err)?;
            for (a, b) in ps.values.iter().zip(&fd) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok((worst < 1e-6, format!("max |g_shift − g_fd| over 50 × 3 = {worst:.1e} (< 1e-6)")))
}

fn mapping() -> Outcome {
    let mut anti = 0.0f64;
    for n in 1..=3 {
        let dim = 1usize << (2 * n);
        let mut ops = Vec::new();
        for s in Spin::BOTH {
            for p in 0..n {
                ops.push((jw_creation(p, s, n).map_err(err)?.to_dense(), jw_annihilation(p, s, n).map_err(err)?.to_dense()));
            }
        }
        let id = iaoqsim::linalg::CMat::identity(dim, dim);
        for (i, (ci, ai)) in ops.iter().enumerate() {
            for (j, (cj, aj)) in ops.iter().enumerate() {
                let e1 = (ai * cj + cj * ai - if i == j { id.clone() } else { id.clone() * ZERO }).norm();
                let e2 = (ai * aj + aj * ai).norm();
                let e3 = (ci * cj + cj * ci).norm();
                anti = anti.max(e1).max(e2).max(e3);
            }
        }
    }
    let mut herm = 0.0f64;
    let mut comm = 0.0f64;
    let mut rdm = 0.0f64;
    for (k, n) in [2usize, 3, 3].iter().enumerate() {
        let mo = random_mo(*n, 2, 300 + k as u64);
        let h = map_hamiltonian(&mo).map_err(err)?;
        let hd = h.to_dense();
        herm = herm.max((&hd - hd.adjoint()).norm());
        for op in [number_operator(*n), sz_operator(*n)] {
            comm = comm.max(h.commutator(&op).map_err(err)?.simplified().to_dense().norm());
        }
        let res = fci_mo(&mo, 0).map_err(err)?;
        let rd = rdms_from_amplitudes(&res.state(0), *n).map_err(err)?;
        rdm = rdm.max((energy_from_rdms(&rd, &mo).map_err(err)? - res.ground_energy()).abs());
    }
    Ok((
        anti == 0.0 && herm < 1e-9 && comm < 1e-9 && rdm < 1e-9,
        format!("anticommutator defect {anti:.1e} (exact); ‖H − H†‖ {herm:.1e}, ‖[H, N/Sz]‖ {comm:.1e}, RDM energy error {rdm:.1e} (< 1e-9)"),
    ))
}

fn noise() -> Outcome {
    let enc = FermionEncoding::PairSector;
    let spec = AnsatzSpec::so4(2, 1, 0);
    let gammas = [0.0, 0.005, 0.01, 0.02, 0.05, 0.1];
    let mut ok = true;
    let mut lines = Vec::new();
    for (r, h) in nh3()?.into_iter().filter(|(r, _)| (r - 1.0).abs() < 1e-9 || (r - 3.0).abs() < 1e-9) {
        let theta = minimize_exact(&spec, &h, &vec![0.1; spec.n_params()]).map_err(err)?.parameters;
        let clean = prepare_state(&spec, &theta, &Sampling::exact()).map_err(err)?;
        let p0 = purity(&clean.density_matrix().map_err(err)?);
        let s0 = s_squared(&clean, enc, &Sampling::exact(), 0).map_err(err)?;
        let mut purities = Vec::new();
        let mut s2 = Vec::new();
        for &g in &gammas {
            let model = NoiseModel { amplitude_damping: g, ..Default::default() };
            let st = prepare_state(&spec, &theta, &Sampling::shots(0, Some(model))).map_err(err)?;
            purities.push(purity(&st.density_matrix().map_err(err)?));
            s2.push(s_squared(&st, enc, &Sampling::exact(), 0).map_err(err)?);
        }
        let dec = purities.windows(2).all(|w| w[1] < w[0]);
        let drift = s2.windows(2).all(|w| w[1] > w[0]);
        ok &= (p0 - 1.0).abs() < 1e-12 && s0.abs() < 1e-9 && dec && drift;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
        lines.push(format!(
            "R = {r:.1} Å: noiseless purity {p0:.12}, S² {s0:.1e}; purity [{}], S² [{}]",
            fmt(&purities),
            fmt(&s2)
        ));
    }
    Ok((ok, format!("γ = {gammas:?}; {}", lines.join("; "))))
}

fn main() {
    let t0 = Instant::now();
    let mut rep = Report { passed: 0, failed: 0 };
    let secs = Duration::from_secs;
    rep.check("H2/STO-6G FCI dissociation energy and bond length", Some(secs(5)), table1_fci);
    rep.check("H2/STO-6G q-UCCSD matches FCI curve", Some(secs(30)), table1_quccsd);
    rep.check("NH3 HONO/LUNO FCI dissociation energy and bond length", Some(secs(5)), table2_fci);
    rep.check("NH3 SO(4) d=1 VQE reaches FCI", None, vqe_so4);
    rep.check("NH3 QITE accuracy and readout mitigation", None, qite);
    rep.check("NH3 qEOM gaps and metric determinant trend", None, qeom);
    rep.check("H2/cc-pVDZ VQSE exactness and matrix elements", Some(secs(60)), vqse);
    rep.check("IAO span and energy ordering", None, iao);
    rep.check("parameter-shift gradients", None, gradients);
    rep.check("fermion mapping", None, mapping);
    rep.check("noise and purity", None, noise);
    println!(
        "acceptance: {} passed, {} failed [{:.2} s]",
        rep.passed,
        rep.failed,
        t0.elapsed().as_secs_f64()
    );
    if rep.failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
