//! One method applied to one problem.

use iaoqsim::analysis::measure_rdms;
use iaoqsim::fci::{fci, fci_mo, FCIResult};
use iaoqsim::iao::iao_active_space;
use iaoqsim::qeom::{self, ExcitationBasis};
use iaoqsim::qite::qite_run;
use iaoqsim::simulator::{QuantumState, Sampling};
use iaoqsim::vqe::{gradient_descent, minimize_exact_with, AnsatzSpec, DescentOptions};
use iaoqsim::vqse::{build_forms, sample_statistics, solve as vqse_solve, VqseProblem};
use iaoqsim::FermionEncoding;
use serde_json::{json, Value};

use crate::config::{AnsatzChoice, Method, QeomBasis, Resolved};
use crate::error::{CliError, CliResult};
use crate::problem::{Problem, Source};

/// Result of one grid point, plus any per-point files.
#[derive(Debug, Clone)]
pub struct PointOutput {
    pub r: Option<f64>,
    pub energy: f64,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub details: Value,
    pub files: Vec<(String, String)>,
}

/// Sampling settings for a register of `n_qubits`, with a calibration
/// matrix when mitigation is on.
pub fn sampling_for(run: &Resolved, n_qubits: usize, seed: u64) -> CliResult<Sampling> {
    let s = Sampling::shots(run.config.shots, run.config.noise.clone());
    match &run.config.mitigation {
        Some(m) => Ok(s.with_mitigation(n_qubits, m.calibration_shots, iaoqsim::simulator::derive_seed(seed, 0xCA1))?),
        None => Ok(s),
    }
}

/// Exact eigenpairs in the problem's sector. Orbital input without a
/// 2-qubit encoding is diagonalized over determinants, so wide bases do
/// not need a Pauli Hamiltonian.
fn exact(p: &Problem) -> CliResult<FCIResult> {
    match (&p.mo, p.encoding) {
        (Some(mo), Some(FermionEncoding::JordanWigner { .. })) => Ok(fci_mo(mo, (mo.n_elec % 2) as i32)?),
        _ => Ok(fci(&p.hamiltonian()?, p.sector())?),
    }
}

fn spectrum(r: &FCIResult, k: usize) -> Vec<f64> {
    r.energies.iter().take(k).copied().collect()
}

fn ansatz(run: &Resolved, p: &Problem, n_qubits: usize) -> CliResult<AnsatzSpec> {
    let v = &run.config.vqe;
    let reference = p.reference()?;
    Ok(match v.ansatz {
        AnsatzChoice::Ry => AnsatzSpec::ry(n_qubits, v.depth, reference),
        AnsatzChoice::So4 => AnsatzSpec::so4(n_qubits, v.depth, reference),
        AnsatzChoice::Quccsd => match (p.encoding, &p.mo) {
            (Some(FermionEncoding::JordanWigner { n_orb }), Some(mo)) => AnsatzSpec::quccsd(n_orb, mo.n_elec),
            _ => return Err(CliError::config("vqe.ansatz: quccsd needs orbital input under the jw encoding")),
        },
    })
}

pub fn run_point(run: &Resolved, p: &Problem, seed: u64) -> CliResult<PointOutput> {
    let out = |energy: f64, sigma: Option<f64>, details: Value, files: Vec<(String, String)>| PointOutput {
        r: p.r,
        energy,
        sigma,
        seed,
        details,
        files,
    };
    match run.method {
        Method::Fci => {
            let res = exact(p)?;
            let e = res.ground_energy();
            Ok(out(e, None, json!({ "energies": spectrum(&res, 6), "dimension": res.energies.len() }), vec![]))
        }
        Method::Vqe => {
            let h = p.hamiltonian()?;
            let spec = ansatz(run, p, h.n_qubits())?;
            let v = &run.config.vqe;
            let theta0 = vec![v.initial; spec.n_params()];
            let sampling = sampling_for(run, h.n_qubits(), seed)?;
            let res = if sampling.is_exact() && sampling.noise.is_none() {
                minimize_exact_with(&spec, &h, &theta0, v.max_iter, v.tol)?
            } else {
                let opts = DescentOptions { max_iter: v.max_iter, tol: v.tol, ..Default::default() };
                gradient_descent(&spec, &h, &theta0, &opts, &sampling, seed)?
            };
            Ok(out(
                res.energy,
                None,
                json!({
                    "parameters": res.parameters,
                    "converged": res.converged,
                    "evaluations": res.evaluations,
                    "iterations": res.trace.len(),
                }),
                vec![],
            ))
        }
        Method::Qite => {
            let h = p.hamiltonian()?;
            let init = QuantumState::basis(h.n_qubits(), p.reference()?);
            let sampling = sampling_for(run, h.n_qubits(), seed)?;
            let res = qite_run(&h, &init, &run.config.qite, &sampling, seed)?;
            let flagged = res.trace.steps.iter().filter(|s| s.flagged).count();
            let cnots = res.circuit.as_ref().map(|c| c.circuit.cnot_count());
            let name = match p.r {
                Some(r) => format!("qite_trace_R{r:.3}.csv"),
                None => "qite_trace.csv".to_string(),
            };
            Ok(out(
                res.trace.final_energy(),
                None,
                json!({ "steps": res.trace.steps.len() - 1, "flagged_steps": flagged, "cnot_count": cnots, "trace": name }),
                vec![(name, res.trace.to_csv())],
            ))
        }
        Method::Qeom => {
            let h = p.hamiltonian()?;
            let enc = p.encoding.ok_or_else(|| CliError::config("encoding: qeom needs a fermionic encoding"))?;
            let res = fci(&h, p.sector())?;
            let gs = QuantumState::from_amplitudes(res.state(0))?;
            let n_occ = p.n_elec().unwrap_or(2) / 2;
            let occ: Vec<usize> = (0..n_occ).collect();
            let vir: Vec<usize> = (n_occ..enc.n_orb()).collect();
            let basis = match run.config.qeom.basis {
                QeomBasis::SpinResolved => ExcitationBasis::spin_resolved(&occ, &vir, enc)?,
                QeomBasis::SpinSummed => ExcitationBasis::spin_summed(&occ, &vir, enc)?,
            };
            let sampling = sampling_for(run, h.n_qubits(), seed)?;
            let qm = qeom::build_matrices(&gs, &basis, &h, &sampling, seed)?;
            let det = qeom::metric_determinant(&qm);
            let cond = qeom::metric_condition(&qm);
            let gaps = qeom::solve(&qm)?;
            let e0 = res.ground_energy();
            Ok(out(
                e0,
                None,
                json!({
                    "excitation_energies": gaps,
                    "excited_energies": gaps.iter().map(|g| e0 + g).collect::<Vec<_>>(),
                    "exact_energies": spectrum(&res, gaps.len() + 1),
                    "operators": basis.labels,
                    "metric_determinant": det,
                    "metric_condition": cond,
                }),
                vec![],
            ))
        }
        Method::Vqse => {
            let Source::Bundle(b) = &p.source else {
                return Err(CliError::config("input: vqse needs an integral bundle"));
            };
            let space = iao_active_space(b)?;
            let na = space.active.n_orb();
            let act = fci_mo(&space.active, 0)?;
            let k = act.lowest_with_s2(0.0, 1e-6).unwrap_or(0);
            let st = QuantumState::from_amplitudes(act.state(k))?;
            let enc = FermionEncoding::JordanWigner { n_orb: na };
            let sampling = sampling_for(run, 2 * na, seed)?;
            let expansion = run.config.vqse.expansion.expansion();
            let (e, sigma, samples) = if sampling.is_exact() {
                let rdms = measure_rdms(&st, enc, &sampling, seed)?;
                let prob = VqseProblem::new(&space.full, &space.coeff, rdms, expansion)?;
                (vqse_solve(&build_forms(&prob)?)?, None, vec![])
            } else {
                let s = sample_statistics(&space.full, &space.coeff, &st, enc, expansion, &sampling, run.config.vqse.repeats, seed)?;
                (s.mean, Some(s.std_error), s.samples)
            };
            Ok(out(
                e,
                sigma,
                json!({
                    "n_full": space.full.n_orb(),
                    "n_active": na,
                    "reference_energy": act.energies[k],
                    "samples": samples,
                }),
                vec![],
            ))
        }
    }
}
