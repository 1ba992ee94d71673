//! The smaller subcommands: iao-build, fold, rdm, analyze-fit and
//! mitigate-demo.

use std::path::{Path, PathBuf};
use std::time::Instant;

use iaoqsim::analysis::{energy_from_rdms, fit_equilibrium, measure_rdms, s_squared, PESCurve};
use iaoqsim::fci::fci;
use iaoqsim::iao::{iao_active_space, localized_iaos, occupied_span_residual};
use iaoqsim::linalg::{RMat, C64};
use iaoqsim::orbital_space::{ao2mo, freeze_core, make_active_space, semicanonicalize};
use iaoqsim::pauli::map_hamiltonian;
use iaoqsim::simulator::{
    build_calibration, derive_seed, mitigate, sample, CountsHistogram, MeasurementBasis, NoiseModel, QuantumState,
    Sampling,
};
use iaoqsim::{load_bundle, load_fcidump, write_fcidump, ActiveSelector, FermionEncoding, MOIntegrals};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::EncodingChoice;
use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_timing, InputRecord, Manifest};
use crate::problem::load_input;

fn rows(m: &RMat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn finish(dir: &Path, mut manifest: Manifest, outputs: &[&str], started: Instant) -> CliResult<()> {
    manifest.finish(outputs.iter().map(|s| s.to_string()).collect());
    manifest.save(dir)?;
    write_timing(dir, started.elapsed())
}

fn create(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn iao_build(bundle: &Path, out: &Path) -> CliResult<()> {
    let started = Instant::now();
    let b = load_bundle(bundle)?;
    create(out)?;
    let dir = if bundle.is_dir() { bundle.to_path_buf() } else { bundle.parent().unwrap_or(Path::new(".")).to_path_buf() };
    let manifest = Manifest::new(
        "iao-build",
        json!({ "bundle": bundle }),
        0,
        vec![],
        InputRecord::hash_all(&[dir.join("manifest.json")])?,
    );
    manifest.save(out)?;
    let iaos = localized_iaos(&b)?;
    let residual = occupied_span_residual(&iaos, &b);
    let space = iao_active_space(&b)?;
    write_json(
        &out.join("iao.json"),
        &json!({
            "n_b1": b.n_b1,
            "n_iao": iaos.coeff.ncols(),
            "occupied_span_residual": residual,
            "boys_history": iaos.boys_history,
            "coeff": rows(&iaos.coeff),
            "mo_coeff": rows(&space.coeff),
        }),
    )?;
    write_fcidump(&space.active, out.join("iao.fcidump"))?;
    println!("{} IAOs from {} basis functions, occupied-span residual {residual:.3e}", iaos.coeff.ncols(), b.n_b1);
    finish(out, manifest, &["iao.json", "iao.fcidump"], started)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SelectorKind {
    Full,
    HfWindow,
    HonoLuno,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FoldArgs {
    /// Bundle directory or FCIDUMP file.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON file with `occupied_coeff` (rows) defining the occupied space
    /// when the input orbitals are not canonical.
    #[arg(long)]
    pub occupied: Option<PathBuf>,
    /// Number of lowest canonical orbitals to freeze before selection.
    #[arg(long, default_value_t = 0)]
    pub freeze_core: usize,
    #[arg(long, value_enum, default_value_t = SelectorKind::HonoLuno)]
    pub selector: SelectorKind,
    /// Orbital count for the hf-window selector.
    #[arg(long)]
    pub window: Option<usize>,
    /// Electrons kept in the active space.
    #[arg(long, default_value_t = 2)]
    pub electrons: usize,
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingChoice>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct OccupiedFile {
    occupied_coeff: Vec<Vec<f64>>,
}

pub fn fold(a: &FoldArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut bad = Vec::new();
    let selector = match (a.selector, a.window) {
        (SelectorKind::Full, _) => Some(ActiveSelector::Full),
        (SelectorKind::HonoLuno, _) => Some(ActiveSelector::HonoLuno),
        (SelectorKind::HfWindow, Some(k)) => Some(ActiveSelector::HfWindow(k)),
        (SelectorKind::HfWindow, None) => {
            bad.push("window: required for the hf-window selector".to_string());
            None
        }
    };
    if a.electrons % 2 != 0 {
        bad.push(format!("electrons: must be even (got {})", a.electrons));
    }
    if !bad.is_empty() {
        return Err(CliError::Config(bad));
    }
    let selector = selector.expect("checked");
    let mut files = Vec::new();
    let mo: MOIntegrals = if a.input.is_dir() {
        let b = load_bundle(&a.input)?;
        files.push(a.input.join("manifest.json"));
        ao2mo(&b, &b.mo_coeff)?
    } else {
        files.push(a.input.clone());
        load_fcidump(&a.input)?
    };
    let mo = match &a.occupied {
        Some(path) => {
            files.push(path.clone());
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let occ: OccupiedFile =
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("occupied: {}: {e}", path.display())))?;
            let n_occ = occ.occupied_coeff.first().map(Vec::len).unwrap_or(0);
            if occ.occupied_coeff.len() != mo.n_orb() || occ.occupied_coeff.iter().any(|r| r.len() != n_occ) {
                return Err(CliError::config(format!("occupied: expected {} rows of equal length", mo.n_orb())));
            }
            let c = RMat::from_row_slice(mo.n_orb(), n_occ, &occ.occupied_coeff.concat());
            semicanonicalize(&mo, &c)?.mo
        }
        None => mo,
    };
    let mo = if a.freeze_core > 0 { freeze_core(&mo, &(0..a.freeze_core).collect::<Vec<_>>())? } else { mo };
    let (act, space) = make_active_space(&mo, selector, a.electrons)?;
    create(&a.out)?;
    let manifest = Manifest::new(
        "fold",
        json!({
            "input": a.input, "occupied": a.occupied, "freeze_core": a.freeze_core,
            "selector": selector, "electrons": a.electrons, "encoding": a.encoding,
        }),
        0,
        vec![],
        InputRecord::hash_all(&files)?,
    );
    manifest.save(&a.out)?;
    write_fcidump(&act, a.out.join("active.fcidump"))?;
    let pair = match a.encoding {
        Some(EncodingChoice::Pair) => true,
        Some(EncodingChoice::Jw) => false,
        None => act.n_orb() == 2 && act.n_elec == 2,
    };
    let h = if pair { FermionEncoding::PairSector.hamiltonian(&act)? } else { map_hamiltonian(&act)? };
    h.save(a.out.join("active.pauli"))?;
    write_json(
        &a.out.join("space.json"),
        &json!({
            "label": space.label,
            "n_orb": act.n_orb(),
            "n_elec": act.n_elec,
            "core_energy": act.e0,
            "occupations": space.occupations,
            "encoding": if pair { "pair" } else { "jw" },
            "n_qubits": h.n_qubits(),
        }),
    )?;
    println!("{} active orbitals, {} electrons, {} Pauli terms on {} qubits", act.n_orb(), act.n_elec, h.len(), h.n_qubits());
    finish(&a.out, manifest, &["active.fcidump", "active.pauli", "space.json"], started)
}

#[derive(Debug, Clone, clap::Args)]
pub struct RdmArgs {
    /// Single bundle, FCIDUMP or Pauli file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingChoice>,
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Symmetric readout flip probability.
    #[arg(long)]
    pub readout_error: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn rdm(a: &RdmArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut bad = Vec::new();
    if a.shots > 0 && a.seed.is_none() {
        bad.push("seed: required when shots > 0".to_string());
    }
    if a.readout_error.is_some() && a.shots == 0 {
        bad.push("readout_error: needs shots > 0".to_string());
    }
    if let Some(p) = a.readout_error {
        if !(0.0..=1.0).contains(&p) {
            bad.push(format!("readout_error: must lie in [0, 1] (got {p})"));
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Config(bad));
    }
    let input = load_input(&a.input, a.encoding)?;
    if input.is_grid {
        return Err(CliError::config("input: rdm takes a single geometry"));
    }
    let p = &input.problems[0];
    let enc = p.encoding.ok_or_else(|| CliError::config("encoding: rdm needs a fermionic encoding"))?;
    let h = p.hamiltonian()?;
    let res = fci(&h, p.sector())?;
    let st = QuantumState::from_amplitudes(res.state(0))?;
    let seed = a.seed.unwrap_or(0);
    let sampling = Sampling::shots(a.shots, a.readout_error.map(NoiseModel::readout_only));
    create(&a.out)?;
    let manifest = Manifest::new(
        "rdm",
        json!({ "input": a.input, "encoding": a.encoding, "shots": a.shots, "seed": a.seed, "readout_error": a.readout_error }),
        seed,
        vec![],
        InputRecord::hash_all(&input.files)?,
    );
    manifest.save(&a.out)?;
    let rdms = measure_rdms(&st, enc, &sampling, derive_seed(seed, 0))?;
    let s2 = s_squared(&st, enc, &sampling, derive_seed(seed, 1))?;
    write_json(&a.out.join("rdm.json"), &rdms)?;
    let e_rdm = p.mo.as_ref().map(|mo| energy_from_rdms(&rdms, mo)).transpose()?;
    let summary = json!({
        "fci_energy": res.ground_energy(),
        "rdm_energy": e_rdm,
        "s_squared": s2,
        "electrons": rdms.spin_summed_one().trace(),
        "antisymmetry_error": rdms.antisymmetry_error(),
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    finish(&a.out, manifest, &["rdm.json", "summary.json"], started)
}

pub fn analyze_fit(csv: &Path, method: &str, out: Option<&Path>) -> CliResult<()> {
    let curve = PESCurve::load_csv(method, csv)?;
    let fit = fit_equilibrium(&curve)?;
    println!("method = {method}");
    println!("delta_e = {:.6} Hartree", fit.delta_e);
    println!("r_eq = {:.6} Angstrom", fit.r_eq);
    println!("e_min = {:.10} Hartree", fit.e_min);
    if let Some(path) = out {
        write_json(path, &fit)?;
    }
    Ok(())
}

#[derive(Debug, Clone, clap::Args)]
pub struct MitigateArgs {
    /// Optional Pauli or FCIDUMP input whose ground state is measured;
    /// defaults to a Bell state.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 8192)]
    pub shots: usize,
    #[arg(long, default_value_t = 0.02)]
    pub readout_error: f64,
    #[arg(long, default_value_t = 8192)]
    pub calibration_shots: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn tvd(a: &CountsHistogram, ideal: &[f64]) -> f64 {
    let t = a.total();
    0.5 * ideal.iter().enumerate().map(|(k, p)| (a.get(k as u64) / t - p).abs()).sum::<f64>()
}

pub fn mitigate_demo(a: &MitigateArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut bad = Vec::new();
    if a.seed.is_none() {
        bad.push("seed: required when shots > 0".to_string());
    }
    if a.shots == 0 {
        bad.push("shots: must be at least 1".to_string());
    }
    if !(0.0..0.5).contains(&a.readout_error) {
        bad.push(format!("readout_error: must lie in [0, 0.5) (got {})", a.readout_error));
    }
    if !bad.is_empty() {
        return Err(CliError::Config(bad));
    }
    let seed = a.seed.expect("checked");
    let (state, h, files) = match &a.input {
        Some(path) => {
            let input = load_input(path, None)?;
            if input.is_grid {
                return Err(CliError::config("input: mitigate-demo takes a single geometry"));
            }
            let p = &input.problems[0];
            let h = p.hamiltonian()?;
            let res = fci(&h, p.sector())?;
            (QuantumState::from_amplitudes(res.state(0))?, Some((h, res.ground_energy())), input.files)
        }
        None => {
            let r = 0.5f64.sqrt();
            let z = C64::new(0.0, 0.0);
            (QuantumState::from_amplitudes(vec![C64::new(r, 0.0), z, z, C64::new(r, 0.0)])?, None, vec![])
        }
    };
    let n = state.n_qubits();
    let noise = NoiseModel::readout_only(a.readout_error);
    create(&a.out)?;
    let manifest = Manifest::new(
        "mitigate-demo",
        json!({
            "input": a.input, "shots": a.shots, "readout_error": a.readout_error,
            "calibration_shots": a.calibration_shots, "seed": seed,
        }),
        seed,
        vec![],
        InputRecord::hash_all(&files)?,
    );
    manifest.save(&a.out)?;
    let calib = build_calibration(&noise, n, a.calibration_shots, derive_seed(seed, 0))?;
    let raw = sample(&state, &MeasurementBasis::z(n), a.shots, derive_seed(seed, 1), Some(&noise))?;
    let fixed = mitigate(&raw, &calib)?;
    let ideal = state.probabilities();
    write_json(&a.out.join("raw_counts.json"), &raw)?;
    write_json(&a.out.join("mitigated_counts.json"), &fixed)?;
    write_json(&a.out.join("calibration.json"), &calib)?;
    let mut summary = json!({
        "tvd_raw": tvd(&raw, &ideal),
        "tvd_mitigated": tvd(&fixed, &ideal),
        "calibration_condition": calib.condition_number(),
    });
    if let Some((h, exact)) = &h {
        let plain = Sampling::shots(a.shots, Some(noise.clone()));
        let with = Sampling { mitigation: Some(calib.clone()), ..plain.clone() };
        let e_raw = plain.expectation(&state, h, derive_seed(seed, 2))?;
        let e_mit = with.expectation(&state, h, derive_seed(seed, 2))?;
        summary["energy_exact"] = Value::from(*exact);
        summary["energy_raw"] = Value::from(e_raw);
        summary["energy_mitigated"] = Value::from(e_mit);
    }
    write_json(&a.out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    finish(&a.out, manifest, &["raw_counts.json", "mitigated_counts.json", "calibration.json", "summary.json"], started)
}
