use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iaoqsim::analysis::{PESCurve, RDMPair};
use iaoqsim::simulator::{CalibrationMatrix, CountsHistogram};
use iaoqsim::{load_fcidump, PauliSum};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn iaoqsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iaoqsim")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = iaoqsim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn field(stdout: &str, key: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("{key} missing in {stdout}"));
    line.split('=').nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn fci_scan_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fci");
    ok(&["run", "fci", "--input", p(&fixtures().join("h2_sto6g")), "--out", p(&out)]);
    let curve = PESCurve::load_csv("fci", out.join("pes.csv")).unwrap();
    assert_eq!(curve.points.len(), 15);
    assert!(curve.points.iter().all(|pt| pt.seed.is_some() && pt.sigma.is_none()));

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["point_seeds"].as_array().unwrap().len(), 15);
    assert!(manifest["inputs"].as_array().unwrap().iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    assert!(read_json(&out.join("timing.json"))["wall_seconds"].as_f64().unwrap() >= 0.0);

    let fit = ok(&["analyze-fit", "--csv", p(&out.join("pes.csv")), "--method", "fci", "--out", p(&dir.path().join("fit.json"))]);
    let de = field(&fit, "delta_e");
    let req = field(&fit, "r_eq");
    assert!(de > 0.15 && de < 0.25, "delta_e {de}");
    assert!(req > 0.65 && req < 0.8, "r_eq {req}");
    assert!(dir.path().join("fit.json").exists());
}

#[test]
fn so4_vqe_reaches_fci_on_the_folded_register() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixtures().join("nh3_honoluno/R1.000.pauli");
    let exact = ok(&["run", "fci", "--input", p(&input), "--out", p(&dir.path().join("fci"))]);
    let vqe = ok(&[
        "run", "vqe", "--ansatz", "so4", "--depth", "1", "--shots", "0",
        "--input", p(&input), "--out", p(&dir.path().join("vqe")),
    ]);
    let e_fci = field(&exact, "fci energy");
    let e_vqe = field(&vqe, "vqe energy");
    let json_fci = read_json(&dir.path().join("fci/result.json"))["points"][0]["energy"].as_f64().unwrap();
    let json_vqe = read_json(&dir.path().join("vqe/result.json"))["points"][0]["energy"].as_f64().unwrap();
    assert!((json_vqe - json_fci).abs() < 1e-8, "{json_vqe} vs {json_fci}");
    assert!((e_vqe - e_fci).abs() < 1e-8);
}

#[test]
fn missing_seed_with_shots_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = iaoqsim(&[
        "run", "vqe", "--shots", "100",
        "--input", p(&fixtures().join("nh3_honoluno/R1.000.pauli")), "--out", p(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed"), "{err}");
    assert!(!dir.path().join("x").exists());
}

#[test]
fn config_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "method = \"vqe\"\nshots = 10\nthreads = 0\n[vqe]\ndepth = 0\n[qite]\ndtau = -1.0\n",
    )
    .unwrap();
    let out = iaoqsim(&["run", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["input", "seed", "threads", "vqe.depth", "qite"] {
        assert!(err.contains(key), "{key} not named in {err}");
    }

    std::fs::write(&cfg, "method = \"vqe\"\nbogus = 1\n").unwrap();
    let out = iaoqsim(&["run", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = iaoqsim(&["run", "fci", "--input", p(&dir.path().join("nope.pauli")), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(4));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|f| f.file_name().unwrap() != "timing.json")
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&f).unwrap()))
        .collect();
    files.sort();
    files
}

fn strip_out(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).unwrap();
    v["config"]["out"] = Value::Null;
    v
}

#[test]
fn seeded_runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = fixtures().join("nh3_honoluno");
    let mut runs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = dir.path().join(tag);
        ok(&[
            "scan", "vqe", "--ansatz", "so4", "--shots", "2000", "--seed", "17", "--max-iter", "15",
            "--threads", threads, "--input", p(&grid), "--out", p(&out),
        ]);
        runs.push(snapshot(&out));
    }
    for other in &runs[1..] {
        assert_eq!(runs[0].len(), other.len());
        for ((na, a), (nc, c)) in runs[0].iter().zip(other) {
            assert_eq!(na, nc);
            if na == "manifest.json" {
                let (mut ja, mut jc) = (strip_out(a), strip_out(c));
                ja["config"]["threads"] = Value::Null;
                jc["config"]["threads"] = Value::Null;
                assert_eq!(ja, jc);
            } else {
                assert_eq!(a, c, "{na} differs between runs");
            }
        }
    }

    let other = dir.path().join("d");
    ok(&[
        "scan", "vqe", "--ansatz", "so4", "--shots", "2000", "--seed", "18", "--max-iter", "15",
        "--input", p(&grid), "--out", p(&other),
    ]);
    let pes = |d: &Path| std::fs::read(d.join("pes.csv")).unwrap();
    assert_ne!(pes(&dir.path().join("a")), pes(&other));
}

#[test]
fn scan_requires_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = iaoqsim(&[
        "scan", "fci", "--input", p(&fixtures().join("nh3_honoluno/R1.000.pauli")), "--out", p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_method_runs_on_the_folded_register() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixtures().join("nh3_honoluno/R1.000.pauli");
    let fci = read_json(&{
        let o = dir.path().join("fci");
        ok(&["run", "fci", "--input", p(&input), "--out", p(&o)]);
        o.join("result.json")
    })["points"][0]["energy"]
        .as_f64()
        .unwrap();

    let qite = dir.path().join("qite");
    ok(&["run", "qite", "--input", p(&input), "--out", p(&qite)]);
    let e = read_json(&qite.join("result.json"))["points"][0]["energy"].as_f64().unwrap();
    assert!((e - fci).abs() < 1e-3, "qite {e} vs {fci}");
    let trace = std::fs::read_dir(&qite).unwrap().filter(|f| f.as_ref().unwrap().file_name().to_string_lossy().starts_with("qite_trace")).count();
    assert_eq!(trace, 1);

    let qeom = dir.path().join("qeom");
    ok(&["run", "qeom", "--input", p(&input), "--out", p(&qeom)]);
    let details = &read_json(&qeom.join("result.json"))["points"][0]["details"];
    assert!(details.to_string().contains("excitation"), "{details}");
}

#[test]
fn vqse_runs_on_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vqse");
    ok(&["run", "vqse", "--input", p(&fixtures().join("h2_sto6g/R0.740")), "--out", p(&out)]);
    let e = read_json(&out.join("result.json"))["points"][0]["energy"].as_f64().unwrap();
    let f = dir.path().join("fci");
    ok(&["run", "fci", "--input", p(&fixtures().join("h2_sto6g/R0.740")), "--out", p(&f)]);
    let exact = read_json(&f.join("result.json"))["points"][0]["energy"].as_f64().unwrap();
    assert!((e - exact).abs() < 1e-6, "{e} vs {exact}");
}

#[test]
fn iao_build_and_fold_write_loadable_operators() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = fixtures().join("h2_sto6g/R0.740");

    let iao = dir.path().join("iao");
    ok(&["iao-build", "--bundle", p(&bundle), "--out", p(&iao)]);
    let mo = load_fcidump(iao.join("iao.fcidump")).unwrap();
    assert_eq!(mo.n_elec, 2);
    assert!(read_json(&iao.join("iao.json")).is_object());

    let fold = dir.path().join("fold");
    ok(&["fold", "--input", p(&bundle), "--encoding", "pair", "--out", p(&fold)]);
    let active = load_fcidump(fold.join("active.fcidump")).unwrap();
    assert_eq!((active.n_orb(), active.n_elec), (2, 2));
    let h = PauliSum::load(fold.join("active.pauli")).unwrap();
    assert_eq!(h.n_qubits(), 2);
    assert!(read_json(&fold.join("space.json")).is_object());

    let r = dir.path().join("run");
    ok(&["run", "fci", "--input", p(&fold.join("active.pauli")), "--out", p(&r)]);
    let e_pauli = read_json(&r.join("result.json"))["points"][0]["energy"].as_f64().unwrap();
    let r2 = dir.path().join("run2");
    ok(&["run", "fci", "--input", p(&bundle), "--out", p(&r2)]);
    let e_full = read_json(&r2.join("result.json"))["points"][0]["energy"].as_f64().unwrap();
    assert!((e_pauli - e_full).abs() < 1e-8, "{e_pauli} vs {e_full}");
}

#[test]
fn rdm_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rdm");
    ok(&["rdm", "--input", p(&fixtures().join("h2_sto6g/R0.740")), "--out", p(&out)]);
    let text = std::fs::read_to_string(out.join("rdm.json")).unwrap();
    let rdm: RDMPair = serde_json::from_str(&text).unwrap();
    assert!((rdm.trace(iaoqsim::Spin::Up) - 1.0).abs() < 1e-10);
    assert!((rdm.trace(iaoqsim::Spin::Down) - 1.0).abs() < 1e-10);
    assert!(rdm.antisymmetry_error() < 1e-10);
    let again: RDMPair = serde_json::from_str(&serde_json::to_string(&rdm).unwrap()).unwrap();
    assert_eq!(rdm, again);
    assert!(read_json(&out.join("summary.json")).is_object());
}

#[test]
fn mitigation_demo_counts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mit");
    ok(&[
        "mitigate-demo", "--input", p(&fixtures().join("nh3_honoluno/R1.000.pauli")),
        "--readout-error", "0.05", "--seed", "3", "--out", p(&out),
    ]);
    let raw: CountsHistogram = serde_json::from_str(&std::fs::read_to_string(out.join("raw_counts.json")).unwrap()).unwrap();
    let fixed: CountsHistogram =
        serde_json::from_str(&std::fs::read_to_string(out.join("mitigated_counts.json")).unwrap()).unwrap();
    let _: CalibrationMatrix = serde_json::from_str(&std::fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&raw).unwrap(), read_json(&out.join("raw_counts.json")));
    assert_eq!(serde_json::to_value(&fixed).unwrap(), read_json(&out.join("mitigated_counts.json")));
    let s = read_json(&out.join("summary.json"));
    assert!(s["tvd_mitigated"].as_f64().unwrap() < s["tvd_raw"].as_f64().unwrap());
    let exact = s["energy_exact"].as_f64().unwrap();
    assert!((s["energy_mitigated"].as_f64().unwrap() - exact).abs() < (s["energy_raw"].as_f64().unwrap() - exact).abs());

    let missing = iaoqsim(&["mitigate-demo", "--out", p(&dir.path().join("m2"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("seed"));
}
