//! `run` and `scan`: evaluate a method over every input point and write
//! the manifest, results and curves.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use iaoqsim::analysis::{PESCurve, PESPoint};
use iaoqsim::simulator::derive_seed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::methods::{run_point, PointOutput};
use crate::output::{write_file, write_json, InputRecord, Manifest};
use crate::problem::{load_input, Problem};

#[derive(Serialize)]
struct PointRecord<'a> {
    r: Option<f64>,
    energy: f64,
    sigma: Option<f64>,
    seed: u64,
    details: &'a Value,
}

/// Evaluates all points, fanning out over `threads` workers. Results come
/// back through one channel and are ordered by index before anything is
/// written, so the output does not depend on scheduling.
fn evaluate(run: &Resolved, problems: &[Problem], seeds: &[u64]) -> CliResult<Vec<PointOutput>> {
    let threads = run.config.threads.min(problems.len()).max(1);
    let mut slots: Vec<Option<CliResult<PointOutput>>> = (0..problems.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel();
        for w in 0..threads {
            let tx = tx.clone();
            s.spawn(move || {
                for k in (w..problems.len()).step_by(threads) {
                    let res = run_point(run, &problems[k], seeds[k]);
                    if tx.send((k, res)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(tx);
        for (k, res) in rx {
            slots[k] = Some(res);
        }
    });
    let mut out = Vec::with_capacity(slots.len());
    for (k, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(p)) => out.push(p),
            Some(Err(e)) => {
                let at = problems[k].r.map(|r| format!(" at R = {r}")).unwrap_or_default();
                eprintln!("point {k}{at} failed");
                return Err(e);
            }
            None => return Err(CliError::config(format!("point {k} produced no result"))),
        }
    }
    Ok(out)
}

pub fn execute(cfg: RunConfig, command: &str, require_grid: bool) -> CliResult<PathBuf> {
    let started = Instant::now();
    let run = cfg.resolve()?;
    let input = load_input(&run.input, run.config.encoding)?;
    if require_grid && !input.is_grid {
        return Err(CliError::config(format!("input: {} is not a grid directory", run.input.display())));
    }
    std::fs::create_dir_all(&run.out).map_err(|e| CliError::io(&run.out, e))?;
    let seeds: Vec<u64> = (0..input.problems.len()).map(|k| derive_seed(run.seed, k as u64)).collect();
    let mut manifest = Manifest::new(command, serde_json::to_value(&run.config).expect("config serializes"), run.seed, seeds.clone(), InputRecord::hash_all(&input.files)?);
    manifest.save(&run.out)?;

    let result = evaluate(&run, &input.problems, &seeds).and_then(|points| write_outputs(&run, &input.is_grid, &points));
    match result {
        Ok(outputs) => {
            manifest.finish(outputs);
            manifest.save(&run.out)?;
            crate::output::write_timing(&run.out, started.elapsed())?;
            Ok(run.out.clone())
        }
        Err(e) => {
            manifest.fail(&e);
            manifest.save(&run.out)?;
            crate::output::write_timing(&run.out, started.elapsed())?;
            Err(e)
        }
    }
}

fn write_outputs(run: &Resolved, is_grid: &bool, points: &[PointOutput]) -> CliResult<Vec<String>> {
    let out: &Path = &run.out;
    let mut names = Vec::new();
    for p in points {
        for (name, text) in &p.files {
            write_file(&out.join(name), text)?;
            names.push(name.clone());
        }
    }
    let records: Vec<PointRecord> = points
        .iter()
        .map(|p| PointRecord { r: p.r, energy: p.energy, sigma: p.sigma, seed: p.seed, details: &p.details })
        .collect();
    write_json(&out.join("result.json"), &json!({ "method": run.method.name(), "points": records }))?;
    names.push("result.json".to_string());
    if *is_grid {
        let curve = PESCurve::new(
            run.method.name(),
            points
                .iter()
                .map(|p| PESPoint { r: p.r.unwrap_or(f64::NAN), energy: p.energy, sigma: p.sigma, seed: Some(p.seed) })
                .collect(),
        )?;
        write_file(&out.join("pes.csv"), &curve.to_csv())?;
        names.push("pes.csv".to_string());
    }
    for p in points {
        let at = p.r.map(|r| format!("R = {r:.3}  ")).unwrap_or_default();
        let sig = p.sigma.map(|s| format!(" ± {s:.6}")).unwrap_or_default();
        println!("{at}{} energy = {:.10}{sig}", run.method.name(), p.energy);
    }
    Ok(names)
}
