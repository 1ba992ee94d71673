use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_bundle, load_fcidump, IntegralBundle};
use crate::error::{Error, Result};
use crate::orbital_space::MOIntegrals;
use crate::pauli::PauliSum;

/// Ordered `(R, item)` pairs with strictly increasing R (Å).
#[derive(Debug, Clone)]
pub struct PESGrid<T> {
    entries: Vec<(f64, T)>,
}

impl<T> PESGrid<T> {
    pub fn new(entries: Vec<(f64, T)>) -> Result<Self> {
        for w in entries.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::format(
                    "grid",
                    format!("R values must be strictly increasing ({} then {})", w[0].0, w[1].0),
                ));
            }
        }
        if entries.iter().any(|(r, _)| !r.is_finite()) {
            return Err(Error::format("grid", "non-finite R"));
        }
        Ok(PESGrid { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, T)] {
        &self.entries
    }

    pub fn rs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, T)> {
        self.entries.iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(f64, &T) -> U) -> PESGrid<U> {
        PESGrid {
            entries: self.entries.iter().map(|(r, t)| (*r, f(*r, t))).collect(),
        }
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(f64, &T) -> Result<U>) -> Result<PESGrid<U>> {
        let mut out = Vec::with_capacity(self.entries.len());
        for (r, t) in &self.entries {
            out.push((*r, f(*r, t)?));
        }
        Ok(PESGrid { entries: out })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Bundle,
    Fcidump,
    Pauli,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEntry {
    pub r: f64,
    pub path: String,
}

/// `grid.json`: the kind of payload plus `(r, relative path)` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridManifest {
    pub kind: GridKind,
    pub entries: Vec<GridEntry>,
}

impl GridManifest {
    pub fn resolve(&self, dir: &Path) -> Vec<(f64, PathBuf)> {
        self.entries.iter().map(|e| (e.r, dir.join(&e.path))).collect()
    }
}

pub fn load_grid_manifest(dir: impl AsRef<Path>) -> Result<GridManifest> {
    let path = dir.as_ref().join("grid.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format("grid.json", e.to_string()))
}

fn expect_kind(m: &GridManifest, kind: GridKind) -> Result<()> {
    if m.kind != kind {
        return Err(Error::format(
            "grid.json",
            format!("expected a {kind:?} grid, found {:?}", m.kind),
        ));
    }
    Ok(())
}

/// Loads every bundle of a grid directory; all entries must agree on basis
/// names and occupied count.
pub fn load_bundle_grid(dir: impl AsRef<Path>) -> Result<PESGrid<IntegralBundle>> {
    let dir = dir.as_ref();
    let m = load_grid_manifest(dir)?;
    expect_kind(&m, GridKind::Bundle)?;
    let mut out = Vec::new();
    for (r, p) in m.resolve(dir) {
        out.push((r, load_bundle(&p)?));
    }
    if let Some((_, first)) = out.first() {
        for (r, b) in &out {
            if b.meta.basis_b1 != first.meta.basis_b1
                || b.meta.basis_b2 != first.meta.basis_b2
                || b.n_occ != first.n_occ
            {
                return Err(Error::format(
                    "grid",
                    format!("entry at R = {r} disagrees with the first entry on basis or electron count"),
                ));
            }
        }
    }
    PESGrid::new(out)
}

pub fn load_fcidump_grid(dir: impl AsRef<Path>) -> Result<PESGrid<MOIntegrals>> {
    let dir = dir.as_ref();
    let m = load_grid_manifest(dir)?;
    expect_kind(&m, GridKind::Fcidump)?;
    let mut out = Vec::new();
    for (r, p) in m.resolve(dir) {
        out.push((r, load_fcidump(&p)?));
    }
    if let Some((_, first)) = out.first() {
        if out.iter().any(|(_, mo)| mo.n_elec != first.n_elec || mo.n_orb() != first.n_orb()) {
            return Err(Error::format("grid", "entries disagree on electron or orbital count"));
        }
    }
    PESGrid::new(out)
}

pub fn load_pauli_grid(dir: impl AsRef<Path>) -> Result<PESGrid<PauliSum>> {
    let dir = dir.as_ref();
    let m = load_grid_manifest(dir)?;
    expect_kind(&m, GridKind::Pauli)?;
    let mut out = Vec::new();
    for (r, p) in m.resolve(dir) {
        out.push((r, PauliSum::load(&p)?));
    }
    if let Some((_, first)) = out.first() {
        if out.iter().any(|(_, h)| h.n_qubits() != first.n_qubits()) {
            return Err(Error::format("grid", "entries disagree on qubit count"));
        }
    }
    PESGrid::new(out)
}
