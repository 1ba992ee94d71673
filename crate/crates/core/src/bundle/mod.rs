//! Integral bundles: a JSON manifest plus little-endian `f64` blobs.

mod fcidump;
mod grid;

pub use fcidump::{load_fcidump, parse_fcidump, write_fcidump, format_fcidump};
pub use grid::{
    load_bundle_grid, load_fcidump_grid, load_grid_manifest, load_pauli_grid, GridEntry, GridKind,
    GridManifest, PESGrid,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrals::{packed_len, Eri};
use crate::linalg::{orthonormality_error, sym_eigen, RMat};

pub const BUNDLE_FORMAT: &str = "iaoqsim-bundle";
pub const BUNDLE_VERSION: u32 = 1;

/// Geometry and basis record attached to a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMeta {
    pub elements: Vec<String>,
    pub coords_angstrom: Vec<[f64; 3]>,
    pub r_angstrom: f64,
    pub basis_b1: String,
    pub basis_b2: String,
}

/// Atomic-orbital integrals and reference orbitals for one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralBundle {
    pub n_b1: usize,
    pub n_b2: usize,
    pub s1: RMat,
    pub s12: RMat,
    pub s2: RMat,
    pub hcore: RMat,
    pub eri: Eri,
    pub dipole: [RMat; 3],
    pub mo_coeff: RMat,
    pub n_occ: usize,
    pub e_nuc: f64,
    pub meta: GeometryMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayRecord {
    file: String,
    shape: Vec<usize>,
    sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    n_b1: usize,
    n_b2: usize,
    n_mo: usize,
    n_occ: usize,
    e_nuc: f64,
    meta: GeometryMeta,
    arrays: BTreeMap<String, ArrayRecord>,
}

const ARRAY_NAMES: [&str; 9] = [
    "s1", "s12", "s2", "hcore", "eri", "dipole_x", "dipole_y", "dipole_z", "mo_coeff",
];

impl IntegralBundle {
    pub fn n_mo(&self) -> usize {
        self.mo_coeff.ncols()
    }

    pub fn occupied_coeff(&self) -> RMat {
        self.mo_coeff.columns(0, self.n_occ).into_owned()
    }

    /// Checks every structural and numerical invariant. The first violation
    /// found is returned, naming its field.
    pub fn validate(&self) -> Result<()> {
        let (n1, n2) = (self.n_b1, self.n_b2);
        if n1 == 0 {
            return Err(Error::format("n_b1", "must be at least 1"));
        }
        if n2 > n1 {
            return Err(Error::format("n_b2", format!("n_b2 = {n2} exceeds n_b1 = {n1}")));
        }
        check_shape("s1", &self.s1, n1, n1)?;
        check_shape("s12", &self.s12, n1, n2)?;
        check_shape("s2", &self.s2, n2, n2)?;
        check_shape("hcore", &self.hcore, n1, n1)?;
        for (k, d) in self.dipole.iter().enumerate() {
            check_shape(["dipole_x", "dipole_y", "dipole_z"][k], d, n1, n1)?;
        }
        if self.mo_coeff.nrows() != n1 {
            return Err(Error::format(
                "mo_coeff",
                format!("expected {n1} rows, found {}", self.mo_coeff.nrows()),
            ));
        }
        if self.n_occ > self.mo_coeff.ncols() {
            return Err(Error::format("n_occ", "more occupied orbitals than MOs"));
        }
        if self.eri.n() != n1 {
            return Err(Error::format("eri", format!("built for {} functions, expected {n1}", self.eri.n())));
        }
        check_spd("s1", &self.s1)?;
        check_spd("s2", &self.s2)?;
        check_symmetric("hcore", &self.hcore)?;
        let err = orthonormality_error(&self.mo_coeff, &self.s1);
        if err > 1e-8 {
            return Err(Error::format(
                "mo_coeff",
                format!("columns not orthonormal under s1 (max deviation {err:.3e})"),
            ));
        }
        if !self.e_nuc.is_finite() {
            return Err(Error::format("e_nuc", "not finite"));
        }
        Ok(())
    }
}

fn check_shape(field: &str, m: &RMat, r: usize, c: usize) -> Result<()> {
    if m.shape() != (r, c) {
        return Err(Error::format(
            field,
            format!("expected shape {r}x{c}, found {}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::format(field, "contains non-finite values"));
    }
    Ok(())
}

fn check_symmetric(field: &str, m: &RMat) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 {
        return Err(Error::format(field, format!("not symmetric (max asymmetry {asym:.3e})")));
    }
    Ok(())
}

fn check_spd(field: &str, m: &RMat) -> Result<()> {
    check_symmetric(field, m)?;
    let (w, _) = sym_eigen(m);
    if let Some(&lo) = w.first() {
        if lo <= 1e-10 {
            return Err(Error::format(
                field,
                format!("overlap not positive definite (smallest eigenvalue {lo:.3e})"),
            ));
        }
    }
    Ok(())
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_blob(dir: &Path, name: &str, rec: &ArrayRecord) -> Result<Vec<f64>> {
    let path = dir.join(&rec.file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let digest = sha256_hex(&bytes);
    if !digest.eq_ignore_ascii_case(&rec.sha256) {
        return Err(Error::format(name, "checksum mismatch"));
    }
    let expected: usize = rec.shape.iter().product();
    if bytes.len() != 8 * expected {
        return Err(Error::format(
            name,
            format!("blob holds {} bytes, shape requires {}", bytes.len(), 8 * expected),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn matrix_from(name: &str, rec: &ArrayRecord, data: Vec<f64>) -> Result<RMat> {
    match rec.shape.as_slice() {
        [r, c] => Ok(RMat::from_row_slice(*r, *c, &data)),
        other => Err(Error::format(name, format!("expected a 2-D shape, found {other:?}"))),
    }
}

/// Loads and validates a bundle directory (or its `manifest.json`).
pub fn load_bundle(path: impl AsRef<Path>) -> Result<IntegralBundle> {
    let path = path.as_ref();
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join("manifest.json"))
    } else {
        (path.parent().unwrap_or(Path::new(".")).to_path_buf(), path.to_path_buf())
    };
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format("manifest", e.to_string()))?;
    if m.format != BUNDLE_FORMAT {
        return Err(Error::format("format", format!("unknown format {:?}", m.format)));
    }
    if m.version != BUNDLE_VERSION {
        return Err(Error::format("version", format!("unsupported version {}", m.version)));
    }
    let mut mats = BTreeMap::new();
    let mut eri = None;
    for name in ARRAY_NAMES {
        let rec = m
            .arrays
            .get(name)
            .ok_or_else(|| Error::format(name, "missing field"))?;
        let data = read_blob(&dir, name, rec)?;
        if name == "eri" {
            if rec.shape.len() == 4 {
                if rec.shape.iter().any(|&d| d != m.n_b1) {
                    return Err(Error::format("eri", "dimension mismatch"));
                }
                let viol = Eri::symmetry_violation(m.n_b1, &data);
                if viol > 0.0 {
                    return Err(Error::format("eri", format!("broken 8-fold symmetry ({viol:.3e})")));
                }
                eri = Some(Eri::from_dense(m.n_b1, &data));
            } else {
                if rec.shape != [packed_len(m.n_b1)] {
                    return Err(Error::format(
                        "eri",
                        format!("packed length {:?} does not match n_b1 = {}", rec.shape, m.n_b1),
                    ));
                }
                eri = Eri::from_packed(m.n_b1, data);
            }
        } else {
            mats.insert(name, matrix_from(name, rec, data)?);
        }
    }
    let mut take = |k: &str| mats.remove(k).expect("array loaded above");
    let bundle = IntegralBundle {
        n_b1: m.n_b1,
        n_b2: m.n_b2,
        s1: take("s1"),
        s12: take("s12"),
        s2: take("s2"),
        hcore: take("hcore"),
        dipole: [take("dipole_x"), take("dipole_y"), take("dipole_z")],
        mo_coeff: take("mo_coeff"),
        eri: eri.ok_or_else(|| Error::format("eri", "dimension mismatch"))?,
        n_occ: m.n_occ,
        e_nuc: m.e_nuc,
        meta: m.meta,
    };
    if bundle.n_mo() != m.n_mo {
        return Err(Error::format("n_mo", format!("manifest says {}, mo_coeff has {}", m.n_mo, bundle.n_mo())));
    }
    bundle.validate()?;
    Ok(bundle)
}

/// Writes `bundle` into directory `dir` (created if missing).
pub fn save_bundle(bundle: &IntegralBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut arrays = BTreeMap::new();
    let mut write = |name: &str, shape: Vec<usize>, values: Vec<f64>| -> Result<()> {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let file = format!("{name}.bin");
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        arrays.insert(
            name.to_string(),
            ArrayRecord {
                file,
                shape,
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    };
    let row_major = |m: &RMat| -> Vec<f64> {
        (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
    };
    let dims = |m: &RMat| vec![m.nrows(), m.ncols()];
    write("s1", dims(&bundle.s1), row_major(&bundle.s1))?;
    write("s12", dims(&bundle.s12), row_major(&bundle.s12))?;
    write("s2", dims(&bundle.s2), row_major(&bundle.s2))?;
    write("hcore", dims(&bundle.hcore), row_major(&bundle.hcore))?;
    write("eri", vec![bundle.eri.packed().len()], bundle.eri.packed().to_vec())?;
    for (k, name) in ["dipole_x", "dipole_y", "dipole_z"].iter().enumerate() {
        write(name, dims(&bundle.dipole[k]), row_major(&bundle.dipole[k]))?;
    }
    write("mo_coeff", dims(&bundle.mo_coeff), row_major(&bundle.mo_coeff))?;
    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        n_b1: bundle.n_b1,
        n_b2: bundle.n_b2,
        n_mo: bundle.n_mo(),
        n_occ: bundle.n_occ,
        e_nuc: bundle.e_nuc,
        meta: bundle.meta.clone(),
        arrays,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn hydrogen_atom() -> IntegralBundle {
        let one = RMat::from_element(1, 1, 1.0);
        let mut eri = Eri::zeros(1);
        eri.set(0, 0, 0, 0, 0.625);
        IntegralBundle {
            n_b1: 1,
            n_b2: 1,
            s1: one.clone(),
            s12: one.clone(),
            s2: one.clone(),
            hcore: RMat::from_element(1, 1, -0.5),
            eri,
            dipole: [RMat::zeros(1, 1), RMat::zeros(1, 1), RMat::zeros(1, 1)],
            mo_coeff: one,
            n_occ: 1,
            e_nuc: 0.0,
            meta: GeometryMeta {
                elements: vec!["H".into()],
                coords_angstrom: vec![[0.0; 3]],
                r_angstrom: 0.0,
                basis_b1: "minimal".into(),
                basis_b2: "minimal".into(),
            },
        }
    }

    #[test]
    fn minimal_bundle_round_trips() {
        let b = hydrogen_atom();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.n_b1, 1);
    }

    #[test]
    fn indefinite_overlap_is_rejected() {
        let mut b = hydrogen_atom();
        b.s1[(0, 0)] = -0.1;
        let err = b.validate().unwrap_err().to_string();
        assert!(err.contains("s1"), "{err}");
        assert!(err.contains("overlap not positive definite"), "{err}");
    }

    #[test]
    fn corrupted_blob_names_field() {
        let b = hydrogen_atom();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        fs::write(dir.path().join("hcore.bin"), 1.0f64.to_le_bytes()).unwrap();
        let err = load_bundle(dir.path()).unwrap_err().to_string();
        assert!(err.starts_with("hcore"), "{err}");
    }

    #[test]
    fn missing_array_names_field() {
        let b = hydrogen_atom();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        let p = dir.path().join("manifest.json");
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        v["arrays"].as_object_mut().unwrap().remove("dipole_y");
        fs::write(&p, v.to_string()).unwrap();
        let err = load_bundle(dir.path()).unwrap_err().to_string();
        assert!(err.contains("dipole_y") && err.contains("missing"), "{err}");
    }

    #[test]
    fn dense_eri_with_broken_symmetry_is_rejected() {
        let b = hydrogen_atom();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        // replace packed ERI by a dense 2^4 array for a 1-function bundle: wrong dims
        let p = dir.path().join("manifest.json");
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        let bytes: Vec<u8> = [0.1f64, 0.2].iter().flat_map(|x| x.to_le_bytes()).collect();
        fs::write(dir.path().join("eri.bin"), &bytes).unwrap();
        v["arrays"]["eri"]["shape"] = serde_json::json!([2]);
        v["arrays"]["eri"]["sha256"] = serde_json::json!(sha256_hex(&bytes));
        fs::write(&p, v.to_string()).unwrap();
        let err = load_bundle(dir.path()).unwrap_err().to_string();
        assert!(err.starts_with("eri"), "{err}");
    }

    #[test]
    fn non_orthonormal_mos_rejected() {
        let mut b = hydrogen_atom();
        b.mo_coeff[(0, 0)] = 2.0;
        assert!(b.validate().unwrap_err().to_string().starts_with("mo_coeff"));
    }
}
