//! Turns an input path (grid directory, bundle, FCIDUMP or Pauli file) into
//! a list of problems.

use std::path::{Path, PathBuf};

use iaoqsim::bundle::{load_grid_manifest, GridKind};
use iaoqsim::fci::Sector;
use iaoqsim::orbital_space::ao2mo;
use iaoqsim::{load_bundle, load_fcidump, FermionEncoding, IntegralBundle, MOIntegrals, PauliSum};

use crate::config::EncodingChoice;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub enum Source {
    Bundle(Box<IntegralBundle>),
    Integrals,
    Pauli(PauliSum),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub r: Option<f64>,
    pub source: Source,
    /// Orbital integrals in the reference MO basis (absent for Pauli input).
    pub mo: Option<MOIntegrals>,
    pub encoding: Option<FermionEncoding>,
}

#[derive(Debug, Clone)]
pub struct Input {
    pub problems: Vec<Problem>,
    pub is_grid: bool,
    /// Files read, for checksums.
    pub files: Vec<PathBuf>,
}

fn encoding_for(mo: &MOIntegrals, choice: Option<EncodingChoice>) -> CliResult<FermionEncoding> {
    match choice {
        Some(EncodingChoice::Pair) => {
            if mo.n_orb() != 2 || mo.n_elec != 2 {
                return Err(CliError::config(format!(
                    "encoding: pair needs 2 electrons in 2 orbitals, input has {} in {}",
                    mo.n_elec,
                    mo.n_orb()
                )));
            }
            Ok(FermionEncoding::PairSector)
        }
        Some(EncodingChoice::Jw) | None => Ok(FermionEncoding::JordanWigner { n_orb: mo.n_orb() }),
    }
}

fn pauli_encoding(h: &PauliSum, choice: Option<EncodingChoice>) -> CliResult<Option<FermionEncoding>> {
    let n = h.n_qubits();
    match choice {
        Some(EncodingChoice::Pair) | None if n == 2 => Ok(Some(FermionEncoding::PairSector)),
        Some(EncodingChoice::Pair) => Err(CliError::config(format!("encoding: pair needs 2 qubits, operator has {n}"))),
        Some(EncodingChoice::Jw) if n % 2 == 0 => Ok(Some(FermionEncoding::JordanWigner { n_orb: n / 2 })),
        Some(EncodingChoice::Jw) => Err(CliError::config(format!("encoding: jw needs an even qubit count, operator has {n}"))),
        None => Ok(None),
    }
}

fn load_one(path: &Path, r: Option<f64>, choice: Option<EncodingChoice>) -> CliResult<(Problem, Vec<PathBuf>)> {
    if path.is_dir() || path.file_name().is_some_and(|f| f == "manifest.json") {
        let b = load_bundle(path)?;
        let mo = ao2mo(&b, &b.mo_coeff)?;
        let encoding = Some(encoding_for(&mo, choice)?);
        let r = r.or(Some(b.meta.r_angstrom));
        let dir = if path.is_dir() { path.to_path_buf() } else { path.parent().unwrap_or(Path::new(".")).to_path_buf() };
        let files = vec![dir.join("manifest.json")];
        return Ok((Problem { r, source: Source::Bundle(Box::new(b)), mo: Some(mo), encoding }, files));
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "fcidump" => {
            let mo = load_fcidump(path)?;
            let encoding = Some(encoding_for(&mo, choice)?);
            Ok((
                Problem { r, source: Source::Integrals, mo: Some(mo), encoding },
                vec![path.to_path_buf()],
            ))
        }
        "pauli" => {
            let h = PauliSum::load(path)?;
            let encoding = pauli_encoding(&h, choice)?;
            Ok((Problem { r, source: Source::Pauli(h), mo: None, encoding }, vec![path.to_path_buf()]))
        }
        _ => Err(CliError::config(format!(
            "input: {} is not a grid directory, bundle, .fcidump or .pauli file",
            path.display()
        ))),
    }
}

pub fn load_input(path: &Path, choice: Option<EncodingChoice>) -> CliResult<Input> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
    }
    if path.is_dir() && path.join("grid.json").exists() {
        let m = load_grid_manifest(path)?;
        let mut problems = Vec::new();
        let mut files = vec![path.join("grid.json")];
        for (r, p) in m.resolve(path) {
            let (prob, f) = load_one(&p, Some(r), choice)?;
            let expected = match prob.source {
                Source::Bundle(_) => GridKind::Bundle,
                Source::Integrals => GridKind::Fcidump,
                Source::Pauli(_) => GridKind::Pauli,
            };
            if expected != m.kind {
                return Err(CliError::config(format!("input: grid entry {} does not match grid kind", p.display())));
            }
            problems.push(prob);
            files.extend(f);
        }
        return Ok(Input { problems, is_grid: true, files });
    }
    let (prob, files) = load_one(path, None, choice)?;
    Ok(Input { problems: vec![prob], is_grid: false, files })
}

impl Problem {
    pub fn n_elec(&self) -> Option<usize> {
        match (&self.mo, self.encoding) {
            (Some(mo), _) => Some(mo.n_elec),
            (None, Some(FermionEncoding::PairSector)) => Some(2),
            _ => None,
        }
    }

    /// Register Hamiltonian under the problem's encoding.
    pub fn hamiltonian(&self) -> CliResult<PauliSum> {
        match (&self.source, &self.mo, self.encoding) {
            (Source::Pauli(h), _, _) => Ok(h.clone()),
            (_, Some(mo), Some(enc)) => Ok(enc.hamiltonian(mo)?),
            _ => Err(CliError::config("input: no Hamiltonian available")),
        }
    }

    pub fn sector(&self) -> Sector {
        match (self.encoding, &self.mo) {
            (Some(FermionEncoding::PairSector), _) => Sector::PairSector,
            (Some(FermionEncoding::JordanWigner { n_orb }), Some(mo)) => {
                Sector::JordanWigner { n_orb, n_elec: mo.n_elec, two_sz: (mo.n_elec % 2) as i32 }
            }
            (Some(FermionEncoding::JordanWigner { n_orb }), None) => Sector::All { n_qubits: 2 * n_orb },
            (None, _) => Sector::All { n_qubits: self.hamiltonian().map(|h| h.n_qubits()).unwrap_or(0) },
        }
    }

    /// Basis index of the reference determinant on the register.
    pub fn reference(&self) -> CliResult<u64> {
        match (self.encoding, self.n_elec()) {
            (Some(enc), Some(n)) => Ok(enc.reference_index(n)?),
            _ => Ok(0),
        }
    }
}
