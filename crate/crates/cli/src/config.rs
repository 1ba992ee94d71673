//! Run configuration: file (TOML or JSON) merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use iaoqsim::qite::QiteConfig;
use iaoqsim::simulator::NoiseModel;
use iaoqsim::vqse::Expansion;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fci,
    Vqe,
    Qite,
    Qeom,
    Vqse,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fci => "fci",
            Method::Vqe => "vqe",
            Method::Qite => "qite",
            Method::Qeom => "qeom",
            Method::Vqse => "vqse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EncodingChoice {
    /// Jordan–Wigner on 2 qubits per spatial orbital.
    Jw,
    /// Two electrons in two orbitals on 2 qubits.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzChoice {
    Ry,
    So4,
    Quccsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum QeomBasis {
    SpinResolved,
    SpinSummed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionChoice {
    Full,
    ActiveOnly,
    ReferenceOnly,
}

impl ExpansionChoice {
    pub fn expansion(self) -> Expansion {
        match self {
            ExpansionChoice::Full => Expansion::full(),
            ExpansionChoice::ActiveOnly => Expansion::active_only(),
            ExpansionChoice::ReferenceOnly => Expansion::reference_only(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeSection {
    pub ansatz: AnsatzChoice,
    pub depth: usize,
    /// Every parameter starts here.
    pub initial: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for VqeSection {
    fn default() -> Self {
        VqeSection { ansatz: AnsatzChoice::So4, depth: 1, initial: 0.1, max_iter: 200, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QeomSection {
    pub basis: QeomBasis,
}

impl Default for QeomSection {
    fn default() -> Self {
        QeomSection { basis: QeomBasis::SpinResolved }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqseSection {
    pub expansion: ExpansionChoice,
    pub repeats: usize,
}

impl Default for VqseSection {
    fn default() -> Self {
        VqseSection { expansion: ExpansionChoice::Full, repeats: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationSection {
    /// Shots per calibration circuit; 0 uses the exact readout response.
    pub calibration_shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Option<Method>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub shots: usize,
    pub encoding: Option<EncodingChoice>,
    pub noise: Option<NoiseModel>,
    pub mitigation: Option<MitigationSection>,
    pub threads: usize,
    pub vqe: VqeSection,
    pub qite: QiteConfig,
    pub qeom: QeomSection,
    pub vqse: VqseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: None,
            input: None,
            out: None,
            seed: None,
            shots: 0,
            encoding: None,
            noise: None,
            mitigation: None,
            threads: 1,
            vqe: VqeSection::default(),
            qite: QiteConfig::default(),
            qeom: QeomSection::default(),
            vqse: VqseSection::default(),
        }
    }
}

/// Settings that passed validation; required fields are no longer optional.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub method: Method,
    pub input: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
        }
    }

    /// Every violation, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.method.is_none() {
            bad.push("method: required (fci, vqe, qite, qeom or vqse)".to_string());
        }
        if self.input.is_none() {
            bad.push("input: required".to_string());
        }
        if self.out.is_none() {
            bad.push("out: required".to_string());
        }
        if self.shots > 0 && self.seed.is_none() {
            bad.push("seed: required when shots > 0".to_string());
        }
        if self.mitigation.is_some() && self.shots == 0 {
            bad.push("mitigation: needs shots > 0".to_string());
        }
        if let Some(noise) = &self.noise {
            if let Err(e) = noise.validate() {
                bad.push(format!("noise: {e}"));
            }
            if noise.has_readout_noise() && self.shots == 0 {
                bad.push("noise.readout: readout error needs shots > 0".to_string());
            }
        }
        if self.threads == 0 {
            bad.push("threads: must be at least 1".to_string());
        }
        if self.vqe.depth == 0 {
            bad.push("vqe.depth: must be at least 1".to_string());
        }
        if self.vqe.max_iter == 0 {
            bad.push("vqe.max_iter: must be at least 1".to_string());
        }
        if !self.vqe.initial.is_finite() {
            bad.push("vqe.initial: must be finite".to_string());
        }
        if !(self.vqe.tol > 0.0) {
            bad.push("vqe.tol: must be positive".to_string());
        }
        if let Err(e) = self.qite.validate() {
            bad.push(format!("qite: {e}"));
        }
        if self.vqse.repeats == 0 {
            bad.push("vqse.repeats: must be at least 1".to_string());
        }
        bad
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let bad = self.violations();
        if !bad.is_empty() {
            return Err(CliError::Config(bad));
        }
        Ok(Resolved {
            method: self.method.expect("validated"),
            input: self.input.clone().expect("validated"),
            out: self.out.clone().expect("validated"),
            seed: self.seed.unwrap_or(0),
            config: self,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_violations_are_listed() {
        let cfg = RunConfig { shots: 100, threads: 0, vqe: VqeSection { depth: 0, ..Default::default() }, ..Default::default() };
        let bad = cfg.violations();
        for field in ["method", "input", "out", "seed", "threads", "vqe.depth"] {
            assert!(bad.iter().any(|m| m.starts_with(field)), "{field} missing from {bad:?}");
        }
    }

    #[test]
    fn toml_and_json_agree() {
        let t: RunConfig = toml::from_str(
            "method = \"vqe\"\ninput = \"a.pauli\"\nout = \"o\"\nshots = 10\nseed = 3\n[vqe]\nansatz = \"ry\"\ndepth = 2\n",
        )
        .unwrap();
        let j: RunConfig = serde_json::from_str(
            r#"{"method":"vqe","input":"a.pauli","out":"o","shots":10,"seed":3,"vqe":{"ansatz":"ry","depth":2}}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert!(t.violations().is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("shot = 3\n").is_err());
    }
}
