use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Readout flip probabilities for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(read 1 | true 0).
    pub p01: f64,
    /// P(read 0 | true 1).
    pub p10: f64,
}

/// Gate-by-gate noise channels plus readout error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Applied to every qubit a gate touches unless overridden per qubit.
    pub readout: ReadoutError,
    pub readout_per_qubit: Vec<ReadoutError>,
    pub amplitude_damping: f64,
    pub dephasing: f64,
    pub depolarizing_2q: f64,
}

impl NoiseModel {
    pub fn readout_only(p: f64) -> Self {
        NoiseModel { readout: ReadoutError { p01: p, p10: p }, ..Default::default() }
    }

    pub fn readout_for(&self, qubit: usize) -> ReadoutError {
        self.readout_per_qubit.get(qubit).copied().unwrap_or(self.readout)
    }

    pub fn has_gate_noise(&self) -> bool {
        self.amplitude_damping > 0.0 || self.dephasing > 0.0 || self.depolarizing_2q > 0.0
    }

    pub fn has_readout_noise(&self) -> bool {
        let nz = |r: &ReadoutError| r.p01 > 0.0 || r.p10 > 0.0;
        nz(&self.readout) || self.readout_per_qubit.iter().any(nz)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |name: String, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} = {v}"));
            }
        };
        check("readout.p01".into(), self.readout.p01);
        check("readout.p10".into(), self.readout.p10);
        for (q, r) in self.readout_per_qubit.iter().enumerate() {
            check(format!("readout_per_qubit[{q}].p01"), r.p01);
            check(format!("readout_per_qubit[{q}].p10"), r.p10);
        }
        check("amplitude_damping".into(), self.amplitude_damping);
        check("dephasing".into(), self.dephasing);
        check("depolarizing_2q".into(), self.depolarizing_2q);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("probabilities outside [0, 1]: {}", bad.join(", "))))
        }
    }
}
