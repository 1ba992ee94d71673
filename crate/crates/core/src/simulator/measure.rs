use std::collections::BTreeMap;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{Deserializer, Error as _};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::state::QuantumState;
use super::Gate;
use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::pauli::{PauliString, PauliSum};

/// Largest register for which calibration circuits are enumerated.
pub const MAX_CALIBRATION_QUBITS: usize = 4;

/// Mixes a base seed with a stream index (splitmix64 finalizer), giving
/// independent generators for groups, grid points and repeats.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-qubit measurement axis. Qubits not named are read in Z.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementBasis {
    letters: Vec<char>,
}

impl MeasurementBasis {
    pub fn z(n: usize) -> Self {
        MeasurementBasis { letters: vec!['Z'; n] }
    }

    pub fn new(letters: Vec<char>) -> Result<Self> {
        if let Some(c) = letters.iter().find(|c| !matches!(c, 'X' | 'Y' | 'Z')) {
            return Err(Error::Invalid(format!("measurement axis {c:?} is not X, Y or Z")));
        }
        Ok(MeasurementBasis { letters })
    }

    /// Basis in which `p` is diagonal; identity positions read in Z.
    pub fn for_string(p: &PauliString) -> Self {
        let letters = (0..p.n_qubits())
            .map(|q| match p.letter(q) {
                'I' => 'Z',
                c => c,
            })
            .collect();
        MeasurementBasis { letters }
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, q: usize) -> char {
        self.letters[q]
    }

    /// Whether every non-identity factor of `p` is read on its own axis.
    pub fn covers(&self, p: &PauliString) -> bool {
        support_qubits(p).all(|q| p.letter(q) == self.letters[q])
    }

    /// Pre-measurement rotations taking this basis to Z.
    pub fn rotations(&self) -> Vec<Gate> {
        let mut gates = Vec::new();
        for (q, c) in self.letters.iter().enumerate() {
            match c {
                'X' => gates.push(Gate::H { qubit: q }),
                'Y' => {
                    gates.push(Gate::Sdg { qubit: q });
                    gates.push(Gate::H { qubit: q });
                }
                _ => {}
            }
        }
        gates
    }

    fn stream_id(&self) -> u64 {
        self.letters.iter().fold(0u64, |acc, c| {
            acc * 3
                + match c {
                    'X' => 0,
                    'Y' => 1,
                    _ => 2,
                }
        })
    }
}

/// Outcome counts keyed by basis index (bit `q` is qubit `q`). Counts are
/// real so mitigated histograms share the type.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsHistogram {
    pub n_qubits: usize,
    pub counts: BTreeMap<u64, f64>,
}

impl CountsHistogram {
    pub fn new(n_qubits: usize) -> Self {
        CountsHistogram { n_qubits, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, outcome: u64, count: f64) {
        *self.counts.entry(outcome).or_insert(0.0) += count;
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn get(&self, outcome: u64) -> f64 {
        self.counts.get(&outcome).copied().unwrap_or(0.0)
    }

    pub fn frequency(&self, outcome: u64) -> f64 {
        self.get(outcome) / self.total()
    }

    /// Dense count vector of length `2^n`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.n_qubits];
        for (&k, &c) in &self.counts {
            v[k as usize] = c;
        }
        v
    }

    pub fn from_vector(n_qubits: usize, v: &[f64]) -> Self {
        let mut h = CountsHistogram::new(n_qubits);
        for (k, &c) in v.iter().enumerate() {
            if c != 0.0 {
                h.counts.insert(k as u64, c);
            }
        }
        h
    }

    /// Mean of `(-1)^{|b & mask|}` over outcomes.
    pub fn parity_expectation(&self, mask: u64) -> f64 {
        let total = self.total();
        self.counts
            .iter()
            .map(|(&b, &c)| if (b & mask).count_ones() % 2 == 0 { c } else { -c })
            .sum::<f64>()
            / total
    }

    pub fn bitstring(&self, outcome: u64) -> String {
        format!("{:0width$b}", outcome, width = self.n_qubits)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("histogram serializes")
    }
}

impl Serialize for CountsHistogram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.counts.len()))?;
        for (&k, &c) in &self.counts {
            let key = self.bitstring(k);
            if c.fract() == 0.0 && c >= 0.0 && c < 9.0e15 {
                map.serialize_entry(&key, &(c as u64))?;
            } else {
                map.serialize_entry(&key, &c)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for CountsHistogram {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: BTreeMap<String, f64> = BTreeMap::deserialize(d)?;
        let n = raw.keys().next().map(|k| k.len()).unwrap_or(0);
        let mut h = CountsHistogram::new(n);
        for (k, c) in raw {
            if k.len() != n {
                return Err(D::Error::custom(format!("bitstring {k:?} has width {}, expected {n}", k.len())));
            }
            let b = u64::from_str_radix(&k, 2).map_err(|_| D::Error::custom(format!("bad bitstring {k:?}")))?;
            h.add(b, c);
        }
        Ok(h)
    }
}

fn support_qubits(p: &PauliString) -> impl Iterator<Item = usize> + '_ {
    let m = p.support();
    (0..p.n_qubits()).filter(move |q| m >> q & 1 == 1)
}

fn apply_readout(outcome: u64, n: usize, noise: &NoiseModel, rng: &mut ChaCha8Rng) -> u64 {
    let mut b = outcome;
    for q in 0..n {
        let r = noise.readout_for(q);
        let p = if b >> q & 1 == 0 { r.p01 } else { r.p10 };
        if p > 0.0 && rng.random::<f64>() < p {
            b ^= 1 << q;
        }
    }
    b
}

/// Draws `shots` outcomes of measuring `state` in `basis`, then flips bits
/// per the readout part of `noise`. Basis rotations are noiseless.
pub fn sample(
    state: &QuantumState,
    basis: &MeasurementBasis,
    shots: usize,
    seed: u64,
    noise: Option<&NoiseModel>,
) -> Result<CountsHistogram> {
    let n = state.n_qubits();
    if basis.n_qubits() != n {
        return Err(Error::Dimension(format!("basis on {} qubits, state on {n}", basis.n_qubits())));
    }
    if shots == 0 {
        return Err(Error::Invalid("shots must be at least 1".into()));
    }
    let mut rotated = state.clone();
    for g in basis.rotations() {
        rotated.apply_gate(&g);
    }
    let probs = rotated.probabilities();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Numerical(format!("outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; probs.len()];
    let readout = noise.filter(|m| m.has_readout_noise());
    for _ in 0..shots {
        let mut b = dist.sample(&mut rng) as u64;
        if let Some(m) = readout {
            b = apply_readout(b, n, m, &mut rng);
        }
        tally[b as usize] += 1;
    }
    let v: Vec<f64> = tally.into_iter().map(|c| c as f64).collect();
    Ok(CountsHistogram::from_vector(n, &v))
}

/// Readout response `M[i][j] = P(measure i | prepared j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    pub n_qubits: usize,
    pub matrix: RMat,
    /// Number of basis-state preparations that were run.
    pub circuits: usize,
}

impl CalibrationMatrix {
    /// Response implied by a readout model, as a tensor product of
    /// single-qubit confusion matrices.
    pub fn analytic(noise: &NoiseModel, n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let matrix = RMat::from_fn(dim, dim, |i, j| {
            (0..n_qubits)
                .map(|q| {
                    let r = noise.readout_for(q);
                    match (j >> q & 1, i >> q & 1) {
                        (0, 0) => 1.0 - r.p01,
                        (0, _) => r.p01,
                        (_, 1) => 1.0 - r.p10,
                        _ => r.p10,
                    }
                })
                .product()
        });
        CalibrationMatrix { n_qubits, matrix, circuits: 0 }
    }

    /// Largest deviation of a column sum from one.
    pub fn column_sum_error(&self) -> f64 {
        (0..self.matrix.ncols())
            .map(|j| (self.matrix.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        sv.max() / sv.min()
    }
}

/// Prepares each of the `2^n` basis states and measures it `shots` times
/// under the readout model. `shots = 0` returns the exact response.
pub fn build_calibration(noise: &NoiseModel, n_qubits: usize, shots: usize, seed: u64) -> Result<CalibrationMatrix> {
    if n_qubits > MAX_CALIBRATION_QUBITS {
        return Err(Error::Budget { required: n_qubits, budget: MAX_CALIBRATION_QUBITS });
    }
    noise.validate()?;
    let dim = 1usize << n_qubits;
    if shots == 0 {
        let mut c = CalibrationMatrix::analytic(noise, n_qubits);
        c.circuits = dim;
        return Ok(c);
    }
    let mut matrix = RMat::zeros(dim, dim);
    for j in 0..dim {
        let prepared = QuantumState::basis(n_qubits, j as u64);
        let h = sample(&prepared, &MeasurementBasis::z(n_qubits), shots, derive_seed(seed, j as u64), Some(noise))?;
        for i in 0..dim {
            matrix[(i, j)] = h.get(i as u64) / shots as f64;
        }
    }
    Ok(CalibrationMatrix { n_qubits, matrix, circuits: dim })
}

/// Solves `M x = c`, clamps negative entries to zero and rescales to the
/// original total.
pub fn mitigate(counts: &CountsHistogram, calib: &CalibrationMatrix) -> Result<CountsHistogram> {
    if counts.n_qubits != calib.n_qubits {
        return Err(Error::Dimension(format!(
            "histogram on {} qubits, calibration on {}",
            counts.n_qubits, calib.n_qubits
        )));
    }
    let svd = calib.matrix.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Numerical(format!("calibration matrix is singular (σ_min = {smin:.3e})")));
    }
    let c = nalgebra::DVector::from_vec(counts.to_vector());
    let x = svd.solve(&c, 0.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let total = counts.total();
    let mut v: Vec<f64> = x.iter().map(|&a| a.max(0.0)).collect();
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        return Err(Error::Numerical("mitigated distribution vanished".into()));
    }
    for a in &mut v {
        *a *= total / s;
    }
    Ok(CountsHistogram::from_vector(counts.n_qubits, &v))
}

/// Pauli expectation values on one fixed state, either exact (`shots = 0`)
/// or from sampled measurement settings. Terms are grouped into qubit-wise
/// commuting settings and each setting is measured once and reused.
#[derive(Debug, Clone)]
pub struct Estimator<'a> {
    state: &'a QuantumState,
    shots: usize,
    seed: u64,
    noise: Option<&'a NoiseModel>,
    calibration: Option<&'a CalibrationMatrix>,
    // Ordered so the covering setting chosen for a term is reproducible.
    cache: BTreeMap<MeasurementBasis, CountsHistogram>,
}

impl<'a> Estimator<'a> {
    pub fn exact(state: &'a QuantumState) -> Self {
        Estimator { state, shots: 0, seed: 0, noise: None, calibration: None, cache: BTreeMap::new() }
    }

    pub fn sampled(state: &'a QuantumState, shots: usize, seed: u64, noise: Option<&'a NoiseModel>) -> Self {
        Estimator { state, shots, seed, noise, calibration: None, cache: BTreeMap::new() }
    }

    pub fn with_calibration(mut self, calib: Option<&'a CalibrationMatrix>) -> Self {
        self.calibration = calib;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Number of distinct settings measured so far.
    pub fn settings(&self) -> usize {
        self.cache.len()
    }

    fn counts(&mut self, basis: &MeasurementBasis) -> Result<&CountsHistogram> {
        if !self.cache.contains_key(basis) {
            let seed = derive_seed(self.seed, basis.stream_id());
            let mut h = sample(self.state, basis, self.shots, seed, self.noise)?;
            if let Some(c) = self.calibration {
                h = mitigate(&h, c)?;
            }
            self.cache.insert(basis.clone(), h);
        }
        Ok(&self.cache[basis])
    }

    /// `⟨p⟩` for a single Pauli string (real part).
    pub fn string(&mut self, p: &PauliString) -> Result<f64> {
        if self.is_exact() {
            return Ok(self.state.expectation_complex(&PauliSum::from_string(p.clone(), crate::linalg::ONE)).re);
        }
        if p.weight() == 0 {
            return Ok(1.0);
        }
        let basis = match self.cache.keys().find(|b| b.covers(p)) {
            Some(b) => b.clone(),
            None => MeasurementBasis::for_string(p),
        };
        Ok(self.counts(&basis)?.parity_expectation(p.x_mask() | p.z_mask()))
    }

    /// `⟨op⟩` for a Hermitian operator.
    pub fn expectation(&mut self, op: &PauliSum) -> Result<f64> {
        if op.n_qubits() != self.state.n_qubits() {
            return Err(Error::Dimension(format!(
                "operator on {} qubits, state on {}",
                op.n_qubits(),
                self.state.n_qubits()
            )));
        }
        if self.is_exact() {
            return self.state.expectation(op);
        }
        if !op.is_hermitian(1e-10) {
            return Err(Error::Invalid("operator is not Hermitian".into()));
        }
        self.plan(op);
        let mut acc = 0.0;
        for (p, c) in op.terms() {
            acc += c.re * self.string(p)?;
        }
        Ok(acc)
    }

    /// `⟨op⟩` for any operator, from the Hermitian parts
    /// `(op + op†)/2` and `(op − op†)/2i`.
    pub fn complex_expectation(&mut self, op: &PauliSum) -> Result<crate::linalg::C64> {
        use crate::linalg::C64;
        if self.is_exact() {
            return Ok(self.state.expectation_complex(op));
        }
        let adj = op.adjoint();
        let re = op.add(&adj)?.scale_real(0.5).simplified();
        let im = op.sub(&adj)?.scale(C64::new(0.0, -0.5)).simplified();
        Ok(C64::new(self.expectation(&re)?, self.expectation(&im)?))
    }

    /// Greedy qubit-wise commuting grouping of the not-yet-covered terms
    /// of `op`, largest coefficients first, then measures each new setting.
    fn plan(&mut self, op: &PauliSum) {
        let mut terms: Vec<(&PauliString, f64)> = op
            .terms()
            .filter(|(p, _)| p.weight() > 0)
            .filter(|(p, _)| !self.cache.keys().any(|b| b.covers(p)))
            .map(|(p, c)| (p, c.norm()))
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1));
        let n = op.n_qubits();
        let mut groups: Vec<Vec<Option<char>>> = Vec::new();
        'term: for (p, _) in terms {
            for g in groups.iter_mut() {
                if support_qubits(p).all(|q| g[q].map_or(true, |c| c == p.letter(q))) {
                    for q in support_qubits(p) {
                        g[q] = Some(p.letter(q));
                    }
                    continue 'term;
                }
            }
            let mut g = vec![None; n];
            for q in support_qubits(p) {
                g[q] = Some(p.letter(q));
            }
            groups.push(g);
        }
        for g in groups {
            let basis = MeasurementBasis { letters: g.into_iter().map(|c| c.unwrap_or('Z')).collect() };
            // sampling errors surface again from `string`
            let _ = self.counts(&basis);
        }
    }
}

/// How expectation values are obtained: exact (`shots = 0`) or sampled,
/// with optional gate/readout noise and readout mitigation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub shots: usize,
    pub noise: Option<NoiseModel>,
    pub mitigation: Option<CalibrationMatrix>,
}

impl Sampling {
    pub fn exact() -> Self {
        Sampling::default()
    }

    pub fn shots(shots: usize, noise: Option<NoiseModel>) -> Self {
        Sampling { shots, noise, mitigation: None }
    }

    /// Adds a calibration matrix measured under this readout model.
    pub fn with_mitigation(mut self, n_qubits: usize, calibration_shots: usize, seed: u64) -> Result<Self> {
        let noise = self.noise.clone().unwrap_or_default();
        self.mitigation = Some(build_calibration(&noise, n_qubits, calibration_shots, seed)?);
        Ok(self)
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Runs `circuit` from `initial` under the gate part of the noise model.
    pub fn prepare(&self, circuit: &super::Circuit, initial: &QuantumState) -> Result<QuantumState> {
        super::run(circuit, initial, self.noise.as_ref())
    }

    pub fn estimator<'a>(&'a self, state: &'a QuantumState, seed: u64) -> Estimator<'a> {
        if self.is_exact() {
            Estimator::exact(state)
        } else {
            Estimator::sampled(state, self.shots, seed, self.noise.as_ref()).with_calibration(self.mitigation.as_ref())
        }
    }

    pub fn expectation(&self, state: &QuantumState, op: &PauliSum, seed: u64) -> Result<f64> {
        self.estimator(state, seed).expectation(op)
    }
}
