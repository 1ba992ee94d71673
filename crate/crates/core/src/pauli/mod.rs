//! Pauli strings, weighted sums of them, and fermion-to-qubit encodings.

mod encoding;
mod jw;

pub use encoding::{pair_sector_matrix, FermionEncoding};
pub use jw::{
    jw_annihilation, jw_creation, jw_excitation, map_hamiltonian, map_hamiltonian_with_budget,
    number_operator, s_squared_operator, sz_operator, two_body_operator, Spin, DEFAULT_QUBIT_BUDGET,
};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};

/// Maximum register width representable by the bit-mask encoding.
pub const MAX_QUBITS: usize = 64;

#[inline]
fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks.
/// The operator is `i^{|x∧z|} X^x Z^z`, so a qubit with both bits set
/// carries a Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { n: n as u8, x: 0, z: 0 }
    }

    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        assert!(x & !mask == 0 && z & !mask == 0, "mask exceeds register width");
        PauliString { n: n as u8, x, z }
    }

    /// Single letter `c` on `qubit`.
    pub fn single(n: usize, qubit: usize, c: char) -> Result<Self> {
        if qubit >= n {
            return Err(Error::Invalid(format!("qubit {qubit} out of range for {n} qubits")));
        }
        let b = 1u64 << qubit;
        let (x, z) = match c {
            'I' => (0, 0),
            'X' => (b, 0),
            'Y' => (b, b),
            'Z' => (0, b),
            _ => return Err(Error::Invalid(format!("unknown Pauli letter {c:?}"))),
        };
        Ok(PauliString::from_masks(n, x, z))
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn letter(&self, qubit: usize) -> char {
        let b = 1u64 << qubit;
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    #[inline]
    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        assert_eq!(self.n, other.n, "Pauli string length mismatch");
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let r = PauliString { n: self.n, x, z };
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones();
        // subtract y(r) mod 4
        let k = (k + 4 * 64 - r.y_count()) % 4;
        (i_pow(k), r)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Qubit-wise commutation: on every qubit the letters agree or one is I.
    pub fn qubit_wise_commutes(&self, other: &PauliString) -> bool {
        let both = self.support() & other.support();
        (self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0
    }

    /// `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn apply_basis(&self, b: u64) -> (C64, u64) {
        let sign = if (self.z & b).count_ones() % 2 == 1 { 2 } else { 0 };
        (i_pow(self.y_count() + sign), b ^ self.x)
    }

    /// `±1` eigenvalue of the diagonal string obtained by replacing every
    /// non-identity letter with Z, for measured bits `b`.
    #[inline]
    pub fn z_parity(&self, b: u64) -> f64 {
        if (self.support() & b).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n;
        let mut m = CMat::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (ph, b2) = self.apply_basis(b);
            m[(b2 as usize, b as usize)] = ph;
        }
        m
    }
}

impl fmt::Display for PauliString {
    /// Highest qubit first, qubit 0 rightmost.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n as usize).rev() {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::Invalid(format!("label longer than {MAX_QUBITS} qubits")));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (k, c) in s.chars().enumerate() {
            let b = 1u64 << (n - 1 - k);
            match c {
                'I' => {}
                'X' => x |= b,
                'Y' => {
                    x |= b;
                    z |= b
                }
                'Z' => z |= b,
                _ => return Err(Error::Invalid(format!("unknown Pauli letter {c:?} in {s:?}"))),
            }
        }
        Ok(PauliString { n: n as u8, x, z })
    }
}

pub const SIMPLIFY_THRESHOLD: f64 = 1e-12;

/// Weighted sum of Pauli strings on a fixed register width.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, C64>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliSum { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        PauliSum::scalar(n, C64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        let mut s = PauliSum::zero(n);
        s.add_term(PauliString::identity(n), c);
        s
    }

    pub fn from_string(p: PauliString, c: C64) -> Self {
        let mut s = PauliSum::zero(p.n_qubits());
        s.add_term(p, c);
        s
    }

    /// Parses a single label such as `"XZI"` with coefficient `c`.
    pub fn from_label(label: &str, c: C64) -> Result<Self> {
        Ok(PauliSum::from_string(label.parse()?, c))
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> C64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    pub fn add_term(&mut self, p: PauliString, c: C64) {
        assert_eq!(p.n_qubits(), self.n, "Pauli string length mismatch");
        *self.terms.entry(p).or_insert(ZERO) += c;
    }

    fn check_len(&self, other: &PauliSum) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {} qubits", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_len(other)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*p, *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(p, v)| (*p, v * c)).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> PauliSum {
        self.scale(C64::new(c, 0.0))
    }

    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_len(other)?;
        let mut out = PauliSum::zero(self.n);
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                let (ph, r) = p.mul(q);
                out.add_term(r, ph * a * b);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_len(other)?;
        let mut out = PauliSum::zero(self.n);
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                if !p.commutes_with(q) {
                    let (ph, r) = p.mul(q);
                    out.add_term(r, ph * a * b * 2.0);
                }
            }
        }
        Ok(out.simplify(0.0))
    }

    /// Drops terms with `|c| < threshold` (exact zeros are always dropped).
    pub fn simplify(&self, threshold: f64) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() >= threshold && c.norm() > 0.0)
                .map(|(p, c)| (*p, *c))
                .collect(),
        }
    }

    pub fn simplified(&self) -> PauliSum {
        self.simplify(SIMPLIFY_THRESHOLD)
    }

    /// Largest `|Im c|`; zero for a Hermitian sum.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.im.abs()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Coefficient of the identity string.
    pub fn constant(&self) -> C64 {
        self.coeff(&PauliString::identity(self.n))
    }

    /// Copy without the identity term.
    pub fn without_constant(&self) -> PauliSum {
        let mut out = self.clone();
        out.terms.remove(&PauliString::identity(self.n));
        out
    }

    /// Sum of `|c|` over all terms.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Union of the supports of all terms.
    pub fn support(&self) -> u64 {
        self.terms.keys().fold(0, |a, p| a | p.support())
    }

    /// Re-expresses this operator on a wider register (new qubits idle).
    pub fn widen(&self, n: usize) -> PauliSum {
        assert!(n >= self.n);
        PauliSum {
            n,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (PauliString::from_masks(n, p.x, p.z), *c))
                .collect(),
        }
    }

    /// `O|ψ⟩` on a dense statevector of length `2^n`.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        assert_eq!(psi.len(), 1usize << self.n, "statevector dimension mismatch");
        let mut out = vec![ZERO; psi.len()];
        for (p, c) in &self.terms {
            for (b, amp) in psi.iter().enumerate() {
                if *amp == ZERO {
                    continue;
                }
                let (ph, b2) = p.apply_basis(b as u64);
                out[b2 as usize] += c * ph * amp;
            }
        }
        out
    }

    /// `⟨ψ|O|ψ⟩` (complex in general).
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (p, c) in &self.terms {
            let mut s = ZERO;
            for (b, amp) in psi.iter().enumerate() {
                if *amp == ZERO {
                    continue;
                }
                let (ph, b2) = p.apply_basis(b as u64);
                s += psi[b2 as usize].conj() * ph * amp;
            }
            acc += c * s;
        }
        acc
    }

    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n;
        let mut m = CMat::zeros(dim, dim);
        for (p, c) in &self.terms {
            for b in 0..dim as u64 {
                let (ph, b2) = p.apply_basis(b);
                m[(b2 as usize, b as usize)] += c * ph;
            }
        }
        m
    }

    /// Pauli decomposition `c_P = Tr(P M) / 2^n` of a dense matrix.
    pub fn from_dense(m: &CMat) -> Result<PauliSum> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!("{}x{} is not a qubit operator", m.nrows(), m.ncols())));
        }
        let n = dim.trailing_zeros() as usize;
        let mut out = PauliSum::zero(n);
        for x in 0..dim as u64 {
            for z in 0..dim as u64 {
                let p = PauliString::from_masks(n, x, z);
                // P is Hermitian: ⟨b|P = conj(phase) ⟨b^x|
                let mut tr = ZERO;
                for b in 0..dim as u64 {
                    let (ph, b2) = p.apply_basis(b);
                    tr += ph.conj() * m[(b2 as usize, b as usize)];
                }
                let c = tr / dim as f64;
                if c.norm() > 0.0 {
                    out.add_term(p, c);
                }
            }
        }
        Ok(out)
    }

    /// Text form: one `re im LABEL` line per term, qubit 0 rightmost.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, c) in &self.terms {
            s.push_str(&format!("{} {} {}\n", c.re, c.im, p));
        }
        s
    }

    /// Parses the text form. Blank lines and `#` comments are skipped. An
    /// empty sum needs `n` supplied via [`PauliSum::parse_with_width`].
    pub fn parse(text: &str) -> Result<PauliSum> {
        Self::parse_with_width(text, None)
    }

    pub fn parse_with_width(text: &str, width: Option<usize>) -> Result<PauliSum> {
        let mut out: Option<PauliSum> = width.map(PauliSum::zero);
        for (k, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = t.split_whitespace().collect();
            let bad = |what: &str| Error::format("pauli", format!("line {}: {what}: {t:?}", k + 1));
            if toks.len() != 3 {
                return Err(bad("expected `re im LABEL`"));
            }
            let re: f64 = toks[0].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = toks[1].parse().map_err(|_| bad("bad imaginary part"))?;
            let p: PauliString = toks[2].parse().map_err(|_| bad("bad label"))?;
            let sum = out.get_or_insert_with(|| PauliSum::zero(p.n_qubits()));
            if sum.n != p.n_qubits() {
                return Err(bad("label length differs from earlier lines"));
            }
            sum.add_term(p, C64::new(re, im));
        }
        out.ok_or_else(|| Error::format("pauli", "no terms and no register width"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PauliSum> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PauliSum::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_c;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_qubit_products() {
        let x: PauliString = "X".parse().unwrap();
        let y: PauliString = "Y".parse().unwrap();
        let z: PauliString = "Z".parse().unwrap();
        assert_eq!(x.mul(&y), (c(0.0, 1.0), z));
        assert_eq!(y.mul(&z), (c(0.0, 1.0), x));
        assert_eq!(z.mul(&x), (c(0.0, 1.0), y));
        assert_eq!(y.mul(&x), (c(0.0, -1.0), z));
        assert_eq!(y.mul(&y).1, PauliString::identity(1));
        assert_eq!(y.mul(&y).0, c(1.0, 0.0));
    }

    #[test]
    fn label_round_trip_and_ordering() {
        let p: PauliString = "ZXIY".parse().unwrap();
        assert_eq!(p.letter(0), 'Y');
        assert_eq!(p.letter(3), 'Z');
        assert_eq!(p.to_string(), "ZXIY");
    }

    #[test]
    fn dense_products_agree() {
        for a in ["XY", "YZ", "ZZ", "IY", "YY"] {
            for b in ["XX", "ZY", "YI", "XZ"] {
                let pa: PauliString = a.parse().unwrap();
                let pb: PauliString = b.parse().unwrap();
                let (ph, r) = pa.mul(&pb);
                let lhs = pa.to_dense() * pb.to_dense();
                let rhs = r.to_dense() * ph;
                assert!(max_abs_c(&(lhs - rhs)) < 1e-15, "{a}*{b}");
            }
        }
    }

    #[test]
    fn y_matrix_convention() {
        let y = PauliString::single(1, 0, 'Y').unwrap().to_dense();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn identity_is_neutral() {
        let a = PauliSum::from_label("XZ", c(0.3, 0.1)).unwrap();
        let i = PauliSum::identity(2);
        assert_eq!(a.multiply(&i).unwrap(), a);
    }

    #[test]
    fn text_round_trip() {
        let mut a = PauliSum::zero(3);
        a.add_term("ZXY".parse().unwrap(), c(0.1, -1.0 / 3.0));
        a.add_term("III".parse().unwrap(), c(-55.421810552528832, 0.0));
        let b = PauliSum::parse(&a.to_text()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_rejects_mixed_widths() {
        assert!(PauliSum::parse("1 0 XX\n1 0 X\n").is_err());
        assert!(PauliSum::parse("1 0 XQ\n").is_err());
    }

    #[test]
    fn simplify_is_idempotent() {
        let mut a = PauliSum::zero(1);
        a.add_term("X".parse().unwrap(), c(1e-13, 0.0));
        a.add_term("Z".parse().unwrap(), c(1.0, 0.0));
        let s = a.simplified();
        assert_eq!(s.len(), 1);
        assert_eq!(s.simplified(), s);
    }

    #[test]
    fn from_dense_inverts_to_dense() {
        let mut a = PauliSum::zero(2);
        a.add_term("XY".parse().unwrap(), c(0.25, 0.5));
        a.add_term("ZI".parse().unwrap(), c(-1.0, 0.0));
        let b = PauliSum::from_dense(&a.to_dense()).unwrap().simplified();
        assert!(max_abs_c(&(a.to_dense() - b.to_dense())) < 1e-15);
        assert_eq!(b.len(), 2);
    }
}
