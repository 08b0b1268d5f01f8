//! Maximal-length binary sequences from Fibonacci LFSRs.
//!
//! A degree-k feedback polynomial `c_k x^k + ... + c_1 x + c_0` is stored with
//! its coefficients in the order `(c_k, ..., c_0)`; the binary string "1011"
//! is `x^3 + x + 1`. The register holds `(a_0, ..., a_{k-1})`. Each clock
//! emits `a_0`, shifts the register down by one cell and sets the top cell to
//! `c_1 a_{k-1} ^ c_2 a_{k-2} ^ ... ^ c_k a_0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 16;

/// Feedback polynomial over GF(2) with `c_k = c_0 = 1` and `2 <= k <= 16`.
///
/// Construction does not check primitivity; use [`is_primitive`] for that.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeedbackPolynomial {
    degree: u32,
    /// bit `i` holds `c_i`
    coeffs: u32,
}

impl FeedbackPolynomial {
    /// Build from the integer whose binary digits are `(c_k, ..., c_0)`.
    pub fn from_value(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidPolynomial("zero polynomial".into()));
        }
        let degree = 31 - value.leading_zeros();
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidPolynomial(format!(
                "degree {degree} outside {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        if value & 1 == 0 {
            return Err(Error::InvalidPolynomial(format!(
                "{value:#b} has zero constant term"
            )));
        }
        Ok(Self {
            degree,
            coeffs: value,
        })
    }

    /// Build from `(c_k, ..., c_0)` as a slice of 0/1 values.
    pub fn from_coeffs(coeffs: &[u8]) -> Result<Self> {
        if coeffs.iter().any(|&c| c > 1) {
            return Err(Error::InvalidPolynomial("coefficients must be 0 or 1".into()));
        }
        if coeffs.first() != Some(&1) {
            return Err(Error::InvalidPolynomial("leading coefficient c_k must be 1".into()));
        }
        if coeffs.len() > MAX_DEGREE as usize + 1 {
            return Err(Error::InvalidPolynomial(format!(
                "degree {} outside {MIN_DEGREE}..={MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        let value = coeffs.iter().fold(0u32, |acc, &c| (acc << 1) | c as u32);
        Self::from_value(value)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn value(&self) -> u32 {
        self.coeffs
    }

    /// Coefficient `c_i`.
    pub fn coeff(&self, i: u32) -> u8 {
        ((self.coeffs >> i) & 1) as u8
    }

    /// `(c_k, ..., c_0)`.
    pub fn coeffs(&self) -> Vec<u8> {
        (0..=self.degree).rev().map(|i| self.coeff(i)).collect()
    }

    /// Binary coefficient string, e.g. "1011".
    pub fn to_binary_string(&self) -> String {
        format!("{:b}", self.coeffs)
    }

    pub fn to_hex_string(&self) -> String {
        format!("{:#X}", self.coeffs).replacen("0X", "0x", 1)
    }

    /// Algebraic rendering, e.g. "x^3+x+1".
    pub fn to_algebraic(&self) -> String {
        let terms: Vec<String> = (0..=self.degree)
            .rev()
            .filter(|&i| self.coeff(i) == 1)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        terms.join("+")
    }

    /// Register mask: bit `j` is set when cell `a_j` feeds back, i.e. `c_{k-j} = 1`.
    fn tap_mask(&self) -> u32 {
        (0..self.degree)
            .filter(|&j| self.coeff(self.degree - j) == 1)
            .fold(0, |m, j| m | (1 << j))
    }
}

impl fmt::Debug for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeedbackPolynomial({})", self.to_algebraic())
    }
}

impl fmt::Display for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary_string())
    }
}

impl FromStr for FeedbackPolynomial {
    type Err = Error;

    /// Accepts a binary coefficient string ("1011") or hex ("0xB").
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            u32::from_str_radix(hex, 16)
                .map_err(|e| Error::InvalidPolynomial(format!("bad hex {s:?}: {e}")))?
        } else {
            if s.is_empty() || !s.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::InvalidPolynomial(format!("bad binary string {s:?}")));
            }
            if !s.starts_with('1') {
                return Err(Error::InvalidPolynomial(format!(
                    "{s:?}: leading coefficient c_k must be 1"
                )));
            }
            if s.len() > MAX_DEGREE as usize + 1 {
                return Err(Error::InvalidPolynomial(format!("{s:?}: degree too large")));
            }
            u32::from_str_radix(s, 2).expect("validated binary digits")
        };
        Self::from_value(value)
    }
}

impl Serialize for FeedbackPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_binary_string())
    }
}

impl<'de> Deserialize<'de> for FeedbackPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Register contents `(a_0, ..., a_{k-1})` plus the clock count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfsrState {
    /// bit `i` holds `a_i`
    register: u32,
    len: u32,
    clock: u64,
}

impl LfsrState {
    pub fn new(register: &[u8]) -> Result<Self> {
        if register.is_empty() || register.len() > MAX_DEGREE as usize {
            return Err(Error::InvalidParameter(format!(
                "register length {} outside 1..={MAX_DEGREE}",
                register.len()
            )));
        }
        if register.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("register cells must be 0 or 1".into()));
        }
        let bits = register
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
        if bits == 0 {
            return Err(Error::ZeroRegister);
        }
        Ok(Self {
            register: bits,
            len: register.len() as u32,
            clock: 0,
        })
    }

    /// Canonical seed `(1, 0, ..., 0)`.
    pub fn canonical(k: u32) -> Self {
        Self {
            register: 1,
            len: k,
            clock: 0,
        }
    }

    pub fn register(&self) -> Vec<u8> {
        (0..self.len).map(|i| ((self.register >> i) & 1) as u8).collect()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }
}

/// Advance the register by one clock, returning the new state and the emitted bit.
pub fn lfsr_step(state: &LfsrState, poly: &FeedbackPolynomial) -> Result<(LfsrState, u8)> {
    if state.len != poly.degree() {
        return Err(Error::RegisterLength {
            expected: poly.degree() as usize,
            got: state.len as usize,
        });
    }
    if state.register == 0 {
        return Err(Error::ZeroRegister);
    }
    let (register, out) = raw_step(state.register, poly.tap_mask(), poly.degree());
    Ok((
        LfsrState {
            register,
            len: state.len,
            clock: state.clock + 1,
        },
        out,
    ))
}

#[inline]
fn raw_step(register: u32, taps: u32, k: u32) -> (u32, u8) {
    let out = (register & 1) as u8;
    let feedback = (register & taps).count_ones() & 1;
    ((register >> 1) | (feedback << (k - 1)), out)
}

/// One period of LFSR output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSequence {
    bits: Vec<u8>,
    order: u32,
    source: FeedbackPolynomial,
    seed: Vec<u8>,
}

impl MSequence {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn source(&self) -> FeedbackPolynomial {
        self.source
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Periodic autocorrelation of the ±1 image (0 -> +1, 1 -> -1) at `lag`.
    pub fn autocorrelation(&self, lag: usize) -> i64 {
        let n = self.bits.len();
        (0..n)
            .map(|i| {
                let a = 1 - 2 * self.bits[i] as i64;
                let b = 1 - 2 * self.bits[(i + lag) % n] as i64;
                a * b
            })
            .sum()
    }
}

/// Emit `2^k - 1` bits from `poly` starting at `seed = (a_0, ..., a_{k-1})`.
///
/// The result is rejected as [`Error::NotPrimitive`] when it is not balanced.
pub fn generate_m_sequence(poly: &FeedbackPolynomial, seed: &[u8]) -> Result<MSequence> {
    let k = poly.degree();
    let state = LfsrState::new(seed)?;
    if state.len != k {
        return Err(Error::RegisterLength {
            expected: k as usize,
            got: seed.len(),
        });
    }
    let period = (1usize << k) - 1;
    let taps = poly.tap_mask();
    let mut bits = Vec::with_capacity(period);
    let mut reg = state.register;
    for _ in 0..period {
        let (next, out) = raw_step(reg, taps, k);
        bits.push(out);
        reg = next;
    }
    let ones = bits.iter().filter(|&&b| b == 1).count();
    if ones != 1 << (k - 1) {
        return Err(Error::NotPrimitive(poly.to_algebraic()));
    }
    Ok(MSequence {
        bits,
        order: k,
        source: *poly,
        seed: seed.to_vec(),
    })
}

/// Same as [`generate_m_sequence`] with the canonical seed `(1, 0, ..., 0)`.
pub fn generate_default(poly: &FeedbackPolynomial) -> Result<MSequence> {
    generate_m_sequence(poly, &default_seed(poly.degree()))
}

pub fn default_seed(k: u32) -> Vec<u8> {
    let mut s = vec![0u8; k as usize];
    s[0] = 1;
    s
}

/// Length of the state orbit through `(1, 0, ..., 0)`.
pub fn orbit_period(poly: &FeedbackPolynomial) -> u64 {
    let k = poly.degree();
    let taps = poly.tap_mask();
    let mut reg = 1u32;
    let mut n = 0u64;
    // c_k = 1 makes the state map a bijection, so the orbit always closes
    loop {
        reg = raw_step(reg, taps, k).0;
        n += 1;
        if reg == 1 {
            return n;
        }
    }
}

/// True iff the orbit from `(1, 0, ..., 0)` has period exactly `2^k - 1`.
pub fn is_primitive(poly: &FeedbackPolynomial) -> bool {
    orbit_period(poly) == (1u64 << poly.degree()) - 1
}

/// Up to `limit` primitive polynomials of degree `k`, ascending by coefficient value.
pub fn find_primitive_polynomials(k: u32, limit: usize) -> Result<Vec<FeedbackPolynomial>> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "degree {k} outside {MIN_DEGREE}..={MAX_DEGREE}"
        )));
    }
    if limit == 0 {
        return Err(Error::InvalidParameter("limit must be at least 1".into()));
    }
    let lo = (1u32 << k) | 1;
    let hi = 1u32 << (k + 1);
    Ok((lo..hi)
        .step_by(2)
        .map(|v| FeedbackPolynomial::from_value(v).expect("degree and constant term in range"))
        .filter(is_primitive)
        .take(limit)
        .collect())
}

/// Built-in table: the two smallest primitive polynomials per degree
/// (degree 2 has only one). Each entry is re-checked by the test suite.
const TABLE: &[(u32, &[&str])] = &[
    (2, &["111"]),
    (3, &["1011", "1101"]),
    (4, &["10011", "11001"]),
    (5, &["100101", "101001"]),
    (6, &["1000011", "1011011"]),
    (7, &["10000011", "10001001"]),
    (8, &["100011101", "100101011"]),
    (9, &["1000010001", "1000011011"]),
    (10, &["10000001001", "10000011011"]),
    (11, &["100000000101", "100000010111"]),
    (12, &["1000001010011", "1000001101001"]),
    (13, &["10000000011011", "10000000100111"]),
    (14, &["100000000101011", "100000000111001"]),
    (15, &["1000000000000011", "1000000000010001"]),
    (16, &["10000000000101101", "10000000000111001"]),
];

/// Table entries for degree `k`.
pub fn table_polynomials(k: u32) -> Vec<FeedbackPolynomial> {
    TABLE
        .iter()
        .find(|(d, _)| *d == k)
        .map(|(_, entries)| entries.iter().map(|s| s.parse().expect("table entry")).collect())
        .unwrap_or_default()
}

/// Default (X, Y) polynomial pair for degree `k`: the first two table entries.
/// Degree 2 has a single primitive polynomial, which is then used for both.
pub fn default_pair(k: u32) -> Result<(FeedbackPolynomial, FeedbackPolynomial)> {
    let table = table_polynomials(k);
    match table.as_slice() {
        [x, y, ..] => Ok((*x, *y)),
        [x] => Ok((*x, *x)),
        [] => Err(Error::InvalidParameter(format!(
            "no table polynomial for degree {k}"
        ))),
    }
}
