//! Measurement matrices: Gold, Sylvester-Hadamard and random speckle.
//!
//! Every matrix is `K x N` with one illumination pattern per row, stored
//! row-major. Binary families hold 0/1 entries; the negative-exponential
//! speckle mode holds reals.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Geometry, Image};
use crate::rng::{DetRng, STREAM_ORDER, STREAM_PATTERNS};
use crate::seqgen::{self, FeedbackPolynomial, MSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gold,
    Hadamard,
    Random,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gold, Family::Hadamard, Family::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gold => "gold",
            Family::Hadamard => "hadamard",
            Family::Random => "random",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(Family::Gold),
            "hadamard" => Ok(Family::Hadamard),
            "random" => Ok(Family::Random),
            _ => Err(Error::Parse(format!(
                "unknown family {s:?} (expected gold|hadamard|random)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomMode {
    /// i.i.d. fair 0/1 entries
    #[default]
    Binary,
    /// i.i.d. unit-mean exponential intensities
    Negexp,
}

impl FromStr for RandomMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(RandomMode::Binary),
            "negexp" => Ok(RandomMode::Negexp),
            _ => Err(Error::Parse(format!("unknown random mode {s:?}"))),
        }
    }
}

/// Row ordering used when taking a subset of measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RowOrder {
    #[default]
    Natural,
    Permuted(u64),
}

impl fmt::Display for RowOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowOrder::Natural => f.write_str("natural"),
            RowOrder::Permuted(seed) => write!(f, "perm:{seed}"),
        }
    }
}

impl FromStr for RowOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "natural" {
            return Ok(RowOrder::Natural);
        }
        if let Some(seed) = s.strip_prefix("perm:") {
            return seed
                .parse()
                .map(RowOrder::Permuted)
                .map_err(|_| Error::Parse(format!("bad permutation seed in {s:?}")));
        }
        Err(Error::Parse(format!(
            "unknown ordering {s:?} (expected natural|perm:<seed>)"
        )))
    }
}

impl Serialize for RowOrder {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RowOrder {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Generation parameters sufficient to rebuild a matrix bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Provenance {
    Gold {
        k: u32,
        x_poly: FeedbackPolynomial,
        y_poly: FeedbackPolynomial,
        x_seed: String,
        y_seed: String,
    },
    Hadamard {
        k: u32,
    },
    Random {
        rows: usize,
        seed: u64,
        mode: RandomMode,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSelection {
    pub order: RowOrder,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Binary(Vec<u8>),
    Continuous(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternMatrix {
    rows: usize,
    cols: usize,
    geometry: Geometry,
    family: Family,
    provenance: Provenance,
    selection: Option<RowSelection>,
    entries: Entries,
}

impl PatternMatrix {
    fn new(
        rows: usize,
        geometry: Geometry,
        family: Family,
        provenance: Provenance,
        entries: Entries,
    ) -> Self {
        Self {
            rows,
            cols: geometry.pixels(),
            geometry,
            family,
            provenance,
            selection: None,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn selection(&self) -> Option<RowSelection> {
        self.selection
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.entries, Entries::Binary(_))
    }

    /// Entry at 0-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let i = row * self.cols + col;
        match &self.entries {
            Entries::Binary(b) => b[i] as f64,
            Entries::Continuous(v) => v[i],
        }
    }

    /// 0-based row as reals.
    pub fn row_values(&self, row: usize) -> Vec<f64> {
        let range = row * self.cols..(row + 1) * self.cols;
        match &self.entries {
            Entries::Binary(b) => b[range].iter().map(|&v| v as f64).collect(),
            Entries::Continuous(v) => v[range].to_vec(),
        }
    }

    /// 0-based binary row, `None` for continuous matrices.
    pub fn binary_row(&self, row: usize) -> Option<&[u8]> {
        match &self.entries {
            Entries::Binary(b) => Some(&b[row * self.cols..(row + 1) * self.cols]),
            Entries::Continuous(_) => None,
        }
    }

    /// Number of ones (binary) or total intensity of 0-based row.
    pub fn row_weight(&self, row: usize) -> f64 {
        self.row_values(row).iter().sum()
    }

    /// Re-fold rows into a different geometry with the same pixel count.
    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Self> {
        if geometry.pixels() != self.cols {
            return Err(Error::GeometryMismatch {
                m: geometry.m,
                n: geometry.n,
                len: self.cols,
            });
        }
        self.geometry = geometry;
        Ok(self)
    }

    /// Rebuild from provenance, geometry and row selection.
    pub fn regenerate(
        provenance: &Provenance,
        geometry: Geometry,
        selection: Option<RowSelection>,
    ) -> Result<Self> {
        let base = match provenance {
            Provenance::Gold {
                k,
                x_poly,
                y_poly,
                x_seed,
                y_seed,
            } => {
                let x = seqgen::generate_m_sequence(x_poly, &parse_bits(x_seed)?)?;
                let y = seqgen::generate_m_sequence(y_poly, &parse_bits(y_seed)?)?;
                if x.order() != *k {
                    return Err(Error::OrderMismatch(x.order(), *k));
                }
                build_gold_matrix(&x, &y, geometry)?
            }
            Provenance::Hadamard { k } => build_hadamard_matrix(*k, geometry)?,
            Provenance::Random { rows, seed, mode } => {
                build_random_patterns(*rows, geometry, *seed, *mode)?
            }
        };
        match selection {
            Some(sel) => select_rows(&base, sel.order, sel.count),
            None => Ok(base),
        }
    }

    /// Rows packed MSB-first, each row padded to a byte boundary.
    pub fn to_packed_bits(&self) -> Option<Vec<u8>> {
        let Entries::Binary(bits) = &self.entries else {
            return None;
        };
        Some(
            bits.chunks(self.cols)
                .flat_map(pack_row)
                .collect(),
        )
    }

    /// Inverse of [`to_packed_bits`](Self::to_packed_bits).
    pub fn from_packed_bits(
        payload: &[u8],
        rows: usize,
        geometry: Geometry,
        family: Family,
        provenance: Provenance,
        selection: Option<RowSelection>,
    ) -> Result<Self> {
        let cols = geometry.pixels();
        let stride = cols.div_ceil(8);
        if payload.len() != rows * stride {
            return Err(Error::LengthMismatch(format!(
                "payload has {} bytes, expected {} for {rows}x{cols}",
                payload.len(),
                rows * stride
            )));
        }
        let mut bits = Vec::with_capacity(rows * cols);
        for row in payload.chunks(stride) {
            bits.extend((0..cols).map(|j| (row[j / 8] >> (7 - j % 8)) & 1));
        }
        let mut p = Self::new(rows, geometry, family, provenance, Entries::Binary(bits));
        p.selection = selection;
        Ok(p)
    }

    /// Continuous payload as little-endian f64, row-major.
    pub fn to_f64_le(&self) -> Vec<u8> {
        (0..self.rows)
            .flat_map(|r| self.row_values(r))
            .flat_map(f64::to_le_bytes)
            .collect()
    }

    pub fn from_f64_le(
        payload: &[u8],
        rows: usize,
        geometry: Geometry,
        family: Family,
        provenance: Provenance,
        selection: Option<RowSelection>,
    ) -> Result<Self> {
        if payload.len() != rows * geometry.pixels() * 8 {
            return Err(Error::LengthMismatch(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                rows * geometry.pixels() * 8
            )));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut p = Self::new(rows, geometry, family, provenance, Entries::Continuous(values));
        p.selection = selection;
        Ok(p)
    }
}

fn pack_row(row: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; row.len().div_ceil(8)];
    for (j, &b) in row.iter().enumerate() {
        out[j / 8] |= b << (7 - j % 8);
    }
    out
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(Error::Parse(format!("bad bit string {s:?}"))),
        })
        .collect()
}

fn check_order_range(k: u32) -> Result<()> {
    if !(seqgen::MIN_DEGREE..=seqgen::MAX_DEGREE).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "order k={k} outside {}..={}",
            seqgen::MIN_DEGREE,
            seqgen::MAX_DEGREE
        )));
    }
    Ok(())
}

fn check_pixels(k: u32, geometry: Geometry) -> Result<()> {
    if geometry.pixels() != 1usize << k {
        return Err(Error::InvalidGeometry(format!(
            "geometry {geometry} has {} pixels, order k={k} needs {}",
            geometry.pixels(),
            1usize << k
        )));
    }
    Ok(())
}

/// Gold matrix from two order-k m-sequences.
///
/// Row `i < 2^k - 1` is `[1 | X(j) ^ Y((j - i) mod (2^k - 1))]`, i.e. X XOR
/// Y cyclically right-shifted by `i`; the last row is `[1 | X]`.
pub fn build_gold_matrix(x: &MSequence, y: &MSequence, geometry: Geometry) -> Result<PatternMatrix> {
    if x.order() != y.order() {
        return Err(Error::OrderMismatch(x.order(), y.order()));
    }
    let k = x.order();
    check_pixels(k, geometry)?;
    if x.source() == y.source() {
        log::warn!(
            "X and Y both come from {}; the matrix stays orthogonal but rows lose pseudo-randomness",
            x.source().to_algebraic()
        );
    }
    let period = x.len();
    let size = period + 1;
    let (xb, yb) = (x.bits(), y.bits());
    let mut bits = vec![0u8; size * size];
    bits.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        row[0] = 1;
        if i < period {
            for j in 0..period {
                row[j + 1] = xb[j] ^ yb[(j + period - i) % period];
            }
        } else {
            row[1..].copy_from_slice(xb);
        }
    });
    let provenance = Provenance::Gold {
        k,
        x_poly: x.source(),
        y_poly: y.source(),
        x_seed: bits_to_string(x.seed()),
        y_seed: bits_to_string(y.seed()),
    };
    Ok(PatternMatrix::new(
        size,
        geometry,
        Family::Gold,
        provenance,
        Entries::Binary(bits),
    ))
}

/// Gold matrix from the default polynomial pair and canonical seeds.
pub fn default_gold_matrix(k: u32, geometry: Geometry) -> Result<PatternMatrix> {
    check_order_range(k)?;
    let (px, py) = seqgen::default_pair(k)?;
    let x = seqgen::generate_default(&px)?;
    let y = seqgen::generate_default(&py)?;
    build_gold_matrix(&x, &y, geometry)
}

/// Sylvester Hadamard matrix of order `2^k` mapped to {0,1} via `h -> (h+1)/2`.
pub fn build_hadamard_matrix(k: u32, geometry: Geometry) -> Result<PatternMatrix> {
    check_order_range(k)?;
    check_pixels(k, geometry)?;
    let size = 1usize << k;
    let mut bits = vec![0u8; size * size];
    // Sylvester entry (i, j) is (-1)^popcount(i & j)
    bits.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        for (j, b) in row.iter_mut().enumerate() {
            *b = ((i & j).count_ones() & 1 == 0) as u8;
        }
    });
    Ok(PatternMatrix::new(
        size,
        geometry,
        Family::Hadamard,
        Provenance::Hadamard { k },
        Entries::Binary(bits),
    ))
}

/// Seeded random speckle patterns.
pub fn build_random_patterns(
    rows: usize,
    geometry: Geometry,
    seed: u64,
    mode: RandomMode,
) -> Result<PatternMatrix> {
    if rows == 0 {
        return Err(Error::InvalidParameter("pattern count must be at least 1".into()));
    }
    let total = rows * geometry.pixels();
    let mut rng = DetRng::new(seed, STREAM_PATTERNS);
    let entries = match mode {
        RandomMode::Binary => {
            let mut bits = vec![0u8; total];
            rng.fill_bits(&mut bits);
            Entries::Binary(bits)
        }
        RandomMode::Negexp => Entries::Continuous((0..total).map(|_| rng.exponential()).collect()),
    };
    Ok(PatternMatrix::new(
        rows,
        geometry,
        Family::Random,
        Provenance::Random { rows, seed, mode },
        entries,
    ))
}

/// Fold 1-based row `s` into its `m x n` light field.
pub fn reshape_row(p: &PatternMatrix, s: usize) -> Result<Image> {
    if s == 0 || s > p.rows {
        return Err(Error::OutOfRange {
            index: s,
            max: p.rows,
        });
    }
    Image::new(p.geometry, p.row_values(s - 1))
}

/// Indices (0-based) of the first `count` of `total` rows under `order`.
pub fn row_indices(order: RowOrder, total: usize, count: usize) -> Vec<usize> {
    match order {
        RowOrder::Natural => (0..count.min(total)).collect(),
        RowOrder::Permuted(seed) => {
            let mut perm = DetRng::new(seed, STREAM_ORDER).permutation(total);
            perm.truncate(count);
            perm
        }
    }
}

/// First `count` rows under `order`.
pub fn select_rows(p: &PatternMatrix, order: RowOrder, count: usize) -> Result<PatternMatrix> {
    if count == 0 || count > p.rows {
        return Err(Error::OutOfRange {
            index: count,
            max: p.rows,
        });
    }
    if p.selection.is_some() {
        return Err(Error::InvalidParameter(
            "pattern matrix already carries a row selection".into(),
        ));
    }
    let indices = row_indices(order, p.rows, count);
    let cols = p.cols;
    let entries = match &p.entries {
        Entries::Binary(b) => Entries::Binary(
            indices
                .iter()
                .flat_map(|&r| b[r * cols..(r + 1) * cols].iter().copied())
                .collect(),
        ),
        Entries::Continuous(v) => Entries::Continuous(
            indices
                .iter()
                .flat_map(|&r| v[r * cols..(r + 1) * cols].iter().copied())
                .collect(),
        ),
    };
    Ok(PatternMatrix {
        rows: count,
        cols,
        geometry: p.geometry,
        family: p.family,
        provenance: p.provenance.clone(),
        selection: Some(RowSelection { order, count }),
        entries,
    })
}

/// Row Gram matrix of the ±1 image (1 -> +1, 0 -> -1), exact in integers.
///
/// Uses `<g_a, g_b> = N - 2 * popcount(row_a xor row_b)` on bit-packed rows.
/// Returns `None` for continuous matrices.
pub fn signed_gram(p: &PatternMatrix) -> Option<Vec<i64>> {
    let Entries::Binary(bits) = &p.entries else {
        return None;
    };
    let words = pack_words(bits, p.rows, p.cols);
    let stride = p.cols.div_ceil(64);
    let n = p.cols as i64;
    let k = p.rows;
    let mut gram = vec![0i64; k * k];
    gram.par_chunks_mut(k).enumerate().for_each(|(a, out)| {
        let ra = &words[a * stride..(a + 1) * stride];
        for (b, g) in out.iter_mut().enumerate() {
            let rb = &words[b * stride..(b + 1) * stride];
            let diff: u32 = ra.iter().zip(rb).map(|(x, y)| (x ^ y).count_ones()).sum();
            *g = n - 2 * diff as i64;
        }
    });
    Some(gram)
}

/// Pack `rows` consecutive `cols`-long 0/1 vectors into u64 words, LSB first.
pub(crate) fn pack_words(bits: &[u8], rows: usize, cols: usize) -> Vec<u64> {
    let stride = cols.div_ceil(64);
    let mut words = vec![0u64; rows * stride];
    words
        .par_chunks_mut(stride)
        .zip(bits.par_chunks(cols))
        .for_each(|(w, row)| {
            for (j, &b) in row.iter().enumerate() {
                w[j / 64] |= (b as u64) << (j % 64);
            }
        });
    words
}
