//! Bucket-detector simulation and correlation reconstruction.
//!
//! The forward model is `D = M vec(O)`. Reconstruction is the centred
//! correlation `O_GI = (1/K) (M - 1<M>)^T (D - 1<D>)`, where `<M>` is the
//! per-pixel mean over the K rows actually used. For full-sampled Gold and
//! Sylvester-Hadamard matrices the characteristic matrix
//! `M_C = (M - 1<M>)^T (M - 1<M>)` equals `(2^k/4)(I - e1 e1^T)`, so the
//! reconstruction is exact up to scale except for the first pixel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Geometry, Image};
use crate::patterns::{pack_words, Entries, PatternMatrix, Provenance, RowSelection};
use crate::rng::{DetRng, STREAM_NOISE};

/// Reflectivity map with values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectImage(Image);

impl ObjectImage {
    pub fn new(image: Image) -> Result<Self> {
        if let Some(bad) = image.data().iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "object value {bad} outside [0, 1]"
            )));
        }
        Ok(Self(image))
    }

    pub fn image(&self) -> &Image {
        &self.0
    }

    pub fn geometry(&self) -> Geometry {
        self.0.geometry()
    }

    pub fn values(&self) -> &[f64] {
        self.0.data()
    }

    /// Threshold at 0.5.
    pub fn binarized(&self) -> Self {
        let data = self
            .values()
            .iter()
            .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        Self(Image::new(self.geometry(), data).expect("same geometry"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BurstPlacement {
    /// starts at the first measurement
    Contiguous,
    SeededRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// fraction of measurements hit, in (0, 1]
    pub fraction: f64,
    /// added amplitude relative to mean(D)
    pub amplitude_rel: f64,
    pub placement: BurstPlacement,
}

impl Burst {
    /// Number of measurements hit out of `k`: `round(fraction * k)`, at least one.
    pub fn count(&self, k: usize) -> usize {
        ((self.fraction * k as f64).round() as usize).clamp(1, k)
    }
}

impl FromStr for Burst {
    type Err = Error;

    /// "p,alpha,mode" with mode `contiguous` or `random`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [p, a, mode] = parts.as_slice() else {
            return Err(Error::Parse(format!(
                "bad burst {s:?} (expected p,alpha,contiguous|random)"
            )));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {v:?} in burst {s:?}")))
        };
        let placement = match *mode {
            "contiguous" => BurstPlacement::Contiguous,
            "random" | "seeded-random" => BurstPlacement::SeededRandom,
            _ => return Err(Error::Parse(format!("bad burst placement {mode:?}"))),
        };
        Ok(Burst {
            fraction: num(p)?,
            amplitude_rel: num(a)?,
            placement,
        })
    }
}

/// Detector-side noise: white Gaussian, constant offset and an optional burst,
/// all scaled by the mean of the clean bucket series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gaussian_rel: f64,
    pub offset_rel: f64,
    pub burst: Option<Burst>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noisy_default()
    }
}

impl NoiseModel {
    pub fn clean() -> Self {
        Self {
            gaussian_rel: 0.0,
            offset_rel: 0.0,
            burst: None,
        }
    }

    /// η = 0.1, β = 0, burst on the first 10% of measurements at 0.5 mean(D).
    pub fn noisy_default() -> Self {
        Self {
            gaussian_rel: 0.1,
            offset_rel: 0.0,
            burst: Some(Burst {
                fraction: 0.1,
                amplitude_rel: 0.5,
                placement: BurstPlacement::Contiguous,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.gaussian_rel) || !ok(self.offset_rel) {
            return Err(Error::InvalidParameter(
                "noise parameters must be finite and non-negative".into(),
            ));
        }
        if let Some(b) = &self.burst {
            if !(b.fraction > 0.0 && b.fraction <= 1.0) || !ok(b.amplitude_rel) {
                return Err(Error::InvalidParameter(format!(
                    "burst needs 0 < p <= 1 and alpha >= 0, got p={} alpha={}",
                    b.fraction, b.amplitude_rel
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub model: NoiseModel,
    pub seed: u64,
}

/// Detector values `D^(1..K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketSeries {
    values: Vec<f64>,
    noise: Option<NoiseRecord>,
}

impl BucketSeries {
    pub fn new(values: Vec<f64>, noise: Option<NoiseRecord>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("bucket values must be finite".into()));
        }
        Ok(Self { values, noise })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn noise(&self) -> Option<&NoiseRecord> {
        self.noise.as_ref()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Values at the given 0-based measurement indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyMeasurements);
        }
        let values = indices
            .iter()
            .map(|&i| {
                self.values.get(i).copied().ok_or(Error::OutOfRange {
                    index: i + 1,
                    max: self.values.len(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            values,
            noise: self.noise,
        })
    }

    /// First `count` values, for reconstructions from a measurement prefix.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.values.len() {
            return Err(Error::OutOfRange {
                index: count,
                max: self.values.len(),
            });
        }
        Ok(Self {
            values: self.values[..count].to_vec(),
            noise: self.noise,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `D^(s) = sum_{x,y} I^(s)(x,y) O(x,y)` for every pattern row.
pub fn bucket_acquire(p: &PatternMatrix, o: &ObjectImage) -> Result<BucketSeries> {
    if p.geometry() != o.geometry() {
        return Err(Error::InvalidGeometry(format!(
            "pattern geometry {} differs from object geometry {}",
            p.geometry(),
            o.geometry()
        )));
    }
    let obj = o.values();
    let n = p.cols();
    let values = match p.entries() {
        Entries::Binary(bits) => bits
            .par_chunks(n)
            .map(|row| {
                row.iter()
                    .zip(obj)
                    .fold(0.0, |acc, (&b, &v)| if b == 1 { acc + v } else { acc })
            })
            .collect(),
        Entries::Continuous(vals) => vals
            .par_chunks(n)
            .map(|row| row.iter().zip(obj).fold(0.0, |acc, (&a, &v)| acc + a * v))
            .collect(),
    };
    Ok(BucketSeries {
        values,
        noise: None,
    })
}

/// Add detector noise to a clean series. Deterministic in `seed`.
///
/// Per measurement: `D + β mean(D) + N(0, (η mean(D))^2)`, then the burst adds
/// `α mean(D)` to `round(p K)` measurements (the first ones, or a seeded subset).
pub fn apply_noise(d: &BucketSeries, model: &NoiseModel, seed: u64) -> Result<BucketSeries> {
    if d.noise.is_some() {
        return Err(Error::NoiseAlreadyApplied);
    }
    if d.is_empty() {
        return Err(Error::EmptyMeasurements);
    }
    model.validate()?;
    let level = d.mean();
    let sigma = model.gaussian_rel * level;
    let offset = model.offset_rel * level;
    let mut rng = DetRng::new(seed, STREAM_NOISE);
    let mut values: Vec<f64> = d
        .values
        .iter()
        .map(|&v| v + offset + sigma * rng.standard_normal())
        .collect();
    if let Some(burst) = &model.burst {
        let count = burst.count(values.len());
        let amplitude = burst.amplitude_rel * level;
        let hit: Vec<usize> = match burst.placement {
            BurstPlacement::Contiguous => (0..count).collect(),
            BurstPlacement::SeededRandom => {
                let mut perm = rng.permutation(values.len());
                perm.truncate(count);
                perm
            }
        };
        for i in hit {
            values[i] += amplitude;
        }
    }
    Ok(BucketSeries {
        values,
        noise: Some(NoiseRecord {
            model: *model,
            seed,
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Normalization {
    None,
    MinMax { degenerate: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSource {
    pub pattern: Provenance,
    pub selection: Option<RowSelection>,
    pub noise: Option<NoiseRecord>,
    pub measurements: usize,
}

/// Correlation image `O_GI`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    image: Image,
    normalization: Normalization,
    source: ReconstructionSource,
}

impl Reconstruction {
    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn values(&self) -> &[f64] {
        self.image.data()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn source(&self) -> &ReconstructionSource {
        &self.source
    }
}

fn check_inputs(p: &PatternMatrix, d: &BucketSeries) -> Result<()> {
    if d.is_empty() {
        return Err(Error::EmptyMeasurements);
    }
    if p.rows() != d.len() {
        return Err(Error::LengthMismatch(format!(
            "{} pattern rows but {} bucket values",
            p.rows(),
            d.len()
        )));
    }
    Ok(())
}

fn wrap(p: &PatternMatrix, d: &BucketSeries, values: Vec<f64>) -> Reconstruction {
    Reconstruction {
        image: Image::new(p.geometry(), values).expect("one value per pixel"),
        normalization: Normalization::None,
        source: ReconstructionSource {
            pattern: p.provenance().clone(),
            selection: p.selection(),
            noise: d.noise,
            measurements: d.len(),
        },
    }
}

/// Per-measurement accumulation of `(D - <D>)(I - <I>)`, divided by K at the end.
pub fn reconstruct_naive(p: &PatternMatrix, d: &BucketSeries) -> Result<Reconstruction> {
    check_inputs(p, d)?;
    let k = p.rows();
    let n = p.cols();
    let d_mean = d.mean();
    let mut i_mean = vec![0.0; n];
    for s in 0..k {
        for (x, m) in i_mean.iter_mut().enumerate() {
            *m += p.get(s, x);
        }
    }
    for m in i_mean.iter_mut() {
        *m /= k as f64;
    }
    let mut acc = vec![0.0; n];
    for s in 0..k {
        let ds = d.values[s] - d_mean;
        for (x, a) in acc.iter_mut().enumerate() {
            *a += ds * (p.get(s, x) - i_mean[x]);
        }
    }
    for a in acc.iter_mut() {
        *a /= k as f64;
    }
    Ok(wrap(p, d, acc))
}

/// Column-centred matrix form `(1/K) (M - 1<M>)^T (D - 1<D>)`.
pub fn reconstruct_matrix(p: &PatternMatrix, d: &BucketSeries) -> Result<Reconstruction> {
    check_inputs(p, d)?;
    let k = p.rows();
    let d_mean = d.mean();
    let centred_d: Vec<f64> = d.values.iter().map(|v| v - d_mean).collect();
    let column_means = column_means(p);
    if let Entries::Binary(bits) = p.entries() {
        return Ok(wrap(p, d, binary_product(bits, p.cols(), &centred_d, &column_means)));
    }
    let values = column_means
        .par_iter()
        .enumerate()
        .map(|(j, &mj)| {
            let mut acc = 0.0;
            for (s, &ds) in centred_d.iter().enumerate() {
                acc += (p.get(s, j) - mj) * ds;
            }
            acc / k as f64
        })
        .collect();
    Ok(wrap(p, d, values))
}

/// `(M - 1<M>)^T c` for a {0,1} matrix, expanded as `M^T c - <M>^T (1^T c)`.
/// Rows are streamed in order, so each output sums its terms in row order.
fn binary_product(bits: &[u8], n: usize, c: &[f64], column_means: &[f64]) -> Vec<f64> {
    const BLOCK: usize = 256;
    let k = c.len();
    let c_sum: f64 = c.iter().sum();
    let mut out = vec![0.0; n];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, acc)| {
        let c0 = b * BLOCK;
        for (s, &cs) in c.iter().enumerate() {
            let row = &bits[s * n + c0..s * n + c0 + acc.len()];
            for (a, &bit) in acc.iter_mut().zip(row) {
                if bit == 1 {
                    *a += cs;
                }
            }
        }
        for (j, a) in acc.iter_mut().enumerate() {
            *a = (*a - column_means[c0 + j] * c_sum) / k as f64;
        }
    });
    out
}

fn column_means(p: &PatternMatrix) -> Vec<f64> {
    let k = p.rows();
    (0..p.cols())
        .into_par_iter()
        .map(|j| {
            let mut sum = 0.0;
            for s in 0..k {
                sum += p.get(s, j);
            }
            sum / k as f64
        })
        .collect()
}

/// Affine map onto [0, 1]. Constant images become zeros flagged degenerate.
pub fn minmax_normalize(r: &Reconstruction) -> Reconstruction {
    let (image, degenerate) = minmax_image(&r.image);
    Reconstruction {
        image,
        normalization: Normalization::MinMax { degenerate },
        source: r.source.clone(),
    }
}

/// Affine map of an arbitrary image onto [0, 1]; returns the degenerate flag.
pub fn minmax_image(img: &Image) -> (Image, bool) {
    let (lo, hi) = img.min_max();
    let range = hi - lo;
    let degenerate = !(range > 0.0);
    let data = if degenerate {
        vec![0.0; img.data().len()]
    } else {
        img.data().iter().map(|v| (v - lo) / range).collect()
    };
    (Image::new(img.geometry(), data).expect("same geometry"), degenerate)
}

/// Square `N x N` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicMatrix {
    size: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl CharacteristicMatrix {
    pub fn new(size: usize, values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::LengthMismatch(format!(
                "{} values for a {size}x{size} matrix",
                values.len()
            )));
        }
        Ok(Self {
            size,
            values,
            normalized,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.size;
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j).abs())
            .fold(0.0, f64::max)
    }
}

/// `M_C = (M - 1<M>)^T (M - 1<M>)`.
///
/// Binary matrices go through exact column-overlap counts,
/// `sum_s M_si M_sj - c_i c_j / K` with `c` the column sums; continuous ones
/// through [`characteristic_matrix_centered`].
pub fn characteristic_matrix(p: &PatternMatrix) -> CharacteristicMatrix {
    let Entries::Binary(bits) = p.entries() else {
        return characteristic_matrix_centered(p);
    };
    let k = p.rows();
    let n = p.cols();
    // transpose so each column becomes a packed word run
    let mut columns = vec![0u8; n * k];
    for s in 0..k {
        for j in 0..n {
            columns[j * k + s] = bits[s * n + j];
        }
    }
    let words = pack_words(&columns, n, k);
    let stride = k.div_ceil(64);
    let counts: Vec<u64> = (0..n)
        .map(|j| {
            words[j * stride..(j + 1) * stride]
                .iter()
                .map(|w| w.count_ones() as u64)
                .sum()
        })
        .collect();
    let kf = k as f64;
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let wi = &words[i * stride..(i + 1) * stride];
        for (j, v) in out.iter_mut().enumerate() {
            let wj = &words[j * stride..(j + 1) * stride];
            let overlap: u64 = wi.iter().zip(wj).map(|(a, b)| (a & b).count_ones() as u64).sum();
            *v = overlap as f64 - (counts[i] * counts[j]) as f64 / kf;
        }
    });
    CharacteristicMatrix {
        size: n,
        values,
        normalized: false,
    }
}

/// Dense route: centre every column, then take all pairwise column dot products.
pub fn characteristic_matrix_centered(p: &PatternMatrix) -> CharacteristicMatrix {
    let k = p.rows();
    let n = p.cols();
    let means = column_means(p);
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| (0..k).map(|s| p.get(s, j) - means[j]).collect())
        .collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for (j, v) in out.iter_mut().enumerate().skip(i) {
            *v = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
        }
    });
    // mirror the upper triangle so the result is exactly symmetric
    for i in 0..n {
        for j in 0..i {
            values[i * n + j] = values[j * n + i];
        }
    }
    CharacteristicMatrix {
        size: n,
        values,
        normalized: false,
    }
}

/// Divide by the Euclidean norm of the row holding the global maximum
/// (first occurrence in row-major order).
pub fn normalize_characteristic(c: &CharacteristicMatrix) -> Result<CharacteristicMatrix> {
    if c.normalized {
        return Err(Error::InvalidParameter(
            "characteristic matrix is already normalized".into(),
        ));
    }
    let n = c.size;
    let mut best = 0;
    for (i, &v) in c.values.iter().enumerate() {
        if v > c.values[best] {
            best = i;
        }
    }
    let row = best / n;
    let norm = c.values[row * n..(row + 1) * n]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(CharacteristicMatrix {
        size: n,
        values: c.values.iter().map(|v| v / norm).collect(),
        normalized: true,
    })
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::None => f.write_str("none"),
            Normalization::MinMax { degenerate: false } => f.write_str("minmax"),
            Normalization::MinMax { degenerate: true } => f.write_str("minmax (degenerate)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{
        build_hadamard_matrix, build_random_patterns, default_gold_matrix, RandomMode,
    };
    use crate::rng::DetRng;

    fn object(g: Geometry, seed: u64) -> ObjectImage {
        let mut r = DetRng::new(seed, 9);
        ObjectImage::new(Image::new(g, (0..g.pixels()).map(|_| r.uniform()).collect()).unwrap())
            .unwrap()
    }

    fn closed_form(k: u32) -> Vec<f64> {
        let n = 1usize << k;
        let scale = n as f64 / 4.0;
        let mut v = vec![0.0; n * n];
        for i in 1..n {
            v[i * n + i] = scale;
        }
        v
    }

    #[test]
    fn zero_and_unit_objects() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let zero = ObjectImage::new(Image::filled(g, 0.0)).unwrap();
        assert!(bucket_acquire(&p, &zero).unwrap().values().iter().all(|&v| v == 0.0));
        let one = ObjectImage::new(Image::filled(g, 1.0)).unwrap();
        let d = bucket_acquire(&p, &one).unwrap();
        for s in 0..16 {
            assert_eq!(d.values()[s], p.row_weight(s));
        }
    }

    #[test]
    fn bucket_matches_double_loop() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let o = object(g, 1);
        let d = bucket_acquire(&p, &o).unwrap();
        for s in 0..16 {
            let mut acc = 0.0;
            for x in 0..4 {
                for y in 0..4 {
                    acc += reshape(&p, s, x, y) * o.image().get(x, y);
                }
            }
            assert!((acc - d.values()[s]).abs() < 1e-12);
        }
    }

    fn reshape(p: &PatternMatrix, s: usize, x: usize, y: usize) -> f64 {
        crate::patterns::reshape_row(p, s + 1).unwrap().get(x, y)
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let p = default_gold_matrix(4, Geometry::new(4, 4).unwrap()).unwrap();
        let o = object(Geometry::new(2, 8).unwrap(), 1);
        assert!(bucket_acquire(&p, &o).is_err());
    }

    #[test]
    fn object_range_checked() {
        let g = Geometry::new(1, 2).unwrap();
        assert!(ObjectImage::new(Image::new(g, vec![0.0, 1.5]).unwrap()).is_err());
        assert!(ObjectImage::new(Image::new(g, vec![f64::NAN, 0.5]).unwrap()).is_err());
    }

    #[test]
    fn noise_identity_and_offset() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let d = bucket_acquire(&p, &object(g, 2)).unwrap();
        let same = apply_noise(&d, &NoiseModel::clean(), 5).unwrap();
        assert_eq!(same.values(), d.values());
        let shifted = apply_noise(
            &d,
            &NoiseModel {
                offset_rel: 0.5,
                ..NoiseModel::clean()
            },
            5,
        )
        .unwrap();
        let shift = 0.5 * d.mean();
        for (a, b) in shifted.values().iter().zip(d.values()) {
            assert_eq!(*a, b + shift);
        }
    }

    #[test]
    fn noise_is_deterministic_and_single_shot() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let d = bucket_acquire(&p, &object(g, 2)).unwrap();
        let model = NoiseModel {
            gaussian_rel: 0.1,
            ..NoiseModel::clean()
        };
        let a = apply_noise(&d, &model, 7).unwrap();
        let b = apply_noise(&d, &model, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), d.values());
        assert!(matches!(apply_noise(&a, &model, 7), Err(Error::NoiseAlreadyApplied)));
    }

    #[test]
    fn burst_placement() {
        let values: Vec<f64> = vec![1.0; 20];
        let d = BucketSeries::new(values, None).unwrap();
        let model = NoiseModel {
            burst: Some(Burst {
                fraction: 0.25,
                amplitude_rel: 2.0,
                placement: BurstPlacement::Contiguous,
            }),
            ..NoiseModel::clean()
        };
        let n = apply_noise(&d, &model, 0).unwrap();
        assert_eq!(&n.values()[..5], &[3.0; 5]);
        assert_eq!(&n.values()[5..], &[1.0; 15]);
        let random = NoiseModel {
            burst: Some(Burst {
                placement: BurstPlacement::SeededRandom,
                ..model.burst.unwrap()
            }),
            ..model
        };
        let r = apply_noise(&d, &random, 3).unwrap();
        assert_eq!(r.values().iter().filter(|&&v| v == 3.0).count(), 5);
        assert_eq!(r, apply_noise(&d, &random, 3).unwrap());
    }

    #[test]
    fn invalid_noise_rejected() {
        let d = BucketSeries::new(vec![1.0; 4], None).unwrap();
        let bad = NoiseModel {
            gaussian_rel: -0.1,
            ..NoiseModel::clean()
        };
        assert!(apply_noise(&d, &bad, 0).is_err());
        let bad_burst = NoiseModel {
            burst: Some(Burst {
                fraction: 1.5,
                amplitude_rel: 0.1,
                placement: BurstPlacement::Contiguous,
            }),
            ..NoiseModel::clean()
        };
        assert!(apply_noise(&d, &bad_burst, 0).is_err());
    }

    #[test]
    fn burst_string() {
        let b: Burst = "0.1,0.5,contiguous".parse().unwrap();
        assert_eq!(b.fraction, 0.1);
        assert_eq!(b.placement, BurstPlacement::Contiguous);
        assert_eq!(b.count(4096), 410);
        assert!("0.1,0.5".parse::<Burst>().is_err());
    }

    #[test]
    fn constant_buckets_give_zero_image() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let d = BucketSeries::new(vec![3.0; 16], None).unwrap();
        assert!(reconstruct_naive(&p, &d).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(reconstruct_matrix(&p, &d).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_measurement_gives_zero_image() {
        let g = Geometry::new(4, 4).unwrap();
        let p = crate::patterns::select_rows(
            &default_gold_matrix(4, g).unwrap(),
            crate::patterns::RowOrder::Natural,
            1,
        )
        .unwrap();
        let d = BucketSeries::new(vec![5.0], None).unwrap();
        assert!(reconstruct_naive(&p, &d).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let g = Geometry::new(4, 4).unwrap();
        let p = default_gold_matrix(4, g).unwrap();
        let empty = BucketSeries::new(vec![], None).unwrap();
        assert!(matches!(reconstruct_matrix(&p, &empty), Err(Error::EmptyMeasurements)));
        assert!(matches!(reconstruct_naive(&p, &empty), Err(Error::EmptyMeasurements)));
        let short = BucketSeries::new(vec![1.0; 3], None).unwrap();
        assert!(matches!(reconstruct_matrix(&p, &short), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn characteristic_closed_form_small() {
        for k in [2u32, 4, 6] {
            let g = Geometry::new(1, 1 << k).unwrap();
            for p in [default_gold_matrix(k, g).unwrap(), build_hadamard_matrix(k, g).unwrap()] {
                let fast = characteristic_matrix(&p);
                let dense = characteristic_matrix_centered(&p);
                let expect = closed_form(k);
                for ((a, b), e) in fast.values().iter().zip(dense.values()).zip(&expect) {
                    assert!((a - e).abs() < 1e-9 && (b - e).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn characteristic_routes_agree_on_random() {
        let g = Geometry::new(4, 4).unwrap();
        let p = build_random_patterns(30, g, 3, RandomMode::Binary).unwrap();
        let a = characteristic_matrix(&p);
        let b = characteristic_matrix_centered(&p);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(a.max_off_diagonal() > 0.1);
    }

    #[test]
    fn normalization_examples() {
        let mut four_i = vec![0.0; 16];
        for i in 0..4 {
            four_i[i * 4 + i] = 4.0;
        }
        let c = CharacteristicMatrix::new(4, four_i, false).unwrap();
        let n = normalize_characteristic(&c).unwrap();
        assert!(n.is_normalized());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(n.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let gold = CharacteristicMatrix::new(16, closed_form(4), false).unwrap();
        let gn = normalize_characteristic(&gold).unwrap();
        assert_eq!(gn.get(0, 0), 0.0);
        for i in 1..16 {
            assert_eq!(gn.get(i, i), 1.0);
        }
        assert_eq!(gn.max_off_diagonal(), 0.0);
        let zero = CharacteristicMatrix::new(3, vec![0.0; 9], false).unwrap();
        assert!(matches!(normalize_characteristic(&zero), Err(Error::ZeroNorm)));
    }

    #[test]
    fn minmax_examples() {
        let g = Geometry::new(1, 2).unwrap();
        let (img, deg) = minmax_image(&Image::new(g, vec![2.0, 6.0]).unwrap());
        assert_eq!(img.data(), &[0.0, 1.0]);
        assert!(!deg);
        let unit = Image::new(g, vec![0.0, 1.0]).unwrap();
        assert_eq!(minmax_image(&unit).0, unit);
        let (flat, deg) = minmax_image(&Image::filled(g, 3.0));
        assert_eq!(flat.data(), &[0.0, 0.0]);
        assert!(deg);
    }

    #[test]
    fn full_sampling_recovers_object_up_to_first_pixel() {
        let g = Geometry::new(8, 8).unwrap();
        let mut o = object(g, 4).image().data().to_vec();
        o[0] = 0.0;
        let o = ObjectImage::new(Image::new(g, o).unwrap()).unwrap();
        for p in [default_gold_matrix(6, g).unwrap(), build_hadamard_matrix(6, g).unwrap()] {
            let d = bucket_acquire(&p, &o).unwrap();
            let r = reconstruct_matrix(&p, &d).unwrap();
            // O_GI = (2^k / 4K) (O - O_1 e_1) with K = 2^k
            for (x, (&got, &want)) in r.values().iter().zip(o.values()).enumerate() {
                let expect = if x == 0 { 0.0 } else { want / 4.0 };
                assert!((got - expect).abs() < 1e-12, "pixel {x}");
            }
            let n = minmax_normalize(&r);
            assert_eq!(n.normalization(), Normalization::MinMax { degenerate: false });
            let (lo, hi) = n.image().min_max();
            assert_eq!((lo, hi), (0.0, 1.0));
        }
    }
}
