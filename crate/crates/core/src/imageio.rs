//! PGM (P5/P2) and float-CSV rasters, bucket CSVs and JSON sidecars.
//!
//! All writers emit fixed layouts: `P5\n<w> <h>\n<maxval>\n` headers, LF line
//! endings, `.` decimals and shortest round-trip float formatting.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gi::{BucketSeries, ObjectImage};
use crate::image::{Geometry, Image};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm8,
    Pgm16,
    CsvFloat,
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm8" => Ok(ImageFormat::Pgm8),
            "pgm16" => Ok(ImageFormat::Pgm16),
            "csv-float" | "csv" => Ok(ImageFormat::CsvFloat),
            _ => Err(Error::Parse(format!("unknown image format {s:?}"))),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Quantize [0, 1] to `0..=max` with round-half-up; out-of-range values clamp.
pub fn quantize(v: f64, max: u16) -> u16 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * max as f64 + 0.5).floor() as u16
}

/// Encode an image as binary PGM with the given maxval (255 or 65535).
pub fn encode_pgm(img: &Image, maxval: u16) -> Vec<u8> {
    let g = img.geometry();
    let mut out = format!("P5\n{} {}\n{}\n", g.n, g.m, maxval).into_bytes();
    for &v in img.data() {
        let q = quantize(v, maxval);
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

/// Raw PGM samples plus maxval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub geometry: Geometry,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Samples scaled by `1 / maxval`.
    pub fn to_image(&self) -> Image {
        let scale = self.maxval as f64;
        Image::new(
            self.geometry,
            self.samples.iter().map(|&s| s as f64 / scale).collect(),
        )
        .expect("sample count checked at decode")
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn token(&mut self) -> Result<&str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Parse("non-ASCII PGM header".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| Error::Parse(format!("bad PGM header field {t:?}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut h = HeaderReader { bytes, pos: 0 };
    let magic = h.token()?.to_string();
    let (width, height, maxval) = (h.number()?, h.number()?, h.number()?);
    if width == 0 || height == 0 {
        return Err(Error::InvalidGeometry("zero-sized image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("bad PGM maxval {maxval}")));
    }
    let count = width * height;
    let samples: Vec<u16> = match magic.as_str() {
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = h.pos + 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(start..start + need)
                .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
            if wide {
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            } else {
                raster.iter().map(|&b| b as u16).collect()
            }
        }
        "P2" => (0..count)
            .map(|_| h.number().map(|v| v as u16))
            .collect::<Result<_>>()?,
        other => return Err(Error::Parse(format!("unsupported PGM magic {other:?}"))),
    };
    if samples.iter().any(|&s| s as usize > maxval) {
        return Err(Error::Parse("PGM sample exceeds maxval".into()));
    }
    Ok(Pgm {
        geometry: Geometry::new(height, width)?,
        maxval: maxval as u16,
        samples,
    })
}

/// One line per image row, comma separated, shortest round-trip formatting.
pub fn encode_csv_float(img: &Image) -> String {
    let n = img.geometry().n;
    let mut out = String::new();
    for row in img.data().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv_float(text: &str) -> Result<Image> {
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad float {t:?}")))
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse(format!(
                    "ragged CSV: row {rows} has {} values, expected {w}",
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let width = width.ok_or_else(|| Error::InvalidGeometry("zero-sized image".into()))?;
    Image::new(Geometry::new(rows, width)?, data)
}

pub fn save_image(img: &Image, path: &Path, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm8 => write_file(path, &encode_pgm(img, 255)),
        ImageFormat::Pgm16 => write_file(path, &encode_pgm(img, 65535)),
        ImageFormat::CsvFloat => write_file(path, encode_csv_float(img).as_bytes()),
    }
}

/// Load a raster file: `.csv` as float CSV, anything else as PGM.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = read_file(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
        decode_csv_float(&text)
    } else {
        Ok(decode_pgm(&bytes)?.to_image())
    }
}

/// Load an object scaled to [0, 1], optionally resampled and thresholded.
pub fn load_object(path: &Path, target: Option<Geometry>, binarize: bool) -> Result<ObjectImage> {
    let img = load_image(path)?;
    let img = match target {
        Some(g) => img.resample_nearest(g),
        None => img,
    };
    let obj = ObjectImage::new(img)?;
    Ok(if binarize { obj.binarized() } else { obj })
}

/// `s,D` CSV with 1-based measurement index.
pub fn encode_buckets(d: &BucketSeries) -> String {
    let mut out = String::from("s,D\n");
    for (s, v) in d.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", s + 1, v));
    }
    out
}

pub fn decode_buckets(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("s,D") {
        return Err(Error::Parse("bucket CSV must start with header s,D".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let (s, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad bucket row {line:?}")))?;
            if s.trim().parse::<usize>() != Ok(i + 1) {
                return Err(Error::Parse(format!("bucket row {} has index {s:?}", i + 1)));
            }
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad bucket value {v:?}")))
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(m: usize, n: usize, f: impl Fn(usize) -> f64) -> Image {
        Image::new(Geometry::new(m, n).unwrap(), (0..m * n).map(f).collect()).unwrap()
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(1.0, 65535), 65535);
        assert_eq!(quantize(0.5, 65535), 32768);
        assert_eq!(quantize(0.0, 65535), 0);
        assert_eq!(quantize(1.7, 255), 255);
        assert_eq!(quantize(-0.2, 255), 0);
    }

    #[test]
    fn pgm16_is_big_endian() {
        let img = gray(1, 2, |i| i as f64);
        let bytes = encode_pgm(&img, 65535);
        assert!(bytes.starts_with(b"P5\n2 1\n65535\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0xff, 0xff]);
    }

    #[test]
    fn pgm_roundtrip_is_exact() {
        let img = gray(3, 5, |i| i as f64 / 14.0);
        for maxval in [255u16, 65535] {
            let bytes = encode_pgm(&img, maxval);
            let decoded = decode_pgm(&bytes).unwrap();
            assert_eq!(decoded.geometry, Geometry::new(3, 5).unwrap());
            assert_eq!(encode_pgm(&decoded.to_image(), maxval), bytes);
        }
    }

    #[test]
    fn ascii_pgm_with_comments() {
        let text = b"P2\n# a comment\n2 2\n255\n0 255\n128 255\n";
        let pgm = decode_pgm(text).unwrap();
        assert_eq!(pgm.samples, vec![0, 255, 128, 255]);
    }

    #[test]
    fn bad_pgm() {
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode_pgm(b"P5\n0 1\n255\n").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\0").is_err());
    }

    #[test]
    fn csv_float_roundtrip() {
        let img = gray(2, 3, |i| (i as f64 + 0.1).sqrt() / 7.0 + 1e-17);
        let back = decode_csv_float(&encode_csv_float(&img)).unwrap();
        assert_eq!(back, img);
        assert!(decode_csv_float("1,2\n3\n").is_err());
        assert!(decode_csv_float("").is_err());
    }

    #[test]
    fn bucket_csv_roundtrip() {
        let d = BucketSeries::new(vec![0.0, 1.5, 1.0 / 3.0], None).unwrap();
        let text = encode_buckets(&d);
        assert!(text.starts_with("s,D\n1,0\n2,1.5\n"));
        assert_eq!(decode_buckets(&text).unwrap(), d.values());
        assert!(decode_buckets("x,y\n").is_err());
    }

    #[test]
    fn object_loading() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("white.pgm");
        save_image(&gray(4, 4, |_| 1.0), &white, ImageFormat::Pgm8).unwrap();
        let o = load_object(&white, None, false).unwrap();
        assert!(o.values().iter().all(|&v| v == 1.0));

        let black = dir.path().join("black.pgm");
        save_image(&gray(4, 4, |_| 0.0), &black, ImageFormat::Pgm8).unwrap();
        assert!(load_object(&black, None, false).unwrap().values().iter().all(|&v| v == 0.0));

        let big = dir.path().join("big.pgm");
        save_image(&gray(128, 128, |i| (i % 256) as f64 / 255.0), &big, ImageFormat::Pgm8)
            .unwrap();
        let g = Geometry::new(64, 64).unwrap();
        let small = load_object(&big, Some(g), false).unwrap();
        assert_eq!(small.geometry(), g);
        assert!(small.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let bin = load_object(&big, Some(g), true).unwrap();
        assert!(bin.values().iter().all(|&v| v == 0.0 || v == 1.0));

        assert!(matches!(
            load_object(&dir.path().join("missing.pgm"), None, false),
            Err(Error::Io { .. })
        ));
    }
}
