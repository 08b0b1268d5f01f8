//! MSE and PSNR.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR in dB; identical images give `Infinite` rather than a sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Psnr::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(*v),
            Psnr::Infinite => None,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => serializer.serialize_f64(*v),
            Psnr::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr: Psnr,
    pub max_val: f64,
    pub pixel_count: usize,
}

fn check_geometry(a: &Image, b: &Image) -> Result<()> {
    if a.geometry() != b.geometry() {
        return Err(Error::InvalidGeometry(format!(
            "cannot compare {} with {}",
            a.geometry(),
            b.geometry()
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_geometry(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// PSNR from an already computed MSE.
pub fn psnr_from_mse(mse: f64, max_val: f64) -> Result<Psnr> {
    if !(max_val > 0.0) || !max_val.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "max_val must be positive, got {max_val}"
        )));
    }
    if mse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (max_val * max_val / mse).log10()))
}

pub fn psnr(a: &Image, b: &Image, max_val: f64) -> Result<Psnr> {
    psnr_from_mse(mse(a, b)?, max_val)
}

pub fn quality_report(a: &Image, b: &Image, max_val: f64) -> Result<QualityReport> {
    let mse = mse(a, b)?;
    Ok(QualityReport {
        mse,
        psnr: psnr_from_mse(mse, max_val)?,
        max_val,
        pixel_count: a.data().len(),
    })
}

/// Ratio of the largest absolute pixel error to the RMS error. Large values
/// mean the error is concentrated in a few pixels. `None` when the images match.
pub fn peak_to_rms(a: &Image, b: &Image) -> Result<Option<f64>> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(None);
    }
    let peak = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(Some(peak / mse.sqrt()))
}
