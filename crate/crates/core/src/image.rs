use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raster shape: `m` rows by `n` columns, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub m: usize,
    pub n: usize,
}

impl Geometry {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidGeometry(format!("empty geometry {m}x{n}")));
        }
        Ok(Self { m, n })
    }

    pub fn pixels(&self) -> usize {
        self.m * self.n
    }

    /// Square `2^{k/2} x 2^{k/2}` fold of a `2^k`-pixel row. Odd `k` has no such fold.
    pub fn square_for_order(k: u32) -> Result<Self> {
        if k % 2 != 0 {
            return Err(Error::InvalidGeometry(format!(
                "order k={k} is odd, so 2^{k} pixels cannot fold into a square; \
                 give an explicit geometry m,n with m*n = {}",
                1u64 << k
            )));
        }
        let side = 1usize << (k / 2);
        Self::new(side, side)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

impl FromStr for Geometry {
    type Err = Error;

    /// "m,n" or "mxn".
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
        match parts.as_slice() {
            [m, n] => {
                let m = m
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad geometry {s:?}")))?;
                let n = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad geometry {s:?}")))?;
                Self::new(m, n)
            }
            _ => Err(Error::Parse(format!("bad geometry {s:?}"))),
        }
    }
}

/// Real-valued raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    geometry: Geometry,
    data: Vec<f64>,
}

impl Image {
    pub fn new(geometry: Geometry, data: Vec<f64>) -> Result<Self> {
        if data.len() != geometry.pixels() {
            return Err(Error::GeometryMismatch {
                m: geometry.m,
                n: geometry.n,
                len: data.len(),
            });
        }
        Ok(Self { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: f64) -> Self {
        Self {
            geometry,
            data: vec![value; geometry.pixels()],
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.geometry.n + col]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Nearest-neighbour resample to `target`.
    pub fn resample_nearest(&self, target: Geometry) -> Image {
        if target == self.geometry {
            return self.clone();
        }
        let src = self.geometry;
        let mut data = Vec::with_capacity(target.pixels());
        for r in 0..target.m {
            let sr = r * src.m / target.m;
            for c in 0..target.n {
                let sc = c * src.n / target.n;
                data.push(self.data[sr * src.n + sc]);
            }
        }
        Image {
            geometry: target,
            data,
        }
    }
}
