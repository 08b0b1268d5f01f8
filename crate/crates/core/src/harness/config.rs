use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gi::{NoiseModel, ObjectImage};
use crate::image::Geometry;
use crate::imageio;
use crate::objects;
use crate::patterns::{Family, PatternMatrix, Provenance, RandomMode, RowOrder};
use crate::seqgen::{self, FeedbackPolynomial};

/// Everything an experiment run depends on. Every output file is a pure
/// function of this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// family used by `gen`, `simulate`, `reconstruct` and `analyze-mc`
    pub family: Family,
    /// families compared by `sweep`
    pub families: Vec<Family>,
    pub k: u32,
    /// explicit fold; defaults to the square `2^{k/2} x 2^{k/2}`
    pub geometry: Option<Geometry>,
    /// rows of the random family; defaults to the pixel count
    pub pattern_count: Option<usize>,
    pub random_mode: RandomMode,
    /// Gold (X, Y) polynomials; defaults to the first two table entries
    pub polynomials: Option<[FeedbackPolynomial; 2]>,
    /// Gold (X, Y) seeds as bit strings `a_0 ... a_{k-1}`; default `10...0`
    pub seeds: Option<[String; 2]>,
    /// seed for random patterns and noise
    pub rng_seed: u64,
    /// file path, or `builtin:horse` / `builtin:house`
    pub object: String,
    pub binarize: bool,
    /// `None` runs the clean environment only
    pub noise: Option<NoiseModel>,
    pub order: RowOrder,
    /// K used by `reconstruct` and `analyze-mc`; defaults to all rows
    pub measurements: Option<usize>,
    /// K values for `sweep`; empty means 16 even steps up to the full count
    pub schedule: Vec<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Gold,
            families: Family::ALL.to_vec(),
            k: 12,
            geometry: None,
            pattern_count: None,
            random_mode: RandomMode::Binary,
            polynomials: None,
            seeds: None,
            rng_seed: 1,
            object: "builtin:horse".into(),
            binarize: false,
            noise: Some(NoiseModel::noisy_default()),
            order: RowOrder::Natural,
            measurements: None,
            schedule: Vec::new(),
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        imageio::read_json(path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match self.geometry {
            Some(g) => Ok(g),
            None => Geometry::square_for_order(self.k),
        }
    }

    /// Rows the pattern set of `family` will have.
    pub fn full_rows(&self, family: Family) -> Result<usize> {
        Ok(match family {
            Family::Random => self.pattern_count.unwrap_or(self.geometry()?.pixels()),
            Family::Gold | Family::Hadamard => 1usize << self.k,
        })
    }

    pub fn provenance(&self, family: Family) -> Result<Provenance> {
        let k = self.k;
        if !(seqgen::MIN_DEGREE..=seqgen::MAX_DEGREE).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "k={k} outside {}..={}",
                seqgen::MIN_DEGREE,
                seqgen::MAX_DEGREE
            )));
        }
        Ok(match family {
            Family::Gold => {
                let [x_poly, y_poly] = match self.polynomials {
                    Some(p) => p,
                    None => {
                        let (x, y) = seqgen::default_pair(k)?;
                        [x, y]
                    }
                };
                for p in [x_poly, y_poly] {
                    if p.degree() != k {
                        return Err(Error::InvalidPolynomial(format!(
                            "{} has degree {}, expected k={k}",
                            p.to_algebraic(),
                            p.degree()
                        )));
                    }
                    if !seqgen::is_primitive(&p) {
                        return Err(Error::NotPrimitive(p.to_algebraic()));
                    }
                }
                let default = crate::patterns::bits_to_string(&seqgen::default_seed(k));
                let [x_seed, y_seed] = self
                    .seeds
                    .clone()
                    .unwrap_or_else(|| [default.clone(), default]);
                Provenance::Gold {
                    k,
                    x_poly,
                    y_poly,
                    x_seed,
                    y_seed,
                }
            }
            Family::Hadamard => Provenance::Hadamard { k },
            Family::Random => Provenance::Random {
                rows: self.full_rows(Family::Random)?,
                seed: self.rng_seed,
                mode: self.random_mode,
            },
        })
    }

    pub fn build_patterns(&self, family: Family) -> Result<PatternMatrix> {
        PatternMatrix::regenerate(&self.provenance(family)?, self.geometry()?, None)
    }

    pub fn load_object(&self, geometry: Geometry) -> Result<ObjectImage> {
        let obj = match self.object.strip_prefix("builtin:") {
            Some(name) => {
                let o = objects::builtin(name)?;
                let resampled = o.image().resample_nearest(geometry);
                ObjectImage::new(resampled)?
            }
            None => imageio::load_object(Path::new(&self.object), Some(geometry), false)?,
        };
        Ok(if self.binarize { obj.binarized() } else { obj })
    }

    /// Sweep schedule, ascending and within `1..=full`.
    pub fn schedule_for(&self, full: usize) -> Result<Vec<usize>> {
        let schedule = if self.schedule.is_empty() {
            let step = (full / 16).max(1);
            let mut s: Vec<usize> = (1..).map(|i| i * step).take_while(|&v| v <= full).collect();
            if s.last() != Some(&full) {
                s.push(full);
            }
            s
        } else {
            self.schedule.clone()
        };
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "schedule {schedule:?} must be strictly ascending"
            )));
        }
        if let Some(&bad) = schedule.iter().find(|&&v| v == 0 || v > full) {
            return Err(Error::OutOfRange {
                index: bad,
                max: full,
            });
        }
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.geometry()?;
        for family in self.families.iter().chain(std::iter::once(&self.family)) {
            self.provenance(*family)?;
            if *family != Family::Random && g.pixels() != 1usize << self.k {
                return Err(Error::InvalidGeometry(format!(
                    "geometry {g} has {} pixels but k={} needs {}",
                    g.pixels(),
                    self.k,
                    1usize << self.k
                )));
            }
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if self.families.is_empty() {
            return Err(Error::InvalidParameter("families must not be empty".into()));
        }
        if self.pattern_count == Some(0) || self.measurements == Some(0) {
            return Err(Error::InvalidParameter("counts must be at least 1".into()));
        }
        Ok(())
    }
}
