//! The five pipeline stages. Each reads and writes fixed paths under the
//! configured output directory:
//!
//! ```text
//! patterns/<family>.json, .bin, _s<i>.pgm     gen
//! buckets/<family>_<env>.csv, .json           simulate
//! recon/<family>_<env>_K<K>.pgm, .csv         reconstruct
//! metrics/<family>_<env>.csv                  reconstruct (appended)
//! mc/<family>_mcn.csv, _mcn.pgm               analyze-mc
//! sweep/<family>_<env>.csv, _K<K>.pgm         sweep
//! ```

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gi::{self, BucketSeries, NoiseRecord, ObjectImage, Reconstruction};
use crate::image::{Geometry, Image};
use crate::imageio::{self, ImageFormat};
use crate::metrics::{self, QualityReport};
use crate::patterns::{self, Entries, Family, PatternMatrix, Provenance};

use super::config::ExperimentConfig;

/// Largest pixel count accepted by `analyze-mc` (dense N x N output).
pub const MAX_ANALYSIS_PIXELS: usize = 4096;

/// Number of leading patterns exported as PGM previews by `gen`.
const PREVIEW_ROWS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Clean,
    Noisy,
}

impl Environment {
    pub fn name(&self) -> &'static str {
        match self {
            Environment::Clean => "clean",
            Environment::Noisy => "noisy",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadEncoding {
    /// each row MSB-first, padded to a byte boundary
    BitsMsbFirst,
    F64Le,
}

/// JSON sidecar describing a persisted pattern set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSidecar {
    pub family: Family,
    pub k: u32,
    #[serde(rename = "K")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub cols: usize,
    pub m: usize,
    pub n: usize,
    pub provenance: Provenance,
    pub encoding: PayloadEncoding,
    pub payload: String,
}

/// JSON sidecar next to a bucket CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketSidecar {
    pub family: Family,
    pub object: String,
    pub binarize: bool,
    pub measurements: usize,
    pub noise: Option<NoiseRecord>,
}

pub struct Layout<'a> {
    root: &'a Path,
}

impl<'a> Layout<'a> {
    pub fn new(root: &'a Path) -> Self {
        Self { root }
    }

    pub fn pattern_sidecar(&self, f: Family) -> PathBuf {
        self.root.join("patterns").join(format!("{f}.json"))
    }

    pub fn pattern_payload(&self, f: Family) -> PathBuf {
        self.root.join("patterns").join(format!("{f}.bin"))
    }

    pub fn pattern_preview(&self, f: Family, s: usize) -> PathBuf {
        self.root.join("patterns").join(format!("{f}_s{s}.pgm"))
    }

    pub fn buckets(&self, f: Family, env: Environment) -> PathBuf {
        self.root.join("buckets").join(format!("{f}_{env}.csv"))
    }

    pub fn bucket_sidecar(&self, f: Family, env: Environment) -> PathBuf {
        self.root.join("buckets").join(format!("{f}_{env}.json"))
    }

    pub fn recon(&self, f: Family, env: Environment, k: usize, ext: &str) -> PathBuf {
        self.root.join("recon").join(format!("{f}_{env}_K{k}.{ext}"))
    }

    pub fn metrics(&self, f: Family, env: Environment) -> PathBuf {
        self.root.join("metrics").join(format!("{f}_{env}.csv"))
    }

    pub fn mc(&self, f: Family, ext: &str) -> PathBuf {
        self.root.join("mc").join(format!("{f}_mcn.{ext}"))
    }

    pub fn sweep(&self, f: Family, env: Environment) -> PathBuf {
        self.root.join("sweep").join(format!("{f}_{env}.csv"))
    }

    pub fn sweep_image(&self, f: Family, env: Environment, k: usize) -> PathBuf {
        self.root.join("sweep").join(format!("{f}_{env}_K{k}.pgm"))
    }
}

fn k_of(p: &Provenance) -> u32 {
    match p {
        Provenance::Gold { k, .. } | Provenance::Hadamard { k } => *k,
        Provenance::Random { rows, .. } => rows.next_power_of_two().trailing_zeros(),
    }
}

/// Write the pattern payload and sidecar for `p`.
pub fn save_patterns(p: &PatternMatrix, root: &Path) -> Result<()> {
    let layout = Layout::new(root);
    let family = p.family();
    let payload_path = layout.pattern_payload(family);
    let (encoding, bytes) = match p.to_packed_bits() {
        Some(bits) => (PayloadEncoding::BitsMsbFirst, bits),
        None => (PayloadEncoding::F64Le, p.to_f64_le()),
    };
    imageio::write_file(&payload_path, &bytes)?;
    let g = p.geometry();
    let sidecar = PatternSidecar {
        family,
        k: k_of(p.provenance()),
        rows: p.rows(),
        cols: p.cols(),
        m: g.m,
        n: g.n,
        provenance: p.provenance().clone(),
        encoding,
        payload: format!("{family}.bin"),
    };
    imageio::write_json(&layout.pattern_sidecar(family), &sidecar)
}

/// Load a persisted pattern set, without checking it against any config.
pub fn read_patterns(root: &Path, family: Family) -> Result<PatternMatrix> {
    let layout = Layout::new(root);
    let sidecar_path = layout.pattern_sidecar(family);
    if !sidecar_path.exists() {
        return Err(Error::MissingArtifact(format!(
            "{} not found; run `gold-gi gen --family {family}` first",
            sidecar_path.display()
        )));
    }
    let sidecar: PatternSidecar = imageio::read_json(&sidecar_path)?;
    let payload = imageio::read_file(&root.join("patterns").join(&sidecar.payload))?;
    let g = Geometry::new(sidecar.m, sidecar.n)?;
    match sidecar.encoding {
        PayloadEncoding::BitsMsbFirst => PatternMatrix::from_packed_bits(
            &payload,
            sidecar.rows,
            g,
            sidecar.family,
            sidecar.provenance,
            None,
        ),
        PayloadEncoding::F64Le => PatternMatrix::from_f64_le(
            &payload,
            sidecar.rows,
            g,
            sidecar.family,
            sidecar.provenance,
            None,
        ),
    }
}

/// Load the pattern set of `family` and check it was generated from `cfg`.
pub fn load_patterns(cfg: &ExperimentConfig, family: Family) -> Result<PatternMatrix> {
    let p = read_patterns(&cfg.out, family)?;
    let expected = cfg.provenance(family)?;
    let geometry = cfg.geometry()?;
    if p.provenance() != &expected || p.geometry() != geometry {
        return Err(Error::InvalidParameter(format!(
            "stored {family} patterns were generated with different parameters; \
             rerun `gold-gi gen --family {family}`"
        )));
    }
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct GenSummary {
    pub family: Family,
    pub rows: usize,
    pub cols: usize,
    pub payload: PathBuf,
    pub payload_bytes: usize,
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<GenSummary> {
    cfg.geometry()?;
    cfg.provenance(cfg.family)?;
    let p = cfg.build_patterns(cfg.family)?;
    save_patterns(&p, &cfg.out)?;
    let layout = Layout::new(&cfg.out);
    for s in 1..=PREVIEW_ROWS.min(p.rows()) {
        let row = patterns::reshape_row(&p, s)?;
        let (img, _) = gi::minmax_image(&row);
        let img = if p.is_binary() { row } else { img };
        imageio::save_image(&img, &layout.pattern_preview(p.family(), s), ImageFormat::Pgm8)?;
    }
    let payload = layout.pattern_payload(p.family());
    let payload_bytes = std::fs::metadata(&payload)
        .map_err(|e| Error::io(&payload, e))?
        .len() as usize;
    Ok(GenSummary {
        family: p.family(),
        rows: p.rows(),
        cols: p.cols(),
        payload,
        payload_bytes,
    })
}

fn write_buckets(
    cfg: &ExperimentConfig,
    family: Family,
    env: Environment,
    d: &BucketSeries,
) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    imageio::write_file(&layout.buckets(family, env), imageio::encode_buckets(d).as_bytes())?;
    imageio::write_json(
        &layout.bucket_sidecar(family, env),
        &BucketSidecar {
            family,
            object: cfg.object.clone(),
            binarize: cfg.binarize,
            measurements: d.len(),
            noise: d.noise().copied(),
        },
    )
}

fn read_buckets(cfg: &ExperimentConfig, family: Family, env: Environment) -> Result<Option<BucketSeries>> {
    let layout = Layout::new(&cfg.out);
    let path = layout.buckets(family, env);
    if !path.exists() {
        return Ok(None);
    }
    let text = String::from_utf8(imageio::read_file(&path)?)
        .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    let values = imageio::decode_buckets(&text)?;
    let sidecar: BucketSidecar = imageio::read_json(&layout.bucket_sidecar(family, env))?;
    BucketSeries::new(values, sidecar.noise).map(Some)
}

/// Clean and (when configured) noisy bucket series for the full pattern set.
pub fn acquire(
    cfg: &ExperimentConfig,
    p: &PatternMatrix,
    object: &ObjectImage,
) -> Result<(BucketSeries, Option<BucketSeries>)> {
    let clean = gi::bucket_acquire(p, object)?;
    let noisy = match &cfg.noise {
        Some(model) => Some(gi::apply_noise(&clean, model, cfg.rng_seed)?),
        None => None,
    };
    Ok((clean, noisy))
}

#[derive(Clone, Debug)]
pub struct SimulateSummary {
    pub family: Family,
    pub measurements: usize,
    pub clean_mean: f64,
    pub noisy: bool,
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateSummary> {
    let p = load_patterns(cfg, cfg.family)?;
    let object = cfg.load_object(p.geometry())?;
    let (clean, noisy) = acquire(cfg, &p, &object)?;
    write_buckets(cfg, cfg.family, Environment::Clean, &clean)?;
    let noisy_path = Layout::new(&cfg.out).buckets(cfg.family, Environment::Noisy);
    match &noisy {
        Some(d) => write_buckets(cfg, cfg.family, Environment::Noisy, d)?,
        None if noisy_path.exists() => {
            // drop stale noisy output from an earlier noisy run
            std::fs::remove_file(&noisy_path).map_err(|e| Error::io(&noisy_path, e))?;
        }
        None => {}
    }
    Ok(SimulateSummary {
        family: cfg.family,
        measurements: clean.len(),
        clean_mean: clean.mean(),
        noisy: noisy.is_some(),
    })
}

/// Reconstruct from `p` and `d`, minmax-normalize, and score against the
/// minmax-normalized object.
pub fn evaluate(
    p: &PatternMatrix,
    d: &BucketSeries,
    object: &ObjectImage,
) -> Result<(Reconstruction, QualityReport)> {
    let raw = gi::reconstruct_matrix(p, d)?;
    let recon = gi::minmax_normalize(&raw);
    let (reference, _) = gi::minmax_image(object.image());
    let report = metrics::quality_report(recon.image(), &reference, 1.0)?;
    Ok((recon, report))
}

/// Row subset of the first `count` measurements under the configured order.
pub fn subset(
    cfg: &ExperimentConfig,
    p: &PatternMatrix,
    series: &[&BucketSeries],
    count: usize,
) -> Result<(PatternMatrix, Vec<BucketSeries>)> {
    let sel = patterns::select_rows(p, cfg.order, count)?;
    let indices = patterns::row_indices(cfg.order, p.rows(), count);
    let ds = series
        .iter()
        .map(|d| d.select(&indices))
        .collect::<Result<_>>()?;
    Ok((sel, ds))
}

#[derive(Clone, Debug)]
pub struct ReconOutcome {
    pub family: Family,
    pub environment: Environment,
    pub measurements: usize,
    pub report: QualityReport,
}

fn append_metrics(path: &Path, k: usize, report: &QualityReport) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    if fresh {
        line.push_str("K,mse,psnr\n");
    }
    line.push_str(&format!("{k},{},{}\n", report.mse, report.psnr));
    f.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<Vec<ReconOutcome>> {
    let family = cfg.family;
    let p = load_patterns(cfg, family)?;
    let count = cfg.measurements.unwrap_or(p.rows());
    if count == 0 || count > p.rows() {
        return Err(Error::OutOfRange {
            index: count,
            max: p.rows(),
        });
    }
    let object = cfg.load_object(p.geometry())?;
    let layout = Layout::new(&cfg.out);
    let mut outcomes = Vec::new();
    for env in [Environment::Clean, Environment::Noisy] {
        let Some(d) = read_buckets(cfg, family, env)? else {
            if env == Environment::Clean {
                return Err(Error::MissingArtifact(format!(
                    "{} not found; run `gold-gi simulate --family {family}` first",
                    layout.buckets(family, env).display()
                )));
            }
            continue;
        };
        if d.len() != p.rows() {
            return Err(Error::LengthMismatch(format!(
                "{} buckets for {} patterns; rerun simulate",
                d.len(),
                p.rows()
            )));
        }
        let (sel, ds) = subset(cfg, &p, &[&d], count)?;
        let (recon, report) = evaluate(&sel, &ds[0], &object)?;
        imageio::save_image(recon.image(), &layout.recon(family, env, count, "pgm"), ImageFormat::Pgm16)?;
        imageio::save_image(
            recon.image(),
            &layout.recon(family, env, count, "csv"),
            ImageFormat::CsvFloat,
        )?;
        append_metrics(&layout.metrics(family, env), count, &report)?;
        outcomes.push(ReconOutcome {
            family,
            environment: env,
            measurements: count,
            report,
        });
    }
    Ok(outcomes)
}

#[derive(Clone, Debug)]
pub struct McSummary {
    pub family: Family,
    pub pixels: usize,
    pub measurements: usize,
    pub max_off_diagonal: f64,
    pub min_diagonal: f64,
}

pub fn cmd_analyze_mc(cfg: &ExperimentConfig) -> Result<McSummary> {
    let family = cfg.family;
    let p = load_patterns(cfg, family)?;
    if p.cols() > MAX_ANALYSIS_PIXELS {
        return Err(Error::InvalidParameter(format!(
            "{} pixels exceed the dense analysis limit of {MAX_ANALYSIS_PIXELS}",
            p.cols()
        )));
    }
    let count = cfg.measurements.unwrap_or(p.rows());
    let p = if count == p.rows() {
        p
    } else {
        patterns::select_rows(&p, cfg.order, count)?
    };
    let mc = gi::characteristic_matrix(&p);
    let mcn = gi::normalize_characteristic(&mc)?;
    let n = mcn.size();
    let img = Image::new(Geometry::new(n, n)?, mcn.values().to_vec())?;
    let layout = Layout::new(&cfg.out);
    imageio::save_image(&img, &layout.mc(family, "csv"), ImageFormat::CsvFloat)?;
    let (heat, _) = gi::minmax_image(&img);
    imageio::save_image(&heat, &layout.mc(family, "pgm"), ImageFormat::Pgm8)?;
    // pixel 0 is never recoverable for the orthogonal families, so skip it
    let min_diagonal = (1..n).map(|i| mcn.get(i, i)).fold(f64::INFINITY, f64::min);
    Ok(McSummary {
        family,
        pixels: n,
        measurements: p.rows(),
        max_off_diagonal: mcn.max_off_diagonal(),
        min_diagonal,
    })
}

#[derive(Clone, Debug)]
pub struct SweepCurve {
    pub family: Family,
    pub environment: Environment,
    pub points: Vec<(usize, QualityReport)>,
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepCurve>> {
    let layout = Layout::new(&cfg.out);
    let mut curves = Vec::new();
    for &family in &cfg.families {
        let p = load_patterns(cfg, family)?;
        let schedule = cfg.schedule_for(p.rows())?;
        let object = cfg.load_object(p.geometry())?;
        let (clean, noisy) = acquire(cfg, &p, &object)?;
        let mut envs = vec![(Environment::Clean, clean)];
        if let Some(d) = noisy {
            envs.push((Environment::Noisy, d));
        }
        let series: Vec<&BucketSeries> = envs.iter().map(|(_, d)| d).collect();
        let results: Vec<Vec<(Reconstruction, QualityReport)>> = schedule
            .par_iter()
            .map(|&count| {
                let (sel, ds) = subset(cfg, &p, &series, count)?;
                ds.iter().map(|d| evaluate(&sel, d, &object)).collect()
            })
            .collect::<Result<_>>()?;
        for (e, (env, _)) in envs.iter().enumerate() {
            let mut csv = String::from("K,mse,psnr\n");
            let mut points = Vec::new();
            for (&count, per_env) in schedule.iter().zip(&results) {
                let (recon, report) = &per_env[e];
                csv.push_str(&format!("{count},{},{}\n", report.mse, report.psnr));
                imageio::save_image(
                    recon.image(),
                    &layout.sweep_image(family, *env, count),
                    ImageFormat::Pgm16,
                )?;
                points.push((count, *report));
            }
            imageio::write_file(&layout.sweep(family, *env), csv.as_bytes())?;
            curves.push(SweepCurve {
                family,
                environment: *env,
                points,
            });
        }
    }
    Ok(curves)
}

/// Bit-identical check used by tests: true when both matrices hold the same entries.
pub fn same_entries(a: &PatternMatrix, b: &PatternMatrix) -> bool {
    match (a.entries(), b.entries()) {
        (Entries::Binary(x), Entries::Binary(y)) => x == y,
        (Entries::Continuous(x), Entries::Continuous(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        _ => false,
    }
}
