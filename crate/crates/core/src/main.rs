use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use gold_gi::gi::{Burst, NoiseModel};
use gold_gi::harness::commands;
use gold_gi::harness::ExperimentConfig;
use gold_gi::patterns::{Family, RandomMode, RowOrder};
use gold_gi::{Error, Geometry, Result};

/// Ghost-imaging simulator with Gold, Hadamard and random illumination patterns.
#[derive(Parser, Debug)]
#[command(name = "gold-gi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate and persist the pattern set of one family
    Gen,
    /// Acquire clean and noisy bucket series for an object
    Simulate,
    /// Reconstruct from stored buckets and append quality metrics
    Reconstruct,
    /// Write the normalized characteristic matrix
    AnalyzeMc,
    /// Quality versus number of measurements for every family
    Sweep,
}

/// Flags override the matching fields of the JSON config.
#[derive(Args, Debug)]
struct Overrides {
    /// JSON experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    family: Option<Family>,
    /// register length; patterns have 2^k rows and pixels
    #[arg(long, global = true)]
    k: Option<u32>,
    /// image fold as "m,n"
    #[arg(long, global = true)]
    geometry: Option<Geometry>,
    /// rows of the random family
    #[arg(long, global = true)]
    pattern_count: Option<usize>,
    /// binary or negexp
    #[arg(long, global = true)]
    random_mode: Option<RandomMode>,
    /// image path or builtin:horse / builtin:house
    #[arg(long, global = true)]
    object: Option<String>,
    #[arg(long, global = true)]
    binarize: bool,
    /// disable the noisy environment
    #[arg(long, global = true, conflicts_with_all = ["noise_eta", "noise_beta", "burst"])]
    no_noise: bool,
    /// Gaussian sigma relative to the mean bucket value
    #[arg(long, global = true)]
    noise_eta: Option<f64>,
    /// constant offset relative to the mean bucket value
    #[arg(long, global = true)]
    noise_beta: Option<f64>,
    /// "p,alpha,contiguous|random" or "none"
    #[arg(long, global = true)]
    burst: Option<String>,
    /// natural or perm:<seed>
    #[arg(long, global = true)]
    order: Option<RowOrder>,
    /// number of measurements K
    #[arg(long, global = true)]
    measurements: Option<usize>,
    /// comma-separated K values for sweep
    #[arg(long, global = true, value_delimiter = ',')]
    schedule: Option<Vec<usize>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
}

impl Overrides {
    fn apply(self, command: &Command) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(f) = self.family {
            cfg.family = f;
            if matches!(command, Command::Sweep) {
                cfg.families = vec![f];
            }
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if self.geometry.is_some() {
            cfg.geometry = self.geometry;
        }
        if self.pattern_count.is_some() {
            cfg.pattern_count = self.pattern_count;
        }
        if let Some(m) = self.random_mode {
            cfg.random_mode = m;
        }
        if let Some(o) = self.object {
            cfg.object = o;
        }
        cfg.binarize |= self.binarize;
        if self.no_noise {
            cfg.noise = None;
        }
        if self.noise_eta.is_some() || self.noise_beta.is_some() || self.burst.is_some() {
            let mut noise = cfg.noise.unwrap_or_else(NoiseModel::clean);
            if let Some(eta) = self.noise_eta {
                noise.gaussian_rel = eta;
            }
            if let Some(beta) = self.noise_beta {
                noise.offset_rel = beta;
            }
            match self.burst.as_deref() {
                Some("none") => noise.burst = None,
                Some(text) => noise.burst = Some(text.parse::<Burst>()?),
                None => {}
            }
            cfg.noise = Some(noise);
        }
        if let Some(o) = self.order {
            cfg.order = o;
        }
        if self.measurements.is_some() {
            cfg.measurements = self.measurements;
        }
        if let Some(s) = self.schedule {
            cfg.schedule = s;
        }
        if let Some(out) = self.out {
            cfg.out = out;
        }
        if let Some(seed) = self.rng_seed {
            cfg.rng_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("GOLD_GI_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("GOLD_GI_THREADS={value:?} is not a count")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let cfg = cli.opts.apply(&cli.command)?;
    info!("config: {}", cfg.to_json());
    match cli.command {
        Command::Gen => {
            let s = commands::cmd_gen(&cfg)?;
            println!(
                "{}: {} x {} patterns -> {} ({} bytes)",
                s.family,
                s.rows,
                s.cols,
                s.payload.display(),
                s.payload_bytes
            );
        }
        Command::Simulate => {
            let s = commands::cmd_simulate(&cfg)?;
            println!(
                "{}: {} measurements, mean {:.6}{}",
                s.family,
                s.measurements,
                s.clean_mean,
                if s.noisy { ", noisy series written" } else { "" }
            );
        }
        Command::Reconstruct => {
            for o in commands::cmd_reconstruct(&cfg)? {
                println!(
                    "{} {} K={}: mse {:.6e} psnr {}",
                    o.family, o.environment, o.measurements, o.report.mse, o.report.psnr
                );
            }
        }
        Command::AnalyzeMc => {
            let s = commands::cmd_analyze_mc(&cfg)?;
            println!(
                "{}: N={} K={} max off-diagonal {:.3e}, min diagonal {:.6}",
                s.family, s.pixels, s.measurements, s.max_off_diagonal, s.min_diagonal
            );
        }
        Command::Sweep => {
            for c in commands::cmd_sweep(&cfg)? {
                if let Some((k, r)) = c.points.last() {
                    println!(
                        "{} {}: {} points, K={k} mse {:.6e} psnr {}",
                        c.family,
                        c.environment,
                        c.points.len(),
                        r.mse,
                        r.psnr
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
