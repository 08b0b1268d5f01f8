//! End-to-end checks that drive the `gold-gi` binary.

use std::path::Path;
use std::process::{Command, Output};

use gold_gi::gi::{self, BucketSeries, ObjectImage};
use gold_gi::harness::commands::read_patterns;
use gold_gi::imageio;
use gold_gi::patterns::Family;
use gold_gi::{Geometry, Image};

fn gold_gi(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gold-gi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("GOLD_GI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = gold_gi(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn read_csv_column(path: &Path, col: usize) -> Vec<f64> {
    String::from_utf8(read(path))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn gen_is_idempotent_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["gen", "--family", "gold"]);
    let first = read(&out.join("patterns/gold.bin"));
    let sidecar = read(&out.join("patterns/gold.json"));
    // 4096 rows of 4096 bits
    assert_eq!(first.len(), 2 * 1024 * 1024);
    ok(out, &["gen", "--family", "gold"]);
    assert_eq!(read(&out.join("patterns/gold.bin")), first);
    assert_eq!(read(&out.join("patterns/gold.json")), sidecar);
    for s in 1..=3 {
        assert!(out.join(format!("patterns/gold_s{s}.pgm")).exists());
    }
    let p = read_patterns(out, Family::Gold).unwrap();
    assert_eq!((p.rows(), p.cols()), (4096, 4096));
}

#[test]
fn odd_order_without_geometry_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = gold_gi(dir.path(), &["gen", "--k", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry"));
    ok(dir.path(), &["gen", "--k", "5", "--geometry", "4,8"]);
}

#[test]
fn missing_patterns_exit_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = gold_gi(dir.path(), &["simulate", "--k", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gen"));
}

#[test]
fn stale_patterns_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--k", "4"]);
    let o = gold_gi(dir.path(), &["simulate", "--k", "6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gold_gi(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        gold_gi(dir.path(), &["gen", "--family", "sobol"]).status.code(),
        Some(1)
    );
    assert_eq!(
        gold_gi(dir.path(), &["gen", "--k", "4", "--burst", "2,0.5,contiguous"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn zero_object_gives_zero_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let zero = out.join("zero.pgm");
    let g = Geometry::new(4, 4).unwrap();
    imageio::write_file(&zero, &imageio::encode_pgm(&Image::filled(g, 0.0), 255)).unwrap();
    ok(out, &["gen", "--k", "4"]);
    ok(out, &["simulate", "--k", "4", "--no-noise", "--object", zero.to_str().unwrap()]);
    let d = read_csv_column(&out.join("buckets/gold_clean.csv"), 1);
    assert_eq!(d.len(), 16);
    assert!(d.iter().all(|&v| v == 0.0));
    assert!(!out.join("buckets/gold_noisy.csv").exists());
}

#[test]
fn simulate_matches_direct_sum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["gen", "--k", "4", "--family", "hadamard"]);
    ok(out, &["simulate", "--k", "4", "--family", "hadamard", "--object", "builtin:house"]);
    let p = read_patterns(out, Family::Hadamard).unwrap();
    let house = gold_gi::objects::house();
    let small = ObjectImage::new(house.image().resample_nearest(p.geometry())).unwrap();
    let d = read_csv_column(&out.join("buckets/hadamard_clean.csv"), 1);
    for (s, &v) in d.iter().enumerate() {
        let expect: f64 = (0..16).map(|x| p.get(s, x) * small.values()[x]).sum();
        assert_eq!(v, expect, "s={s}");
    }
    // the noisy file differs from the clean one and records its seed
    let noisy = read_csv_column(&out.join("buckets/hadamard_noisy.csv"), 1);
    assert_ne!(noisy, d);
    let side = String::from_utf8(read(&out.join("buckets/hadamard_noisy.json"))).unwrap();
    assert!(side.contains("\"seed\": 1"));
}

#[test]
fn reconstruct_writes_images_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["gen", "--k", "6"]);
    ok(out, &["simulate", "--k", "6"]);
    let o = gold_gi(out, &["reconstruct", "--k", "6", "--measurements", "65"]);
    assert_eq!(o.status.code(), Some(1));
    ok(out, &["reconstruct", "--k", "6"]);
    ok(out, &["reconstruct", "--k", "6", "--measurements", "32"]);
    let csv = String::from_utf8(read(&out.join("metrics/gold_clean.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "K,mse,psnr");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("64,"));
    for ext in ["pgm", "csv"] {
        assert!(out.join(format!("recon/gold_clean_K64.{ext}")).exists());
        assert!(out.join(format!("recon/gold_noisy_K32.{ext}")).exists());
    }
    let recon = imageio::load_image(&out.join("recon/gold_clean_K64.csv")).unwrap();
    let (lo, hi) = recon.min_max();
    assert_eq!((lo, hi), (0.0, 1.0));
}

#[test]
fn reconstruct_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["gen", "--k", "8", "--family", "random"]);
    ok(out, &["simulate", "--k", "8", "--family", "random", "--no-noise"]);
    ok(out, &["reconstruct", "--k", "8", "--family", "random", "--order", "perm:3", "--measurements", "100"]);
    let p = read_patterns(out, Family::Random).unwrap();
    let object = ObjectImage::new(gold_gi::objects::horse().image().resample_nearest(p.geometry())).unwrap();
    let sel = gold_gi::patterns::select_rows(&p, "perm:3".parse().unwrap(), 100).unwrap();
    let d: BucketSeries = gi::bucket_acquire(&sel, &object).unwrap();
    let expect = gi::minmax_normalize(&gi::reconstruct_naive(&sel, &d).unwrap());
    let got = imageio::load_image(&out.join("recon/random_clean_K100.csv")).unwrap();
    for (a, b) in got.data().iter().zip(expect.values()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn characteristic_matrix_separates_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let mut off = Vec::new();
    for family in ["gold", "random"] {
        ok(out, &["gen", "--k", "8", "--family", family]);
        ok(out, &["analyze-mc", "--k", "8", "--family", family]);
        let mc = imageio::load_image(&out.join(format!("mc/{family}_mcn.csv"))).unwrap();
        assert_eq!(mc.geometry(), Geometry::new(256, 256).unwrap());
        let max_off = (0..256)
            .flat_map(|i| (0..256).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| mc.data()[i * 256 + j].abs())
            .fold(0.0, f64::max);
        off.push(max_off);
        assert!(out.join(format!("mc/{family}_mcn.pgm")).exists());
    }
    assert!(off[0] <= 1e-9, "gold off-diagonal {}", off[0]);
    assert!(off[1] >= 10.0 * off[0].max(1e-9), "{off:?}");
    let o = gold_gi(out, &["analyze-mc", "--k", "14", "--family", "hadamard"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn sweep_writes_one_row_per_schedule_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for f in ["gold", "hadamard", "random"] {
        ok(out, &["gen", "--k", "6", "--family", f]);
    }
    ok(out, &["sweep", "--k", "6", "--schedule", "16,32,64"]);
    for f in ["gold", "hadamard", "random"] {
        for env in ["clean", "noisy"] {
            let ks = read_csv_column(&out.join(format!("sweep/{f}_{env}.csv")), 0);
            assert_eq!(ks, vec![16.0, 32.0, 64.0]);
            assert!(out.join(format!("sweep/{f}_{env}_K32.pgm")).exists());
        }
    }
    let csv = String::from_utf8(read(&out.join("sweep/gold_clean.csv"))).unwrap();
    assert!(csv.lines().last().unwrap().ends_with(",0,inf"), "{csv}");

    // --family restricts the sweep to that family
    let only = tempfile::tempdir().unwrap();
    ok(only.path(), &["gen", "--k", "6"]);
    ok(only.path(), &["sweep", "--k", "6", "--family", "gold", "--no-noise"]);
    assert!(only.path().join("sweep/gold_clean.csv").exists());
    assert!(!only.path().join("sweep/gold_noisy.csv").exists());
}
