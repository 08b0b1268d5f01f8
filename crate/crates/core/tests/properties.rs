//! Property tests over randomly drawn inputs.

use proptest::prelude::*;

use gold_gi::gi::{self, BucketSeries, NoiseModel, ObjectImage};
use gold_gi::metrics;
use gold_gi::patterns::{self, Family, PatternMatrix, RandomMode, RowOrder};
use gold_gi::seqgen::{self, LfsrState};
use gold_gi::{Geometry, Image};

fn object(g: Geometry, values: &[f64]) -> ObjectImage {
    ObjectImage::new(Image::new(g, values[..g.pixels()].to_vec()).unwrap()).unwrap()
}

fn small_matrix(family: u8, k: u32, seed: u64) -> PatternMatrix {
    let g = Geometry::new(1 << (k / 2), 1 << (k - k / 2)).unwrap();
    match family % 4 {
        0 => patterns::default_gold_matrix(k, g).unwrap(),
        1 => patterns::build_hadamard_matrix(k, g).unwrap(),
        2 => patterns::build_random_patterns(g.pixels() + 3, g, seed, RandomMode::Binary).unwrap(),
        _ => patterns::build_random_patterns(g.pixels() / 2, g, seed, RandomMode::Negexp).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // any nonzero seed of a primitive register walks the full orbit
    #[test]
    fn m_sequence_period_and_balance(k in 2u32..=10, which in 0usize..2, seed in 1u32..u32::MAX) {
        let table = seqgen::table_polynomials(k);
        let poly = table[which % table.len()];
        let reg: Vec<u8> = (0..k).map(|i| ((seed >> (i % 31)) & 1) as u8).collect();
        prop_assume!(reg.iter().any(|&b| b == 1));
        let s = seqgen::generate_m_sequence(&poly, &reg).unwrap();
        let n = (1usize << k) - 1;
        prop_assert_eq!(s.len(), n);
        prop_assert_eq!(s.ones(), 1usize << (k - 1));
        // the register returns to its seed after exactly n clocks
        let mut state = LfsrState::new(&reg).unwrap();
        for step in 1..=n {
            state = seqgen::lfsr_step(&state, &poly).unwrap().0;
            if step < n {
                prop_assert_ne!(state.register(), reg.clone());
            }
        }
        prop_assert_eq!(state.register(), reg);
    }

    #[test]
    fn estimators_agree(family in 0u8..4, k in 2u32..=6, seed: u64, vals in prop::collection::vec(0.0f64..=1.0, 64), noisy: bool) {
        let p = small_matrix(family, k, seed);
        let o = object(p.geometry(), &vals);
        let mut d = gi::bucket_acquire(&p, &o).unwrap();
        if noisy {
            d = gi::apply_noise(&d, &NoiseModel::noisy_default(), seed).unwrap();
        }
        let a = gi::reconstruct_naive(&p, &d).unwrap();
        let b = gi::reconstruct_matrix(&p, &d).unwrap();
        let scale = a.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale, "{} vs {}", x, y);
        }
    }

    #[test]
    fn buckets_are_linear(family in 0u8..4, k in 2u32..=6, seed: u64,
                          u in prop::collection::vec(0.0f64..=1.0, 64),
                          v in prop::collection::vec(0.0f64..=1.0, 64),
                          a in 0.0f64..=1.0) {
        let p = small_matrix(family, k, seed);
        let g = p.geometry();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + (1.0 - a) * y).collect();
        let du = gi::bucket_acquire(&p, &object(g, &u)).unwrap();
        let dv = gi::bucket_acquire(&p, &object(g, &v)).unwrap();
        let dm = gi::bucket_acquire(&p, &object(g, &mix)).unwrap();
        for i in 0..dm.len() {
            let expect = a * du.values()[i] + (1.0 - a) * dv.values()[i];
            prop_assert!((dm.values()[i] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn mse_symmetric_and_quadratic(a in prop::collection::vec(-10.0f64..10.0, 1..50), shift in -5.0f64..5.0, c in 0.1f64..10.0) {
        let g = Geometry::new(a.len(), 1).unwrap();
        let b: Vec<f64> = a.iter().map(|x| x + shift * (x.sin() + 1.0)).collect();
        let ia = Image::new(g, a.clone()).unwrap();
        let ib = Image::new(g, b.clone()).unwrap();
        let m = metrics::mse(&ia, &ib).unwrap();
        prop_assert_eq!(m, metrics::mse(&ib, &ia).unwrap());
        prop_assert!(m >= 0.0);
        prop_assert_eq!(metrics::mse(&ia, &ia).unwrap(), 0.0);
        let sa = Image::new(g, a.iter().map(|x| c * x).collect()).unwrap();
        let sb = Image::new(g, b.iter().map(|x| c * x).collect()).unwrap();
        let ms = metrics::mse(&sa, &sb).unwrap();
        prop_assert!((ms - c * c * m).abs() <= 1e-9 * (1.0 + ms));
    }

    #[test]
    fn psnr_decreases_with_mse(m1 in 1e-8f64..1e2, ratio in 1.0001f64..1e3, max_val in 0.5f64..300.0) {
        let p1 = metrics::psnr_from_mse(m1, max_val).unwrap().finite().unwrap();
        let p2 = metrics::psnr_from_mse(m1 * ratio, max_val).unwrap().finite().unwrap();
        prop_assert!(p2 < p1);
    }

    #[test]
    fn packed_bits_roundtrip(family in 0u8..3, k in 2u32..=7, seed: u64) {
        let p = small_matrix(family, k, seed);
        let bytes = p.to_packed_bits().unwrap();
        prop_assert_eq!(bytes.len(), p.rows() * p.cols().div_ceil(8));
        let back = PatternMatrix::from_packed_bits(
            &bytes, p.rows(), p.geometry(), p.family(), p.provenance().clone(), None,
        ).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn f64_payload_roundtrip(k in 2u32..=6, seed: u64) {
        let p = small_matrix(3, k, seed);
        let back = PatternMatrix::from_f64_le(
            &p.to_f64_le(), p.rows(), p.geometry(), Family::Random, p.provenance().clone(), None,
        ).unwrap();
        prop_assert_eq!(back, p);
    }

    // selecting K rows and the matching buckets is the same as acquiring with the selection
    #[test]
    fn selection_commutes_with_acquisition(k in 2u32..=6, seed: u64, count_frac in 0.05f64..=1.0,
                                           vals in prop::collection::vec(0.0f64..=1.0, 64)) {
        let p = small_matrix(0, k, seed);
        let o = object(p.geometry(), &vals);
        let count = ((p.rows() as f64 * count_frac).ceil() as usize).clamp(1, p.rows());
        let order = RowOrder::Permuted(seed);
        let sel = patterns::select_rows(&p, order, count).unwrap();
        let full: BucketSeries = gi::bucket_acquire(&p, &o).unwrap();
        let picked = full.select(&patterns::row_indices(order, p.rows(), count)).unwrap();
        let direct = gi::bucket_acquire(&sel, &o).unwrap();
        prop_assert_eq!(picked.values(), direct.values());
    }
}
