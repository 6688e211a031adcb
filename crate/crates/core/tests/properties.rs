use proptest::prelude::*;

use cronlab_core::dump;
use cronlab_core::exponents::{sigma_admissible, sigma_window, Exponents};
use cronlab_core::harness::ExperimentConfig;
use cronlab_core::lp::{band_symbol, bump, leq_symbol};
use cronlab_core::microlocal::{self, leray_project};
use cronlab_core::rng::Philox;
use cronlab_core::{GridSpec, Rep, ScalarField, VectorField, C64};
use num_traits::ToPrimitive;

fn random_field(grid: GridSpec, seed: u64) -> ScalarField {
    let mut rng = Philox::new(seed, 0);
    let values = (0..grid.len()).map(|_| C64::new(rng.normal(), rng.normal())).collect();
    ScalarField::new(grid, values, Rep::Physical).unwrap()
}

fn grids() -> impl Strategy<Value = GridSpec> {
    (2usize..=3, 3u32..=5, 0.5f64..20.0).prop_map(|(n, p, l)| {
        let size = if n == 3 { 1 << p.min(4) } else { 1 << p };
        GridSpec::new(n, size, l).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fft_round_trip(grid in grids(), seed in any::<u64>()) {
        let f = random_field(grid, seed);
        let back = f.to_frequency().unwrap().to_physical().unwrap();
        prop_assert!(back.relative_distance(&f).unwrap() < 1e-13);
    }

    #[test]
    fn leray_is_an_idempotent_projection(n in 2usize..=3, seed in any::<u64>(), l in 1.0f64..10.0) {
        let grid = GridSpec::new(n, 8, l).unwrap();
        let mean_free = |f: ScalarField| f.sub(&ScalarField::constant(grid, f.mean())).unwrap();
        let v = VectorField::new((0..n).map(|j| mean_free(random_field(grid, seed ^ j as u64).real_part())).collect()).unwrap();
        let p = leray_project(&v).unwrap();
        let pp = leray_project(&p).unwrap();
        for (a, b) in p.components().iter().zip(pp.components()) {
            prop_assert!(a.sub(b).unwrap().l2_norm() <= 1e-12 * (1.0 + a.l2_norm()));
        }
        let div = p.divergence().unwrap();
        let scale: f64 = v.components().iter().map(|c| c.l2_norm()).sum::<f64>() * grid.nyquist();
        prop_assert!(div.l2_norm() <= 1e-12 * scale);
    }

    #[test]
    fn dyadic_pieces_sum_to_one(r in 0.125f64..8.0) {
        let total: f64 = (-8..=8).map(|k| band_symbol(r, k)).sum();
        prop_assert!((total - 1.0).abs() < 1e-14);
        for k in -8..=8 {
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&band_symbol(r, k)));
            prop_assert!(leq_symbol(r, k) >= leq_symbol(r, k - 1));
        }
    }

    #[test]
    fn bump_is_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(bump(lo) >= bump(hi));
        prop_assert!((0.0..=1.0).contains(&bump(a)));
    }

    #[test]
    fn angular_windows_partition(seed in any::<u64>(), theta in 0.01f64..1.5, n in 2usize..=4) {
        let mut rng = Philox::new(seed, 1);
        let xi = rng.unit_vector(n);
        let omega = rng.unit_vector(n);
        let g = microlocal::greater_symbol(&xi, &omega, theta);
        prop_assert!((microlocal::leq_symbol(&xi, &omega, theta) + g - 1.0).abs() < 1e-15);
        prop_assert!(microlocal::band_symbol(&xi, &omega, theta) >= -1e-15);
        if microlocal::angle(&xi, &omega) <= theta / 2.0 {
            prop_assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn philox_streams_reproduce(seed in any::<u64>(), stream in any::<u64>()) {
        let draw = |s| { let mut r = Philox::new(seed, s); (0..16).map(|_| r.next_u64()).collect::<Vec<_>>() };
        prop_assert_eq!(draw(stream), draw(stream));
        prop_assert_ne!(draw(stream), draw(stream.wrapping_add(1)));
        let mut r = Philox::new(seed, stream);
        for _ in 0..64 {
            let u = r.uniform();
            prop_assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn dump_round_trip(grid in grids(), seed in any::<u64>(), ext in prop::collection::vec(-5.0f64..5.0, 0..4), freq in any::<bool>()) {
        let mut f = random_field(grid, seed);
        if freq {
            f = f.to_frequency().unwrap();
        }
        let (h, g) = dump::decode(&dump::encode(&f, &ext)).unwrap();
        prop_assert_eq!(h.grid, grid);
        prop_assert_eq!(h.extension, ext);
        prop_assert_eq!(h.rep, f.rep());
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn config_hash_ignores_output_dir(seed in any::<u64>(), dir in "[a-z]{1,8}") {
        let json = |s: u64, out: Option<&str>| {
            let mut v = serde_json::json!({"experiment": "identities", "n": 2, "N": 32, "L": 8.0,
                "eps": [0.01], "seed": s, "time_window": [0.0, 1.0]});
            if let Some(o) = out { v["output_dir"] = o.into(); }
            serde_json::from_value::<ExperimentConfig>(v).unwrap()
        };
        prop_assert_eq!(json(seed, None).hash(), json(seed, Some(&dir)).hash());
        prop_assert_ne!(json(seed, None).hash(), json(seed.wrapping_add(1), None).hash());
    }

    #[test]
    fn sigma_window_brackets_admissible_values(n in 6usize..40, t in 0.01f64..0.99) {
        let (lo, hi) = sigma_window(n).unwrap();
        let (lo, hi) = (lo.to_f64().unwrap(), hi.to_f64().unwrap());
        prop_assert!(lo < hi);
        prop_assert!(sigma_admissible(n, lo + t * (hi - lo)).is_ok());
        prop_assert!(sigma_admissible(n, lo).is_err());
        prop_assert!(sigma_admissible(n, hi).is_err());
        let exact = Exponents::new(n, num_rational::Rational64::new(0, 1)).unwrap().values();
        let approx = Exponents::from_f64(n, 0.0).unwrap().values();
        prop_assert!((exact.p_star - approx.p_star).abs() < 1e-12);
    }
}
