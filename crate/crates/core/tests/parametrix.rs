use std::sync::Arc;

use cronlab_core::microlocal::Sign;
use cronlab_core::parametrix::checks::{delta_source, dispersive_scan, match_data, residual_check, unitarity_scan};
use cronlab_core::parametrix::operator::{CachePolicy, DirectionCache, PhaseFamily};
use cronlab_core::parametrix::{AnnulusCutoff, FreeConnection, PhaseSpec};
use cronlab_core::rng::Philox;
use cronlab_core::sample::random_shell;
use cronlab_core::stats::{geomspace, loglog_slope};
use cronlab_core::{GridSpec, ScalarField};

struct Pair {
    plus: PhaseFamily,
    minus: PhaseFamily,
}

fn families(grid: GridSpec, eps: f64, sigma: f64, seed: u64) -> Pair {
    let cutoff = AnnulusCutoff::for_grid(&grid);
    let gap = cronlab_core::parametrix::default_gap(&grid, &cutoff);
    let conn = if eps == 0.0 {
        FreeConnection::zero(grid)
    } else {
        FreeConnection::random(grid, cutoff.rho / gap, eps, &mut Philox::new(seed, 0)).unwrap()
    };
    let conn = Arc::new(conn);
    let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, sigma).unwrap();
    let cache = Arc::new(DirectionCache::build(grid, cutoff, CachePolicy::Auto, spec.smallest_angle()).unwrap());
    let plus = PhaseFamily::build(cache.clone(), conn.clone(), spec).unwrap();
    let minus = PhaseFamily::build(cache, conn, spec.with_sign(Sign::Minus)).unwrap();
    Pair { plus, minus }
}

fn plateau_data(grid: GridSpec, seed: u64) -> (ScalarField, ScalarField) {
    let rho = AnnulusCutoff::for_grid(&grid).rho;
    let mut rng = Philox::new(seed, 3);
    (random_shell(grid, rho, 2.0 * rho, true, &mut rng), random_shell(grid, rho, 2.0 * rho, true, &mut rng))
}

fn decay_slope(n: usize, size: usize, l: f64, eps: f64) -> f64 {
    let grid = GridSpec::new(n, size, l).unwrap();
    let fam = families(grid, eps, 0.25, 1).plus;
    let pairs: Vec<(f64, f64)> = geomspace(1.0, l / 4.0, 6).into_iter().map(|t| (t, 0.0)).collect();
    let r = dispersive_scan(&fam, &delta_source(grid), &pairs, 1e-2).unwrap();
    println!("n={n} eps={eps} ratios {:?} slope {}", r.samples.iter().map(|s| s.ratio).collect::<Vec<_>>(), r.slope);
    r.slope
}

#[test]
fn free_decay_rates() {
    let s2 = decay_slope(2, 256, 16.0, 0.0);
    assert!((s2 + 0.5).abs() <= 0.15, "{s2}");
    let s3 = decay_slope(3, 128, 8.0, 0.0);
    assert!((s3 + 1.0).abs() <= 0.15, "{s3}");
}

#[test]
fn perturbed_decay_tracks_free() {
    let free = decay_slope(2, 256, 16.0, 0.0);
    let pert = decay_slope(2, 256, 16.0, 1e-2);
    assert!((pert - free).abs() <= 0.15, "{free} {pert}");
}

#[test]
fn free_matching_is_exact() {
    let grid = GridSpec::new(2, 32, 8.0).unwrap();
    let p = families(grid, 0.0, 0.25, 0);
    let (f, g) = plateau_data(grid, 5);
    let m = match_data(&f, &g, &p.plus, &p.minus).unwrap();
    assert!(m.err_f <= 1e-12 && m.err_g <= 1e-12, "{} {}", m.err_f, m.err_g);
}

#[test]
fn matching_error_shrinks_with_data_size() {
    let grid = GridSpec::new(2, 64, 8.0).unwrap();
    let (f, g) = plateau_data(grid, 5);
    let eps = [1e-3, 3e-3, 1e-2, 3e-2];
    let mut errs = Vec::new();
    for &e in &eps {
        let p = families(grid, e, 0.25, 2);
        let m = match_data(&f, &g, &p.plus, &p.minus).unwrap();
        errs.push(m.err_f.max(m.err_g));
    }
    let slope = loglog_slope(&eps, &errs).unwrap();
    println!("matching errors {errs:?} slope {slope}");
    assert!(slope >= 0.5);
    for (e, r) in eps.iter().zip(&errs) {
        assert!(*r <= 10.0 * e.sqrt());
    }
}

#[test]
fn residual_routes_agree_at_second_order() {
    let grid = GridSpec::new(2, 64, 8.0).unwrap();
    let p = families(grid, 1e-2, 0.25, 3);
    let (f, g) = plateau_data(grid, 6);
    let m = match_data(&f, &g, &p.plus, &p.minus).unwrap();
    let dts = [0.04, 0.02, 0.01];
    let mut diffs = Vec::new();
    for &dt in &dts {
        let r = residual_check(&p.plus, &p.minus, &m.h_plus, &m.h_minus, (0.0, 0.5), 2, dt).unwrap();
        diffs.push(r.max_difference);
    }
    let slope = loglog_slope(&dts, &diffs).unwrap();
    println!("route differences {diffs:?} slope {slope}");
    assert!((slope - 2.0).abs() <= 0.2);
}

#[test]
fn residual_scales_linearly() {
    let grid = GridSpec::new(2, 64, 8.0).unwrap();
    let (f, g) = plateau_data(grid, 6);
    let eps = [1e-3, 3e-3, 1e-2];
    let mut n2 = Vec::new();
    for &e in &eps {
        let p = families(grid, e, 0.25, 3);
        let m = match_data(&f, &g, &p.plus, &p.minus).unwrap();
        n2.push(residual_check(&p.plus, &p.minus, &m.h_plus, &m.h_minus, (0.0, 1.0), 5, 0.01).unwrap().n2);
    }
    let slope = loglog_slope(&eps, &n2).unwrap();
    println!("N2 {n2:?} slope {slope}");
    assert!((slope - 1.0).abs() <= 0.1);
}

#[test]
fn operator_norm_near_one() {
    let grid = GridSpec::new(2, 64, 8.0).unwrap();
    let free = unitarity_scan(&families(grid, 0.0, 0.25, 0).plus, &[0.0, 1.0], 1).unwrap();
    assert!((free.max_norm - 1.0).abs() <= 1e-10, "{free:?}");
    assert!(free.max_gradient_defect <= 1e-10);
    for eps in [1e-3, 1e-2] {
        let r = unitarity_scan(&families(grid, eps, 0.25, 4).plus, &[0.0, 0.5, 1.0], 1).unwrap();
        println!("eps {eps}: {r:?}");
        assert!(r.max_norm <= 1.0 + 10.0 * eps);
        assert!(r.max_gradient_defect <= 10.0 * eps && r.max_time_defect <= 10.0 * eps);
    }
}

#[test]
fn surrogate_tracks_data_size_and_angle() {
    use cronlab_core::parametrix::surrogate::{decomposable_surrogate, phase_time_derivative_family};
    let grid = GridSpec::new(2, 32, 8.0).unwrap();
    let cutoff = AnnulusCutoff::for_grid(&grid);
    let times = [0.0, 0.5, 1.0];
    let mut vals = Vec::new();
    for eps in [1e-3, 1e-2] {
        let conn = FreeConnection::random(grid, cutoff.rho / 2.0, eps, &mut Philox::new(8, 0)).unwrap();
        let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.25).unwrap();
        // well inside the angular scale of the phase, where the l = 0 term dominates
        let theta = spec.smallest_angle() / 32.0;
        let count = (4.0 * std::f64::consts::PI / theta).ceil() as usize;
        let fam = phase_time_derivative_family(&conn, &spec, count, &times).unwrap();
        let a = decomposable_surrogate(&fam, theta, 2.0, 2.0, 4).unwrap();
        let b = decomposable_surrogate(&fam, 2.0 * theta, 2.0, 2.0, 4).unwrap();
        let ratio = b.value / a.value;
        println!("eps {eps}: {a:?} doubled ratio {ratio}");
        assert!(a.value <= 20.0 * eps);
        assert!(a.tail_ratio <= 0.05);
        assert!(ratio >= 2f64.powf(-0.5) / 2.0 && ratio <= 2f64.powf(0.5) * 2.0);
        vals.push(a.value);
    }
    assert!((loglog_slope(&[1e-3, 1e-2], &vals).unwrap() - 1.0).abs() < 0.1);
}
