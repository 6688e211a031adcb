use std::f64::consts::PI;

use cronlab_core::mkg::{constraint_residuals, dt_max, evolve, random_small_data, step, ConnectionState};
use cronlab_core::rng::Philox;
use cronlab_core::GridSpec;

fn data(n: usize, size: usize, eps: f64, seed: u64) -> ConnectionState {
    let grid = GridSpec::new(n, size, 2.0 * PI).unwrap();
    random_small_data(grid, eps, 3.0, &mut Philox::new(seed, 0)).unwrap()
}

#[test]
fn small_data_conserves_energy_and_constraints() {
    let s0 = data(3, 32, 1e-2, 11);
    let dt = dt_max(s0.grid());
    let steps = ((s0.grid().length() / 4.0) / dt).ceil() as usize;
    let traj = evolve(&s0, dt, steps, 1).unwrap();
    let e0 = constraint_residuals(&s0).unwrap().total;
    let mut drift = 0.0f64;
    for s in &traj {
        let r = constraint_residuals(s).unwrap();
        drift = drift.max((r.total - e0).abs() / e0);
        assert!(r.gauss_residual <= 1e-6, "{r:?}");
        assert!(r.div_residual <= 1e-9, "{r:?}");
    }
    println!("energy drift {drift:.3e}");
    assert!(drift <= 1e-5);
}

#[test]
fn refinement_shows_second_order() {
    let s0 = data(3, 16, 1e-1, 4);
    let t_end = 0.8;
    let reference = {
        let m = 256;
        evolve(&s0, t_end / m as f64, m, m).unwrap().pop().unwrap()
    };
    let mut errs = Vec::new();
    let counts = [8usize, 16, 32];
    for &m in &counts {
        let end = evolve(&s0, t_end / m as f64, m, m).unwrap().pop().unwrap();
        errs.push(end.relative_distance(&reference).unwrap());
    }
    let slope = ((errs[0] / errs[2]).ln()) / ((counts[2] as f64 / counts[0] as f64).ln());
    println!("errors {errs:?} slope {slope}");
    assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn scaling_replay_matches() {
    let s0 = data(3, 16, 5e-2, 9);
    let dt = 0.5 * dt_max(s0.grid());
    let a = evolve(&s0, dt, 6, 6).unwrap().pop().unwrap();
    let big = s0.rescaled(2.0).unwrap();
    let b = evolve(&big, 2.0 * dt, 6, 6).unwrap().pop().unwrap();
    let back = b.rescaled(0.5).unwrap();
    let d = a.relative_distance(&back).unwrap();
    println!("scaling replay distance {d:.3e}");
    assert!(d <= 1e-10);
}

#[test]
fn step_is_deterministic() {
    let s0 = data(2, 16, 1e-2, 1);
    let a = step(&s0, 0.1).unwrap();
    let b = step(&s0, 0.1).unwrap();
    assert_eq!(a.phi.values(), b.phi.values());
}
