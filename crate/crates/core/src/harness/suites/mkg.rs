//! Coulomb-gauge evolution: conservation, constraints, convergence order and scaling.

use super::Setup;
use crate::error::Result;
use crate::grid::GridSpec;
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::mkg::{constraint_residuals, dt_max, evolve, random_small_data, CheckpointWriter};
use crate::stats::loglog_slope;

pub const DRIFT_TOL: f64 = 1e-5;
pub const GAUSS_TOL: f64 = 1e-6;
pub const DIV_TOL: f64 = 1e-9;
/// Data live on `|m| <= MODES` lattice points.
pub const MODES: f64 = 3.0;

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let grid = s.grid;
    let eps = s.cfg.eps[0];
    let s0 = random_small_data(grid, eps, MODES, &mut s.rng(0))?;
    let dt = 0.5 * dt_max(&grid);
    let steps = ((grid.length() / 4.0) / dt).ceil() as usize;
    let every = (steps / 8).max(1);
    let traj = evolve(&s0, dt, steps, every)?;
    let e0 = constraint_residuals(&s0)?.total;
    let mut rows = Vec::new();
    let (mut drift, mut gauss, mut div) = (0.0f64, 0.0f64, 0.0f64);
    let mut writer = match &s.artifacts {
        Some(dir) => Some(CheckpointWriter::new(&dir.join("checkpoints"))?),
        None => None,
    };
    for st in &traj {
        let r = constraint_residuals(st)?;
        let d = (r.total - e0).abs() / e0;
        drift = drift.max(d);
        gauss = gauss.max(r.gauss_residual);
        div = div.max(r.div_residual);
        rows.push(Row::new(format!("energy_drift;t={:.6}", st.t), d, DRIFT_TOL));
        rows.push(Row::new(format!("gauss;t={:.6}", st.t), r.gauss_residual, GAUSS_TOL));
        if let Some(w) = writer.as_mut() {
            w.write(st, &r)?;
        }
    }
    if let Some(w) = writer {
        w.finish()?;
    }

    // refinement against a fine reference on a small grid
    let small = GridSpec::new(grid.dim(), 16, grid.length())?;
    let r0 = random_small_data(small, 0.1, MODES, &mut s.rng(1))?;
    let t_end = 0.8 * grid.length() / (2.0 * std::f64::consts::PI);
    let reference = evolve(&r0, t_end / 256.0, 256, 256)?.pop().expect("nonempty");
    let counts = [8usize, 16, 32];
    let mut errs = Vec::new();
    for &m in &counts {
        let end = evolve(&r0, t_end / m as f64, m, m)?.pop().expect("nonempty");
        let e = end.relative_distance(&reference)?;
        rows.push(Row::new(format!("refinement;steps={m}"), e, (t_end / m as f64).powi(2)));
        errs.push(e);
    }
    let hs: Vec<f64> = counts.iter().map(|&m| t_end / m as f64).collect();
    let order = loglog_slope(&hs, &errs)?;

    let replay_dt = 0.5 * dt_max(&small);
    let a = evolve(&r0, replay_dt, 6, 6)?.pop().expect("nonempty");
    let b = evolve(&r0.rescaled(2.0)?, 2.0 * replay_dt, 6, 6)?.pop().expect("nonempty");
    let replay = a.relative_distance(&b.rescaled(0.5)?)?;
    rows.push(Row::new("scaling_replay", replay, 1e-10));

    let checks = vec![
        SubCheck::at_most("energy drift", drift, DRIFT_TOL),
        SubCheck::at_most("gauss residual", gauss, GAUSS_TOL),
        SubCheck::at_most("divergence drift", div, DIV_TOL),
        SubCheck::near("integrator order", order, 2.0, 0.2),
        SubCheck::at_most("scaling replay", replay, 1e-10),
    ];
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC7", checks)] })
}
