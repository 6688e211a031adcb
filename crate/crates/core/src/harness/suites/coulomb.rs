//! Angular gain of divergence-free fields inside narrow sectors.

use rayon::prelude::*;

use super::Setup;
use crate::error::Result;
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::microlocal::{coulomb_gain_ratio, Direction, GainProjection};
use crate::sample::random_solenoidal;

pub const FIELDS: usize = 50;
pub const DIRECTIONS: usize = 20;
pub const BOUND: f64 = 4.0;

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let grid = s.grid;
    let thetas: Vec<f64> = (2..=6).map(|j| (-(j as f64)).exp2()).collect();
    let mut drng = s.rng(1);
    let dirs: Vec<Direction> = (0..DIRECTIONS).map(|_| Direction::random(grid.dim(), &mut drng)).collect();
    let projs = [GainProjection::Leq, GainProjection::Band];
    // worst[theta][proj] per field, reduced by max (order independent)
    let per_field = (0..FIELDS)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let b = random_solenoidal(grid, 0.0, grid.nyquist() * 0.9, &mut s.rng(100 + i as u64))?;
            let mut out = vec![0.0f64; thetas.len() * projs.len()];
            for (ti, &theta) in thetas.iter().enumerate() {
                for (pi, &proj) in projs.iter().enumerate() {
                    for d in &dirs {
                        let r = coulomb_gain_ratio(&b, d, theta, proj)?;
                        out[ti * projs.len() + pi] = out[ti * projs.len() + pi].max(r);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (ti, theta) in thetas.iter().enumerate() {
        for (pi, proj) in projs.iter().enumerate() {
            let m = per_field.iter().map(|v| v[ti * projs.len() + pi]).fold(0.0, f64::max);
            worst = worst.max(m);
            rows.push(Row::new(format!("theta={theta};proj={proj:?}"), m, BOUND));
        }
    }
    let checks = vec![SubCheck::at_most("max per-mode gain ratio", worst, BOUND)];
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC2", checks)] })
}
