//! Exponent bookkeeping and the critical norms along a short trajectory.

use std::time::Instant;

use num_rational::Rational64;

use super::Setup;
use crate::error::Result;
use crate::exponents::{sigma_window, Exponents};
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::mkg::{critical_norm_tracker, dt_max, evolve, random_small_data};
use num_traits::{Signed, ToPrimitive};

fn mismatch(a: Rational64, b: Rational64) -> f64 {
    (a - b).abs().to_f64().unwrap_or(f64::INFINITY)
}

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let start = Instant::now();
    let r = Rational64::new;
    let e6 = Exponents::new(6, r(0, 1))?;
    let (lo, hi) = sigma_window(6)?;
    let checks = vec![
        SubCheck::at_most("p_star n=6", mismatch(e6.p_star, r(10, 3)), 0.0),
        SubCheck::at_most("p_2star n=6", mismatch(e6.p_2star, r(3, 1)), 0.0),
        SubCheck::at_most("p_3star n=6", mismatch(e6.p_3star, r(12, 5)), 0.0),
        SubCheck::at_most("sigma window low n=6", mismatch(lo, r(7, 15)), 0.0),
        SubCheck::at_most("sigma window high n=6", mismatch(hi, r(1, 2)), 0.0),
    ];
    let mut record = AcceptanceRecord::from_checks("AC8", checks);
    // The trajectory rows below are data only and stay out of the timed gate.
    record.runtime_s = Some(start.elapsed().as_secs_f64());
    let mut rows = super::check_rows(&record.details);

    let grid = s.grid;
    let e = Exponents::from_f64(grid.dim(), s.cfg.delta)?.values();
    rows.push(Row::new("p_star", e.p_star, 1.0));
    rows.push(Row::new("p_2star", e.p_2star, 1.0));
    rows.push(Row::new("p_3star", e.p_3star, 1.0));
    for (i, &eps) in s.cfg.eps.iter().enumerate() {
        let s0 = random_small_data(grid, eps, 2.0, &mut s.rng(10 + i as u64))?;
        let dt = 0.5 * dt_max(&grid);
        let traj = evolve(&s0, dt, 2, 1)?;
        let rep = critical_norm_tracker(&traj, s.cfg.delta)?;
        let last = rep.samples.last().expect("nonempty");
        rows.push(Row::new(format!("data_norm;eps={eps}"), rep.samples[0].data, eps));
        rows.push(Row::new(format!("solution_norm;eps={eps}"), last.solution, eps));
        rows.push(Row::new(format!("elliptic_norm;eps={eps}"), last.elliptic, eps));
        rows.push(Row::new(format!("n1;eps={eps}"), last.n1, eps));
        rows.push(Row::new(format!("n2;eps={eps}"), last.n2, eps));
    }
    Ok(SuiteOutput { rows, records: vec![record] })
}
