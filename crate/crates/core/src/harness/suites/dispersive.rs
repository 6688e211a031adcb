//! Decay of `U(t) U(s)^*` applied to a point mass.

use std::sync::Arc;

use super::{connection_for, Setup};
use crate::error::Result;
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::microlocal::Sign;
use crate::parametrix::checks::{delta_source, dispersive_scan};
use crate::parametrix::operator::{DirectionCache, PhaseFamily};
use crate::parametrix::{AnnulusCutoff, FreeConnection, PhaseSpec};
use crate::stats::geomspace;

pub const SLOPE_TOL: f64 = 0.15;

fn scan(s: &Setup, conn: FreeConnection, pairs: &[(f64, f64)], rows: &mut Vec<Row>, label: &str) -> Result<f64> {
    let cutoff = AnnulusCutoff::for_grid(&s.grid);
    let conn = Arc::new(conn);
    let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, s.cfg.sigma)?;
    let cache = Arc::new(DirectionCache::build(s.grid, cutoff, s.cfg.direction_cache, spec.smallest_angle())?);
    let fam = PhaseFamily::build(cache, conn, spec)?;
    let r = dispersive_scan(&fam, &delta_source(s.grid), pairs, s.cfg.delta)?;
    for d in &r.samples {
        rows.push(Row::new(format!("{label};tau={:.6}", d.t - d.s), d.ratio, 1.0));
        if d.split_defect > 0.0 {
            rows.push(Row::new(format!("{label}_split;tau={:.6}", d.t - d.s), d.split_defect, 1e-12));
        }
    }
    rows.push(Row::new(format!("{label}_slope"), r.slope, 1.0));
    Ok(r.slope)
}

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let n = s.grid.dim();
    let target = -(n as f64 - 1.0) / 2.0;
    let taus = geomspace(1.0, s.grid.length() / 4.0, s.cfg.samples.max(4));
    let pairs: Vec<(f64, f64)> = taus.iter().map(|&t| (t, 0.0)).collect();
    let mut rows = Vec::new();
    let free = scan(s, FreeConnection::zero(s.grid), &pairs, &mut rows, "free")?;
    let mut checks = vec![SubCheck::near(format!("free slope n={n}"), free, target, SLOPE_TOL)];
    if n == 2 {
        let cutoff = AnnulusCutoff::for_grid(&s.grid);
        for (i, &eps) in s.cfg.eps.iter().enumerate() {
            let conn = connection_for(s, &cutoff, eps, i as u64)?;
            let pert = scan(s, conn, &pairs, &mut rows, &format!("eps={eps}"))?;
            checks.push(SubCheck::at_most(format!("perturbed slope shift eps={eps}"), (pert - free).abs(), SLOPE_TOL));
        }
    }
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC5", checks)] })
}
