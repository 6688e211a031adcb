//! Parametrix accuracy: route agreement, smallness in the data size, and operator norms.

use std::sync::Arc;

use super::{connection_for, Setup};
use crate::error::Result;
use crate::grid::ScalarField;
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::microlocal::Sign;
use crate::parametrix::checks::{match_data, residual_check, unitarity_scan};
use crate::parametrix::operator::{DirectionCache, PhaseFamily};
use crate::parametrix::{AnnulusCutoff, PhaseSpec};
use crate::sample::random_shell;
use crate::stats::loglog_slope;

pub const ROUTE_DTS: [f64; 3] = [0.04, 0.02, 0.01];
/// Step for the direct route inside the epsilon scan.
pub const SCAN_DT: f64 = 0.01;

pub struct Families {
    pub plus: PhaseFamily,
    pub minus: PhaseFamily,
}

pub fn families(s: &Setup, eps: f64) -> Result<Families> {
    let cutoff = AnnulusCutoff::for_grid(&s.grid);
    let conn = Arc::new(connection_for(s, &cutoff, eps, 0)?);
    let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, s.cfg.sigma)?;
    let cache = Arc::new(DirectionCache::build(s.grid, cutoff, s.cfg.direction_cache, spec.smallest_angle())?);
    Ok(Families {
        plus: PhaseFamily::build(cache.clone(), conn.clone(), spec)?,
        minus: PhaseFamily::build(cache, conn, spec.with_sign(Sign::Minus))?,
    })
}

/// Real data on the plateau of the annulus.
pub fn plateau_data(s: &Setup) -> (ScalarField, ScalarField) {
    let rho = AnnulusCutoff::for_grid(&s.grid).rho;
    let mut rng = s.rng(500);
    let f = random_shell(s.grid, rho, 2.0 * rho, true, &mut rng);
    let g = random_shell(s.grid, rho, 2.0 * rho, true, &mut rng);
    (f, g)
}

/// The entry of `eps` closest to `1e-2` on a log scale.
fn central_eps(eps: &[f64]) -> f64 {
    let key = |e: &f64| (e.ln() - 1e-2f64.ln()).abs();
    eps.iter().cloned().min_by(|a, b| key(a).total_cmp(&key(b))).expect("validated nonempty")
}

fn unitarity_checks(s: &Setup, rows: &mut Vec<Row>, with_defects: bool) -> Result<Vec<SubCheck>> {
    let times = s.times();
    let mut checks = Vec::new();
    let mut worst_excess = f64::NEG_INFINITY;
    let (mut worst_grad, mut worst_time) = (0.0f64, 0.0f64);
    for &eps in &s.cfg.eps {
        let fam = families(s, eps)?;
        for (label, f) in [("plus", &fam.plus), ("minus", &fam.minus)] {
            let r = unitarity_scan(f, &times, s.cfg.seed)?;
            rows.push(Row::new(format!("operator_norm;sign={label};eps={eps}"), r.max_norm, 1.0 + 10.0 * eps));
            rows.push(Row::new(format!("gradient_defect;sign={label};eps={eps}"), r.max_gradient_defect, 10.0 * eps));
            rows.push(Row::new(format!("time_defect;sign={label};eps={eps}"), r.max_time_defect, 10.0 * eps));
            worst_excess = worst_excess.max(r.max_norm - 1.0 - 10.0 * eps);
            worst_grad = worst_grad.max(r.max_gradient_defect / eps);
            worst_time = worst_time.max(r.max_time_defect / eps);
        }
    }
    checks.push(SubCheck::at_most("operator norm minus (1 + 10 eps)", worst_excess, 0.0));
    if with_defects {
        checks.push(SubCheck::at_most("gradient defect / eps", worst_grad, 10.0));
        checks.push(SubCheck::at_most("time defect / eps", worst_time, 10.0));
    }
    Ok(checks)
}

pub fn run_residual(s: &Setup) -> Result<SuiteOutput> {
    let (f, g) = plateau_data(s);
    let mut rows = Vec::new();
    let [t0, t1] = s.cfg.time_window;

    let fam = families(s, central_eps(&s.cfg.eps))?;
    let m = match_data(&f, &g, &fam.plus, &fam.minus)?;
    let mut diffs = Vec::new();
    for &dt in &ROUTE_DTS {
        let r = residual_check(&fam.plus, &fam.minus, &m.h_plus, &m.h_minus, (t0, t1), 2, dt)?;
        rows.push(Row::new(format!("route_difference;dt={dt}"), r.max_difference, dt * dt));
        diffs.push(r.max_difference);
    }
    let route_order = loglog_slope(&ROUTE_DTS, &diffs)?;

    let mut match_err = Vec::new();
    let mut n2 = Vec::new();
    for &eps in &s.cfg.eps {
        let fam = families(s, eps)?;
        let m = match_data(&f, &g, &fam.plus, &fam.minus)?;
        let r = residual_check(&fam.plus, &fam.minus, &m.h_plus, &m.h_minus, (t0, t1), s.cfg.samples, SCAN_DT)?;
        rows.push(Row::new(format!("matching_error;eps={eps}"), m.err_f.max(m.err_g), eps.sqrt()));
        rows.push(Row::new(format!("residual_n2;eps={eps}"), r.n2, eps));
        match_err.push(m.err_f.max(m.err_g));
        n2.push(r.n2);
    }
    let mut checks = vec![SubCheck::near("route agreement order", route_order, 2.0, 0.2)];
    if s.cfg.eps.len() >= 2 {
        checks.push(SubCheck::at_least("residual N2 slope in eps", loglog_slope(&s.cfg.eps, &n2)?, 0.5));
        checks.push(SubCheck::at_least("matching error slope in eps", loglog_slope(&s.cfg.eps, &match_err)?, 0.5));
    }
    checks.extend(unitarity_checks(s, &mut rows, false)?);
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC6", checks)] })
}

pub fn run_unitarity(s: &Setup) -> Result<SuiteOutput> {
    let mut rows = Vec::new();
    let checks = unitarity_checks(s, &mut rows, true)?;
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC6", checks)] })
}
