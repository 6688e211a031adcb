//! Exact identities: every residual should sit at rounding level.

use std::sync::Arc;

use super::{check_rows, connection_for, Setup};
use crate::error::Result;
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::lp::{project_band, project_leq, BandRange};
use crate::microlocal::{box_null_residual, leray_project, null_form_check, Direction, FreeWave, Sign};
use crate::parametrix::checks::plateau_vector;
use crate::parametrix::operator::{spectral_inner, DirectionCache, PhaseFamily};
use crate::parametrix::phase::{build_phase, critical_angle, phase_defect, split_defect, Want};
use crate::parametrix::{AnnulusCutoff, PhaseSpec};
use crate::sample::{random_shell, random_solenoidal};
use crate::VectorField;

pub const TOL: f64 = 1e-10;

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let grid = s.grid;
    let n = grid.dim();
    let mut rng = s.rng(0);
    let mut checks = Vec::new();
    // band limit keeping quadratic products alias-free
    let r_quad = (grid.size() as f64 / 4.0 - 1.0) / grid.length();
    let r_all = grid.nyquist() * 0.9;

    let v = VectorField::new((0..n).map(|_| random_shell(grid, 0.0, r_all, false, &mut rng)).collect())?;
    let p = leray_project(&v)?;
    let pp = leray_project(&p)?;
    checks.push(SubCheck::at_most("leray idempotence", pp.relative_distance(&p)?, TOL));
    let grad: f64 = p.components().iter().map(|c| c.gradient().map(|g| g.l2_norm())).sum::<Result<f64>>()?;
    checks.push(SubCheck::at_most("leray divergence", p.divergence()?.l2_norm() / grad, TOL));

    let bands = BandRange::for_grid(&grid)?;
    let top = (bands.k_max as f64).exp2();
    let f = random_shell(grid, 0.0, top, false, &mut rng);
    let mut acc = project_leq(&f, bands.k_min)?;
    for k in bands.k_min + 1..=bands.k_max {
        acc = acc.add(&project_band(&f, k)?)?;
    }
    checks.push(SubCheck::at_most("lp partition of unity", acc.relative_distance(&f)?, TOL));

    let wave = FreeWave::random(grid, r_all * grid.length(), &mut rng);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let omega = Direction::random(n, &mut rng);
        let t = rng.uniform_in(0.0, 1.0);
        let (a, b) = box_null_residual(&wave, &omega, t)?;
        worst = worst.max(a).max(b);
    }
    checks.push(SubCheck::at_most("null frame decomposition", worst, TOL));

    let phi = random_shell(grid, 0.0, r_quad, false, &mut rng);
    let a = random_solenoidal(grid, 0.0, r_quad, &mut rng)?;
    let null_form = null_form_check(&phi, &a)?;
    checks.push(SubCheck::at_most("null form decomposition", null_form.residual_modulus, TOL));

    let cutoff = AnnulusCutoff::for_grid(&grid);
    let conn = Arc::new(connection_for(s, &cutoff, s.cfg.eps[0], 1)?);
    let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, s.cfg.sigma)?;
    let [t0, t1] = s.cfg.time_window;
    let times: Vec<f64> = (0..5).map(|i| t0 + (t1 - t0) * i as f64 / 4.0).collect();
    let (mut defect, mut imag, mut boxed, mut split) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for sign in [Sign::Plus, Sign::Minus] {
        let omega = Direction::random(n, &mut rng);
        let phase = build_phase(&conn, &omega, &spec.with_sign(sign))?;
        for &t in &times {
            defect = defect.max(phase_defect(&conn, &phase, t, None)?.defect);
            let sl = phase.slice_at(&conn, t, Want::ALL)?;
            imag = imag.max(sl.psi.imaginary_ratio());
            let lap = sl.psi.laplacian()?.l2_norm();
            if lap > 0.0 {
                boxed = boxed.max(sl.box_psi.as_ref().expect("requested").l2_norm() / lap);
            }
            for tau in [1.0, 2.0, 4.0] {
                let theta = critical_angle(tau, s.cfg.delta);
                split = split.max(split_defect(&conn, &omega, &spec.with_sign(sign), theta, t)?);
            }
        }
    }
    checks.push(SubCheck::at_most("phase defect identity", defect, TOL));
    checks.push(SubCheck::at_most("phase realness", imag, 1e-11));
    checks.push(SubCheck::at_most("free phase box", boxed, TOL));
    checks.push(SubCheck::at_most("phase split exactness", split, 1e-12));

    let cache = Arc::new(DirectionCache::build(grid, cutoff, s.cfg.direction_cache, spec.smallest_angle())?);
    let family = PhaseFamily::build(cache, conn, spec)?;
    let h = plateau_vector(&family, s.cfg.seed)?;
    let g = random_shell(grid, 0.0, r_all, false, &mut rng);
    let t = times[2];
    let uh = family.apply(t, &h)?;
    let lhs = uh.inner(&g)?;
    let rhs = spectral_inner(&h, &family.adjoint(t, &g)?)?;
    checks.push(SubCheck::at_most("U adjoint identity", (lhs - rhs).norm() / (uh.l2_norm() * g.l2_norm()), 1e-12));

    let mut rows = check_rows(&checks);
    // Recorded, not gated: the same identity with phi^2 in place of |phi|^2.
    rows.push(Row::new("null_form_literal_reading", null_form.residual_literal, TOL));
    Ok(SuiteOutput { rows, records: vec![AcceptanceRecord::from_checks("AC1", checks)] })
}
