//! Measurements built on the distorted plane waves: data matching, the residual of the
//! parametrix, operator norms, and dispersive decay.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use nalgebra::{DMatrix, SymmetricEigen};

use super::operator::{spectral_inner, spectral_norm, PhaseFamily};
use super::phase::{critical_angle, split_defect};
use crate::error::{param, precondition, Error, Result};
use crate::grid::{GridSpec, Rep, ScalarField, VectorField};
use crate::microlocal::Sign;
use crate::rng::Philox;
use crate::stats::loglog_slope;
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;
pub const LANCZOS_MAX_ITER: usize = 80;
pub const LANCZOS_TOL: f64 = 1e-6;
pub const LANCZOS_STALL: f64 = 1e-5;
const STALL_WINDOW: usize = 5;

fn same_connection(plus: &PhaseFamily, minus: &PhaseFamily) -> Result<()> {
    if plus.spec().sign != Sign::Plus || minus.spec().sign != Sign::Minus {
        return precondition("families must carry the + and - signs in that order");
    }
    if !Arc::ptr_eq(plus.connection(), minus.connection()) || !Arc::ptr_eq(plus.cache(), minus.cache()) {
        return precondition("families must share one connection and one direction cache");
    }
    Ok(())
}

fn relative(d: f64, s: f64) -> f64 {
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

#[derive(Clone, Debug)]
pub struct MatchReport {
    pub h_plus: ScalarField,
    pub h_minus: ScalarField,
    /// `||U+(0) h+ + U-(0) h- - f|| / ||f||`.
    pub err_f: f64,
    /// `||dU+(0) h+ + dU-(0) h- - g|| / ||g||`.
    pub err_g: f64,
}

/// `h+- = (U+-(0)^* f +- U+-(0)^* g / (2 pi i |xi|)) / 2`.
pub fn match_data(f: &ScalarField, g: &ScalarField, plus: &PhaseFamily, minus: &PhaseFamily) -> Result<MatchReport> {
    same_connection(plus, minus)?;
    let cache = plus.cache();
    for (name, v) in [("f", f), ("g", g)] {
        let c = v.in_frequency();
        let top = c.values().iter().map(|x| x.norm()).fold(0.0, f64::max);
        for (idx, x) in c.values().iter().enumerate() {
            if cache.position(idx).is_none() && x.norm() > 1e-13 * top {
                return precondition(format!("{name} has energy off the annulus"));
            }
        }
    }
    let half = |fam: &PhaseFamily| -> Result<ScalarField> {
        let s = fam.spec().sign.value();
        let uf = fam.adjoint(0.0, f)?;
        let ug = fam.adjoint(0.0, g)?;
        let mut out = vec![C64::default(); cache.grid().len()];
        for m in cache.modes() {
            let i = m.index;
            out[i] = 0.5 * (uf.values()[i] + s * ug.values()[i] / C64::new(0.0, TWO_PI * m.norm));
        }
        ScalarField::new(*cache.grid(), out, Rep::Frequency)
    };
    let h_plus = half(plus)?;
    let h_minus = half(minus)?;
    let u0 = plus.apply(0.0, &h_plus)?.add(&minus.apply(0.0, &h_minus)?)?;
    let u1 = plus.apply_dot(0.0, &h_plus)?.add(&minus.apply_dot(0.0, &h_minus)?)?;
    let err_f = relative(u0.sub(f)?.l2_norm(), f.l2_norm());
    let err_g = relative(u1.sub(g)?.l2_norm(), g.l2_norm());
    Ok(MatchReport { h_plus, h_minus, err_f, err_g })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualSample {
    pub t: f64,
    /// `||box'_A u||_2` by differences in time and spectral derivatives in space.
    pub direct: f64,
    /// The same through the amplitude formula.
    pub formula: f64,
    /// `||direct - formula|| / ||Delta u||`.
    pub difference: f64,
    /// Homogeneous `H^{n/2-2}` norm of the formula residual, zero mode excluded.
    pub sobolev: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub dt: f64,
    pub samples: Vec<ResidualSample>,
    pub max_difference: f64,
    /// Trapezoidal time integral of `sobolev` over the window.
    pub n2: f64,
}

fn superpose(plus: &PhaseFamily, minus: &PhaseFamily, h_plus: &ScalarField, h_minus: &ScalarField, t: f64) -> Result<ScalarField> {
    plus.apply(t, h_plus)?.add(&minus.apply(t, h_minus)?)
}

/// `-u_tt + Delta u + 2i A.grad u` with a centered second difference in time.
fn direct_residual(plus: &PhaseFamily, minus: &PhaseFamily, h: (&ScalarField, &ScalarField), a: &VectorField, t: f64, dt: f64) -> Result<(ScalarField, f64)> {
    let um = superpose(plus, minus, h.0, h.1, t - dt)?;
    let u0 = superpose(plus, minus, h.0, h.1, t)?;
    let up = superpose(plus, minus, h.0, h.1, t + dt)?;
    let utt = up.sub(&u0.scale(C64::new(2.0, 0.0)))?.add(&um)?.scale(C64::new(1.0 / (dt * dt), 0.0));
    let lap = u0.laplacian()?.in_physical();
    let mut res = lap.sub(&utt)?;
    for (j, g) in u0.gradient()?.components().iter().enumerate() {
        res = res.add(&a.component(j).mul(g)?.scale(C64::new(0.0, 2.0)))?;
    }
    Ok((res, lap.l2_norm()))
}

/// Both evaluations of `box'_A (U+ h+ + U- h-)` over `samples` times in `window`.
pub fn residual_check(
    plus: &PhaseFamily,
    minus: &PhaseFamily,
    h_plus: &ScalarField,
    h_minus: &ScalarField,
    window: (f64, f64),
    samples: usize,
    dt: f64,
) -> Result<ResidualReport> {
    same_connection(plus, minus)?;
    let grid = *plus.cache().grid();
    let wrap = grid.length() / 2.0;
    let (t0, t1) = window;
    if !(t1 >= t0) || samples < 2 || !(dt > 0.0) {
        return param("residual window needs t1 >= t0, two samples and dt > 0");
    }
    if t0 - dt <= -wrap || t1 + dt >= wrap {
        return param(format!("window [{t0}, {t1}] with dt {dt} reaches the wrap limit {wrap}"));
    }
    let s = grid.dim() as f64 / 2.0 - 2.0;
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
        let (a, _) = plus.connection().fields(t)?;
        let (direct, scale) = direct_residual(plus, minus, (h_plus, h_minus), &a, t, dt)?;
        let formula = plus.apply_box_formula(t, h_plus)?.add(&minus.apply_box_formula(t, h_minus)?)?;
        let diff = direct.sub(&formula)?.l2_norm();
        out.push(ResidualSample {
            t,
            direct: direct.l2_norm(),
            formula: formula.l2_norm(),
            difference: relative(diff, scale),
            sobolev: formula.sobolev_norm(s, true, true)?,
        });
    }
    let times: Vec<f64> = out.iter().map(|r| r.t).collect();
    let vals: Vec<f64> = out.iter().map(|r| r.sobolev).collect();
    let n2 = if t1 > t0 { crate::spacetime::time_norm(&times, &vals, 1.0)? } else { 0.0 };
    let max_difference = out.iter().map(|r| r.difference).fold(0.0, f64::max);
    Ok(ResidualReport { dt, samples: out, max_difference, n2 })
}

/// Random start vector on the plateau `a = 1` of the shell.
pub fn plateau_vector(family: &PhaseFamily, seed: u64) -> Result<ScalarField> {
    let cache = family.cache();
    let mut rng = Philox::new(seed, 11);
    let mut c = vec![C64::default(); cache.grid().len()];
    for m in cache.modes() {
        if cache.cutoff().on_plateau(m.norm) {
            c[m.index] = C64::new(rng.normal(), rng.normal());
        }
    }
    ScalarField::new(*cache.grid(), c, Rep::Frequency)
}

/// `sup ||T h|| / ||h||_xi` by power iteration on `T^* T`.
/// Largest singular value of `forward`, from Lanczos on `back . forward` with full
/// reorthogonalization. Stops once the Ritz residual of the top pair is below
/// `LANCZOS_TOL` relative to the Ritz value, or once the top Ritz value (which only grows)
/// has moved less than `LANCZOS_STALL` over the last `STALL_WINDOW` steps. The second rule
/// matters near-unitary operators, whose top singular values form a dense cluster.
fn lanczos_norm<X>(
    start: ScalarField,
    forward: impl Fn(&ScalarField) -> Result<X>,
    back: impl Fn(&X) -> Result<ScalarField>,
    what: &str,
) -> Result<f64> {
    let h0 = spectral_norm(&start);
    if h0 == 0.0 {
        return Ok(0.0);
    }
    let mut basis = vec![start.in_frequency().scale(C64::new(1.0 / h0, 0.0))];
    let (mut alphas, mut betas) = (Vec::new(), Vec::<f64>::new());
    let mut history = Vec::new();
    for k in 0..LANCZOS_MAX_ITER {
        let q = &basis[k];
        let mut w = back(&forward(q)?)?.in_frequency();
        alphas.push(spectral_inner(&w, q)?.re);
        // Two Gram-Schmidt passes keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for v in &basis {
                let c = spectral_inner(&w, v)?;
                w = w.sub(&v.scale(c))?;
            }
        }
        let beta = spectral_norm(&w);
        let t = DMatrix::from_fn(k + 1, k + 1, |i, j| match i.abs_diff(j) {
            0 => alphas[i],
            1 => betas[i.min(j)],
            _ => 0.0,
        });
        let eig = SymmetricEigen::new(t);
        let top = eig.eigenvalues.imax();
        let mu = eig.eigenvalues[top].max(0.0);
        history.push(mu.sqrt());
        let residual = beta * eig.eigenvectors[(k, top)].abs();
        let stalled = k >= STALL_WINDOW && {
            let old = history[k - STALL_WINDOW];
            history[k] - old <= LANCZOS_STALL * history[k]
        };
        if mu == 0.0 || residual <= LANCZOS_TOL * mu || beta <= 1e-14 * mu || stalled {
            return Ok(mu.sqrt());
        }
        betas.push(beta);
        basis.push(w.scale(C64::new(1.0 / beta, 0.0)));
    }
    Err(Error::Convergence { detail: format!("Lanczos iteration for {what}"), history })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitaritySample {
    pub t: f64,
    pub norm: f64,
    pub gradient_defect: f64,
    pub time_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitarityReport {
    pub samples: Vec<UnitaritySample>,
    pub max_norm: f64,
    pub max_gradient_defect: f64,
    pub max_time_defect: f64,
}

/// Operator norms of `U(t)` and of the two derivative-commutation defects.
pub fn unitarity_scan(family: &PhaseFamily, times: &[f64], seed: u64) -> Result<UnitarityReport> {
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let start = plateau_vector(family, seed)?;
        let norm = lanczos_norm(start.clone(), |h| family.apply(t, h), |f| family.adjoint(t, f), "U")?;
        let gradient_defect = lanczos_norm(
            start.clone(),
            |h| family.gradient_defect(t, h),
            |f| family.gradient_defect_adjoint(t, f),
            "gradient defect",
        )?;
        let time_defect = lanczos_norm(start, |h| family.time_defect(t, h), |f| family.time_defect_adjoint(t, f), "time defect")?;
        samples.push(UnitaritySample { t, norm, gradient_defect, time_defect });
    }
    let max = |f: fn(&UnitaritySample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(UnitarityReport {
        max_norm: max(|s| s.norm),
        max_gradient_defect: max(|s| s.gradient_defect),
        max_time_defect: max(|s| s.time_defect),
        samples,
    })
}

/// Point mass at the origin with `||f||_1 = 1`.
pub fn delta_source(grid: GridSpec) -> ScalarField {
    let mut v = vec![C64::default(); grid.len()];
    v[0] = C64::new(1.0 / grid.cell_volume(), 0.0);
    ScalarField::new(grid, v, Rep::Physical).expect("grid-sized")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecaySample {
    pub t: f64,
    pub s: f64,
    /// `||U(t) U(s)^* f||_inf / ||f||_1`.
    pub ratio: f64,
    /// Exactness of the phase split at `theta_* = |t - s|^(-1 + 2 delta)` for one direction.
    pub split_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub samples: Vec<DecaySample>,
    pub slope: f64,
}

pub fn dispersive_scan(family: &PhaseFamily, f: &ScalarField, pairs: &[(f64, f64)], delta: f64) -> Result<DecayReport> {
    let grid = *family.cache().grid();
    let l1 = f.lebesgue_norm(1.0)?;
    if l1 == 0.0 {
        return param("dispersive scan needs a nonzero source");
    }
    let mut samples = Vec::with_capacity(pairs.len());
    for &(t, s) in pairs {
        let tau = (t - s).abs();
        if tau >= grid.length() / 2.0 || tau == 0.0 {
            return param(format!("|t - s| = {tau} outside (0, L/2)"));
        }
        let u = family.apply(t, &family.adjoint(s, f)?)?;
        let split = match family.phases().first() {
            Some(p) if !family.is_free() => {
                split_defect(family.connection(), &p.omega, family.spec(), critical_angle(tau, delta), t)?
            }
            _ => 0.0,
        };
        samples.push(DecaySample { t, s, ratio: u.max_abs() / l1, split_defect: split });
    }
    let taus: Vec<f64> = samples.iter().map(|d| (d.t - d.s).abs()).collect();
    let vals: Vec<f64> = samples.iter().map(|d| d.ratio).collect();
    Ok(DecayReport { slope: loglog_slope(&taus, &vals)?, samples })
}
