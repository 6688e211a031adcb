//! Coulomb-gauge Maxwell-Klein-Gordon on the periodic box.
//!
//! Unknowns: real `A_0`, real divergence-free `A = (A_j)`, complex `phi`. With the current
//! `J_j = Im(phi conj(d_j phi)) - A_j |phi|^2`:
//!
//! ```text
//! A_tt   = Delta A + P J
//! phi_tt = Delta phi + 2i A.grad phi - 2i A_0 phi_t - i (d_t A_0) phi - |A|^2 phi + A_0^2 phi
//! (Delta - |phi|^2) A_0 = -Im(phi conj(phi_t))
//! Delta d_t A_0 = -div J
//! ```
//!
//! `A_0` is slaved to `(phi, phi_t)`; the remaining Maxwell equations are monitored.
//! Inside the dynamics `P` keeps the mean of `J`, so a net current moves the mean of `A`
//! (on the torus a constant `A` is still in Coulomb gauge).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dump;
use crate::error::{param, precondition, structural, Error, Result};
use crate::exponents::{ExponentValues, Exponents};
use crate::grid::{GridSpec, Rep, ScalarField, VectorField};
use crate::lp::besov_norm_mean_excluded;
use crate::microlocal::{leray_in_place, leray_project};
use crate::rng::Philox;
use crate::sample::{normalized, random_shell, random_solenoidal, scaled_to};
use crate::spacetime::time_norm;
use crate::C64;

const FOUR_PI2: f64 = 4.0 * PI * PI;
const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, Debug)]
pub struct ConnectionState {
    pub t: f64,
    pub a0: ScalarField,
    pub a0_t: ScalarField,
    pub a: VectorField,
    pub a_t: VectorField,
    pub phi: ScalarField,
    pub phi_t: ScalarField,
}

impl ConnectionState {
    pub fn zero(grid: GridSpec) -> Self {
        let z = ScalarField::zeros(grid, Rep::Physical).flagged_real(true);
        let v = VectorField::new(vec![z.clone(); grid.dim()]).expect("n components");
        let v = v.certify_divergence_free().expect("zero is solenoidal");
        Self { t: 0.0, a0: z.clone(), a0_t: z.clone(), a: v.clone(), a_t: v, phi: z.clone(), phi_t: z }
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi.grid()
    }

    /// Named fields in a fixed order (used for checkpoints).
    pub fn fields(&self) -> Vec<(String, &ScalarField)> {
        let mut out = vec![("a0".to_string(), &self.a0), ("a0_t".to_string(), &self.a0_t)];
        for (j, c) in self.a.components().iter().enumerate() {
            out.push((format!("a_{}", j + 1), c));
        }
        for (j, c) in self.a_t.components().iter().enumerate() {
            out.push((format!("a_t_{}", j + 1), c));
        }
        out.push(("phi".to_string(), &self.phi));
        out.push(("phi_t".to_string(), &self.phi_t));
        out
    }

    /// The scaling image `u -> lambda^-1 u(t/lambda, x/lambda)` on the box `lambda L`:
    /// same samples, fields divided by `lambda`, time derivatives by `lambda^2`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return param(format!("scaling factor {lambda} must be positive"));
        }
        let grid = self.grid().rescaled(lambda)?;
        let map = |f: &ScalarField, power: i32| -> Result<ScalarField> {
            let vals = f.in_physical().into_values().into_iter().map(|v| v / lambda.powi(power)).collect();
            Ok(ScalarField::new(grid, vals, Rep::Physical)?.flagged_real(f.is_flagged_real()))
        };
        let vmap = |v: &VectorField, power: i32| -> Result<VectorField> {
            let c = v.components().iter().map(|f| map(f, power)).collect::<Result<Vec<_>>>()?;
            VectorField::new(c)?.certify_divergence_free()
        };
        Ok(Self {
            t: self.t * lambda,
            a0: map(&self.a0, 1)?,
            a0_t: map(&self.a0_t, 2)?,
            a: vmap(&self.a, 1)?,
            a_t: vmap(&self.a_t, 2)?,
            phi: map(&self.phi, 1)?,
            phi_t: map(&self.phi_t, 2)?,
        })
    }

    /// Relative `L^2` distance over `(A, A_t, phi, phi_t)`.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        let pairs = self.dynamic().into_iter().zip(other.dynamic());
        for (a, b) in pairs {
            num += a.sub(b)?.l2_norm().powi(2);
            den += a.l2_norm().powi(2).max(b.l2_norm().powi(2));
        }
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    fn dynamic(&self) -> Vec<&ScalarField> {
        let mut v: Vec<&ScalarField> = self.a.components().iter().collect();
        v.extend(self.a_t.components());
        v.push(&self.phi);
        v.push(&self.phi_t);
        v
    }
}

fn dealias(f: &ScalarField) -> ScalarField {
    let size = f.grid().size() as i64;
    f.apply_mode_symbol(|m| if m.ints().iter().any(|&k| 3 * k.abs() > size) { C64::default() } else { re(1.0) })
        .expect("finite symbol")
        .in_physical()
}

fn product(a: &ScalarField, b: &ScalarField, dealiased: bool) -> Result<ScalarField> {
    let p = a.mul(b)?;
    Ok(if dealiased { dealias(&p) } else { p })
}

fn modulus_sq(phi: &ScalarField) -> ScalarField {
    phi.in_physical().map_physical(|v| re(v.norm_sqr())).flagged_real(true)
}

fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    f.apply_mode_symbol(|m| if m.is_zero() { C64::default() } else { re(-1.0 / (FOUR_PI2 * m.norm_sq())) })
        .expect("finite symbol")
        .in_physical()
}

/// Drop the Nyquist row, where no multiplier here acts.
fn smooth_part(f: &ScalarField) -> ScalarField {
    f.apply_mode_symbol(|_| re(1.0)).expect("finite symbol")
}

fn integral(f: &ScalarField) -> f64 {
    f.mean().re * f.grid().volume()
}

/// `J_j = Im(phi conj(d_j phi)) - A_j |phi|^2`.
pub fn current(a: &VectorField, phi: &ScalarField, dealiased: bool) -> Result<Vec<ScalarField>> {
    let w = modulus_sq(phi);
    let phi = phi.in_physical();
    (0..a.dim())
        .map(|j| {
            let grad = phi.partial(j)?.in_physical();
            let im = product(&phi, &grad.conj(), dealiased)?.imag_part();
            Ok(im.sub(&product(a.component(j), &w, dealiased)?)?.real_part())
        })
        .collect()
}

fn a0_dot_from_current(j: &[ScalarField]) -> Result<ScalarField> {
    let mut div = j[0].partial(0)?;
    for (k, c) in j.iter().enumerate().skip(1) {
        div = div.add(&c.partial(k)?)?;
    }
    Ok(inverse_laplacian(&div).scale(re(-1.0)).real_part())
}

/// `d_t A_0 = -Delta^-1 div J`; the zero mode is set to zero.
pub fn a0_dot(a: &VectorField, phi: &ScalarField, dealiased: bool) -> Result<ScalarField> {
    a0_dot_from_current(&current(a, phi, dealiased)?)
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub a0: ScalarField,
    /// Relative residual `||(Delta - |phi|^2) A_0 + Im(phi conj phi_t)|| / ||Im(phi conj phi_t)||`.
    pub residual: f64,
    pub iterations: usize,
}

pub const ELLIPTIC_TOL: f64 = 1e-10;
pub const ELLIPTIC_MAX_ITER: usize = 200;

/// Solve `(Delta - |phi|^2) A_0 = -Im(phi conj(phi_t))` by the fixed point
/// `A_0 <- Delta^-1 (-S + A_0 |phi|^2)` on nonzero modes, with the mean fixed by the
/// integrated equation `int |phi|^2 A_0 = int S`.
pub fn elliptic_a0(phi: &ScalarField, phi_t: &ScalarField) -> Result<EllipticSolution> {
    elliptic_a0_with(phi, phi_t, ELLIPTIC_TOL, ELLIPTIC_MAX_ITER)
}

pub fn elliptic_a0_with(phi: &ScalarField, phi_t: &ScalarField, tol: f64, max_iter: usize) -> Result<EllipticSolution> {
    phi.grid().check_same(phi_t.grid())?;
    let grid = *phi.grid();
    let zero = ScalarField::zeros(grid, Rep::Physical).flagged_real(true);
    let phi = phi.in_physical();
    let s = phi.mul(&phi_t.in_physical().conj())?.imag_part();
    let w = modulus_sq(&phi);
    let mass = integral(&w);
    let s_norm = s.l2_norm();
    if s_norm == 0.0 || mass == 0.0 {
        return Ok(EllipticSolution { a0: zero, residual: 0.0, iterations: 0 });
    }
    let s_int = integral(&s);
    let residual = |a0: &ScalarField| -> Result<f64> {
        let r = a0.laplacian()?.sub(&a0.mul(&w)?)?.add(&s)?;
        Ok(smooth_part(&r).l2_norm() / s_norm)
    };
    let mut a0 = zero;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let tilde = inverse_laplacian(&a0.mul(&w)?.sub(&s)?).real_part();
        let mean = (s_int - integral(&tilde.mul(&w)?)) / mass;
        a0 = tilde.add(&ScalarField::constant(grid, re(mean)))?.real_part();
        let r = residual(&a0)?;
        history.push(r);
        if r <= tol {
            return Ok(EllipticSolution { a0, residual: r, iterations: it });
        }
        let n = history.len();
        if !r.is_finite() || (n > 5 && history[n - 1] > history[n - 4]) {
            return Err(Error::Convergence { detail: "Gauss-law fixed point is not contracting".into(), history });
        }
    }
    Err(Error::Convergence { detail: format!("Gauss-law solve exceeded {max_iter} iterations"), history })
}

/// Shift `g` by `-i c phi` so that the total charge `int Im(phi conj g)` vanishes.
pub fn neutralize_charge(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    let w = integral(&modulus_sq(f));
    if w == 0.0 {
        return Ok(g.clone());
    }
    let q = integral(&f.mul(&g.conj())?.imag_part());
    let c = -q / w;
    g.in_physical().sub(&f.in_physical().scale(I * c))
}

fn real_vector(v: VectorField) -> Result<VectorField> {
    VectorField::new(v.into_components().into_iter().map(|c| c.real_part()).collect())
}

/// Build a state satisfying the constraints: `A`, `A_t` Leray-projected, `A_0` from the
/// Gauss law, `d_t A_0` from the divergence of the current.
pub fn make_compatible_data(f: &ScalarField, g: &ScalarField, a: &VectorField, a_dot: &VectorField) -> Result<ConnectionState> {
    let grid = *f.grid();
    for h in [g.grid(), a.grid(), a_dot.grid()] {
        grid.check_same(h)?;
    }
    for c in a.components().iter().chain(a_dot.components()) {
        if c.imaginary_ratio() > 1e-12 {
            return precondition("connection data must be real-valued");
        }
    }
    let a = real_vector(leray_project(a)?)?.certify_divergence_free()?;
    let a_t = real_vector(leray_project(a_dot)?)?.certify_divergence_free()?;
    let phi = f.in_physical();
    let phi_t = g.in_physical();
    let a0 = elliptic_a0(&phi, &phi_t)?.a0;
    let a0_t = a0_dot(&a, &phi, true)?;
    Ok(ConnectionState { t: 0.0, a0, a0_t, a, a_t, phi, phi_t })
}

/// Seeded small data: every field has RMS amplitude `eps` and frequencies
/// `1/L <= |xi| <= m_max/L`; the scalar data are charge-neutral.
pub fn random_small_data(grid: GridSpec, eps: f64, m_max: f64, rng: &mut Philox) -> Result<ConnectionState> {
    let l = grid.length();
    let (lo, hi) = (1.0 / l, m_max / l);
    let amp = eps * grid.volume().sqrt();
    let f = normalized(&random_shell(grid, lo, hi, false, rng)).scale(re(amp));
    let g = normalized(&random_shell(grid, lo, hi, false, rng)).scale(re(amp));
    let g = neutralize_charge(&f, &g)?;
    let a = scaled_to(&random_solenoidal(grid, lo, hi, rng)?, amp);
    let a_dot = scaled_to(&random_solenoidal(grid, lo, hi, rng)?, amp);
    make_compatible_data(&f, &g, &a, &a_dot)
}

/// The two forcings: `box A = -P J` and `box phi + 2i A.grad phi`
/// `= 2i A_0 phi_t + i (d_t A_0) phi + |A|^2 phi - A_0^2 phi`, with dealiased products.
#[derive(Clone, Debug)]
pub struct Forcing {
    pub box_a: VectorField,
    pub box_phi: ScalarField,
}

fn projected_current(a: &VectorField, phi: &ScalarField) -> Result<Vec<ScalarField>> {
    let j = current(a, phi, true)?;
    let grid = *phi.grid();
    let mut c: Vec<Vec<C64>> = j.iter().map(|f| f.in_frequency().into_values()).collect();
    leray_in_place(&grid, &mut c, true);
    c.into_iter().map(|v| Ok(ScalarField::from_spectrum(grid, v)?.in_physical().real_part())).collect()
}

fn a_squared(a: &VectorField) -> Result<ScalarField> {
    let mut acc = a.component(0).mul(a.component(0))?;
    for c in &a.components()[1..] {
        acc = acc.add(&c.mul(c)?)?;
    }
    Ok(dealias(&acc))
}

/// Velocity-independent part of `box phi + 2i A.grad phi`, namely `i (d_t A_0) phi + |A|^2 phi`.
fn phi_static(a: &VectorField, a0_t: &ScalarField, phi: &ScalarField) -> Result<ScalarField> {
    let t1 = product(a0_t, phi, true)?.scale(I);
    let t2 = product(&a_squared(a)?, phi, true)?;
    t1.add(&t2)
}

/// `2i A_0 phi_t - A_0^2 phi`.
fn phi_dynamic(a0: &ScalarField, phi: &ScalarField, phi_t: &ScalarField) -> Result<ScalarField> {
    let t1 = product(a0, phi_t, true)?.scale(re(2.0) * I);
    let a0sq = dealias(&a0.mul(a0)?);
    t1.sub(&product(&a0sq, phi, true)?)
}

fn covariant_transport(a: &VectorField, phi: &ScalarField) -> Result<ScalarField> {
    let mut acc = ScalarField::zeros(*phi.grid(), Rep::Physical);
    for j in 0..a.dim() {
        acc = acc.add(&product(a.component(j), &phi.partial(j)?.in_physical(), true)?)?;
    }
    Ok(acc.scale(re(2.0) * I))
}

pub fn rhs(state: &ConnectionState) -> Result<Forcing> {
    let pj = projected_current(&state.a, &state.phi)?;
    let box_a = VectorField::new(pj.into_iter().map(|c| c.scale(re(-1.0))).collect())?.certify_divergence_free()?;
    let box_phi = phi_static(&state.a, &state.a0_t, &state.phi)?.add(&phi_dynamic(&state.a0, &state.phi, &state.phi_t)?)?;
    Ok(Forcing { box_a, box_phi })
}

/// Largest admissible step.
pub fn dt_max(grid: &GridSpec) -> f64 {
    0.5 * grid.dx()
}

const KICK_TOL: f64 = 1e-14;
const KICK_MAX_ITER: usize = 50;

/// Implicit-midpoint velocity update over `h` with positions frozen.
fn kick(state: &mut ConnectionState, h: f64) -> Result<()> {
    let pj = projected_current(&state.a, &state.phi)?;
    let a_t = state
        .a_t
        .components()
        .iter()
        .zip(&pj)
        .map(|(v, j)| v.add(&j.scale(re(h))).map(|f| f.real_part()))
        .collect::<Result<Vec<_>>>()?;
    state.a_t = VectorField::new(a_t)?;

    let a0_t = a0_dot(&state.a, &state.phi, true)?;
    let fixed = covariant_transport(&state.a, &state.phi)?.sub(&phi_static(&state.a, &a0_t, &state.phi)?)?;
    let v0 = state.phi_t.in_physical();
    let mut v = v0.clone();
    let mut history = Vec::new();
    for _ in 0..KICK_MAX_ITER {
        let mid = v0.add(&v)?.scale(re(0.5));
        let a0 = elliptic_a0(&state.phi, &mid)?.a0;
        let acc = fixed.sub(&phi_dynamic(&a0, &state.phi, &mid)?)?;
        let next = v0.add(&acc.scale(re(h)))?;
        let change = next.sub(&v)?.l2_norm() / next.l2_norm().max(f64::MIN_POSITIVE);
        v = next;
        history.push(change);
        if change <= KICK_TOL {
            state.phi_t = v;
            return Ok(());
        }
    }
    if history.last().copied().unwrap_or(0.0) <= 1e-10 {
        state.phi_t = v;
        return Ok(());
    }
    Err(Error::Convergence { detail: "implicit midpoint kick did not converge".into(), history })
}

/// Exact free flow `q'' = Delta q` over `h`, mode by mode.
fn free_flow(q: &ScalarField, v: &ScalarField, h: f64) -> Result<(ScalarField, ScalarField)> {
    let grid = *q.grid();
    let mut qh = q.in_frequency().into_values();
    let mut vh = v.in_frequency().into_values();
    grid.for_each_mode(|idx, m| {
        if m.nyquist {
            qh[idx] = C64::default();
            vh[idx] = C64::default();
            return;
        }
        let w = 2.0 * PI * m.norm();
        let (a, b) = (qh[idx], vh[idx]);
        if w == 0.0 {
            qh[idx] = a + b * h;
        } else {
            let (s, c) = (w * h).sin_cos();
            qh[idx] = a * c + b * (s / w);
            vh[idx] = -a * (w * s) + b * c;
        }
    });
    Ok((
        ScalarField::from_spectrum(grid, qh)?.in_physical(),
        ScalarField::from_spectrum(grid, vh)?.in_physical(),
    ))
}

fn drift(state: &mut ConnectionState, h: f64) -> Result<()> {
    let mut a = Vec::new();
    let mut a_t = Vec::new();
    for (q, v) in state.a.components().iter().zip(state.a_t.components()) {
        let (q2, v2) = free_flow(q, v, h)?;
        a.push(q2.real_part());
        a_t.push(v2.real_part());
    }
    state.a = VectorField::new(a)?;
    state.a_t = VectorField::new(a_t)?;
    let (p, pt) = free_flow(&state.phi, &state.phi_t, h)?;
    state.phi = p;
    state.phi_t = pt;
    Ok(())
}

fn reproject(v: &VectorField) -> Result<VectorField> {
    let grid = *v.grid();
    let mut c: Vec<Vec<C64>> = v.components().iter().map(|f| f.in_frequency().into_values()).collect();
    leray_in_place(&grid, &mut c, true);
    let comps = c
        .into_iter()
        .map(|x| Ok(ScalarField::from_spectrum(grid, x)?.in_physical().real_part()))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)?.certify_divergence_free()
}

/// One Strang step: half kick, exact free drift, half kick, Leray re-projection, then
/// `A_0` and `d_t A_0` re-solved for the new state.
pub fn step(state: &ConnectionState, dt: f64) -> Result<ConnectionState> {
    let bound = dt_max(state.grid());
    if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
        return param(format!("time step {dt} outside (0, {bound}]"));
    }
    let mut s = state.clone();
    kick(&mut s, 0.5 * dt)?;
    drift(&mut s, dt)?;
    kick(&mut s, 0.5 * dt)?;
    s.a = reproject(&s.a)?;
    s.a_t = reproject(&s.a_t)?;
    s.a0 = elliptic_a0(&s.phi, &s.phi_t)?.a0;
    s.a0_t = a0_dot(&s.a, &s.phi, true)?;
    s.t = state.t + dt;
    Ok(s)
}

/// `steps` steps of size `dt`, recording the initial state and every `every`-th state.
pub fn evolve(state: &ConnectionState, dt: f64, steps: usize, every: usize) -> Result<Vec<ConnectionState>> {
    let every = every.max(1);
    let mut out = vec![state.clone()];
    let mut s = state.clone();
    for i in 1..=steps {
        s = step(&s, dt)?;
        if i % every == 0 || i == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    /// `int 1/2 (|D_0 phi|^2 + sum |D_j phi|^2)`.
    pub kinetic: f64,
    /// `int 1/2 sum F_0j^2`.
    pub electric: f64,
    /// `int 1/4 sum F_jk^2`.
    pub magnetic: f64,
    pub gauss_residual: f64,
    pub maxwell_residual: f64,
    pub div_residual: f64,
}

impl EnergyReport {
    pub fn curvature(&self) -> f64 {
        self.electric + self.magnetic
    }
}

fn sq_integral(f: &ScalarField) -> f64 {
    f.l2_norm().powi(2)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Energy decomposition plus relative residuals of the Gauss law, the spatial Maxwell
/// equations (with `A_tt` taken from the evolution equation) and `div A`, `div A_t`.
pub fn constraint_residuals(state: &ConnectionState) -> Result<EnergyReport> {
    let n = state.grid().dim();
    let phi = state.phi.in_physical();
    let d0 = state.phi_t.add(&state.a0.mul(&phi)?.scale(I))?;
    let mut kinetic = sq_integral(&d0);
    let mut grad_a0 = Vec::with_capacity(n);
    for j in 0..n {
        let dj = phi.partial(j)?.add(&state.a.component(j).mul(&phi)?.scale(I))?;
        kinetic += sq_integral(&dj);
        grad_a0.push(state.a0.partial(j)?.real_part());
    }
    let mut electric = 0.0;
    for j in 0..n {
        electric += sq_integral(&state.a_t.component(j).sub(&grad_a0[j])?);
    }
    let mut magnetic = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let f = state.a.component(k).partial(j)?.sub(&state.a.component(j).partial(k)?)?;
                magnetic += sq_integral(&f);
            }
        }
    }
    let (kinetic, electric, magnetic) = (0.5 * kinetic, 0.5 * electric, 0.25 * magnetic);

    let lap_a0 = state.a0.laplacian()?;
    let charge = phi.mul(&d0.conj())?.imag_part();
    let gauss = ratio(smooth_part(&lap_a0.add(&charge)?).l2_norm(), lap_a0.l2_norm() + charge.l2_norm());

    let j = current(&state.a, &phi, true)?;
    let pj = projected_current(&state.a, &phi)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let lap = state.a.component(k).laplacian()?;
        let a_tt = lap.add(&pj[k])?;
        let grad_t = state.a0_t.partial(k)?;
        let r = smooth_part(&a_tt.sub(&lap)?.sub(&grad_t)?.sub(&j[k])?);
        num += r.l2_norm().powi(2);
        den += (a_tt.l2_norm() + lap.l2_norm() + grad_t.l2_norm() + j[k].l2_norm()).powi(2);
    }
    let maxwell = ratio(num.sqrt(), den.sqrt());

    let mut dnum = 0.0;
    let mut dden = 0.0;
    for v in [&state.a, &state.a_t] {
        dnum += v.divergence()?.l2_norm().powi(2);
        for c in v.components() {
            dden += c.gradient()?.l2_norm().powi(2);
        }
    }
    let div = ratio(dnum.sqrt(), dden.sqrt());

    Ok(EnergyReport {
        total: kinetic + electric + magnetic,
        kinetic,
        electric,
        magnetic,
        gauss_residual: gauss,
        maxwell_residual: maxwell,
        div_residual: div,
    })
}

/// Critical norms at one sample, with the running (time-integrated) ones up to that sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormSample {
    pub t: f64,
    /// `||grad_{x,t} Phi(t)||` in `B^[2,n/2]_2`.
    pub data: f64,
    /// `L^inf_t B^[2,n/2]_2 + L^2_t B^[p_*,2n/3]_2` of `grad_{x,t} Phi` on `[t_0, t]`.
    pub solution: f64,
    /// `L^1_t B^[p_**,n]_1 + L^inf_t B^[2,n/2]_2` of `grad_{x,t} A_0` on `[t_0, t]`.
    pub elliptic: f64,
    /// `L^1_t B^[2,n/2]_1` of the forcings on `[t_0, t]`.
    pub n1: f64,
    /// `L^1_t B^[2,n/2]_2` of the forcings on `[t_0, t]`.
    pub n2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub exponents: ExponentValues,
    pub samples: Vec<NormSample>,
}

fn tuple_besov(fields: &[ScalarField], p: f64, q: f64, r: u32) -> Result<f64> {
    let mut acc = 0.0;
    for f in fields {
        acc += besov_norm_mean_excluded(f, p, q, r)?.powi(2);
    }
    Ok(acc.sqrt())
}

fn spacetime_gradient(f: &ScalarField, f_t: &ScalarField) -> Result<Vec<ScalarField>> {
    let mut out = vec![f_t.clone()];
    for j in 0..f.grid().dim() {
        out.push(f.partial(j)?);
    }
    Ok(out)
}

fn prefix_norm(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if times.len() < 2 && q.is_finite() {
        return Ok(0.0);
    }
    time_norm(times, values, q)
}

pub fn critical_norm_tracker(trajectory: &[ConnectionState], delta: f64) -> Result<NormReport> {
    let Some(first) = trajectory.first() else {
        return structural("empty trajectory");
    };
    let n = first.grid().dim();
    let e = Exponents::from_f64(n, delta)?;
    let v = e.values();
    let nf = n as f64;
    let mut times = Vec::new();
    let (mut b22, mut bp, mut e1, mut e2, mut f1, mut f2) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    let mut samples = Vec::new();
    for s in trajectory {
        first.grid().check_same(s.grid())?;
        let mut grads = Vec::new();
        for (c, ct) in s.a.components().iter().zip(s.a_t.components()) {
            grads.extend(spacetime_gradient(c, ct)?);
        }
        grads.extend(spacetime_gradient(&s.phi, &s.phi_t)?);
        let a0_grads = spacetime_gradient(&s.a0, &s.a0_t)?;
        let forcing = rhs(s)?;
        let mut fs: Vec<ScalarField> = forcing.box_a.components().to_vec();
        fs.push(forcing.box_phi);

        times.push(s.t);
        b22.push(tuple_besov(&grads, 2.0, nf / 2.0, 2)?);
        bp.push(tuple_besov(&grads, v.p_star, 2.0 * nf / 3.0, 2)?);
        e1.push(tuple_besov(&a0_grads, v.p_2star, nf, 1)?);
        e2.push(tuple_besov(&a0_grads, 2.0, nf / 2.0, 2)?);
        f1.push(tuple_besov(&fs, 2.0, nf / 2.0, 1)?);
        f2.push(tuple_besov(&fs, 2.0, nf / 2.0, 2)?);

        samples.push(NormSample {
            t: s.t,
            data: *b22.last().expect("pushed"),
            solution: prefix_norm(&times, &b22, f64::INFINITY)? + prefix_norm(&times, &bp, 2.0)?,
            elliptic: prefix_norm(&times, &e1, 1.0)? + prefix_norm(&times, &e2, f64::INFINITY)?,
            n1: prefix_norm(&times, &f1, 1.0)?,
            n2: prefix_norm(&times, &f2, 1.0)?,
        });
    }
    Ok(NormReport { exponents: v, samples })
}

/// Writes each recorded state as binary field dumps plus a CSV manifest.
pub struct CheckpointWriter {
    dir: PathBuf,
    rows: Vec<String>,
}

pub const MANIFEST: &str = "manifest.csv";

impl CheckpointWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), rows: vec!["index,t,energy,gauss,maxwell,div".into()] })
    }

    pub fn write(&mut self, state: &ConnectionState, report: &EnergyReport) -> Result<()> {
        let index = self.rows.len() - 1;
        for (name, f) in state.fields() {
            dump::save(&self.dir.join(format!("ckpt_{index:05}_{name}.crnl")), f, &[state.t])?;
        }
        self.rows.push(format!(
            "{index},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            state.t, report.total, report.gauss_residual, report.maxwell_residual, report.div_residual
        ));
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join(MANIFEST);
        let mut body = self.rows.join("\n");
        body.push('\n');
        dump::write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

/// Read back checkpoint `index` from a directory written by [`CheckpointWriter`].
pub fn load_checkpoint(dir: &Path, index: usize) -> Result<ConnectionState> {
    let load = |name: &str| -> Result<(f64, ScalarField)> {
        let (h, f) = dump::load(&dir.join(format!("ckpt_{index:05}_{name}.crnl")))?;
        let t = h.extension.first().copied().unwrap_or(0.0);
        Ok((t, f.in_physical()))
    };
    let (t, a0) = load("a0")?;
    let n = a0.grid().dim();
    let vec = |prefix: &str| -> Result<VectorField> {
        let c = (1..=n).map(|j| load(&format!("{prefix}_{j}")).map(|x| x.1.real_part())).collect::<Result<Vec<_>>>()?;
        VectorField::new(c)?.certify_divergence_free()
    };
    Ok(ConnectionState {
        t,
        a0: a0.real_part(),
        a0_t: load("a0_t")?.1.real_part(),
        a: vec("a")?,
        a_t: vec("a_t")?,
        phi: load("phi")?.1,
        phi_t: load("phi_t")?.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridSpec {
        GridSpec::new(3, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = ConnectionState::zero(grid3());
        let next = step(&s, 0.1).unwrap();
        assert_eq!(next.phi.max_abs(), 0.0);
        assert_eq!(next.a.max_abs(), 0.0);
        let e = elliptic_a0(&s.phi, &s.phi_t).unwrap();
        assert_eq!(e.a0.max_abs(), 0.0);
    }

    #[test]
    fn oversized_step_rejected() {
        let s = ConnectionState::zero(grid3());
        assert!(matches!(step(&s, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn compatible_data_satisfies_gauss_law() {
        let mut rng = Philox::new(3, 0);
        let s = random_small_data(grid3(), 0.05, 3.0, &mut rng).unwrap();
        let r = constraint_residuals(&s).unwrap();
        assert!(r.gauss_residual < 1e-9, "{r:?}");
        assert!(r.maxwell_residual < 1e-9, "{r:?}");
        assert!(r.div_residual < 1e-12, "{r:?}");
        let parts = r.kinetic + r.electric + r.magnetic;
        assert!((r.total - parts).abs() <= 1e-12 * r.total);
    }

    #[test]
    fn elliptic_solve_meets_tolerance_quickly() {
        let g = grid3();
        let mut rng = Philox::new(5, 0);
        let f = normalized(&random_shell(g, 0.1, 0.5, false, &mut rng)).scale(re(0.05 * g.volume().sqrt()));
        let ft = normalized(&random_shell(g, 0.1, 0.5, false, &mut rng)).scale(re(0.05 * g.volume().sqrt()));
        let sol = elliptic_a0(&f, &ft).unwrap();
        assert!(sol.residual <= ELLIPTIC_TOL);
        assert!(sol.iterations <= 20, "{}", sol.iterations);
    }
}
