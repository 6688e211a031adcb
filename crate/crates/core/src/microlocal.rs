//! Gauge and microlocal operators: Leray projection, sector projections, the null frame,
//! the transverse Laplacian, curvature, covariant derivatives and gauge transforms.
//!
//! Sector symbol: with `a = arccos(xi.omega / |xi|)` and `eta(s) = m(2s)` (1 below 1/2,
//! 0 above 1), `Pi_{>theta} = (1 - eta(a/theta)) (1 - eta((pi - a)/theta))`, zero at the
//! origin; `Pi_{<=theta} = 1 - Pi_{>theta}` and the band `Pi_theta = Pi_{>theta/2} - Pi_{>theta}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, precondition, structural, Error, Result};
use crate::grid::{GridSpec, Mode, Rep, ScalarField, VectorField};
use crate::lp::bump;
use crate::rng::Philox;
use crate::spacetime::{time_derivative, SpacetimeField};
use crate::C64;

const FOUR_PI2: f64 = 4.0 * PI * PI;

/// Unit vector in R^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; rejects the zero vector.
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return param("direction from a zero or non-finite vector");
        }
        Ok(Self(v.iter().map(|x| x / norm).collect()))
    }

    /// Accepts `v` only if it is already unit to 1e-14.
    pub fn from_unit(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-14 {
            return param(format!("|omega| = {norm}, not a unit vector"));
        }
        Ok(Self(v.to_vec()))
    }

    pub fn axis(n: usize, j: usize) -> Self {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        Self(v)
    }

    pub fn random(n: usize, rng: &mut Philox) -> Self {
        Self(rng.unit_vector(n))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

pub fn eta(s: f64) -> f64 {
    bump(2.0 * s)
}

/// Angle between `xi` and `omega` in `[0, pi]`; zero at the origin.
pub fn angle(xi: &[f64], omega: &[f64]) -> f64 {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let c = xi.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>() / r;
    c.clamp(-1.0, 1.0).acos()
}

/// `Pi_{omega,>theta}` symbol; any `theta > 0` is accepted here.
pub fn greater_symbol(xi: &[f64], omega: &[f64], theta: f64) -> f64 {
    if xi.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let a = angle(xi, omega);
    (1.0 - eta(a / theta)) * (1.0 - eta((PI - a) / theta))
}

pub fn leq_symbol(xi: &[f64], omega: &[f64], theta: f64) -> f64 {
    1.0 - greater_symbol(xi, omega, theta)
}

pub fn band_symbol(xi: &[f64], omega: &[f64], theta: f64) -> f64 {
    greater_symbol(xi, omega, 0.5 * theta) - greater_symbol(xi, omega, theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorMode {
    Greater,
    Leq,
    Band,
}

/// Largest admissible sector angle.
pub const THETA_MAX: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SectorSpec {
    pub omega: Direction,
    pub theta: f64,
    pub mode: SectorMode,
}

impl SectorSpec {
    pub fn new(omega: Direction, theta: f64, mode: SectorMode) -> Result<Self> {
        if !(theta > 0.0 && theta <= THETA_MAX) {
            return param(format!("sector angle {theta} outside (0, {THETA_MAX}]"));
        }
        Ok(Self { omega, theta, mode })
    }

    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let w = self.omega.as_slice();
        match self.mode {
            SectorMode::Greater => greater_symbol(xi, w, self.theta),
            SectorMode::Leq => leq_symbol(xi, w, self.theta),
            SectorMode::Band => band_symbol(xi, w, self.theta),
        }
    }
}

fn mean_free(f: &ScalarField, what: &str) -> Result<()> {
    let h = f.in_frequency();
    let total: f64 = h.values().iter().map(|v| v.norm_sqr()).sum();
    if h.values()[0].norm_sqr() > 1e-24 * total.max(f64::MIN_POSITIVE) {
        return precondition(format!("{what} requires mean-free input"));
    }
    Ok(())
}

fn check_dir(grid: &GridSpec, omega: &Direction) -> Result<()> {
    if omega.dim() != grid.dim() {
        return structural(format!("direction in R^{} on a grid in R^{}", omega.dim(), grid.dim()));
    }
    Ok(())
}

pub fn sector_project(f: &ScalarField, spec: &SectorSpec) -> Result<ScalarField> {
    check_dir(f.grid(), &spec.omega)?;
    mean_free(f, "sector projection")?;
    f.apply_mode_symbol(|m| C64::new(spec.symbol(m.xi()), 0.0))
}

/// Leray projection of frequency-space components in place. The zero mode is removed
/// unless `keep_mean`, in which case constants pass through unchanged.
pub(crate) fn leray_in_place(grid: &GridSpec, comps: &mut [Vec<C64>], keep_mean: bool) {
    let n = grid.dim();
    grid.for_each_mode(|idx, m| {
        if m.nyquist {
            comps.iter_mut().for_each(|c| c[idx] = C64::default());
            return;
        }
        let r2 = m.norm_sq();
        if r2 == 0.0 {
            if !keep_mean {
                comps.iter_mut().for_each(|c| c[idx] = C64::default());
            }
            return;
        }
        let dot: C64 = (0..n).map(|j| comps[j][idx] * m.xi[j]).sum();
        for j in 0..n {
            comps[j][idx] -= dot * (m.xi[j] / r2);
        }
    });
}

pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    for c in v.components() {
        mean_free(c, "Leray projection")?;
    }
    let grid = *v.grid();
    let mut comps: Vec<Vec<C64>> =
        v.components().iter().map(|c| c.in_frequency().into_values()).collect();
    leray_in_place(&grid, &mut comps, false);
    let reps: Vec<Rep> = v.components().iter().map(|c| c.rep()).collect();
    let fields = comps
        .into_iter()
        .zip(reps)
        .map(|(c, rep)| {
            let f = ScalarField::from_spectrum(grid, c)?;
            Ok(if rep == Rep::Physical { f.in_physical() } else { f })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorField::new(fields)?.assume_divergence_free())
}

/// `omega . grad f`.
pub fn directional_derivative(f: &ScalarField, omega: &Direction) -> Result<ScalarField> {
    check_dir(f.grid(), omega)?;
    let w = omega.as_slice();
    f.apply_mode_symbol(|m| C64::new(0.0, 2.0 * PI * m.dot(w)))
}

/// `Delta_{omega perp} = Delta - (omega . grad)^2`.
pub fn transverse_laplacian(f: &ScalarField, omega: &Direction) -> Result<ScalarField> {
    check_dir(f.grid(), omega)?;
    let w = omega.as_slice();
    f.apply_mode_symbol(|m| C64::new(-FOUR_PI2 * transverse_sq(m, w), 0.0))
}

pub(crate) fn transverse_sq(m: &Mode, w: &[f64]) -> f64 {
    let d = m.dot(w);
    (m.norm_sq() - d * d).max(0.0)
}

/// Exact inverse of `Delta_{omega perp}` on coefficients at angle at least `theta_min` from
/// both `omega` and `-omega`. Coefficients below `1e-12` of the largest one are treated as
/// empty (and zeroed); anything larger inside the guard cone is a singularity error.
pub fn transverse_laplacian_inverse(f: &ScalarField, omega: &Direction, theta_min: f64) -> Result<ScalarField> {
    check_dir(f.grid(), omega)?;
    if !(theta_min > 0.0 && theta_min < PI / 2.0) {
        return param(format!("guard angle {theta_min} outside (0, pi/2)"));
    }
    let w = omega.as_slice();
    let mut h = f.in_frequency();
    let top = h.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let grid = *f.grid();
    let mut bad = None;
    {
        let vals = h.values_mut();
        grid.for_each_mode(|idx, m| {
            if m.nyquist || m.is_zero() {
                vals[idx] = C64::default();
                return;
            }
            let a = angle(m.xi(), w);
            if a.min(PI - a) < theta_min {
                if vals[idx].norm() > 1e-12 * top {
                    if bad.is_none() {
                        bad = Some(m.ints().to_vec());
                    }
                } else {
                    vals[idx] = C64::default();
                }
                return;
            }
            vals[idx] *= -1.0 / (FOUR_PI2 * transverse_sq(m, w));
        });
    }
    if let Some(point) = bad {
        return Err(Error::Singularity {
            point,
            detail: format!("energy within {theta_min} of the axis of Delta_perp^-1"),
        });
    }
    Ok(if f.rep() == Rep::Physical { h.in_physical() } else { h })
}

/// Which sector operator the Coulomb gain is measured through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainProjection {
    Leq,
    Band,
}

/// `max_xi |(Pi B)^(xi) . omega| / (theta |(Pi B)^(xi)|)` over nonzero lattice points.
pub fn coulomb_gain_ratio(b: &VectorField, omega: &Direction, theta: f64, proj: GainProjection) -> Result<f64> {
    if !b.is_divergence_free() {
        return precondition("Coulomb gain needs a divergence-free certificate");
    }
    check_dir(b.grid(), omega)?;
    if !(theta > 0.0 && theta <= THETA_MAX) {
        return param(format!("sector angle {theta} outside (0, {THETA_MAX}]"));
    }
    let grid = *b.grid();
    let n = grid.dim();
    let w = omega.as_slice();
    let comps: Vec<Vec<C64>> = b.components().iter().map(|c| c.in_frequency().into_values()).collect();
    let top = comps.iter().flat_map(|c| c.iter().map(|v| v.norm())).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    grid.for_each_mode(|idx, m| {
        if m.nyquist || m.is_zero() {
            return;
        }
        let s = match proj {
            GainProjection::Leq => leq_symbol(m.xi(), w, theta),
            GainProjection::Band => band_symbol(m.xi(), w, theta),
        };
        if s == 0.0 {
            return;
        }
        let v: Vec<C64> = (0..n).map(|j| comps[j][idx] * s).collect();
        let mag = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if mag <= 1e-13 * top {
            return;
        }
        let dot: C64 = v.iter().zip(w).map(|(c, wj)| c * wj).sum();
        worst = worst.max(dot.norm() / (theta * mag));
    });
    Ok(worst)
}

/// Scalar solution of the free wave equation given by its two half-wave amplitudes:
/// `u(t) = L^-n sum_xi (c+(xi) e^{2 pi i t|xi|} + c-(xi) e^{-2 pi i t|xi|}) e^{2 pi i x.xi}`.
#[derive(Clone, Debug)]
pub struct FreeWave {
    grid: GridSpec,
    plus: Vec<C64>,
    minus: Vec<C64>,
}

impl FreeWave {
    pub fn new(grid: GridSpec, plus: Vec<C64>, minus: Vec<C64>) -> Result<Self> {
        if plus.len() != grid.len() || minus.len() != grid.len() {
            return structural("half-wave amplitudes do not match the grid");
        }
        Ok(Self { grid, plus, minus })
    }

    /// Random amplitudes on lattice points with `|m| <= m_max` (mean excluded).
    pub fn random(grid: GridSpec, m_max: f64, rng: &mut Philox) -> Self {
        let mut plus = vec![C64::default(); grid.len()];
        let mut minus = vec![C64::default(); grid.len()];
        grid.for_each_mode(|idx, m| {
            let r = m.norm() * grid.length();
            if !m.is_zero() && r <= m_max && !m.nyquist {
                plus[idx] = C64::new(rng.normal(), rng.normal());
                minus[idx] = C64::new(rng.normal(), rng.normal());
            }
        });
        Self { grid, plus, minus }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `d^order u / dt^order` at time `t`, in physical space.
    pub fn eval(&self, t: f64, order: u32) -> ScalarField {
        let mut c = vec![C64::default(); self.grid.len()];
        self.grid.for_each_mode(|idx, m| {
            let w = 2.0 * PI * m.norm();
            let p = C64::new(0.0, w).powu(order) * C64::from_polar(1.0, w * t);
            let q = C64::new(0.0, -w).powu(order) * C64::from_polar(1.0, -w * t);
            c[idx] = self.plus[idx] * p + self.minus[idx] * q;
        });
        ScalarField::from_spectrum(self.grid, c).expect("grid-sized").in_physical().with_time(t)
    }
}

/// `L^sign_omega u = omega . grad u + sign * u_t` from an analytic time derivative.
pub fn null_derivative(u: &ScalarField, u_t: &ScalarField, omega: &Direction, sign: Sign) -> Result<ScalarField> {
    directional_derivative(u, omega)?.add(&u_t.scale(C64::new(sign.value(), 0.0)))
}

/// As [`null_derivative`] for sampled fields; `d/dt` by centered differences whose order
/// (2 or 4) is returned.
pub fn null_derivative_sampled(f: &SpacetimeField, omega: &Direction, sign: Sign) -> Result<(SpacetimeField, u32)> {
    let (dt, order) = time_derivative(f)?;
    let slices = f
        .slices()
        .iter()
        .zip(dt.slices())
        .map(|(u, ut)| null_derivative(u, ut, omega, sign))
        .collect::<Result<Vec<_>>>()?;
    Ok((SpacetimeField::new(f.times().to_vec(), slices)?, order))
}

/// Residuals of `box = L+ L- + Delta_perp` and `box = L- L+ + Delta_perp` on a free wave at
/// time `t`, relative to `||Delta u||`.
pub fn box_null_residual(wave: &FreeWave, omega: &Direction, t: f64) -> Result<(f64, f64)> {
    let u = wave.eval(t, 0);
    let ut = wave.eval(t, 1);
    let utt = wave.eval(t, 2);
    let lap = u.laplacian()?;
    let boxu = lap.sub(&utt)?;
    let perp = transverse_laplacian(&u, omega)?;
    let mut out = [0.0; 2];
    for (slot, outer) in [(0, Sign::Plus), (1, Sign::Minus)] {
        let inner = outer.flip();
        let v = null_derivative(&u, &ut, omega, inner)?;
        let vt = null_derivative(&ut, &utt, omega, inner)?;
        let composed = null_derivative(&v, &vt, omega, outer)?.add(&perp)?;
        let scale = lap.l2_norm().max(f64::MIN_POSITIVE);
        out[slot] = composed.sub(&boxu)?.l2_norm() / scale;
    }
    Ok((out[0], out[1]))
}

/// A one-form `A_alpha` (index 0 is time) at one instant, with optional time derivatives.
#[derive(Clone, Debug)]
pub struct SpacetimeConnection {
    pub a: Vec<ScalarField>,
    pub a_t: Option<Vec<ScalarField>>,
}

impl SpacetimeConnection {
    pub fn new(a: Vec<ScalarField>, a_t: Option<Vec<ScalarField>>) -> Result<Self> {
        let Some(first) = a.first() else {
            return structural("connection without components");
        };
        let g = *first.grid();
        if a.len() != g.dim() + 1 {
            return structural(format!("{} components for a spacetime of dimension {}", a.len(), g.dim() + 1));
        }
        for c in a.iter().chain(a_t.iter().flatten()) {
            g.check_same(c.grid())?;
        }
        if let Some(t) = &a_t {
            if t.len() != a.len() {
                return structural("time derivatives do not match components");
            }
        }
        Ok(Self { a, a_t })
    }

    pub fn zero(grid: GridSpec) -> Self {
        let z = ScalarField::zeros(grid, Rep::Physical);
        Self { a: vec![z.clone(); grid.dim() + 1], a_t: Some(vec![z; grid.dim() + 1]) }
    }

    pub fn grid(&self) -> &GridSpec {
        self.a[0].grid()
    }

    /// `d_alpha A_beta`.
    fn partial(&self, alpha: usize, beta: usize) -> Result<ScalarField> {
        if alpha == 0 {
            match &self.a_t {
                Some(t) => Ok(t[beta].in_physical()),
                None => structural("time derivative of the connection is not available"),
            }
        } else {
            Ok(self.a[beta].partial(alpha - 1)?.in_physical())
        }
    }
}

/// `F_{alpha beta}` for all index pairs.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub f: Vec<Vec<ScalarField>>,
}

impl Curvature {
    pub fn component(&self, alpha: usize, beta: usize) -> &ScalarField {
        &self.f[alpha][beta]
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().flatten().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b) in self.f.iter().flatten().zip(other.f.iter().flatten()) {
            worst = worst.max(a.sub(b)?.max_abs());
        }
        Ok(worst)
    }
}

pub fn curvature(conn: &SpacetimeConnection) -> Result<Curvature> {
    let d = conn.a.len();
    let mut f = Vec::with_capacity(d);
    for alpha in 0..d {
        let mut row = Vec::with_capacity(d);
        for beta in 0..d {
            row.push(conn.partial(alpha, beta)?.sub(&conn.partial(beta, alpha)?)?);
        }
        f.push(row);
    }
    Ok(Curvature { f })
}

/// `D_alpha phi = (d_alpha + i A_alpha) phi`; `alpha = 0` needs `phi_t`.
pub fn covariant_derivative(
    phi: &ScalarField,
    phi_t: Option<&ScalarField>,
    conn: &SpacetimeConnection,
    alpha: usize,
) -> Result<ScalarField> {
    if alpha >= conn.a.len() {
        return structural(format!("index {alpha} in spacetime dimension {}", conn.a.len()));
    }
    let d = if alpha == 0 {
        match phi_t {
            Some(p) => p.in_physical(),
            None => return structural("D_0 needs the time derivative of phi"),
        }
    } else {
        phi.partial(alpha - 1)?.in_physical()
    };
    d.add(&conn.a[alpha].mul(phi)?.scale(C64::new(0.0, 1.0)))
}

/// A real gauge function with the time derivatives needed to transform `A` and `A_t`.
#[derive(Clone, Debug)]
pub struct GaugeFunction {
    pub chi: ScalarField,
    pub chi_t: ScalarField,
    pub chi_tt: ScalarField,
}

/// `phi -> e^{i chi} phi`, `A_alpha -> A_alpha - d_alpha chi`, with `phi_t` and `A_t` carried along.
pub fn gauge_transform(
    phi: &ScalarField,
    phi_t: &ScalarField,
    conn: &SpacetimeConnection,
    g: &GaugeFunction,
) -> Result<(ScalarField, ScalarField, SpacetimeConnection)> {
    for (name, f) in [("chi", &g.chi), ("chi_t", &g.chi_t), ("chi_tt", &g.chi_tt)] {
        if f.imaginary_ratio() > 1e-12 {
            return precondition(format!("gauge function {name} is not real-valued"));
        }
    }
    let chi = g.chi.real_part();
    let chi_t = g.chi_t.real_part();
    let phase = chi.map_physical(|c| C64::from_polar(1.0, c.re));
    let phi2 = phase.mul(phi)?;
    let phi2_t = phase.mul(&phi_t.add(&chi_t.mul(phi)?.scale(C64::new(0.0, 1.0)))?)?;
    let n = conn.grid().dim();
    let mut a = Vec::with_capacity(n + 1);
    a.push(conn.a[0].sub(&chi_t)?);
    for j in 0..n {
        a.push(conn.a[j + 1].sub(&chi.partial(j)?)?);
    }
    let a_t = match &conn.a_t {
        Some(t) => {
            let mut out = vec![t[0].sub(&g.chi_tt.real_part())?];
            for j in 0..n {
                out.push(t[j + 1].sub(&chi_t.partial(j)?)?);
            }
            Some(out)
        }
        None => None,
    };
    Ok((phi2, phi2_t, SpacetimeConnection::new(a, a_t)?))
}

/// Outcome of the null-form comparison under both readings of the cubic term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullFormReport {
    /// Relative residual with the `A_j |phi|^2` term.
    pub residual_modulus: f64,
    /// Relative residual with the literal `A_j phi^2` term.
    pub residual_literal: f64,
    pub lhs_norm: f64,
}

fn inv_laplacian(f: &ScalarField) -> ScalarField {
    f.apply_mode_symbol(|m| {
        let r2 = m.norm_sq();
        if r2 == 0.0 {
            C64::default()
        } else {
            C64::new(-1.0 / (FOUR_PI2 * r2), 0.0)
        }
    })
    .expect("finite symbol")
}

/// Leray projection with the zero mode dropped, on arbitrary-mean input.
pub(crate) fn leray_mean_free(comps: &[ScalarField]) -> Result<Vec<ScalarField>> {
    let grid = *comps[0].grid();
    let mut c: Vec<Vec<C64>> = comps.iter().map(|f| f.in_frequency().into_values()).collect();
    leray_in_place(&grid, &mut c, false);
    c.into_iter().map(|v| ScalarField::from_spectrum(grid, v)).collect()
}

/// Compare `-P Im(phi conj(D_j phi))` with
/// `i Delta^-1 d_k (d_k phi conj(d_j phi) - d_j phi conj(d_k phi)) + P(A_j X)` for
/// `X = |phi|^2` and for the literal `X = phi^2`. `P` drops the zero mode.
pub fn null_form_check(phi: &ScalarField, a: &VectorField) -> Result<NullFormReport> {
    if !a.is_divergence_free() {
        return precondition("null-form check needs a divergence-free connection");
    }
    for c in a.components() {
        mean_free(c, "null-form check")?;
    }
    let n = phi.grid().dim();
    let grad = phi.gradient()?.in_physical();
    let phi_p = phi.in_physical();
    let modulus = phi_p.mul(&phi_p.conj())?;
    let square = phi_p.mul(&phi_p)?;

    let mut current = Vec::with_capacity(n);
    let mut a_mod = Vec::with_capacity(n);
    let mut a_lit = Vec::with_capacity(n);
    for j in 0..n {
        let im = phi_p.mul(&grad.component(j).conj())?.imag_part();
        let aj = a.component(j);
        current.push(im.sub(&aj.mul(&modulus)?)?);
        a_mod.push(aj.mul(&modulus)?);
        a_lit.push(aj.mul(&square)?);
    }
    let lhs: Vec<ScalarField> =
        leray_mean_free(&current)?.into_iter().map(|f| f.scale(C64::new(-1.0, 0.0))).collect();
    let p_mod = leray_mean_free(&a_mod)?;
    let p_lit = leray_mean_free(&a_lit)?;

    let mut num_mod = 0.0;
    let mut num_lit = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let mut acc = ScalarField::zeros(*phi.grid(), Rep::Physical);
        for k in 0..n {
            let t = grad.component(k).mul(&grad.component(j).conj())?
                .sub(&grad.component(j).mul(&grad.component(k).conj())?)?;
            acc = acc.add(&t.partial(k)?)?;
        }
        let null = inv_laplacian(&acc).scale(C64::new(0.0, 1.0));
        let rhs_mod = null.add(&p_mod[j])?;
        let rhs_lit = null.add(&p_lit[j])?;
        num_mod += lhs[j].sub(&rhs_mod)?.l2_norm().powi(2);
        num_lit += lhs[j].sub(&rhs_lit)?.l2_norm().powi(2);
        den += lhs[j].l2_norm().powi(2);
    }
    let rel = |num: f64| if den == 0.0 { num.sqrt() } else { (num / den).sqrt() };
    Ok(NullFormReport { residual_modulus: rel(num_mod), residual_literal: rel(num_lit), lhs_norm: den.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_symbol_basics() {
        let w = [1.0, 0.0, 0.0];
        assert_eq!(greater_symbol(&[2.0, 0.0, 0.0], &w, 0.3), 0.0);
        assert_eq!(leq_symbol(&[2.0, 0.0, 0.0], &w, 0.3), 1.0);
        assert_eq!(greater_symbol(&[0.0, 1.0, 0.0], &w, 0.1), 1.0);
        assert_eq!(greater_symbol(&[0.0; 3], &w, 0.3), 0.0);
        let xi = [0.7, -0.3, 0.2];
        let neg = [-0.7, 0.3, -0.2];
        assert_eq!(greater_symbol(&xi, &w, 0.9), greater_symbol(&neg, &w, 0.9));
        assert!(SectorSpec::new(Direction::axis(3, 0), 0.0, SectorMode::Leq).is_err());
        assert!(SectorSpec::new(Direction::axis(3, 0), 1.5, SectorMode::Leq).is_err());
    }

    #[test]
    fn direction_validation() {
        assert!(Direction::new(&[0.0, 0.0]).is_err());
        assert!(Direction::from_unit(&[0.6, 0.8]).is_ok());
        assert!(Direction::from_unit(&[0.6, 0.81]).is_err());
    }

    #[test]
    fn transverse_inverse_on_equator() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let w = ScalarField::plane_wave(g, &[0, 3]);
        let inv = transverse_laplacian_inverse(&w, &Direction::axis(2, 0), 0.2).unwrap();
        let expect = w.scale(C64::new(-1.0 / (FOUR_PI2 * 9.0), 0.0));
        assert!(inv.relative_distance(&expect).unwrap() < 1e-13);
        let axial = ScalarField::plane_wave(g, &[3, 0]);
        assert!(matches!(
            transverse_laplacian_inverse(&axial, &Direction::axis(2, 0), 0.2),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn matched_null_derivative_annihilates_plane_wave() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let mut plus = vec![C64::default(); g.len()];
        plus[g.index_of(&[2, 0])] = C64::new(1.0, 0.0);
        let wave = FreeWave::new(g, plus, vec![C64::default(); g.len()]).unwrap();
        let u = wave.eval(0.3, 0);
        let ut = wave.eval(0.3, 1);
        let w = Direction::axis(2, 0);
        let matched = null_derivative(&u, &ut, &w, Sign::Minus).unwrap();
        assert!(matched.max_abs() < 1e-12);
        let other = null_derivative(&u, &ut, &w, Sign::Plus).unwrap();
        let expect = u.scale(C64::new(0.0, 2.0 * PI * 4.0));
        assert!(other.relative_distance(&expect).unwrap() < 1e-12);
    }
}
