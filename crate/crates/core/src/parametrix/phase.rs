//! The phase `Psi(t, x, omega)` and the quantities built from it.
//!
//! Per connection mode `zeta`, with `s = +-1`:
//! `Psi^ = M(zeta) [ i (omega.zeta) (A^.omega) + s (A_t^.omega) / (2 pi) ]`,
//! `M(zeta) = -1/(4 pi^2 |zeta_perp|^2) sum_k P_k(|zeta|/rho) Pi_{omega,>2^(sigma k)}(zeta)`.
//! This is `(2 pi)^-1 L^s Delta_perp^-1 sum_k Pi_{>2^(sigma k)} P_k A.omega` written as a
//! multiplier. The dyadic index is measured in units of the data shell radius `rho`.

use std::f64::consts::PI;

use serde::Serialize;

use super::connection::{AnnulusCutoff, ConnectionModes, FreeConnection};
use crate::error::{param, precondition, Result};
use crate::exponents::sigma_admissible;
use crate::grid::{ScalarField, VectorField};
use crate::lp;
use crate::microlocal::{band_symbol, greater_symbol, leq_symbol, transverse_laplacian_inverse};
use crate::microlocal::{Direction, SectorMode, Sign};
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSpec {
    pub sign: Sign,
    pub sigma: f64,
    pub rho: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl PhaseSpec {
    /// Dyadic range covering the connection's normalized spectrum `[1/(rho L), r_max/rho]`.
    pub fn for_connection(conn: &FreeConnection, cutoff: &AnnulusCutoff, sign: Sign, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return param(format!("sigma = {sigma} outside (0, 1/2)"));
        }
        let n = conn.grid().dim();
        if n >= 6 {
            sigma_admissible(n, sigma)?;
        }
        let rho = cutoff.rho;
        let r_min = 1.0 / (rho * conn.grid().length());
        let r_max = (conn.spectral_radius() / rho).max(r_min);
        let k_min = r_min.log2().floor() as i32;
        let k_max = (r_max.log2().ceil() as i32).max(k_min);
        Ok(Self { sign, sigma, rho, k_min, k_max })
    }

    pub fn theta(&self, k: i32) -> f64 {
        (self.sigma * k as f64).exp2()
    }

    /// Smallest sector angle used by the truncation.
    pub fn smallest_angle(&self) -> f64 {
        self.theta(self.k_min)
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        Self { sign, ..*self }
    }
}

/// Which part of the sector truncation a phase uses. `Below(t)` keeps the dyadic angular
/// pieces at scales `2^j theta_k < t`, `Above(t)` the rest; the two add up to `Full`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitPart {
    Full,
    Below(f64),
    Above(f64),
}

fn sector_piece(zeta: &[f64], omega: &[f64], theta: f64, part: SplitPart) -> f64 {
    let cut = match part {
        SplitPart::Full => return greater_symbol(zeta, omega, theta),
        SplitPart::Below(c) | SplitPart::Above(c) => c,
    };
    // Pi_{>theta} = sum_{j=1}^{J} Pi_{2^j theta} once 2^J theta >= pi.
    let jmax = ((PI / theta).log2().ceil() as i32).max(1);
    let mut acc = 0.0;
    for j in 1..=jmax {
        let scale = theta * (j as f64).exp2();
        let below = scale < cut;
        if below == matches!(part, SplitPart::Below(_)) {
            acc += band_symbol(zeta, omega, scale);
        }
    }
    acc
}

/// `M(zeta)` for one direction and split part.
pub fn phase_symbol(zeta: &[f64], omega: &[f64], spec: &PhaseSpec, part: SplitPart) -> f64 {
    let r2: f64 = zeta.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return 0.0;
    }
    let r = r2.sqrt() / spec.rho;
    let mut g = 0.0;
    for k in spec.k_min..=spec.k_max {
        let b = lp::band_symbol(r, k);
        if b != 0.0 {
            g += b * sector_piece(zeta, omega, spec.theta(k), part);
        }
    }
    if g == 0.0 {
        return 0.0;
    }
    let d: f64 = zeta.iter().zip(omega).map(|(a, b)| a * b).sum();
    -g / (4.0 * PI * PI * (r2 - d * d))
}

/// Which derivative fields a slice should carry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Want {
    pub time: bool,
    pub gradient: bool,
    pub second: bool,
}

impl Want {
    pub const PSI: Want = Want { time: false, gradient: false, second: false };
    pub const ALL: Want = Want { time: true, gradient: true, second: true };
}

/// `Psi` and requested derivatives at one time, in physical space.
#[derive(Clone, Debug)]
pub struct PhaseSlice {
    pub t: f64,
    pub psi: ScalarField,
    pub psi_t: Option<ScalarField>,
    pub grad: Option<Vec<ScalarField>>,
    /// `box Psi = -Psi_tt + Delta Psi`.
    pub box_psi: Option<ScalarField>,
}

/// The phase for one direction: its multiplier values on the connection support.
#[derive(Clone, Debug)]
pub struct PhaseField {
    pub omega: Direction,
    pub spec: PhaseSpec,
    pub part: SplitPart,
    mult: Vec<f64>,
}

pub fn build_phase(conn: &FreeConnection, omega: &Direction, spec: &PhaseSpec) -> Result<PhaseField> {
    PhaseField::with_part(conn, omega, spec, SplitPart::Full)
}

fn dot_omega(v: &[C64], w: &[f64]) -> C64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

impl PhaseField {
    pub fn with_part(conn: &FreeConnection, omega: &Direction, spec: &PhaseSpec, part: SplitPart) -> Result<Self> {
        if omega.dim() != conn.grid().dim() {
            return param("direction dimension does not match the grid");
        }
        let w = omega.as_slice();
        let mult = conn.modes().iter().map(|m| phase_symbol(&m.xi, w, spec, part)).collect();
        Ok(Self { omega: omega.clone(), spec: *spec, part, mult })
    }

    /// Sparse coefficients of `Psi`, `Psi_t`, `Psi_tt` on the connection support.
    pub fn coefficients(&self, conn: &FreeConnection, m: &ConnectionModes) -> [Vec<C64>; 3] {
        let w = self.omega.as_slice();
        let s = self.spec.sign.value();
        let build = |lo: &[Vec<C64>], hi: &[Vec<C64>]| -> Vec<C64> {
            conn.modes()
                .iter()
                .enumerate()
                .map(|(k, mode)| {
                    if self.mult[k] == 0.0 {
                        return C64::default();
                    }
                    let d: f64 = mode.xi.iter().zip(w).map(|(a, b)| a * b).sum();
                    let v = C64::new(0.0, d) * dot_omega(&lo[k], w) + dot_omega(&hi[k], w) * (s / TWO_PI);
                    v * self.mult[k]
                })
                .collect()
        };
        [build(&m.a, &m.a_t), build(&m.a_t, &m.a_tt), build(&m.a_tt, &m.a_ttt)]
    }

    pub fn slice(&self, conn: &FreeConnection, m: &ConnectionModes, want: Want) -> Result<PhaseSlice> {
        let [c0, c1, c2] = self.coefficients(conn, m);
        let psi = conn.synthesize_scalar(&c0)?;
        let psi_t = if want.time { Some(conn.synthesize_scalar(&c1)?) } else { None };
        let grad = if want.gradient {
            let n = conn.grid().dim();
            Some(
                (0..n)
                    .map(|j| {
                        let c: Vec<C64> = conn
                            .modes()
                            .iter()
                            .zip(&c0)
                            .map(|(mode, v)| v * C64::new(0.0, TWO_PI * mode.xi[j]))
                            .collect();
                        conn.synthesize_scalar(&c)
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let box_psi = if want.second {
            let c: Vec<C64> = conn
                .modes()
                .iter()
                .zip(c0.iter().zip(&c2))
                .map(|(mode, (p, ptt))| -ptt - p * (4.0 * PI * PI * mode.norm * mode.norm))
                .collect();
            Some(conn.synthesize_scalar(&c)?)
        } else {
            None
        };
        Ok(PhaseSlice { t: m.t, psi, psi_t, grad, box_psi })
    }

    pub fn slice_at(&self, conn: &FreeConnection, t: f64, want: Want) -> Result<PhaseSlice> {
        self.slice(conn, &conn.modes_at(t), want)
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `L^-s Psi = omega.grad Psi - s Psi_t`, the derivative annihilated up to the defect.
fn matched_null(phase: &PhaseField, slice: &PhaseSlice) -> Result<ScalarField> {
    let grad = slice.grad.as_ref().expect("gradient requested");
    let psi_t = slice.psi_t.as_ref().expect("time derivative requested");
    let w = phase.omega.as_slice();
    let mut acc = psi_t.scale(re(-phase.spec.sign.value()));
    for (g, wj) in grad.iter().zip(w) {
        acc = acc.add(&g.scale(re(*wj)))?;
    }
    Ok(acc)
}

fn dyadic_sector(f: &ScalarField, spec: &PhaseSpec, omega: &Direction, k: i32, mode: SectorMode) -> Result<ScalarField> {
    let w = omega.as_slice();
    let th = spec.theta(k);
    f.apply_multiplier(|xi| {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt() / spec.rho;
        let b = lp::band_symbol(r, k);
        if b == 0.0 {
            return C64::default();
        }
        let s = match mode {
            SectorMode::Leq => leq_symbol(xi, w, th),
            SectorMode::Greater => greater_symbol(xi, w, th),
            SectorMode::Band => band_symbol(xi, w, th),
        };
        re(b * s)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub t: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    /// `||LHS - RHS|| / max(||LHS||, ||RHS||)`, 0 when both vanish.
    pub defect: f64,
}

/// `sum_k Pi_{<=} P_k A.omega + sum_k Delta_perp^-1 Pi_{>} P_k F.omega`, by dense multipliers.
fn defect_rhs(conn: &FreeConnection, phase: &PhaseField, t: f64, forcing: Option<&VectorField>) -> Result<ScalarField> {
    let spec = &phase.spec;
    let w = phase.omega.as_slice();
    let (a, _) = conn.fields(t)?;
    let a_w = a.dot_const(w)?;
    let mut acc = conn.zero_field();
    for k in spec.k_min..=spec.k_max {
        acc = acc.add(&dyadic_sector(&a_w, spec, &phase.omega, k, SectorMode::Leq)?)?;
    }
    let f = match forcing {
        Some(f) => Some(f.clone()),
        None if conn.has_forcing() => Some(conn.synthesize(&conn.modes_at(t).f)?),
        None => None,
    };
    if let Some(f) = f {
        let f_w = f.dot_const(w)?;
        for k in spec.k_min..=spec.k_max {
            let g = dyadic_sector(&f_w, spec, &phase.omega, k, SectorMode::Greater)?;
            if g.l2_norm() == 0.0 {
                continue;
            }
            let guard = 0.5 * spec.theta(k) * (1.0 - 1e-9);
            acc = acc.add(&transverse_laplacian_inverse(&g, &phase.omega, guard.min(1.5))?)?;
        }
    }
    Ok(acc)
}

/// Compare `2 pi L^-s Psi + A.omega` (from the phase multiplier) with the truncation
/// remainder (from dense sector and Littlewood-Paley projections). `forcing` overrides the
/// connection's own interpolated forcing with a reference value at time `t`.
pub fn phase_defect(conn: &FreeConnection, phase: &PhaseField, t: f64, forcing: Option<&VectorField>) -> Result<DefectReport> {
    if phase.part != SplitPart::Full {
        return precondition("the defect identity needs the full phase");
    }
    let slice = phase.slice_at(conn, t, Want { time: true, gradient: true, second: false })?;
    let (a, _) = conn.fields(t)?;
    let lhs = matched_null(phase, &slice)?.scale(re(TWO_PI)).add(&a.dot_const(phase.omega.as_slice())?)?;
    let rhs = defect_rhs(conn, phase, t, forcing)?;
    let (ln, rn) = (lhs.l2_norm(), rhs.l2_norm());
    let scale = ln.max(rn);
    let diff = lhs.sub(&rhs)?.l2_norm();
    Ok(DefectReport { t, lhs_norm: ln, rhs_norm: rn, defect: if scale == 0.0 { 0.0 } else { diff / scale } })
}

/// `||Psi - Psi^{<theta_*} - Psi^{>=theta_*}|| / ||Psi||` at time `t`.
pub fn split_defect(conn: &FreeConnection, omega: &Direction, spec: &PhaseSpec, theta_star: f64, t: f64) -> Result<f64> {
    if !(theta_star > 0.0) {
        return param(format!("critical angle {theta_star} must be positive"));
    }
    let m = conn.modes_at(t);
    let full = PhaseField::with_part(conn, omega, spec, SplitPart::Full)?.slice(conn, &m, Want::PSI)?.psi;
    let lo = PhaseField::with_part(conn, omega, spec, SplitPart::Below(theta_star))?.slice(conn, &m, Want::PSI)?.psi;
    let hi = PhaseField::with_part(conn, omega, spec, SplitPart::Above(theta_star))?.slice(conn, &m, Want::PSI)?.psi;
    let d = full.sub(&lo.add(&hi)?)?.l2_norm();
    let s = full.l2_norm();
    Ok(if s == 0.0 { d } else { d / s })
}

/// `theta_* = |x - y|^(-1 + 2 delta)`, capped at 1.
pub fn critical_angle(distance: f64, delta: f64) -> f64 {
    distance.powf(-1.0 + 2.0 * delta).min(1.0)
}

/// The amplitude for one frequency, term by term.
#[derive(Clone, Debug)]
pub struct Amplitude {
    pub omega_field: ScalarField,
    /// `-4 pi |xi| L^-s Psi`, `-2 A.xi`, `i box Psi`, `2 pi (Psi_t^2 - |grad Psi|^2)`, `-2 A.grad Psi`.
    pub terms: [ScalarField; 5],
    /// `||T1 + T2 + 2|xi| R|| / ||A.xi||` with `R` the defect right-hand side.
    pub cancellation: f64,
}

impl Amplitude {
    pub fn term_norms(&self) -> [f64; 5] {
        [0, 1, 2, 3, 4].map(|i| self.terms[i].l2_norm())
    }
}

pub fn build_amplitude(conn: &FreeConnection, phase: &PhaseField, cutoff: &AnnulusCutoff, xi: &[f64], t: f64) -> Result<Amplitude> {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !cutoff.in_support(r) {
        return precondition(format!("|xi| = {r} outside the annulus"));
    }
    let w = phase.omega.as_slice();
    if xi.iter().zip(w).any(|(x, o)| (x / r - o).abs() > 1e-12) {
        return precondition("xi does not point along the phase direction");
    }
    let slice = phase.slice_at(conn, t, Want::ALL)?;
    let (a, _) = conn.fields(t)?;
    let grad = slice.grad.as_ref().expect("requested");
    let psi_t = slice.psi_t.as_ref().expect("requested");
    let t1 = matched_null(phase, &slice)?.scale(re(-2.0 * TWO_PI * r));
    let t2 = a.dot_const(xi)?.scale(re(-2.0));
    let t3 = slice.box_psi.as_ref().expect("requested").scale(C64::new(0.0, 1.0));
    let mut quad = psi_t.mul(psi_t)?;
    let mut transport = conn.zero_field();
    for (j, g) in grad.iter().enumerate() {
        quad = quad.sub(&g.mul(g)?)?;
        transport = transport.add(&a.component(j).mul(g)?)?;
    }
    let t4 = quad.scale(re(TWO_PI));
    let t5 = transport.scale(re(-2.0));
    let mut omega_field = t1.clone();
    for t in [&t2, &t3, &t4, &t5] {
        omega_field = omega_field.add(t)?;
    }
    let rhs = defect_rhs(conn, phase, t, None)?;
    let lead = t1.add(&t2)?.add(&rhs.scale(re(2.0 * r)))?;
    let scale = t2.l2_norm() / 2.0;
    let cancellation = if scale == 0.0 { lead.l2_norm() } else { lead.l2_norm() / scale };
    Ok(Amplitude { omega_field, terms: [t1, t2, t3, t4, t5], cancellation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Philox;
    use crate::GridSpec;

    fn setup(n: usize, size: usize, l: f64) -> (FreeConnection, AnnulusCutoff) {
        let grid = GridSpec::new(n, size, l).unwrap();
        let cutoff = AnnulusCutoff::for_grid(&grid);
        let r_max = cutoff.rho / super::super::connection::default_gap(&grid, &cutoff);
        let conn = FreeConnection::random(grid, r_max, 0.1, &mut Philox::new(5, 0)).unwrap();
        (conn, cutoff)
    }

    #[test]
    fn defect_identity_free() {
        let (conn, cutoff) = setup(2, 32, 8.0);
        let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.25).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let omega = Direction::new(&[0.6, 0.8]).unwrap();
            let p = build_phase(&conn, &omega, &spec.with_sign(sign)).unwrap();
            for t in [0.0, 0.7] {
                let d = phase_defect(&conn, &p, t, None).unwrap();
                assert!(d.defect <= 1e-12, "{d:?}");
                assert!(d.lhs_norm > 0.0);
            }
        }
    }

    #[test]
    fn split_adds_up() {
        let (conn, cutoff) = setup(2, 32, 8.0);
        let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Minus, 0.3).unwrap();
        let omega = Direction::new(&[1.0, 0.3]).unwrap();
        for ts in [0.05, 0.4, 2.0] {
            assert!(split_defect(&conn, &omega, &spec, ts, 0.3).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn leading_terms_cancel() {
        let (conn, cutoff) = setup(2, 32, 8.0);
        let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.25).unwrap();
        let omega = Direction::new(&[0.0, 1.0]).unwrap();
        let p = build_phase(&conn, &omega, &spec).unwrap();
        let amp = build_amplitude(&conn, &p, &cutoff, &[0.0, 1.5 * cutoff.rho], 0.2).unwrap();
        assert!(amp.cancellation <= 1e-12, "{}", amp.cancellation);
        assert!(build_amplitude(&conn, &p, &cutoff, &[1.5 * cutoff.rho, 0.0], 0.2).is_err());
    }

    #[test]
    fn wide_window_rejected_in_high_dimension() {
        assert!(critical_angle(4.0, 0.0) == 0.25);
        let grid = GridSpec::new(6, 8, 4.0).unwrap();
        let cutoff = AnnulusCutoff::for_grid(&grid);
        let conn = FreeConnection::zero(grid);
        assert!(PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.25).is_err());
        assert!(PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.48).is_ok());
    }
}
