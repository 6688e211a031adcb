//! Upper-bound diagnostic for families `F(t, x, omega)` homogeneous of degree 0 in `xi`:
//! `sum_l (theta^(1-n) int_annulus ||(theta grad_xi)^l F||^2 dxi)^(1/2)` with the angular
//! derivatives taken as periodic differences across a uniform direction quadrature.
//! Only the plane is supported, where directions are one angle.

use std::f64::consts::PI;

use serde::Serialize;

use super::connection::FreeConnection;
use super::phase::{PhaseField, PhaseSpec, SplitPart, Want};
use crate::error::{param, structural, Result};
use crate::microlocal::Direction;
use crate::spacetime::{spacetime_norm, SpacetimeField, SpatialNorm};
use crate::C64;

pub const DEFAULT_L_MAX: usize = 4;

/// `fields[i]` is `F(., ., omega_i)` with `omega_i = (cos phi_i, sin phi_i)`,
/// `phi_i = 2 pi i / fields.len()`.
#[derive(Clone, Debug)]
pub struct DirectionFamily {
    pub fields: Vec<SpacetimeField>,
}

impl DirectionFamily {
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.fields.len() as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|i| i as f64 * self.spacing()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurrogateReport {
    pub value: f64,
    pub terms: Vec<f64>,
    /// Last retained term over the total.
    pub tail_ratio: f64,
}

fn difference(fields: &[SpacetimeField], h: f64) -> Result<Vec<SpacetimeField>> {
    let m = fields.len();
    (0..m)
        .map(|i| {
            let (a, b) = (&fields[i], &fields[(i + 1) % m]);
            let slices = a
                .slices()
                .iter()
                .zip(b.slices())
                .map(|(x, y)| Ok(y.sub(x)?.scale(C64::new(1.0 / h, 0.0))))
                .collect::<Result<Vec<_>>>()?;
            SpacetimeField::new(a.times().to_vec(), slices)
        })
        .collect()
}

/// `int_{1/2}^{3} r^p dr`.
fn radial(p: i32) -> f64 {
    if p == -1 {
        6f64.ln()
    } else {
        let q = (p + 1) as f64;
        (3f64.powf(q) - 0.5f64.powf(q)) / q
    }
}

pub fn decomposable_surrogate(family: &DirectionFamily, theta: f64, q: f64, r: f64, l_max: usize) -> Result<SurrogateReport> {
    let Some(first) = family.fields.first() else {
        return param("empty direction family");
    };
    let n = first.grid().dim();
    if n != 2 {
        return param(format!("direction quadrature is implemented for n = 2, got n = {n}"));
    }
    if !(theta > 0.0) {
        return param(format!("theta = {theta} must be positive"));
    }
    let h = family.spacing();
    if h > theta / 2.0 {
        return param(format!("direction spacing {h:.4} exceeds theta/2 = {:.4}", theta / 2.0));
    }
    for f in &family.fields {
        first.grid().check_same(f.grid())?;
        if f.times() != first.times() {
            return structural("direction family members sample different times");
        }
    }
    let mut current = family.fields.clone();
    let mut terms = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        if l > 0 {
            current = difference(&current, h)?;
        }
        let mut sum = 0.0;
        for f in &current {
            sum += h * spacetime_norm(f, q, SpatialNorm::Lebesgue(r))?.powi(2);
        }
        let p = n as i32 - 1 - 2 * l as i32;
        let weight = theta.powi(1 - n as i32) * theta.powi(2 * l as i32) * radial(p);
        terms.push((weight * sum).sqrt());
    }
    let value: f64 = terms.iter().sum();
    let tail_ratio = if value == 0.0 { 0.0 } else { terms[l_max] / value };
    Ok(SurrogateReport { value, terms, tail_ratio })
}

/// `Psi_t(t, ., omega)` for `count` uniformly spaced planar directions.
pub fn phase_time_derivative_family(conn: &FreeConnection, spec: &PhaseSpec, count: usize, times: &[f64]) -> Result<DirectionFamily> {
    if conn.grid().dim() != 2 {
        return param("direction families are planar");
    }
    if count < 3 {
        return param("need at least three directions");
    }
    let fields = (0..count)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / count as f64;
            let p = PhaseField::with_part(conn, &Direction::new(&[phi.cos(), phi.sin()])?, spec, SplitPart::Full)?;
            let slices = times
                .iter()
                .map(|&t| Ok(p.slice_at(conn, t, Want { time: true, ..Want::PSI })?.psi_t.expect("requested")))
                .collect::<Result<Vec<_>>>()?;
            SpacetimeField::new(times.to_vec(), slices)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectionFamily { fields })
}
