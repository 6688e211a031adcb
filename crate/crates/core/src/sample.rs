//! Seeded random fields with prescribed frequency support.

use crate::grid::{GridSpec, Rep, ScalarField, VectorField};
use crate::microlocal::leray_project;
use crate::rng::Philox;
use crate::error::Result;
use crate::C64;

/// Gaussian coefficients on `r_lo <= |xi| <= r_hi` (physical frequency units), mean zero.
/// With `real` the field is the real part of the complex draw, which keeps the support.
pub fn random_shell(grid: GridSpec, r_lo: f64, r_hi: f64, real: bool, rng: &mut Philox) -> ScalarField {
    let mut c = vec![C64::default(); grid.len()];
    grid.for_each_mode(|idx, m| {
        let r = m.norm();
        if !m.nyquist && !m.is_zero() && r >= r_lo && r <= r_hi {
            c[idx] = C64::new(rng.normal(), rng.normal());
        }
    });
    let f = ScalarField::from_spectrum(grid, c).expect("grid-sized").in_physical();
    if real {
        f.real_part()
    } else {
        f
    }
}

/// Rescale to unit `L^2` norm; the zero field is returned unchanged.
pub fn normalized(f: &ScalarField) -> ScalarField {
    let n = f.l2_norm();
    if n == 0.0 {
        f.clone()
    } else {
        f.scale(C64::new(1.0 / n, 0.0))
    }
}

/// Real divergence-free field with components drawn by [`random_shell`], then Leray-projected.
pub fn random_solenoidal(grid: GridSpec, r_lo: f64, r_hi: f64, rng: &mut Philox) -> Result<VectorField> {
    let comps = (0..grid.dim()).map(|_| random_shell(grid, r_lo, r_hi, true, rng)).collect();
    let p = leray_project(&VectorField::new(comps)?)?;
    let comps = p.into_components().into_iter().map(|c| c.real_part()).collect();
    VectorField::new(comps)?.certify_divergence_free()
}

/// Scale a vector field so that its total `L^2` norm is `target`.
pub fn scaled_to(v: &VectorField, target: f64) -> VectorField {
    let n = v.l2_norm();
    if n == 0.0 {
        v.clone()
    } else {
        v.scale(C64::new(target / n, 0.0))
    }
}

pub fn zeros_like(grid: GridSpec) -> ScalarField {
    ScalarField::zeros(grid, Rep::Physical)
}
