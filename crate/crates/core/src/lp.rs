//! Littlewood-Paley projections, Besov norms and the measured forms of the
//! Bernstein, commutator and product inequalities.
//!
//! Bump: `m(r) = 1` for `r <= 1`, `0` for `r >= 2`, and in between
//! `m(r) = psi(2-r) / (psi(2-r) + psi(r-1))` with `psi(s) = exp(-1/s)`.
//! `P_<=k` has symbol `m(|xi| / 2^k)`, `P_k = m(|xi|/2^k) - m(|xi|/2^(k-1))` lives on
//! `(2^(k-1), 2^(k+1))` and equals 1 at `|xi| = 2^k`. A product `P_k(P_k1 f P_k2 g)` can
//! only be nonzero if `k <= max(k1, k2) + 2` and either `|k1 - k2| <= 2` or
//! `|k - max(k1, k2)| <= 2`; the constant 2 is what the support arithmetic of this bump gives.

use crate::error::{param, precondition, Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::C64;

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Radial bump profile.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = psi(2.0 - r);
        let b = psi(r - 1.0);
        a / (a + b)
    }
}

/// Smooth step equal to 1 for `r <= lo` and 0 for `r >= hi`.
pub fn window(r: f64, lo: f64, hi: f64) -> f64 {
    bump(1.0 + (r - lo) / (hi - lo))
}

pub fn leq_symbol(r: f64, k: i32) -> f64 {
    bump(r * (-k as f64).exp2())
}

pub fn band_symbol(r: f64, k: i32) -> f64 {
    leq_symbol(r, k) - leq_symbol(r, k - 1)
}

/// `P_{k1 <= . <= k2}`; equal to 1 on `[2^k1, 2^k2]`.
pub fn range_symbol(r: f64, k1: i32, k2: i32) -> f64 {
    leq_symbol(r, k2) - leq_symbol(r, k1 - 1)
}

/// Dyadic indices fully representable on a grid: `2^(k_max+1) < N/(2L)` and `2^k_min > 1/L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandRange {
    pub k_min: i32,
    pub k_max: i32,
}

impl BandRange {
    pub fn for_grid(grid: &GridSpec) -> Result<Self> {
        let nyq = grid.nyquist();
        let mut k_max = nyq.log2().floor() as i32 + 1;
        while (k_max as f64 + 1.0).exp2() >= nyq {
            k_max -= 1;
        }
        let lowest = 1.0 / grid.length();
        let mut k_min = lowest.log2().floor() as i32 - 1;
        while (k_min as f64).exp2() <= lowest {
            k_min += 1;
        }
        if k_min > k_max {
            return Err(Error::Range(format!("grid {grid:?} resolves no complete dyadic band")));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn contains(&self, k: i32) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    fn check(&self, k: i32) -> Result<()> {
        if !self.contains(k) {
            return Err(Error::Range(format!("k = {k} outside [{}, {}]", self.k_min, self.k_max)));
        }
        Ok(())
    }
}

pub(crate) fn radial(f: &ScalarField, sym: impl Fn(f64) -> f64) -> ScalarField {
    f.apply_mode_symbol(|m| C64::new(sym(m.norm()), 0.0))
        .expect("radial symbols are finite")
}

pub fn project_leq(f: &ScalarField, k: i32) -> Result<ScalarField> {
    BandRange::for_grid(f.grid())?.check(k)?;
    Ok(radial(f, |r| leq_symbol(r, k)))
}

pub fn project_band(f: &ScalarField, k: i32) -> Result<ScalarField> {
    BandRange::for_grid(f.grid())?.check(k)?;
    Ok(radial(f, |r| band_symbol(r, k)))
}

pub fn project_range(f: &ScalarField, k1: i32, k2: i32) -> Result<ScalarField> {
    let b = BandRange::for_grid(f.grid())?;
    b.check(k1)?;
    b.check(k2)?;
    if k1 > k2 {
        return param(format!("empty range {k1}..={k2}"));
    }
    Ok(radial(f, |r| range_symbol(r, k1, k2)))
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn check_mean_free(f: &ScalarField) -> Result<()> {
    let h = f.in_frequency();
    let total: f64 = h.values().iter().map(|v| v.norm_sqr()).sum();
    if h.values()[0].norm_sqr() > 1e-24 * total.max(f64::MIN_POSITIVE) {
        return precondition("Besov norms are defined for mean-free fields");
    }
    Ok(())
}

/// `(sum_k (2^((n/p - n/q) k) ||P_k f||_p)^r)^(1/r)` over the grid's band range.
pub fn besov_norm(f: &ScalarField, p: f64, q: f64, r: u32) -> Result<f64> {
    check_mean_free(f)?;
    besov_norm_mean_excluded(f, p, q, r)
}

/// As [`besov_norm`], ignoring the zero mode instead of rejecting it.
pub fn besov_norm_mean_excluded(f: &ScalarField, p: f64, q: f64, r: u32) -> Result<f64> {
    let terms = besov_terms(f, p, q)?;
    match r {
        1 => Ok(terms.iter().sum()),
        2 => Ok(terms.iter().map(|t| t * t).sum::<f64>().sqrt()),
        _ => param(format!("Besov summability index {r} not in {{1, 2}}")),
    }
}

/// Weighted dyadic pieces `2^((n/p - n/q) k) ||P_k f||_p`, one per band.
pub fn besov_terms(f: &ScalarField, p: f64, q: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0 && q >= p) {
        return param(format!("Besov exponents need 1 <= p <= q, got p = {p}, q = {q}"));
    }
    let bands = BandRange::for_grid(f.grid())?;
    let n = f.grid().dim() as f64;
    let s = n * (inv(p) - inv(q));
    let fh = f.in_frequency();
    bands
        .iter()
        .map(|k| {
            let piece = radial(&fh, |r| band_symbol(r, k));
            Ok((s * k as f64).exp2() * piece.lebesgue_norm(p)?)
        })
        .collect()
}

fn support_in_band(f: &ScalarField, k: i32) -> Result<()> {
    let h = f.in_frequency();
    let top = h.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let lo = (k as f64 - 1.0).exp2();
    let hi = (k as f64 + 1.0).exp2();
    let mut bad = None;
    f.grid().for_each_mode(|idx, m| {
        if h.values()[idx].norm() > 1e-12 * top {
            let r = m.norm();
            if (r <= lo || r >= hi) && bad.is_none() {
                bad = Some(m.ints().to_vec());
            }
        }
    });
    match bad {
        Some(pt) => precondition(format!("frequency {pt:?} outside the shell of band {k}")),
        None => Ok(()),
    }
}

/// `||f||_q / (2^(n k (1/p - 1/q)) ||f||_p)` for `f` living on band `k`.
pub fn bernstein_ratio(f: &ScalarField, k: i32, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= p) {
        return param(format!("Bernstein needs 1 <= p <= q, got p = {p}, q = {q}"));
    }
    support_in_band(f, k)?;
    let n = f.grid().dim() as f64;
    let den = (n * k as f64 * (inv(p) - inv(q))).exp2() * f.lebesgue_norm(p)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(f.lebesgue_norm(q)? / den)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorMeasurement {
    pub commutator_norm: f64,
    pub grad_f_norm: f64,
    pub g_norm: f64,
    /// `2^k ||[P_k, f] g||_r / (||grad f||_p ||g||_q)`
    pub ratio: f64,
}

/// Measure `[P_k, f] g = P_k(f g) - f P_k g` for a Hoelder triple `1/p + 1/q = 1/r`.
pub fn commutator_ratio(
    f: &ScalarField,
    g: &ScalarField,
    k: i32,
    p: f64,
    q: f64,
    r: f64,
) -> Result<CommutatorMeasurement> {
    if (inv(p) + inv(q) - inv(r)).abs() > 1e-12 || p < 1.0 || q < 1.0 || r < 1.0 {
        return param(format!("1/{p} + 1/{q} != 1/{r}"));
    }
    let fg = f.mul(g)?;
    let comm = project_band(&fg, k)?.sub(&f.mul(&project_band(g, k)?)?)?;
    let grad = f.gradient()?;
    let mut mag = vec![0.0f64; f.grid().len()];
    for c in grad.components() {
        for (m, v) in mag.iter_mut().zip(c.in_physical().values()) {
            *m += v.norm_sqr();
        }
    }
    let mag = ScalarField::new(
        *f.grid(),
        mag.into_iter().map(|v| C64::new(v.sqrt(), 0.0)).collect(),
        crate::grid::Rep::Physical,
    )?;
    let commutator_norm = comm.lebesgue_norm(r)?;
    let grad_f_norm = mag.lebesgue_norm(p)?;
    let g_norm = g.lebesgue_norm(q)?;
    let den = grad_f_norm * g_norm;
    let ratio = if den == 0.0 { 0.0 } else { (k as f64).exp2() * commutator_norm / den };
    Ok(CommutatorMeasurement { commutator_norm, grad_f_norm, g_norm, ratio })
}

/// Exponents of the product estimate `||f g||_{B[p,q]_1} <~ ||f||_{B[p1,q1]_2} ||g||_{B[p2,q2]_2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductExponents {
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
    pub p: f64,
    pub q: f64,
}

impl ProductExponents {
    pub fn validate(&self) -> Result<()> {
        let Self { p1, q1, p2, q2, p, q } = *self;
        let mut failed = Vec::new();
        if !(1.0 <= p1 && p1 < q1 && q1.is_finite()) {
            failed.push("1 <= p1 < q1 < inf");
        }
        if !(1.0 <= p2 && p2 < q2 && q2.is_finite()) {
            failed.push("1 <= p2 < q2 < inf");
        }
        if !(1.0 <= p && p <= q && q.is_finite()) {
            failed.push("1 <= p <= q < inf");
        }
        if (1.0 / q - 1.0 / q1 - 1.0 / q2).abs() > 1e-12 {
            failed.push("1/q = 1/q1 + 1/q2");
        }
        if 1.0 / p >= 1.0 / p1 + 1.0 / q2 {
            failed.push("1/p < 1/p1 + 1/q2");
        }
        if 1.0 / p >= 1.0 / q1 + 1.0 / p2 {
            failed.push("1/p < 1/q1 + 1/p2");
        }
        if failed.is_empty() {
            Ok(())
        } else {
            param(format!("product exponents violate: {}", failed.join(", ")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioMeasurement {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl RatioMeasurement {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 { if lhs == 0.0 { 0.0 } else { f64::INFINITY } } else { lhs / rhs };
        Self { lhs, rhs, ratio }
    }
}

/// Measured sides of the product estimate. The product's mean is dropped; inputs should
/// be band-limited so that `f g` stays inside the representable bands.
pub fn product_ratio(f: &ScalarField, g: &ScalarField, e: &ProductExponents) -> Result<RatioMeasurement> {
    e.validate()?;
    let lhs = besov_norm_mean_excluded(&f.mul(g)?, e.p, e.q, 1)?;
    let rhs = besov_norm_mean_excluded(f, e.p1, e.q1, 2)? * besov_norm_mean_excluded(g, e.p2, e.q2, 2)?;
    Ok(RatioMeasurement::new(lhs, rhs))
}

/// The spacetime variant: `||FG||_{L1 B[2,n/2]_2}` against
/// `||F||_{L1 B[inf,inf]_1} ||G||_{Linf B[2,n/2]_2} + ||F||_{L2 B[p,2n]_2} ||G||_{L2 B[q,2n/3]_2}`.
pub fn spacetime_product_ratio(
    f: &crate::spacetime::SpacetimeField,
    g: &crate::spacetime::SpacetimeField,
    p: f64,
    q: f64,
) -> Result<RatioMeasurement> {
    use crate::spacetime::{spacetime_norm, SpatialNorm};
    let n = f.grid().dim() as f64;
    let mut failed = Vec::new();
    if !(2.0 <= p && p < 2.0 * n) {
        failed.push("2 <= p < 2n".to_string());
    }
    if n > 3.0 && p > 2.0 * n / (n - 3.0) {
        failed.push("p <= 2n/(n-3)".to_string());
    }
    if !(2.0 <= q && q < 2.0 * n / 3.0) {
        failed.push("2 <= q < 2n/3".to_string());
    }
    if !failed.is_empty() {
        return param(format!("spacetime product exponents violate: {}", failed.join(", ")));
    }
    f.grid().check_same(g.grid())?;
    if f.times() != g.times() {
        return Err(Error::Structural("F and G sampled at different times".into()));
    }
    let prod = crate::spacetime::SpacetimeField::new(
        f.times().to_vec(),
        f.slices().iter().zip(g.slices()).map(|(a, b)| a.mul(b)).collect::<Result<Vec<_>>>()?,
    )?;
    let b = |p: f64, q: f64, r: u32| SpatialNorm::Besov { p, q, r };
    let lhs = spacetime_norm(&prod, 1.0, b(2.0, n / 2.0, 2))?;
    let rhs = spacetime_norm(f, 1.0, b(f64::INFINITY, f64::INFINITY, 1))?
        * spacetime_norm(g, f64::INFINITY, b(2.0, n / 2.0, 2))?
        + spacetime_norm(f, 2.0, b(p, 2.0 * n, 2))? * spacetime_norm(g, 2.0, b(q, 2.0 * n / 3.0, 2))?;
    Ok(RatioMeasurement::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rep;

    #[test]
    fn bump_profile_shape() {
        assert_eq!(bump(0.3), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        let mut last = 1.0;
        for i in 0..=400 {
            let v = bump(1.0 + i as f64 / 400.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert!((bump(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn band_range_edges() {
        let g = GridSpec::new(2, 64, 1.0).unwrap();
        let b = BandRange::for_grid(&g).unwrap();
        assert_eq!((b.k_min, b.k_max), (1, 3));
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        assert!(BandRange::for_grid(&g).is_err());
    }

    #[test]
    fn band_symbol_peaks_at_dyadic_radius() {
        for k in -3..4 {
            assert!((band_symbol((k as f64).exp2(), k) - 1.0).abs() < 1e-15);
            assert_eq!(band_symbol((k as f64 - 1.0).exp2(), k), 0.0);
            assert_eq!(band_symbol((k as f64 + 1.0).exp2(), k), 0.0);
        }
    }

    #[test]
    fn out_of_range_projection_rejected() {
        let g = GridSpec::new(2, 32, 1.0).unwrap();
        let f = ScalarField::zeros(g, Rep::Physical);
        assert!(matches!(project_band(&f, 5), Err(Error::Range(_))));
        assert!(matches!(besov_norm(&f, 3.0, 2.0, 2), Err(Error::Parameter(_))));
    }
}
