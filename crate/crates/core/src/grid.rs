//! Periodic box, sampled fields and the Fourier conventions everything else uses.
//!
//! Forward: `f^(xi) = dx^n * sum_x f(x) exp(-2 pi i x.xi)`; inverse: `f(x) = L^-n * sum_xi f^(xi) exp(2 pi i x.xi)`.
//! A lattice plane wave therefore has a single coefficient equal to `L^n`, and
//! `sum |f|^2 dx^n = sum |f^|^2 / L^n`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{param, precondition, structural, Error, Result};
use crate::fft::fft_nd;

pub const MAX_DIM: usize = 6;
const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    size: usize,
    length: f64,
}

/// One lattice frequency: integer coordinates `m`, physical frequency `xi = m / L`.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    dim: usize,
    pub m: [i64; MAX_DIM],
    pub xi: [f64; MAX_DIM],
    /// Some coordinate sits on the Nyquist index `N/2`.
    pub nyquist: bool,
}

impl Mode {
    pub fn ints(&self) -> &[i64] {
        &self.m[..self.dim]
    }
    pub fn xi(&self) -> &[f64] {
        &self.xi[..self.dim]
    }
    pub fn norm(&self) -> f64 {
        self.xi().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    pub fn norm_sq(&self) -> f64 {
        self.xi().iter().map(|v| v * v).sum()
    }
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.xi().iter().zip(w).map(|(a, b)| a * b).sum()
    }
    pub fn is_zero(&self) -> bool {
        self.ints().iter().all(|&v| v == 0)
    }
}

impl GridSpec {
    pub fn new(n: usize, size: usize, length: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return param(format!("dimension {n} outside 2..={MAX_DIM}"));
        }
        if size < 8 || !size.is_power_of_two() {
            return param(format!("points per axis {size} must be a power of two >= 8"));
        }
        if !(length.is_finite() && length > 0.0) {
            return param(format!("box length {length} must be positive"));
        }
        Ok(Self { n, size, length })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn dx(&self) -> f64 {
        self.length / self.size as f64
    }
    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }
    pub fn volume(&self) -> f64 {
        self.length.powi(self.n as i32)
    }
    /// Largest representable frequency magnitude per axis, `N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.size as f64 / (2.0 * self.length)
    }

    /// Same lattice on a box scaled by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, self.size, self.length * lambda)
    }

    pub fn signed_index(&self, i: usize) -> i64 {
        if i < self.size / 2 {
            i as i64
        } else {
            i as i64 - self.size as i64
        }
    }

    pub fn decompose(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.n).rev() {
            out[a] = idx % self.size;
            idx /= self.size;
        }
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let mut digits = [0usize; MAX_DIM];
        self.decompose(idx, &mut digits);
        let mut mode = Mode { dim: self.n, m: [0; MAX_DIM], xi: [0.0; MAX_DIM], nyquist: false };
        for a in 0..self.n {
            mode.m[a] = self.signed_index(digits[a]);
            mode.xi[a] = mode.m[a] as f64 / self.length;
            mode.nyquist |= digits[a] == self.size / 2;
        }
        mode
    }

    /// Linear index of the lattice point with integer coordinates `m` (taken mod N).
    pub fn index_of(&self, m: &[i64]) -> usize {
        let s = self.size as i64;
        m.iter().take(self.n).fold(0usize, |acc, &v| acc * self.size + v.rem_euclid(s) as usize)
    }

    /// Index of `-m`.
    pub fn negated_index(&self, idx: usize) -> usize {
        let mode = self.mode(idx);
        let neg: Vec<i64> = mode.ints().iter().map(|v| -v).collect();
        self.index_of(&neg)
    }

    /// Visit every lattice frequency in storage order.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &Mode)) {
        let mut digits = [0usize; MAX_DIM];
        let mut mode = self.mode(0);
        let half = self.size / 2;
        for idx in 0..self.len() {
            f(idx, &mode);
            let mut a = self.n;
            while a > 0 {
                a -= 1;
                digits[a] += 1;
                if digits[a] == self.size {
                    digits[a] = 0;
                    mode.m[a] = 0;
                    mode.xi[a] = 0.0;
                    continue;
                }
                mode.m[a] = self.signed_index(digits[a]);
                mode.xi[a] = mode.m[a] as f64 / self.length;
                break;
            }
            mode.nyquist = digits[..self.n].contains(&half);
        }
    }

    /// Visit every sample point `x = i * dx` in storage order.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut digits = [0usize; MAX_DIM];
        let mut x = [0.0f64; MAX_DIM];
        let dx = self.dx();
        for idx in 0..self.len() {
            f(idx, &x[..self.n]);
            let mut a = self.n;
            while a > 0 {
                a -= 1;
                digits[a] += 1;
                if digits[a] == self.size {
                    digits[a] = 0;
                    x[a] = 0.0;
                    continue;
                }
                x[a] = digits[a] as f64 * dx;
                break;
            }
        }
    }

    /// Riemann-sum forward transform in place.
    pub fn forward_in_place(&self, data: &mut [C64]) {
        fft_nd(data, self.n, self.size, false);
        let s = self.cell_volume();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Inverse transform in place, scaled by `L^-n`.
    pub fn inverse_in_place(&self, data: &mut [C64]) {
        fft_nd(data, self.n, self.size, true);
        let s = 1.0 / self.volume();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Multiply frequency data by `symbol`, zeroing Nyquist points.
    /// A non-finite symbol value is only an error where the data carries energy, i.e. exceeds
    /// `1e-14` of the largest coefficient; below that the coefficient is transform roundoff
    /// and is set to zero.
    pub fn multiply_in_place(&self, data: &mut [C64], symbol: impl Fn(&Mode) -> C64) -> Result<()> {
        let floor = 1e-14 * data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut bad: Option<(Vec<i64>, C64)> = None;
        self.for_each_mode(|idx, mode| {
            if mode.nyquist {
                data[idx] = C64::default();
                return;
            }
            if data[idx] == C64::default() {
                return;
            }
            let s = symbol(mode);
            if !(s.re.is_finite() && s.im.is_finite()) {
                if data[idx].norm() <= floor {
                    data[idx] = C64::default();
                    return;
                }
                if bad.is_none() {
                    bad = Some((mode.ints().to_vec(), s));
                }
                return;
            }
            data[idx] *= s;
        });
        match bad {
            Some((point, s)) => Err(Error::Singularity {
                point,
                detail: format!("symbol value {s} on a coefficient carrying energy"),
            }),
            None => Ok(()),
        }
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return structural(format!("grid mismatch: {self:?} vs {other:?}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rep {
    Physical,
    Frequency,
}

/// Complex samples on a grid, held either as point values or as Fourier coefficients.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<C64>,
    rep: Rep,
    time: Option<f64>,
    real: bool,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<C64>, rep: Rep) -> Result<Self> {
        if values.len() != grid.len() {
            return structural(format!("{} samples for a grid of {}", values.len(), grid.len()));
        }
        Ok(Self { grid, values, rep, time: None, real: false })
    }

    pub fn zeros(grid: GridSpec, rep: Rep) -> Self {
        Self { grid, values: vec![C64::default(); grid.len()], rep, time: None, real: true }
    }

    pub fn constant(grid: GridSpec, c: C64) -> Self {
        Self { grid, values: vec![c; grid.len()], rep: Rep::Physical, time: None, real: c.im == 0.0 }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> C64) -> Self {
        let mut values = vec![C64::default(); grid.len()];
        grid.for_each_point(|idx, x| values[idx] = f(x));
        Self { grid, values, rep: Rep::Physical, time: None, real: false }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = Self::from_fn(grid, |x| C64::new(f(x), 0.0));
        out.real = true;
        out
    }

    /// `exp(2 pi i x.xi0)` with `xi0 = m / L`, evaluated exactly via the lattice phase.
    pub fn plane_wave(grid: GridSpec, m: &[i64]) -> Self {
        let size = grid.size as i64;
        let table: Vec<C64> =
            (0..size).map(|j| C64::from_polar(1.0, TWO_PI * j as f64 / size as f64)).collect();
        let mut values = vec![C64::default(); grid.len()];
        let mut digits = [0usize; MAX_DIM];
        for (idx, v) in values.iter_mut().enumerate() {
            grid.decompose(idx, &mut digits);
            let phase: i64 = (0..grid.n).map(|a| digits[a] as i64 * m[a]).sum();
            *v = table[phase.rem_euclid(size) as usize];
        }
        Self { grid, values, rep: Rep::Physical, time: None, real: false }
    }

    /// Field with the given frequency coefficients.
    pub fn from_spectrum(grid: GridSpec, coeffs: Vec<C64>) -> Result<Self> {
        Self::new(grid, coeffs, Rep::Frequency)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }
    pub fn rep(&self) -> Rep {
        self.rep
    }
    pub fn time(&self) -> Option<f64> {
        self.time
    }
    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }
    pub fn is_flagged_real(&self) -> bool {
        self.real
    }
    pub fn flagged_real(mut self, real: bool) -> Self {
        self.real = real;
        self
    }

    pub fn to_frequency(&self) -> Result<Self> {
        if self.rep != Rep::Physical {
            return structural("to_frequency expects a physical-space field");
        }
        Ok(self.in_frequency())
    }

    pub fn to_physical(&self) -> Result<Self> {
        if self.rep != Rep::Frequency {
            return structural("to_physical expects a frequency-space field");
        }
        Ok(self.in_physical())
    }

    /// Copy in frequency representation, transforming only if needed.
    pub fn in_frequency(&self) -> Self {
        let mut out = self.clone();
        if out.rep == Rep::Physical {
            out.grid.forward_in_place(&mut out.values);
            out.rep = Rep::Frequency;
        }
        out
    }

    pub fn in_physical(&self) -> Self {
        let mut out = self.clone();
        if out.rep == Rep::Frequency {
            out.grid.inverse_in_place(&mut out.values);
            out.rep = Rep::Physical;
        }
        out
    }

    fn in_rep(&self, rep: Rep) -> Self {
        match rep {
            Rep::Physical => self.in_physical(),
            Rep::Frequency => self.in_frequency(),
        }
    }

    /// Apply the Fourier multiplier `m(xi)`; the result keeps this field's representation.
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> C64) -> Result<Self> {
        self.apply_mode_symbol(|mode| m(mode.xi()))
    }

    pub(crate) fn apply_mode_symbol(&self, m: impl Fn(&Mode) -> C64) -> Result<Self> {
        let mut out = self.in_frequency();
        self.grid.multiply_in_place(&mut out.values, m)?;
        out.real = false;
        Ok(out.in_rep(self.rep))
    }

    pub fn partial(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid.n {
            return structural(format!("axis {axis} in dimension {}", self.grid.n));
        }
        self.apply_mode_symbol(|m| C64::new(0.0, TWO_PI * m.xi[axis]))
    }

    pub fn gradient(&self) -> Result<VectorField> {
        let comps = (0..self.grid.n).map(|a| self.partial(a)).collect::<Result<Vec<_>>>()?;
        VectorField::new(comps)
    }

    pub fn laplacian(&self) -> Result<Self> {
        self.apply_mode_symbol(|m| C64::new(-4.0 * PI * PI * m.norm_sq(), 0.0))
    }

    pub fn lebesgue_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return param(format!("Lebesgue exponent {p} < 1"));
        }
        let phys = self.in_physical();
        if p.is_infinite() {
            return Ok(phys.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        let dv = self.grid.cell_volume();
        let s: f64 = phys.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * dv;
        Ok(s.powf(1.0 / p))
    }

    /// Sobolev norm through the multiplier `|2 pi xi|^s` (homogeneous) or `<2 pi xi>^s`.
    /// Homogeneous norms of fields with a mean need `exclude_zero_mode`.
    pub fn sobolev_norm(&self, s: f64, homogeneous: bool, exclude_zero_mode: bool) -> Result<f64> {
        let freq = self.in_frequency();
        let total: f64 = freq.values.iter().map(|v| v.norm_sqr()).sum();
        let zero = freq.values[0].norm_sqr();
        if homogeneous && !exclude_zero_mode && zero > 1e-24 * total.max(f64::MIN_POSITIVE) {
            return precondition("homogeneous Sobolev norm of a field with nonzero mean");
        }
        let mut acc = 0.0;
        self.grid.for_each_mode(|idx, mode| {
            if mode.nyquist || (homogeneous && mode.is_zero()) {
                return;
            }
            let r2 = 4.0 * PI * PI * mode.norm_sq();
            let w = if homogeneous { r2.powf(s) } else { (1.0 + r2).powf(s) };
            acc += w * freq.values[idx].norm_sqr();
        });
        Ok((acc / self.grid.volume()).sqrt())
    }

    /// `(sum |f|^2 dx^n)^{1/2}`, computed in whichever representation is held.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        match self.rep {
            Rep::Physical => (s * self.grid.cell_volume()).sqrt(),
            Rep::Frequency => (s / self.grid.volume()).sqrt(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.in_physical().values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `<f, g> = sum f conj(g) dx^n`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let a = self.in_physical();
        let b = other.in_physical();
        let s: C64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Spatial average.
    pub fn mean(&self) -> C64 {
        self.in_frequency().values[0] / self.grid.volume()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let o = other.in_rep(self.rep);
        let mut out = self.clone();
        out.values.iter_mut().zip(&o.values).for_each(|(a, b)| *a = f(*a, *b));
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.real = self.real && c.im == 0.0;
        out
    }

    /// Pointwise product, returned in physical space.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut a = self.in_physical();
        let b = other.in_physical();
        a.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x *= y);
        a.real = self.real && other.real;
        Ok(a)
    }

    pub fn map_physical(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut a = self.in_physical();
        a.values.iter_mut().for_each(|v| *v = f(*v));
        a.real = false;
        a
    }

    pub fn conj(&self) -> Self {
        let mut out = self.map_physical(|v| v.conj());
        out.real = self.real;
        out
    }

    pub fn real_part(&self) -> Self {
        self.map_physical(|v| C64::new(v.re, 0.0)).flagged_real(true)
    }

    pub fn imag_part(&self) -> Self {
        self.map_physical(|v| C64::new(v.im, 0.0)).flagged_real(true)
    }

    /// `max |f^(xi) - conj f^(-xi)|` relative to `max |f^|`; zero for real fields.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let f = self.in_frequency();
        let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        self.grid.for_each_mode(|idx, mode| {
            if mode.nyquist {
                return;
            }
            let j = self.grid.negated_index(idx);
            worst = worst.max((f.values[idx] - f.values[j].conj()).norm());
        });
        worst / scale
    }

    /// Largest imaginary part relative to the largest modulus.
    pub fn imaginary_ratio(&self) -> f64 {
        let p = self.in_physical();
        let top = p.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        p.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / top
    }

    /// Relative L2 distance `||self - other|| / max(||self||, ||other||)`, zero when both vanish.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?.l2_norm();
        let s = self.l2_norm().max(other.l2_norm());
        Ok(if s == 0.0 { d } else { d / s })
    }
}

/// `n` scalar components on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
    divergence_free: bool,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return structural("vector field without components");
        };
        let grid = first.grid;
        if components.len() != grid.n {
            return structural(format!("{} components in dimension {}", components.len(), grid.n));
        }
        for c in &components {
            grid.check_same(&c.grid)?;
        }
        Ok(Self { components, divergence_free: false })
    }

    pub fn zeros(grid: GridSpec, rep: Rep) -> Self {
        Self { components: vec![ScalarField::zeros(grid, rep); grid.n], divergence_free: true }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.components[0].grid
    }
    pub fn dim(&self) -> usize {
        self.components.len()
    }
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }
    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }
    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Set the certificate without checking; used where the construction guarantees it.
    pub(crate) fn assume_divergence_free(mut self) -> Self {
        self.divergence_free = true;
        self
    }

    pub fn divergence(&self) -> Result<ScalarField> {
        let mut acc = self.components[0].partial(0)?.in_frequency();
        for (j, c) in self.components.iter().enumerate().skip(1) {
            acc = acc.add(&c.partial(j)?)?;
        }
        Ok(acc)
    }

    /// Check `||div V||_inf <= 1e-10 ||grad V||_inf` and set the certificate.
    pub fn certify_divergence_free(mut self) -> Result<Self> {
        let div = self.divergence()?.max_abs();
        let mut grad = 0.0f64;
        for c in &self.components {
            for g in c.gradient()?.components {
                grad = grad.max(g.max_abs());
            }
        }
        if div > 1e-10 * grad {
            return precondition(format!(
                "divergence {div:.3e} exceeds 1e-10 of gradient scale {grad:.3e}"
            ));
        }
        self.divergence_free = true;
        Ok(self)
    }

    /// `V . w` for a fixed vector `w`.
    pub fn dot_const(&self, w: &[f64]) -> Result<ScalarField> {
        let mut acc = self.components[0].scale(C64::new(w[0], 0.0));
        for (c, &wj) in self.components.iter().zip(w).skip(1) {
            acc = acc.add(&c.scale(C64::new(wj, 0.0)))?;
        }
        Ok(acc)
    }

    pub fn in_frequency(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.in_frequency()).collect(),
            divergence_free: self.divergence_free,
        }
    }

    pub fn in_physical(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.in_physical()).collect(),
            divergence_free: self.divergence_free,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(comps)?;
        out.divergence_free = self.divergence_free && other.divergence_free;
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            components: self.components.iter().map(|v| v.scale(c)).collect(),
            divergence_free: self.divergence_free,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let mut d = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            d += a.sub(b)?.l2_norm().powi(2);
        }
        let s = self.l2_norm().max(other.l2_norm());
        Ok(if s == 0.0 { d.sqrt() } else { d.sqrt() / s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Philox;

    fn random_field(grid: GridSpec, seed: u64) -> ScalarField {
        let mut r = Philox::new(seed, 0);
        let vals = (0..grid.len()).map(|_| C64::new(r.normal(), r.normal())).collect();
        ScalarField::new(grid, vals, Rep::Physical).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 12, 1.0).is_err());
        assert!(GridSpec::new(2, 4, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        assert!(GridSpec::new(7, 16, 1.0).is_err());
        assert!(GridSpec::new(3, 8, 2.0).is_ok());
    }

    #[test]
    fn constant_maps_to_volume_at_origin() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let f = ScalarField::constant(g, C64::new(1.0, 0.0)).to_frequency().unwrap();
        assert!((f.values()[0] - C64::new(9.0, 0.0)).norm() < 1e-12);
        assert!(f.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let g = GridSpec::new(3, 8, 2.0).unwrap();
        let m = [1, -2, 3];
        let f = ScalarField::plane_wave(g, &m).to_frequency().unwrap();
        let target = g.index_of(&m);
        for (i, v) in f.values().iter().enumerate() {
            if i == target {
                assert!((v - C64::new(8.0, 0.0)).norm() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn representation_mismatch_is_structural() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let f = ScalarField::zeros(g, Rep::Frequency);
        assert!(matches!(f.to_frequency(), Err(Error::Structural(_))));
        assert!(ScalarField::new(g, vec![C64::default(); 3], Rep::Physical).is_err());
    }

    #[test]
    fn round_trip_and_plancherel() {
        let g = GridSpec::new(2, 32, 1.7).unwrap();
        let f = random_field(g, 3);
        let back = f.to_frequency().unwrap().to_physical().unwrap();
        assert!(back.relative_distance(&f).unwrap() < 1e-12);
        let fh = f.to_frequency().unwrap();
        assert!((f.l2_norm() - fh.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn derivative_symbols_on_plane_wave() {
        let g = GridSpec::new(2, 16, 2.0).unwrap();
        let m = [3, -1];
        let w = ScalarField::plane_wave(g, &m);
        let d = w.partial(0).unwrap();
        let expect = w.scale(C64::new(0.0, TWO_PI * 1.5));
        assert!(d.relative_distance(&expect).unwrap() < 1e-13);
        let lap = w.laplacian().unwrap();
        let expect = w.scale(C64::new(-4.0 * PI * PI * (2.25 + 0.25), 0.0));
        assert!(lap.relative_distance(&expect).unwrap() < 1e-13);
        let c = ScalarField::constant(g, C64::new(2.0, 1.0));
        assert!(c.gradient().unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn singular_symbol_named_only_where_energy_sits() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let w = ScalarField::plane_wave(g, &[1, 0]);
        let ok = w.apply_multiplier(|xi| if xi[0] == 0.0 { C64::new(f64::INFINITY, 0.0) } else { C64::new(1.0, 0.0) });
        assert!(ok.is_ok());
        let bad = w.apply_multiplier(|xi| C64::new(1.0 / (xi[0] - 1.0), 0.0));
        match bad {
            Err(Error::Singularity { point, .. }) => assert_eq!(point, vec![1, 0]),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = GridSpec::new(3, 8, 2.0).unwrap();
        let one = ScalarField::constant(g, C64::new(1.0, 0.0));
        for p in [1.0, 2.0, 3.5] {
            assert!((one.lebesgue_norm(p).unwrap() - 2f64.powf(3.0 / p)).abs() < 1e-12);
        }
        assert_eq!(one.lebesgue_norm(f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(one.sobolev_norm(1.0, true, false), Err(Error::Precondition(_))));
        let w = ScalarField::plane_wave(g, &[1, 2, 0]);
        let xi = (5.0f64).sqrt() / 2.0;
        let s = 1.5;
        let expect = (TWO_PI * xi).powf(s) * 2f64.powf(1.5);
        assert!((w.sobolev_norm(s, true, false).unwrap() - expect).abs() < 1e-11 * expect);
    }

    #[test]
    fn mode_iteration_matches_direct_decoding() {
        let g = GridSpec::new(3, 8, 1.3).unwrap();
        g.for_each_mode(|idx, m| {
            let d = g.mode(idx);
            assert_eq!(m.ints(), d.ints());
            assert_eq!(m.nyquist, d.nyquist);
            assert_eq!(g.index_of(m.ints()), idx);
        });
    }
}
