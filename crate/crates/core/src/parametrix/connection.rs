//! The data annulus and the free (or Duhamel-forced) connection evaluated in closed form.

use std::f64::consts::PI;

use crate::error::{param, precondition, structural, Result};
use crate::grid::{GridSpec, Rep, ScalarField, VectorField};
use crate::lp::window;
use crate::rng::Philox;
use crate::sample::random_solenoidal;
use crate::C64;

/// Radial cutoff for the data shell. In units `r = |xi| / rho` it is 1 on `[1, 2]` and
/// vanishes outside `[1/2, 3]`; `rho = N/(8L)` keeps the support below the Nyquist radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusCutoff {
    pub rho: f64,
}

impl AnnulusCutoff {
    pub fn for_grid(grid: &GridSpec) -> Self {
        Self { rho: grid.size() as f64 / (8.0 * grid.length()) }
    }

    pub fn with_rho(grid: &GridSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || 3.0 * rho >= grid.nyquist() {
            return param(format!("shell radius {rho} does not fit below the Nyquist radius {}", grid.nyquist()));
        }
        Ok(Self { rho })
    }

    pub fn value(&self, r: f64) -> f64 {
        let s = r / self.rho;
        (1.0 - window(s, 0.5, 1.0)) * window(s, 2.0, 3.0)
    }

    pub fn on_plateau(&self, r: f64) -> bool {
        self.value(r) == 1.0
    }

    pub fn in_support(&self, r: f64) -> bool {
        self.value(r) > 0.0
    }
}

/// Default frequency gap between the data shell and the connection: `max(2, min(16, rho L / 2))`.
pub fn default_gap(grid: &GridSpec, cutoff: &AnnulusCutoff) -> f64 {
    (cutoff.rho * grid.length() / 2.0).clamp(2.0, 16.0)
}

/// One lattice frequency carried by the connection.
#[derive(Clone, Debug)]
pub struct ConnMode {
    pub index: usize,
    pub ints: Vec<i64>,
    pub xi: Vec<f64>,
    pub norm: f64,
}

/// Piecewise-linear forcing in time, zero outside `[t_0, t_M]`.
#[derive(Clone, Debug)]
struct Forcing {
    times: Vec<f64>,
    /// `[time][mode][component]`.
    values: Vec<Vec<Vec<C64>>>,
}

/// Spectral state of the connection at one time, on its sparse support.
/// Each entry is indexed `[mode][component]`.
#[derive(Clone, Debug)]
pub struct ConnectionModes {
    pub t: f64,
    pub a: Vec<Vec<C64>>,
    pub a_t: Vec<Vec<C64>>,
    pub a_tt: Vec<Vec<C64>>,
    pub a_ttt: Vec<Vec<C64>>,
    pub f: Vec<Vec<C64>>,
    pub f_t: Vec<Vec<C64>>,
}

/// Solution of `box A = F` (`A_tt = Delta A - F`) from divergence-free data, mode by mode.
#[derive(Clone, Debug)]
pub struct FreeConnection {
    grid: GridSpec,
    modes: Vec<ConnMode>,
    a: Vec<Vec<C64>>,
    a_dot: Vec<Vec<C64>>,
    forcing: Option<Forcing>,
}

/// Coefficients below this fraction of the largest one are transform roundoff and dropped.
const SUPPORT_FLOOR: f64 = 1e-13;

fn spectra(v: &VectorField) -> Vec<Vec<C64>> {
    v.components().iter().map(|c| c.in_frequency().into_values()).collect()
}

impl FreeConnection {
    pub fn new(a: &VectorField, a_dot: &VectorField) -> Result<Self> {
        a.grid().check_same(a_dot.grid())?;
        if !a.is_divergence_free() || !a_dot.is_divergence_free() {
            return precondition("connection data need a divergence-free certificate");
        }
        for c in a.components().iter().chain(a_dot.components()) {
            if c.imaginary_ratio() > 1e-12 {
                return precondition("connection data must be real-valued");
            }
        }
        let grid = *a.grid();
        let sa = spectra(a);
        let sd = spectra(a_dot);
        let top = sa.iter().chain(&sd).flatten().map(|v| v.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        let mut ca = Vec::new();
        let mut cd = Vec::new();
        grid.for_each_mode(|idx, m| {
            if m.nyquist {
                return;
            }
            let va: Vec<C64> = sa.iter().map(|c| c[idx]).collect();
            let vd: Vec<C64> = sd.iter().map(|c| c[idx]).collect();
            let big = va.iter().chain(&vd).any(|v| v.norm() > SUPPORT_FLOOR * top);
            if big {
                modes.push(ConnMode { index: idx, ints: m.ints().to_vec(), xi: m.xi().to_vec(), norm: m.norm() });
                ca.push(va);
                cd.push(vd);
            }
        });
        Ok(Self { grid, modes, a: ca, a_dot: cd, forcing: None })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self { grid, modes: Vec::new(), a: Vec::new(), a_dot: Vec::new(), forcing: None }
    }

    /// Random real data on `1/L <= |xi| <= r_max`, scaled so that [`Self::data_size`] is `eps`.
    pub fn random(grid: GridSpec, r_max: f64, eps: f64, rng: &mut Philox) -> Result<Self> {
        let lo = 1.0 / grid.length();
        if r_max < lo {
            return param(format!("connection radius {r_max} below the lattice spacing {lo}"));
        }
        let a = random_solenoidal(grid, lo, r_max, rng)?;
        let a_dot = random_solenoidal(grid, lo, r_max, rng)?;
        let c = Self::new(&a, &a_dot)?;
        let size = c.data_size();
        Ok(if size == 0.0 { c } else { c.scaled(eps / size) })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        let sc = |v: &mut Vec<Vec<C64>>| v.iter_mut().flatten().for_each(|x| *x *= s);
        sc(&mut out.a);
        sc(&mut out.a_dot);
        if let Some(f) = &mut out.forcing {
            f.values.iter_mut().flatten().flatten().for_each(|x| *x *= s);
        }
        out
    }

    /// Attach a forcing sampled at `times` (nonnegative, increasing), linear in between.
    /// Its support joins the connection's sparse support.
    pub fn with_forcing(mut self, times: Vec<f64>, samples: &[VectorField]) -> Result<Self> {
        if times.len() < 2 || times.len() != samples.len() {
            return structural("forcing needs at least two samples, one per time");
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return param("forcing times must be nonnegative and increasing");
        }
        for s in samples {
            self.grid.check_same(s.grid())?;
            if !s.is_divergence_free() {
                return precondition("forcing samples need a divergence-free certificate");
            }
        }
        let spec: Vec<Vec<Vec<C64>>> = samples.iter().map(spectra).collect();
        let top = spec.iter().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        let n = self.grid.dim();
        let known: std::collections::HashSet<usize> = self.modes.iter().map(|m| m.index).collect();
        let grid = self.grid;
        grid.for_each_mode(|idx, m| {
            if m.nyquist || known.contains(&idx) {
                return;
            }
            if spec.iter().flatten().any(|c| c[idx].norm() > SUPPORT_FLOOR * top) {
                self.modes.push(ConnMode { index: idx, ints: m.ints().to_vec(), xi: m.xi().to_vec(), norm: m.norm() });
                self.a.push(vec![C64::default(); n]);
                self.a_dot.push(vec![C64::default(); n]);
            }
        });
        let values = spec
            .iter()
            .map(|s| self.modes.iter().map(|m| s.iter().map(|c| c[m.index]).collect()).collect())
            .collect();
        self.forcing = Some(Forcing { times, values });
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn modes(&self) -> &[ConnMode] {
        &self.modes
    }
    pub fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    /// Largest `|xi|` on the support (0 for the zero connection).
    pub fn spectral_radius(&self) -> f64 {
        self.modes.iter().map(|m| m.norm).fold(0.0, f64::max)
    }

    /// `(||A||^2_{H^{n/2-1}} + ||A_t||^2_{H^{n/2-2}})^{1/2}` at `t = 0`, homogeneous norms.
    pub fn data_size(&self) -> f64 {
        let n = self.grid.dim() as f64;
        let mut acc = 0.0;
        for (k, m) in self.modes.iter().enumerate() {
            if m.norm == 0.0 {
                continue;
            }
            let w = 2.0 * PI * m.norm;
            let ea: f64 = self.a[k].iter().map(|v| v.norm_sqr()).sum();
            let ed: f64 = self.a_dot[k].iter().map(|v| v.norm_sqr()).sum();
            acc += w.powf(n - 2.0) * ea + w.powf(n - 4.0) * ed;
        }
        (acc / self.grid.volume()).sqrt()
    }

    fn forcing_at(&self, t: f64) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
        let n = self.grid.dim();
        let zero = || vec![vec![C64::default(); n]; self.modes.len()];
        let Some(f) = &self.forcing else {
            return (zero(), zero());
        };
        let last = f.times.len() - 1;
        if t < f.times[0] || t > f.times[last] {
            return (zero(), zero());
        }
        let seg = f.times.partition_point(|&s| s <= t).saturating_sub(1).min(last - 1);
        let (t0, t1) = (f.times[seg], f.times[seg + 1]);
        let tau = t - t0;
        let h = t1 - t0;
        let mut val = zero();
        let mut slope = zero();
        for k in 0..self.modes.len() {
            for c in 0..n {
                let s = (f.values[seg + 1][k][c] - f.values[seg][k][c]) / h;
                slope[k][c] = s;
                val[k][c] = f.values[seg][k][c] + s * tau;
            }
        }
        (val, slope)
    }

    /// Intervals of `[0, t]` on which the forcing is linear: `(start, length, segment)`.
    fn pieces(&self, t: f64) -> Vec<(f64, f64, Option<usize>)> {
        let Some(f) = &self.forcing else {
            return vec![(0.0, t, None)];
        };
        if t <= 0.0 {
            return vec![(0.0, t, None)];
        }
        let mut cuts = vec![0.0];
        cuts.extend(f.times.iter().copied().filter(|&s| s > 0.0 && s < t));
        cuts.push(t);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let seg = if mid > f.times[0] && mid < f.times[f.times.len() - 1] {
                    Some(f.times.partition_point(|&s| s <= mid) - 1)
                } else {
                    None
                };
                (w[0], w[1] - w[0], seg)
            })
            .collect()
    }

    /// Closed-form spectral state at time `t`.
    pub fn modes_at(&self, t: f64) -> ConnectionModes {
        let n = self.grid.dim();
        let pieces = self.pieces(t);
        let mut a = self.a.clone();
        let mut a_t = self.a_dot.clone();
        for (k, m) in self.modes.iter().enumerate() {
            let w = 2.0 * PI * m.norm;
            for c in 0..n {
                let (mut y, mut v) = (a[k][c], a_t[k][c]);
                for &(start, len, seg) in &pieces {
                    let (f0, s) = match (seg, &self.forcing) {
                        (Some(i), Some(f)) => {
                            let h = f.times[i + 1] - f.times[i];
                            let s = (f.values[i + 1][k][c] - f.values[i][k][c]) / h;
                            (f.values[i][k][c] + s * (start - f.times[i]), s)
                        }
                        _ => (C64::default(), C64::default()),
                    };
                    (y, v) = propagate(y, v, w, len, f0, s);
                }
                a[k][c] = y;
                a_t[k][c] = v;
            }
        }
        let (f, f_t) = self.forcing_at(t);
        let mut a_tt = a.clone();
        let mut a_ttt = a.clone();
        for (k, m) in self.modes.iter().enumerate() {
            let w2 = (2.0 * PI * m.norm).powi(2);
            for c in 0..n {
                a_tt[k][c] = -a[k][c] * w2 - f[k][c];
                a_ttt[k][c] = -a_t[k][c] * w2 - f_t[k][c];
            }
        }
        ConnectionModes { t, a, a_t, a_tt, a_ttt, f, f_t }
    }

    /// Scatter sparse coefficients `[mode][component]` into physical component fields.
    pub fn synthesize(&self, coeffs: &[Vec<C64>]) -> Result<VectorField> {
        let n = self.grid.dim();
        let mut comps = Vec::with_capacity(n);
        for c in 0..n {
            let mut dense = vec![C64::default(); self.grid.len()];
            for (k, m) in self.modes.iter().enumerate() {
                dense[m.index] = coeffs[k][c];
            }
            comps.push(ScalarField::from_spectrum(self.grid, dense)?.in_physical().real_part());
        }
        VectorField::new(comps)
    }

    /// `A(t)` and `A_t(t)` as physical fields.
    pub fn fields(&self, t: f64) -> Result<(VectorField, VectorField)> {
        let m = self.modes_at(t);
        Ok((self.synthesize(&m.a)?, self.synthesize(&m.a_t)?))
    }

    /// A scalar sparse spectrum on the connection support, as a physical field.
    pub fn synthesize_scalar(&self, coeffs: &[C64]) -> Result<ScalarField> {
        let mut dense = vec![C64::default(); self.grid.len()];
        for (k, m) in self.modes.iter().enumerate() {
            dense[m.index] = coeffs[k];
        }
        Ok(ScalarField::from_spectrum(self.grid, dense)?.in_physical())
    }

    pub fn zero_field(&self) -> ScalarField {
        ScalarField::zeros(self.grid, Rep::Physical)
    }
}

/// Advance `y'' + w^2 y = -(f0 + s tau)` by `len`.
fn propagate(y: C64, v: C64, w: f64, len: f64, f0: C64, s: C64) -> (C64, C64) {
    if w == 0.0 {
        let y1 = y + v * len - f0 * (len * len / 2.0) - s * (len.powi(3) / 6.0);
        let v1 = v - f0 * len - s * (len * len / 2.0);
        return (y1, v1);
    }
    let w2 = w * w;
    let z = y + f0 / w2;
    let zd = v + s / w2;
    let (sn, cs) = (w * len).sin_cos();
    let z1 = z * cs + zd * (sn / w);
    let zd1 = -z * (w * sn) + zd * cs;
    let f1 = f0 + s * len;
    (z1 - f1 / w2, zd1 - s / w2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_shape() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let a = AnnulusCutoff::for_grid(&g);
        assert_eq!(a.rho, 1.0);
        assert_eq!(a.value(1.0), 1.0);
        assert_eq!(a.value(2.0), 1.0);
        assert_eq!(a.value(0.5), 0.0);
        assert_eq!(a.value(3.0), 0.0);
        assert!(a.value(0.75) > 0.0 && a.value(0.75) < 1.0);
    }

    #[test]
    fn propagate_matches_duhamel_quadrature() {
        // y'' + w^2 y = -(f0 + s t), y(0) = 1, y'(0) = 0; compare with the variation-of-constants integral.
        let (w, f0, s, t) = (3.0, C64::new(0.4, 0.1), C64::new(-0.2, 0.3), 1.3);
        let (y, v) = propagate(C64::new(1.0, 0.0), C64::default(), w, t, f0, s);
        let m = 20000;
        let h = t / m as f64;
        let mut integral = C64::default();
        let mut dintegral = C64::default();
        for i in 0..=m {
            let tau = i as f64 * h;
            let wt = if i == 0 || i == m { 0.5 } else { 1.0 };
            let f = f0 + s * tau;
            integral += f * ((w * (t - tau)).sin() / w) * (wt * h);
            dintegral += f * (w * (t - tau)).cos() * (wt * h);
        }
        let y_ref = C64::new((w * t).cos(), 0.0) - integral;
        let v_ref = C64::new(-w * (w * t).sin(), 0.0) - dintegral;
        assert!((y - y_ref).norm() < 1e-7, "{y} vs {y_ref}");
        assert!((v - v_ref).norm() < 1e-7, "{v} vs {v_ref}");
    }
}
