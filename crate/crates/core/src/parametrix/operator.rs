//! Distorted plane waves `U(t) h = sum_xi e^{2 pi i Psi(t,x,omega(xi))} e^{2 pi i x.xi}
//! e^{+-2 pi i t |xi|} h(xi) a(xi) L^-n` and their adjoints.
//!
//! Shell modes are grouped by direction; each group shares one phase, so a group costs one
//! inverse FFT of its coefficients times `e^{2 pi i Psi}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::connection::{AnnulusCutoff, ConnectionModes, FreeConnection};
use super::phase::{PhaseField, PhaseSlice, PhaseSpec, Want};
use crate::error::{param, precondition, structural, Result};
use crate::grid::{GridSpec, Rep, ScalarField, VectorField};
use crate::microlocal::Direction;
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;
/// Shells with at most this many modes keep one group per lattice direction under `Auto`.
pub const EXACT_LIMIT: usize = 512;
const CHUNK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    Auto,
    Exact,
    /// Round unit directions to a cubic lattice of spacing `eta`; `0` picks `theta_min / 4`.
    Bucketed(f64),
}

#[derive(Clone, Debug)]
pub struct ShellMode {
    pub index: usize,
    pub ints: Vec<i64>,
    pub xi: Vec<f64>,
    pub norm: f64,
    /// `a(|xi|)`.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Bucket {
    pub omega: Direction,
    /// Positions in [`DirectionCache::modes`].
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DirectionCache {
    grid: GridSpec,
    cutoff: AnnulusCutoff,
    modes: Vec<ShellMode>,
    buckets: Vec<Bucket>,
    lookup: Vec<Option<u32>>,
    exact: bool,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl DirectionCache {
    pub fn build(grid: GridSpec, cutoff: AnnulusCutoff, policy: CachePolicy, theta_min: f64) -> Result<Self> {
        let mut modes = Vec::new();
        let mut lookup = vec![None; grid.len()];
        grid.for_each_mode(|idx, m| {
            if m.nyquist || m.is_zero() {
                return;
            }
            let r = m.norm();
            if cutoff.in_support(r) {
                lookup[idx] = Some(modes.len() as u32);
                modes.push(ShellMode { index: idx, ints: m.ints().to_vec(), xi: m.xi().to_vec(), norm: r, weight: cutoff.value(r) });
            }
        });
        let exact = match policy {
            CachePolicy::Auto => modes.len() <= EXACT_LIMIT,
            CachePolicy::Exact => true,
            CachePolicy::Bucketed(_) => false,
        };
        let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        if exact {
            for (k, m) in modes.iter().enumerate() {
                let g = m.ints.iter().fold(0, |acc, &v| gcd(acc, v));
                groups.entry(m.ints.iter().map(|v| v / g).collect()).or_default().push(k);
            }
        } else {
            let eta = match policy {
                CachePolicy::Bucketed(e) if e > 0.0 => e,
                _ => theta_min / 4.0,
            };
            if !(eta > 0.0 && eta.is_finite()) {
                return param(format!("direction spacing {eta} must be positive"));
            }
            for (k, m) in modes.iter().enumerate() {
                groups.entry(m.xi.iter().map(|v| (v / m.norm / eta).round() as i64).collect()).or_default().push(k);
            }
        }
        let mut buckets = Vec::with_capacity(groups.len());
        for (key, members) in groups {
            let omega = if exact {
                Direction::new(&key.iter().map(|&v| v as f64).collect::<Vec<_>>())?
            } else {
                let mut mean = vec![0.0; grid.dim()];
                for &k in &members {
                    for (acc, v) in mean.iter_mut().zip(&modes[k].xi) {
                        *acc += v / modes[k].norm;
                    }
                }
                Direction::new(&mean)?
            };
            buckets.push(Bucket { omega, members });
        }
        Ok(Self { grid, cutoff, modes, buckets, lookup, exact })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn cutoff(&self) -> &AnnulusCutoff {
        &self.cutoff
    }
    pub fn modes(&self) -> &[ShellMode] {
        &self.modes
    }
    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Shell position of a grid index, if the mode is covered.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.lookup[index].map(|v| v as usize)
    }

    /// Dense frequency coefficients of `h`, checked to live on covered modes.
    fn coefficients(&self, h: &ScalarField) -> Result<Vec<C64>> {
        self.grid.check_same(h.grid())?;
        let mut c = h.in_frequency().into_values();
        let top = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (idx, v) in c.iter_mut().enumerate() {
            if self.lookup[idx].is_none() && *v != C64::default() {
                if v.norm() > 1e-13 * top {
                    let m = self.grid.mode(idx);
                    return structural(format!("no cached direction for mode {:?}", m.ints()));
                }
                *v = C64::default();
            }
        }
        Ok(c)
    }
}

/// Spectral weight applied to `h` before synthesis.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Weight {
    One,
    Xi(usize),
    Abs,
}

impl Weight {
    fn at(self, m: &ShellMode) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Xi(j) => m.xi[j],
            Weight::Abs => m.norm,
        }
    }
}

/// Spatial factor multiplying `e^{2 pi i Psi}`.
enum Spatial {
    Unit,
    Const(C64),
    Field(Vec<C64>),
}

impl Spatial {
    fn field(f: &ScalarField, c: C64) -> Self {
        Spatial::Field(f.values().iter().map(|v| v * c).collect())
    }
    fn at(&self, i: usize) -> C64 {
        match self {
            Spatial::Unit => C64::new(1.0, 0.0),
            Spatial::Const(c) => *c,
            Spatial::Field(v) => v[i],
        }
    }
}

/// Per-time data shared by all buckets.
struct Ctx {
    modes: ConnectionModes,
    a: Option<VectorField>,
}

type Terms<'a> = dyn Fn(&PhaseSlice, &Ctx) -> Vec<(Weight, Spatial)> + Sync + 'a;

/// All phases for one connection and sign over a direction cache.
#[derive(Clone, Debug)]
pub struct PhaseFamily {
    cache: Arc<DirectionCache>,
    conn: Arc<FreeConnection>,
    spec: PhaseSpec,
    phases: Vec<PhaseField>,
    free: bool,
}

impl PhaseFamily {
    pub fn build(cache: Arc<DirectionCache>, conn: Arc<FreeConnection>, spec: PhaseSpec) -> Result<Self> {
        cache.grid.check_same(conn.grid())?;
        let phases = cache
            .buckets
            .par_iter()
            .map(|b| PhaseField::with_part(&conn, &b.omega, &spec, super::phase::SplitPart::Full))
            .collect::<Result<Vec<_>>>()?;
        let free = conn.modes().is_empty();
        Ok(Self { cache, conn, spec, phases, free })
    }

    pub fn cache(&self) -> &Arc<DirectionCache> {
        &self.cache
    }
    pub fn connection(&self) -> &Arc<FreeConnection> {
        &self.conn
    }
    pub fn spec(&self) -> &PhaseSpec {
        &self.spec
    }
    pub fn phases(&self) -> &[PhaseField] {
        &self.phases
    }
    pub fn is_free(&self) -> bool {
        self.free
    }
    fn grid(&self) -> GridSpec {
        self.cache.grid
    }

    /// `e^{+-2 pi i t |xi|} a(xi)`.
    fn half_wave(&self, m: &ShellMode, t: f64) -> C64 {
        C64::from_polar(m.weight, self.spec.sign.value() * TWO_PI * t * m.norm)
    }

    fn context(&self, t: f64, with_a: bool) -> Result<Ctx> {
        let modes = self.conn.modes_at(t);
        let a = if with_a { Some(self.conn.synthesize(&modes.a)?) } else { None };
        Ok(Ctx { modes, a })
    }

    fn slice(&self, b: usize, ctx: &Ctx, want: Want) -> Result<PhaseSlice> {
        self.phases[b].slice(&self.conn, &ctx.modes, want)
    }

    /// `e^{2 pi i Psi}` as physical values.
    fn exponential(slice: &PhaseSlice) -> Vec<C64> {
        slice.psi.values().iter().map(|p| C64::from_polar(1.0, TWO_PI * p.re)).collect()
    }

    fn synthesize(&self, members: &[usize], h: &[C64], t: f64, w: Weight) -> Vec<C64> {
        let grid = self.grid();
        let mut dense = vec![C64::default(); grid.len()];
        for &k in members {
            let m = &self.cache.modes[k];
            dense[m.index] = h[m.index] * self.half_wave(m, t) * w.at(m);
        }
        grid.inverse_in_place(&mut dense);
        dense
    }

    fn forward(&self, t: f64, h: &[C64], want: Want, with_a: bool, terms: &Terms) -> Result<Vec<C64>> {
        let len = self.grid().len();
        let ctx = self.context(t, with_a)?;
        let ids: Vec<usize> = (0..self.cache.buckets.len())
            .filter(|&b| self.cache.buckets[b].members.iter().any(|&k| h[self.cache.modes[k].index] != C64::default()))
            .collect();
        let partials = ids
            .par_chunks(CHUNK)
            .map(|chunk| -> Result<Vec<C64>> {
                let mut acc = vec![C64::default(); len];
                for &b in chunk {
                    let slice = self.slice(b, &ctx, want)?;
                    let e = Self::exponential(&slice);
                    for (w, g) in terms(&slice, &ctx) {
                        let s = self.synthesize(&self.cache.buckets[b].members, h, t, w);
                        for (i, v) in acc.iter_mut().enumerate() {
                            *v += e[i] * g.at(i) * s[i];
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![C64::default(); len];
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Adjoint of [`Self::forward`] for a term list paired with components of `fs`.
    fn backward(&self, t: f64, fs: &[Vec<C64>], want: Want, with_a: bool, terms: &Terms) -> Result<Vec<C64>> {
        let grid = self.grid();
        let ctx = self.context(t, with_a)?;
        let ids: Vec<usize> = (0..self.cache.buckets.len()).collect();
        let parts = ids
            .par_chunks(CHUNK)
            .map(|chunk| -> Result<Vec<(usize, C64)>> {
                let mut out = Vec::new();
                for &b in chunk {
                    let slice = self.slice(b, &ctx, want)?;
                    let e = Self::exponential(&slice);
                    let members = &self.cache.buckets[b].members;
                    let mut vals = vec![C64::default(); members.len()];
                    for ((w, g), f) in terms(&slice, &ctx).into_iter().zip(fs) {
                        let mut dense: Vec<C64> = (0..grid.len()).map(|i| (e[i] * g.at(i)).conj() * f[i]).collect();
                        grid.forward_in_place(&mut dense);
                        for (v, &k) in vals.iter_mut().zip(members) {
                            let m = &self.cache.modes[k];
                            *v += (self.half_wave(m, t) * w.at(m)).conj() * dense[m.index];
                        }
                    }
                    out.extend(members.iter().map(|&k| self.cache.modes[k].index).zip(vals));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![C64::default(); grid.len()];
        for p in parts {
            for (idx, v) in p {
                out[idx] = v;
            }
        }
        Ok(out)
    }

    fn physical(&self, v: Vec<C64>) -> Result<ScalarField> {
        ScalarField::new(self.grid(), v, Rep::Physical)
    }

    fn spectral(&self, v: Vec<C64>) -> Result<ScalarField> {
        ScalarField::new(self.grid(), v, Rep::Frequency)
    }

    fn physical_values(&self, f: &ScalarField) -> Result<Vec<C64>> {
        self.grid().check_same(f.grid())?;
        Ok(f.in_physical().into_values())
    }

    /// `U(t) h`; `h` holds frequency coefficients on the cached shell.
    pub fn apply(&self, t: f64, h: &ScalarField) -> Result<ScalarField> {
        let c = self.cache.coefficients(h)?;
        if self.free {
            let all: Vec<usize> = (0..self.cache.modes.len()).collect();
            return self.physical(self.synthesize(&all, &c, t, Weight::One));
        }
        self.physical(self.forward(t, &c, Want::PSI, false, &|_, _| vec![(Weight::One, Spatial::Unit)])?)
    }

    /// `U(t)^* f` with respect to `<u, v>_x = int u conj(v) dx` and `<h, g>_xi = L^-n sum h conj(g)`.
    pub fn adjoint(&self, t: f64, f: &ScalarField) -> Result<ScalarField> {
        let v = self.physical_values(f)?;
        if self.free {
            let grid = self.grid();
            let mut dense = v;
            grid.forward_in_place(&mut dense);
            let mut out = vec![C64::default(); grid.len()];
            for m in &self.cache.modes {
                out[m.index] = self.half_wave(m, t).conj() * dense[m.index];
            }
            return self.spectral(out);
        }
        self.spectral(self.backward(t, &[v], Want::PSI, false, &|_, _| vec![(Weight::One, Spatial::Unit)])?)
    }

    /// Analytic `d/dt U(t) h`.
    pub fn apply_dot(&self, t: f64, h: &ScalarField) -> Result<ScalarField> {
        let c = self.cache.coefficients(h)?;
        let s = self.spec.sign.value();
        let want = Want { time: true, ..Want::PSI };
        self.physical(self.forward(t, &c, want, false, &|sl, _| {
            vec![
                (Weight::One, Spatial::field(sl.psi_t.as_ref().expect("requested"), C64::new(0.0, TWO_PI))),
                (Weight::Abs, Spatial::Const(C64::new(0.0, s * TWO_PI))),
            ]
        })?)
    }

    /// `grad U h - U(2 pi i xi h)`, one field per axis.
    pub fn gradient_defect(&self, t: f64, h: &ScalarField) -> Result<VectorField> {
        let c = self.cache.coefficients(h)?;
        let want = Want { gradient: true, ..Want::PSI };
        let comps = (0..self.grid().dim())
            .map(|j| {
                let v = self.forward(t, &c, want, false, &|sl, _| {
                    vec![(Weight::One, Spatial::field(&sl.grad.as_ref().expect("requested")[j], C64::new(0.0, TWO_PI)))]
                })?;
                self.physical(v)
            })
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(comps)
    }

    pub fn gradient_defect_adjoint(&self, t: f64, f: &VectorField) -> Result<ScalarField> {
        let fs = f.components().iter().map(|c| self.physical_values(c)).collect::<Result<Vec<_>>>()?;
        let want = Want { gradient: true, ..Want::PSI };
        self.spectral(self.backward(t, &fs, want, false, &|sl, _| {
            sl.grad
                .as_ref()
                .expect("requested")
                .iter()
                .map(|g| (Weight::One, Spatial::field(g, C64::new(0.0, TWO_PI))))
                .collect()
        })?)
    }

    /// `d/dt U h - U(+-2 pi i |xi| h)`.
    pub fn time_defect(&self, t: f64, h: &ScalarField) -> Result<ScalarField> {
        let c = self.cache.coefficients(h)?;
        let want = Want { time: true, ..Want::PSI };
        self.physical(self.forward(t, &c, want, false, &|sl, _| {
            vec![(Weight::One, Spatial::field(sl.psi_t.as_ref().expect("requested"), C64::new(0.0, TWO_PI)))]
        })?)
    }

    pub fn time_defect_adjoint(&self, t: f64, f: &ScalarField) -> Result<ScalarField> {
        let v = self.physical_values(f)?;
        let want = Want { time: true, ..Want::PSI };
        self.spectral(self.backward(t, &[v], want, false, &|sl, _| {
            vec![(Weight::One, Spatial::field(sl.psi_t.as_ref().expect("requested"), C64::new(0.0, TWO_PI)))]
        })?)
    }

    /// `box'_A U h` through the amplitude: `sum_b e^{2 pi i Psi_b} 2 pi Omega_b(xi)` applied to `h`,
    /// with `Omega = alpha + beta.xi + gamma |xi|`.
    pub fn apply_box_formula(&self, t: f64, h: &ScalarField) -> Result<ScalarField> {
        let c = self.cache.coefficients(h)?;
        let s = self.spec.sign.value();
        let n = self.grid().dim();
        self.physical(self.forward(t, &c, Want::ALL, true, &|sl, ctx| {
            let a = ctx.a.as_ref().expect("requested");
            let grad = sl.grad.as_ref().expect("requested");
            let psi_t = sl.psi_t.as_ref().expect("requested").values();
            let bx = sl.box_psi.as_ref().expect("requested").values();
            let len = psi_t.len();
            let mut alpha = Vec::with_capacity(len);
            for i in 0..len {
                let mut g2 = 0.0;
                let mut ag = 0.0;
                for j in 0..n {
                    let gj = grad[j].values()[i].re;
                    g2 += gj * gj;
                    ag += a.component(j).values()[i].re * gj;
                }
                let pt = psi_t[i].re;
                let v = C64::new(0.0, bx[i].re) + TWO_PI * (pt * pt - g2) - 2.0 * ag;
                alpha.push(v * TWO_PI);
            }
            let mut terms = vec![(Weight::One, Spatial::Field(alpha))];
            for j in 0..n {
                let beta = (0..len)
                    .map(|i| C64::new(TWO_PI * (-2.0 * TWO_PI * grad[j].values()[i].re - 2.0 * a.component(j).values()[i].re), 0.0))
                    .collect();
                terms.push((Weight::Xi(j), Spatial::Field(beta)));
            }
            terms.push((Weight::Abs, Spatial::Field(psi_t.iter().map(|p| C64::new(TWO_PI * s * 2.0 * TWO_PI * p.re, 0.0)).collect())));
            terms
        })?)
    }

    /// `||U_exact h - U h|| / ||U_exact h||` against a family built with exact directions.
    pub fn bucketing_error(&self, exact: &PhaseFamily, t: f64, h: &ScalarField) -> Result<f64> {
        if !exact.cache.is_exact() {
            return precondition("reference family must use exact directions");
        }
        let a = exact.apply(t, h)?;
        let b = self.apply(t, h)?;
        let s = a.l2_norm();
        let d = a.sub(&b)?.l2_norm();
        Ok(if s == 0.0 { d } else { d / s })
    }

    /// Write `Psi(t, ., omega_b)` for bucket `b`; `omega` and `t` go into the extension block.
    pub fn dump_phase(&self, path: &Path, bucket: usize, t: f64) -> Result<()> {
        let Some(p) = self.phases.get(bucket) else {
            return param(format!("bucket {bucket} out of range"));
        };
        let slice = p.slice_at(&self.conn, t, Want::PSI)?;
        let mut ext = p.omega.as_slice().to_vec();
        ext.push(t);
        crate::dump::save(path, &slice.psi.with_time(t), &ext)
    }
}

pub fn apply_u(family: &PhaseFamily, t: f64, h: &ScalarField) -> Result<ScalarField> {
    family.apply(t, h)
}

pub fn apply_u_adjoint(family: &PhaseFamily, t: f64, f: &ScalarField) -> Result<ScalarField> {
    family.adjoint(t, f)
}

/// `<h, g>_xi = L^-n sum h conj(g)`.
pub fn spectral_inner(h: &ScalarField, g: &ScalarField) -> Result<C64> {
    h.grid().check_same(g.grid())?;
    let (a, b) = (h.in_frequency(), g.in_frequency());
    let s: C64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y.conj()).sum();
    Ok(s / h.grid().volume())
}

pub fn spectral_norm(h: &ScalarField) -> f64 {
    let a = h.in_frequency();
    (a.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / h.grid().volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::Sign;
    use crate::rng::Philox;

    fn family(conn: FreeConnection, sign: Sign, policy: CachePolicy) -> PhaseFamily {
        let grid = *conn.grid();
        let cutoff = AnnulusCutoff::for_grid(&grid);
        let spec = PhaseSpec::for_connection(&conn, &cutoff, sign, 0.25).unwrap();
        let cache = DirectionCache::build(grid, cutoff, policy, spec.smallest_angle()).unwrap();
        PhaseFamily::build(Arc::new(cache), Arc::new(conn), spec).unwrap()
    }

    fn random_h(fam: &PhaseFamily, seed: u64) -> ScalarField {
        let grid = *fam.cache().grid();
        let mut rng = Philox::new(seed, 1);
        let mut c = vec![C64::default(); grid.len()];
        for m in fam.cache().modes() {
            c[m.index] = C64::new(rng.normal(), rng.normal());
        }
        ScalarField::new(grid, c, Rep::Frequency).unwrap()
    }

    fn conn(grid: GridSpec, eps: f64) -> FreeConnection {
        let cutoff = AnnulusCutoff::for_grid(&grid);
        FreeConnection::random(grid, cutoff.rho / 2.0, eps, &mut Philox::new(3, 0)).unwrap()
    }

    #[test]
    fn adjoint_identity() {
        let grid = GridSpec::new(2, 32, 8.0).unwrap();
        let fam = family(conn(grid, 0.1), Sign::Minus, CachePolicy::Auto);
        assert!(fam.cache().is_exact());
        let h = random_h(&fam, 1);
        let f = crate::sample::random_shell(grid, 0.0, 2.0, false, &mut Philox::new(2, 0));
        let t = 0.37;
        let lhs = fam.apply(t, &h).unwrap().inner(&f).unwrap();
        let rhs = spectral_inner(&h, &fam.adjoint(t, &f).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "{lhs} {rhs}");

        let g = fam.gradient_defect(t, &h).unwrap();
        let fv = VectorField::new(vec![f.clone(), f.conj()]).unwrap();
        let lhs: C64 = (0..2).map(|j| g.component(j).inner(fv.component(j)).unwrap()).sum();
        let rhs = spectral_inner(&h, &fam.gradient_defect_adjoint(t, &fv).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn free_family_is_half_wave_synthesis() {
        let grid = GridSpec::new(2, 32, 8.0).unwrap();
        let fam = family(FreeConnection::zero(grid), Sign::Plus, CachePolicy::Auto);
        let general = family(conn(grid, 0.0), Sign::Plus, CachePolicy::Auto);
        let h = random_h(&fam, 4);
        let a = fam.apply(0.5, &h).unwrap();
        let b = general.apply(0.5, &h).unwrap();
        assert!(a.relative_distance(&b).unwrap() <= 1e-12);
        // dU/dt = U(2 pi i |xi| h) in the free case
        let d = general.time_defect(0.5, &h).unwrap();
        assert!(d.l2_norm() <= 1e-12 * a.l2_norm());
    }

    #[test]
    fn single_mode_has_unit_modulus() {
        let grid = GridSpec::new(2, 32, 8.0).unwrap();
        let fam = family(conn(grid, 0.2), Sign::Plus, CachePolicy::Auto);
        let m = fam.cache().modes().iter().find(|m| m.weight == 1.0).unwrap().clone();
        let mut c = vec![C64::default(); grid.len()];
        c[m.index] = C64::new(3.0, 4.0);
        let h = ScalarField::new(grid, c, Rep::Frequency).unwrap();
        let u = fam.apply(0.3, &h).unwrap();
        for v in u.values() {
            assert!((v.norm() * grid.volume() - 5.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn uncovered_mode_is_structural() {
        let grid = GridSpec::new(2, 32, 8.0).unwrap();
        let fam = family(FreeConnection::zero(grid), Sign::Plus, CachePolicy::Auto);
        let h = ScalarField::plane_wave(grid, &[1, 0]).in_frequency();
        assert!(matches!(fam.apply(0.0, &h), Err(crate::Error::Structural(_))));
    }

    #[test]
    fn bucketing_is_close() {
        let grid = GridSpec::new(2, 32, 8.0).unwrap();
        let c = conn(grid, 0.05);
        let exact = family(c.clone(), Sign::Plus, CachePolicy::Exact);
        let coarse = family(c, Sign::Plus, CachePolicy::Bucketed(0.0));
        assert!(coarse.cache().buckets().len() < exact.cache().buckets().len());
        let h = random_h(&exact, 9);
        let e = coarse.bucketing_error(&exact, 0.2, &h).unwrap();
        assert!(e < 0.05, "{e}");
    }
}
