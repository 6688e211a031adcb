//! Time-sampled fields, mixed spacetime norms and finite-difference time derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{param, structural, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::lp::besov_norm_mean_excluded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Trapezoid,
}

impl Quadrature {
    /// Convergence order on smooth integrands.
    pub fn order(&self) -> u32 {
        2
    }
}

#[derive(Clone, Debug)]
pub struct SpacetimeField {
    times: Vec<f64>,
    slices: Vec<ScalarField>,
    quadrature: Quadrature,
}

impl SpacetimeField {
    pub fn new(times: Vec<f64>, slices: Vec<ScalarField>) -> Result<Self> {
        if times.is_empty() {
            return structural("empty time axis");
        }
        if times.len() != slices.len() {
            return structural(format!("{} times for {} slices", times.len(), slices.len()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return structural("sample times must be strictly increasing");
        }
        let g = *slices[0].grid();
        for s in &slices {
            g.check_same(s.grid())?;
        }
        Ok(Self { times, slices, quadrature: Quadrature::Trapezoid })
    }

    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> ScalarField) -> Result<Self> {
        let slices = times.iter().map(|&t| f(t).with_time(t)).collect();
        Self::new(times, slices)
    }

    pub fn grid(&self) -> &GridSpec {
        self.slices[0].grid()
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn slices(&self) -> &[ScalarField] {
        &self.slices
    }
    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }
}

/// Spatial part of a mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpatialNorm {
    Lebesgue(f64),
    /// Homogeneous norms skip the zero mode.
    Sobolev { s: f64, homogeneous: bool },
    /// Zero mode ignored; sums over the grid's band range.
    Besov { p: f64, q: f64, r: u32 },
}

impl SpatialNorm {
    pub fn eval(&self, f: &ScalarField) -> Result<f64> {
        match *self {
            SpatialNorm::Lebesgue(p) => f.lebesgue_norm(p),
            SpatialNorm::Sobolev { s, homogeneous } => f.sobolev_norm(s, homogeneous, true),
            SpatialNorm::Besov { p, q, r } => besov_norm_mean_excluded(f, p, q, r),
        }
    }
}

/// Trapezoidal `L^q_t` norm of per-slice values; `q = inf` takes the maximum.
pub fn time_norm(times: &[f64], values: &[f64], q_t: f64) -> Result<f64> {
    if times.is_empty() || times.len() != values.len() {
        return structural("time norm needs matching nonempty samples");
    }
    if q_t.is_nan() || q_t < 1.0 {
        return param(format!("time exponent {q_t} < 1"));
    }
    if q_t.is_infinite() {
        return Ok(values.iter().fold(0.0, |a, &v| a.max(v.abs())));
    }
    if times.len() < 2 {
        return structural("finite time exponents need at least two samples");
    }
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        acc += 0.5 * h * (values[i].abs().powf(q_t) + values[i + 1].abs().powf(q_t));
    }
    Ok(acc.powf(1.0 / q_t))
}

pub fn spacetime_norm(f: &SpacetimeField, q_t: f64, spatial: SpatialNorm) -> Result<f64> {
    let values = f.slices.iter().map(|s| spatial.eval(s)).collect::<Result<Vec<_>>>()?;
    time_norm(&f.times, &values, q_t)
}

/// Centered-difference time derivative: fourth order with at least five uniformly spaced
/// slices, second order with three or four. Returns the derivative and its order.
pub fn time_derivative(f: &SpacetimeField) -> Result<(SpacetimeField, u32)> {
    let m = f.times.len();
    if m < 3 {
        return structural(format!("{m} slices are too few for a time derivative"));
    }
    let h = f.times[1] - f.times[0];
    if f.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return structural("finite-difference time derivative needs uniform sampling");
    }
    let s: Vec<ScalarField> = f.slices.iter().map(|x| x.in_physical()).collect();
    let combo = |weights: &[(usize, f64)], denom: f64| -> ScalarField {
        let mut out = s[weights[0].0].scale(crate::C64::new(weights[0].1 / denom, 0.0));
        for &(i, w) in &weights[1..] {
            out = out.add(&s[i].scale(crate::C64::new(w / denom, 0.0))).expect("same grid");
        }
        out
    };
    let (order, slices) = if m >= 5 {
        let d = 12.0 * h;
        let out = (0..m)
            .map(|i| match i {
                0 => combo(&[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)], d),
                1 => combo(&[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)], d),
                _ if i == m - 2 => combo(
                    &[(m - 1, 3.0), (m - 2, 10.0), (m - 3, -18.0), (m - 4, 6.0), (m - 5, -1.0)],
                    d,
                ),
                _ if i == m - 1 => combo(
                    &[(m - 1, 25.0), (m - 2, -48.0), (m - 3, 36.0), (m - 4, -16.0), (m - 5, 3.0)],
                    d,
                ),
                _ => combo(&[(i - 2, 1.0), (i - 1, -8.0), (i + 1, 8.0), (i + 2, -1.0)], d),
            })
            .collect();
        (4, out)
    } else {
        let d = 2.0 * h;
        let out = (0..m)
            .map(|i| match i {
                0 => combo(&[(0, -3.0), (1, 4.0), (2, -1.0)], d),
                _ if i == m - 1 => combo(&[(m - 1, 3.0), (m - 2, -4.0), (m - 3, 1.0)], d),
                _ => combo(&[(i - 1, -1.0), (i + 1, 1.0)], d),
            })
            .collect();
        (2, out)
    };
    Ok((SpacetimeField::new(f.times.clone(), slices)?, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn profile(g: GridSpec) -> ScalarField {
        ScalarField::from_real_fn(g, |x| (std::f64::consts::TAU * x[0]).cos() + 0.5)
    }

    #[test]
    fn constant_in_time() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let times: Vec<f64> = (0..7).map(|i| 0.5 + i as f64 * 0.25).collect();
        let f = SpacetimeField::from_fn(times, |_| profile(g)).unwrap();
        let sp = SpatialNorm::Lebesgue(3.0);
        let v = sp.eval(&profile(g)).unwrap();
        for q in [1.0, 2.0, 4.0] {
            let got = spacetime_norm(&f, q, sp).unwrap();
            assert!((got - 1.5f64.powf(1.0 / q) * v).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn sup_of_growing_slices_is_last() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let f = SpacetimeField::from_fn(vec![0.0, 1.0, 2.0], |t| profile(g).scale(C64::new(1.0 + t, 0.0))).unwrap();
        let last = SpatialNorm::Lebesgue(2.0).eval(f.slices().last().unwrap()).unwrap();
        assert_eq!(spacetime_norm(&f, f64::INFINITY, SpatialNorm::Lebesgue(2.0)).unwrap(), last);
    }

    #[test]
    fn empty_and_single_sample_axes() {
        assert!(SpacetimeField::new(vec![], vec![]).is_err());
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let f = SpacetimeField::new(vec![0.0], vec![profile(g)]).unwrap();
        assert!(spacetime_norm(&f, 2.0, SpatialNorm::Lebesgue(2.0)).is_err());
        assert!(time_derivative(&f).is_err());
    }

    #[test]
    fn derivative_orders() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let err = |m: usize, h: f64| {
            let times: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
            let f = SpacetimeField::from_fn(times.clone(), |t| profile(g).scale(C64::new(t.sin(), 0.0))).unwrap();
            let (d, order) = time_derivative(&f).unwrap();
            let worst = times
                .iter()
                .zip(d.slices())
                .map(|(&t, s)| s.sub(&profile(g).scale(C64::new(t.cos(), 0.0))).unwrap().max_abs())
                .fold(0.0, f64::max);
            (worst, order)
        };
        let (e1, o) = err(9, 0.1);
        let (e2, _) = err(17, 0.05);
        assert_eq!(o, 4);
        assert!((e1 / e2).log2() > 3.5);
        let (e1, o) = err(3, 0.1);
        let (e2, _) = err(3, 0.05);
        assert_eq!(o, 2);
        assert!((e1 / e2).log2() > 1.7);
    }
}
