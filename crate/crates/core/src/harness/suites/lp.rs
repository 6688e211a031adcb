//! Commutator decay and Bernstein uniformity across dyadic bands.

use rayon::prelude::*;

use super::Setup;
use crate::error::Result;
use crate::grid::{GridSpec, Rep, ScalarField};
use crate::harness::record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};
use crate::lp::{bernstein_ratio, besov_norm, commutator_ratio, project_band, BandRange};
use crate::rng::Philox;
use crate::sample::random_shell;
use crate::stats::loglog_slope;
use crate::C64;

pub const PAIRS: usize = 50;
pub const COMMUTATOR_BOUND: f64 = 10.0;
pub const SPREAD_BOUND: f64 = 10.0;

/// Random phases with `|g^(xi)| = |xi|^(-n/2)`: equal `L^2` mass in every dyadic band.
fn flat_band_field(grid: GridSpec, rng: &mut Philox) -> ScalarField {
    let n = grid.dim() as f64;
    let mut c = vec![C64::default(); grid.len()];
    grid.for_each_mode(|idx, m| {
        if !m.is_zero() && !m.nyquist {
            let phase = 2.0 * std::f64::consts::PI * rng.uniform();
            c[idx] = C64::from_polar(m.norm().powf(-n / 2.0), phase);
        }
    });
    ScalarField::from_spectrum(grid, c).expect("grid-sized").in_physical().real_part()
}

/// `P_k` applied to a unit point mass at a random lattice point.
fn band_kernel(grid: GridSpec, k: i32, rng: &mut Philox) -> Result<ScalarField> {
    let mut v = vec![C64::default(); grid.len()];
    v[(rng.next_u64() % grid.len() as u64) as usize] = C64::new(1.0 / grid.cell_volume(), 0.0);
    project_band(&ScalarField::new(grid, v, Rep::Physical)?, k)
}

pub fn run(s: &Setup) -> Result<SuiteOutput> {
    let grid = s.grid;
    let bands = BandRange::for_grid(&grid)?;
    let (k1, k2) = match s.cfg.k_range {
        Some([a, b]) => (a, b),
        None => (bands.k_max - 3, bands.k_max),
    };
    let ks: Vec<i32> = (k1..=k2).collect();
    let mut rows = Vec::new();

    let f_top = 2.0 / grid.length();
    let pairs = (0..PAIRS)
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, f64)>> {
            let mut rng = s.rng(200 + i as u64);
            let f = random_shell(grid, 0.0, f_top, true, &mut rng);
            let g = flat_band_field(grid, &mut rng);
            ks.iter()
                .map(|&k| commutator_ratio(&f, &g, k, f64::INFINITY, 2.0, 2.0).map(|m| (m.commutator_norm, m.ratio)))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let scales: Vec<f64> = ks.iter().map(|&k| (k as f64).exp2()).collect();
    let norms: Vec<f64> = pairs[0].iter().map(|p| p.0).collect();
    let slope = loglog_slope(&scales, &norms)?;
    let mut worst = 0.0f64;
    for (j, k) in ks.iter().enumerate() {
        let m = pairs.iter().map(|p| p[j].1).fold(0.0, f64::max);
        worst = worst.max(m);
        rows.push(Row::new(format!("commutator;k={k};pair=0"), norms[j], 1.0));
        rows.push(Row::new(format!("commutator_ratio_max;k={k}"), m, COMMUTATOR_BOUND));
    }
    rows.push(Row::new("commutator_slope", slope, -1.0));
    let ac3 = vec![
        SubCheck::near("commutator slope", slope, -1.0, 0.15),
        SubCheck::at_most("commutator ratio", worst, COMMUTATOR_BOUND),
    ];

    let exps = [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)];
    let all: Vec<i32> = bands.iter().collect();
    let mut rng = s.rng(300);
    let kernels = all.iter().map(|&k| band_kernel(grid, k, &mut rng)).collect::<Result<Vec<_>>>()?;
    let all_scales: Vec<f64> = all.iter().map(|&k| (k as f64).exp2()).collect();
    let mut ac4 = Vec::new();
    for (p, q) in exps {
        let ratios = all
            .iter()
            .zip(&kernels)
            .map(|(&k, f)| bernstein_ratio(f, k, p, q))
            .collect::<Result<Vec<_>>>()?;
        for (k, r) in all.iter().zip(&ratios) {
            rows.push(Row::new(format!("bernstein;p={p};q={q};k={k}"), *r, 1.0));
        }
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let trend = loglog_slope(&all_scales, &ratios)?;
        ac4.push(SubCheck::at_most(format!("bernstein spread p={p} q={q}"), hi / lo, SPREAD_BOUND));
        ac4.push(SubCheck::at_most(format!("bernstein trend p={p} q={q}"), trend.abs(), 0.1));
    }
    // Recorded, not gated: the bump-dependent constant relating the l^2 Besov sum at p = 2
    // to the homogeneous Sobolev norm of the same scaling.
    let grid = s.grid;
    let bands = BandRange::for_grid(&grid)?;
    let f = random_shell(grid, (bands.k_min as f64).exp2(), (bands.k_max as f64).exp2(), true, &mut s.rng(40));
    let n = grid.dim() as f64;
    for q in [2.0, 4.0, f64::INFINITY] {
        let sob = f.sobolev_norm(n / 2.0 - n / q, true, true)?;
        rows.push(Row::new(format!("besov_sobolev_constant;q={q}"), besov_norm(&f, 2.0, q, 2)?, sob));
    }
    Ok(SuiteOutput {
        rows,
        records: vec![AcceptanceRecord::from_checks("AC3", ac3), AcceptanceRecord::from_checks("AC4", ac4)],
    })
}
