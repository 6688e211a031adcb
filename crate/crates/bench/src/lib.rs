//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use cronlab_core::microlocal::Sign;
use cronlab_core::mkg::{random_small_data, ConnectionState};
use cronlab_core::parametrix::operator::{CachePolicy, DirectionCache, PhaseFamily};
use cronlab_core::parametrix::{default_gap, AnnulusCutoff, FreeConnection, PhaseSpec};
use cronlab_core::rng::Philox;
use cronlab_core::GridSpec;

/// A `+` phase family over a random connection of size `eps`.
pub fn phase_family(grid: GridSpec, eps: f64, seed: u64) -> PhaseFamily {
    let cutoff = AnnulusCutoff::for_grid(&grid);
    let r_max = cutoff.rho / default_gap(&grid, &cutoff);
    let conn = Arc::new(FreeConnection::random(grid, r_max, eps, &mut Philox::new(seed, 0)).unwrap());
    let spec = PhaseSpec::for_connection(&conn, &cutoff, Sign::Plus, 0.25).unwrap();
    let cache = Arc::new(DirectionCache::build(grid, cutoff, CachePolicy::Auto, spec.smallest_angle()).unwrap());
    PhaseFamily::build(cache, conn, spec).unwrap()
}

pub fn mkg_data(grid: GridSpec, eps: f64, seed: u64) -> ConnectionState {
    random_small_data(grid, eps, 2.0, &mut Philox::new(seed, 0)).unwrap()
}
