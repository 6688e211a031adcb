//! One module per experiment; each returns CSV rows and acceptance records.

use std::path::PathBuf;

use super::config::{Experiment, ExperimentConfig};
use super::record::{Row, SubCheck, SuiteOutput};
use crate::error::Result;
use crate::grid::GridSpec;
use crate::parametrix::{default_gap, AnnulusCutoff, FreeConnection};
use crate::rng::Philox;

pub mod coulomb;
pub mod dispersive;
pub mod identities;
pub mod lp;
pub mod mkg;
pub mod norms;
pub mod parametrix;

/// Validated configuration plus where artifacts may go.
pub struct Setup<'a> {
    pub cfg: &'a ExperimentConfig,
    pub grid: GridSpec,
    pub artifacts: Option<PathBuf>,
}

impl Setup<'_> {
    pub fn rng(&self, stream: u64) -> Philox {
        Philox::new(self.cfg.seed, stream)
    }

    pub fn times(&self) -> Vec<f64> {
        let [t0, t1] = self.cfg.time_window;
        let m = self.cfg.samples;
        (0..m).map(|i| t0 + (t1 - t0) * i as f64 / (m - 1) as f64).collect()
    }
}

/// Random free connection below the data shell by the default gap, sized `eps`.
pub(crate) fn connection_for(s: &Setup, cutoff: &AnnulusCutoff, eps: f64, stream: u64) -> Result<FreeConnection> {
    let gap = default_gap(&s.grid, cutoff);
    FreeConnection::random(s.grid, cutoff.rho / gap, eps, &mut s.rng(1000 + stream))
}

pub(crate) fn check_rows(checks: &[SubCheck]) -> Vec<Row> {
    checks.iter().map(|c| Row::new(c.name.replace(' ', "_"), c.measured, c.threshold)).collect()
}

pub fn run(exp: Experiment, s: &Setup) -> Result<SuiteOutput> {
    match exp {
        Experiment::Identities => identities::run(s),
        Experiment::LpSuite => lp::run(s),
        Experiment::CoulombGain => coulomb::run(s),
        Experiment::MkgEvolve => mkg::run(s),
        Experiment::ParametrixResidual => parametrix::run_residual(s),
        Experiment::Unitarity => parametrix::run_unitarity(s),
        Experiment::Dispersive => dispersive::run(s),
        Experiment::Norms => norms::run(s),
    }
}
