//! Experiment configuration, validation and the reproducibility hash.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponents::sigma_admissible;
use crate::grid::GridSpec;
use crate::lp::BandRange;
use crate::parametrix::operator::CachePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Identities,
    LpSuite,
    CoulombGain,
    MkgEvolve,
    ParametrixResidual,
    Unitarity,
    Dispersive,
    Norms,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Identities,
        Experiment::LpSuite,
        Experiment::CoulombGain,
        Experiment::MkgEvolve,
        Experiment::ParametrixResidual,
        Experiment::Unitarity,
        Experiment::Dispersive,
        Experiment::Norms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::LpSuite => "lp-suite",
            Experiment::CoulombGain => "coulomb-gain",
            Experiment::MkgEvolve => "mkg-evolve",
            Experiment::ParametrixResidual => "parametrix-residual",
            Experiment::Unitarity => "unitarity",
            Experiment::Dispersive => "dispersive",
            Experiment::Norms => "norms",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown experiment '{s}'")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_sigma() -> f64 {
    0.25
}
fn default_delta() -> f64 {
    1e-2
}
fn default_samples() -> usize {
    5
}
fn default_policy() -> CachePolicy {
    CachePolicy::Auto
}

/// As read from JSON. `experiment` stays a string so unknown names surface as usage errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(default)]
    pub k_range: Option<[i32; 2]>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub time_window: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_policy")]
    pub direction_cache: CachePolicy,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub rerun_check: bool,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        Experiment::parse(&self.experiment)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.size, self.length).map_err(|e| Error::Validation(e.to_string()))
    }

    /// All checks that can fail before any computation starts.
    pub fn validate(&self) -> Result<Experiment> {
        let exp = self.experiment()?;
        let grid = self.grid()?;
        if self.eps.is_empty() {
            return invalid("eps list is empty");
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return invalid(format!("eps entry {e} must be positive and finite"));
        }
        if self.n >= 6 {
            sigma_admissible(self.n, self.sigma).map_err(|e| Error::Validation(e.to_string()))?;
        } else if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return invalid(format!("sigma = {} outside (0, 1/2)", self.sigma));
        }
        if !(self.delta >= 0.0 && self.delta < 0.5) {
            return invalid(format!("delta = {} outside [0, 1/2)", self.delta));
        }
        let [t0, t1] = self.time_window;
        if !(t0 >= 0.0 && t1 >= t0 && t1 < self.length / 2.0) {
            return invalid(format!("time window [{t0}, {t1}] must satisfy 0 <= t0 <= t1 < L/2 = {}", self.length / 2.0));
        }
        if self.samples < 2 {
            return invalid("need at least two time samples");
        }
        if let Some([k1, k2]) = self.k_range {
            if k1 > k2 {
                return invalid(format!("k_range [{k1}, {k2}] is empty"));
            }
        }
        if let CachePolicy::Bucketed(eta) = self.direction_cache {
            if !(eta >= 0.0 && eta.is_finite()) {
                return invalid(format!("bucket spacing {eta} must be nonnegative"));
            }
        }
        match exp {
            Experiment::LpSuite => {
                let bands = BandRange::for_grid(&grid).map_err(|e| Error::Validation(e.to_string()))?;
                let (k1, k2) = match self.k_range {
                    Some([a, b]) => (a, b),
                    None => (bands.k_max - 3, bands.k_max),
                };
                if !(bands.contains(k1) && bands.contains(k2)) || k2 - k1 < 3 {
                    return invalid(format!("commutator scan needs four bands inside [{}, {}]", bands.k_min, bands.k_max));
                }
                if (k1 as f64 - 1.0).exp2() <= 2.0 / self.length {
                    return invalid("commutator bands must sit above the smooth factor's frequencies");
                }
            }
            Experiment::Dispersive | Experiment::ParametrixResidual | Experiment::Unitarity => {
                if exp == Experiment::Dispersive && !(2..=3).contains(&self.n) {
                    return invalid("dispersive scans run at n = 2 or 3");
                }
                if exp != Experiment::Dispersive && self.n != 2 {
                    return invalid("parametrix scans run at n = 2");
                }
                if self.size < 32 {
                    return invalid("parametrix scans need N >= 32");
                }
                if exp == Experiment::Dispersive && !(self.length / 4.0 > 1.0) {
                    return invalid("dispersive scan needs L/4 > 1");
                }
            }
            Experiment::MkgEvolve if !(2..=3).contains(&self.n) => {
                return invalid("mkg-evolve runs at n = 2 or 3");
            }
            Experiment::Norms if self.n < 6 => {
                return invalid("critical exponents are admissible only for n >= 6");
            }
            Experiment::Identities if !(2..=3).contains(&self.n) => {
                return invalid("identity suite runs at n = 2 or 3");
            }
            _ => {}
        }
        Ok(exp)
    }

    /// SHA-256 of the canonical (key-sorted, compact) JSON without `output_dir`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        let text = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"experiment":"identities","n":3,"N":32,"L":1.0,"eps":[0.01],"seed":7,"time_window":[0.0,0.4]}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let c = sample();
        assert_eq!(c.sigma, 0.25);
        assert_eq!(c.validate().unwrap(), Experiment::Identities);
        let mut bad = c.clone();
        bad.eps.clear();
        assert!(matches!(bad.validate(), Err(Error::Validation(_))));
        let mut bad = c.clone();
        bad.experiment = "nonsense".into();
        assert!(matches!(bad.validate(), Err(Error::Usage(_))));
        let mut bad = c.clone();
        bad.time_window = [0.0, 0.6];
        assert!(bad.validate().is_err());
        let mut bad = c;
        bad.n = 6;
        bad.experiment = "norms".into();
        bad.size = 8;
        assert!(bad.validate().is_err());
        bad.sigma = 0.48;
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = sample();
        let mut b = a.clone();
        b.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn cache_policy_round_trips() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment":"unitarity","n":2,"N":64,"L":8.0,"eps":[0.01],"seed":1,"time_window":[0.0,1.0],"direction_cache":{"bucketed":0.1}}"#,
        )
        .unwrap();
        assert_eq!(c.direction_cache, CachePolicy::Bucketed(0.1));
        assert!(ExperimentConfig::from_json(r#"{"experiment":"x"}"#).is_err());
    }
}
