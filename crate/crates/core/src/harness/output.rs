//! CSV and summary files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::record::{AcceptanceRecord, Row};
use crate::dump::write_atomic;
use crate::error::{Error, Result};

pub const CSV_VERSION: &str = "cronlab-scan v1";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const TIMINGS_JSON: &str = "timings.json";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(cfg: &ExperimentConfig, hash: &str, rows: &[Row]) -> String {
    let mut out = format!("# {CSV_VERSION} config={hash}\nexperiment,n,N,L,param,seed,lhs,rhs,ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.17e},{},{},{:.17e},{:.17e},{:.17e}",
            csv_field(&cfg.experiment),
            cfg.n,
            cfg.size,
            cfg.length,
            csv_field(&r.param),
            cfg.seed,
            r.lhs,
            r.rhs,
            r.ratio
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub passed: bool,
    pub records: Vec<AcceptanceRecord>,
}

impl Summary {
    /// Records sorted by id, runtimes stripped so reruns compare byte for byte.
    pub fn new(cfg: &ExperimentConfig, hash: &str, records: &[AcceptanceRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Structural("a summary needs at least one record".into()));
        }
        let mut records: Vec<_> = records.iter().map(|r| r.without_runtime()).collect();
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self {
            experiment: cfg.experiment.clone(),
            seed: cfg.seed,
            config_hash: hash.to_string(),
            passed: records.iter().all(|r| r.passed),
            records,
        })
    }

    /// Human-readable text, failures first, then by id.
    pub fn render(&self) -> String {
        let mut recs: Vec<&AcceptanceRecord> = self.records.iter().collect();
        recs.sort_by(|a, b| a.passed.cmp(&b.passed).then_with(|| a.id.cmp(&b.id)));
        let mut out = format!(
            "experiment {} seed {} config {}\n{}\n",
            self.experiment,
            self.seed,
            self.config_hash,
            if self.passed { "ALL PASS" } else { "FAILURES PRESENT" }
        );
        for r in recs {
            let _ = writeln!(
                out,
                "{} {:<5} measured {:.6e} threshold {:.6e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.measured,
                r.threshold
            );
            for c in &r.details {
                let _ = writeln!(
                    out,
                    "    {} {} measured {:.6e} threshold {:.6e}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.threshold
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub id: String,
    pub runtime_s: f64,
}

pub fn write_summary(dir: &Path, summary: &Summary, records: &[AcceptanceRecord]) -> Result<()> {
    write_atomic(&dir.join(SUMMARY_JSON), summary.to_json().as_bytes())?;
    write_atomic(&dir.join(SUMMARY_TXT), summary.render().as_bytes())?;
    let timings: Vec<Timing> = records
        .iter()
        .map(|r| Timing { id: r.id.clone(), runtime_s: r.runtime_s.unwrap_or(0.0) })
        .collect();
    let text = serde_json::to_string_pretty(&timings).expect("timings serialize");
    write_atomic(&dir.join(TIMINGS_JSON), text.as_bytes())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY_JSON);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
