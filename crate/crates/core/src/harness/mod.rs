//! Experiment driver: validate, run a suite, write CSV and summaries.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::dump::write_atomic;
use crate::error::Result;

pub mod config;
pub mod output;
pub mod record;
pub mod suites;

pub use config::{Experiment, ExperimentConfig};
pub use output::{read_summary, render_csv, Summary};
pub use record::{AcceptanceRecord, Row, SubCheck, SuiteOutput};

/// Used when neither the config nor the caller names an output directory.
pub const DEFAULT_OUT: &str = "cronlab-out";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub summary: Summary,
    pub records: Vec<AcceptanceRecord>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }
}

/// Runs one suite and returns its CSV text and records without touching the disk.
pub fn execute(cfg: &ExperimentConfig, artifacts: Option<PathBuf>) -> Result<(String, Vec<AcceptanceRecord>)> {
    let exp = cfg.validate()?;
    let grid = cfg.grid()?;
    let setup = suites::Setup { cfg, grid, artifacts };
    let start = Instant::now();
    let out = suites::run(exp, &setup)?;
    let elapsed = start.elapsed().as_secs_f64();
    let records = out
        .records
        .into_iter()
        .map(|r| AcceptanceRecord { runtime_s: r.runtime_s.or(Some(elapsed)), ..r })
        .collect();
    Ok((render_csv(cfg, &cfg.hash(), &out.rows), records))
}

/// Validates before any compute; nothing is written if validation fails.
pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let exp = cfg.validate()?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    let (csv, mut records) = execute(cfg, Some(dir.join("artifacts")))?;
    if cfg.rerun_check {
        let start = Instant::now();
        let (again, _) = execute(cfg, None)?;
        let mut rec = AcceptanceRecord::from_checks(
            "AC9",
            vec![SubCheck::at_most("csv bytes differing on rerun", byte_mismatch(&csv, &again) as f64, 0.0)],
        );
        rec.runtime_s = Some(start.elapsed().as_secs_f64());
        records.push(rec);
    }
    let hash = cfg.hash();
    let csv_path = dir.join(format!("{}.csv", exp.name()));
    write_atomic(&csv_path, csv.as_bytes())?;
    let summary = Summary::new(cfg, &hash, &records)?;
    output::write_summary(&dir, &summary, &records)?;
    Ok(RunOutcome { dir, csv: csv_path, summary, records })
}

/// Reads a finished run's machine summary and renders it.
pub fn report(dir: &Path) -> Result<(Summary, String)> {
    let s = read_summary(dir)?;
    let text = s.render();
    Ok((s, text))
}

fn byte_mismatch(a: &str, b: &str) -> usize {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}
