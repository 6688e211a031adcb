use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cronlab_core::dump;
use cronlab_core::harness::{self, ExperimentConfig};
use cronlab_core::Rep;

/// Gates failed.
const EXIT_FAIL: u8 = 1;
/// Bad invocation, bad config or a runtime error.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "cronlab", version, about = "Numerical experiments for gauge-covariant wave parametrices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed (and so the config hash).
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a finished run.
    Report { dir: PathBuf },
    /// Describe a binary field dump.
    DumpField { file: PathBuf },
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("CRONLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("CRONLAB_THREADS={v:?} is not a count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool> {
    let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = harness::run(&cfg, out.as_deref())?;
    print!("{}", outcome.summary.render());
    for r in &outcome.records {
        if let Some(t) = r.runtime_s {
            eprintln!("{} runtime {t:.2}s", r.id);
        }
    }
    eprintln!("wrote {}", outcome.dir.display());
    Ok(outcome.passed())
}

fn report(dir: PathBuf) -> Result<bool> {
    let (summary, text) = harness::report(&dir)?;
    print!("{text}");
    Ok(summary.passed)
}

fn dump_field(file: PathBuf) -> Result<bool> {
    let (h, field) = dump::load(&file)?;
    let g = h.grid;
    println!("version    {}", h.version);
    println!("grid       n={} N={} L={}", g.dim(), g.size(), g.length());
    println!("rep        {}", if h.rep == Rep::Physical { "physical" } else { "frequency" });
    if !h.extension.is_empty() {
        let ext: Vec<String> = h.extension.iter().map(|x| format!("{x:.6}")).collect();
        println!("extension  [{}]", ext.join(", "));
    }
    let phys = field.in_physical();
    println!("l2         {:.6e}", phys.l2_norm());
    println!("max        {:.6e}", phys.max_abs());
    let m = phys.mean();
    println!("mean       {:.6e}{:+.6e}i", m.re, m.im);
    println!("imag ratio {:.3e}", phys.imaginary_ratio());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = init_threads().and_then(|()| match cli.cmd {
        Cmd::Run { config, seed, out } => run(config, seed, out),
        Cmd::Report { dir } => report(dir),
        Cmd::DumpField { file } => dump_field(file),
    });
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
