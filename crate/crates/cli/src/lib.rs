//! Config-driven runner for the `quadric-asym` checks.
//!
//! Each run writes `results.csv`, appends one record to `run.jsonl` and,
//! unless disabled, writes `plot.dat` into the output directory. Exit codes:
//! 0 when the check passes, 2 when it runs but fails, 1 on any other error.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::commands::{is_assertion, Outcome};
use crate::config::{invalid, CliError, Command, RunConfig};
use crate::output::{append_record, version, write_plot, RunRecord, PLOT_DAT, RESULTS_CSV, RUN_LOG};

/// Worker-count override for the rayon pool.
pub const WORKERS_ENV: &str = "QUADRIC_ASYM_WORKERS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "quadric-asym", version = version(), about = "Run a quadric-asym check from a TOML config")]
pub struct Args {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per evaluation.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Command, overriding the config's.
    #[arg(long)]
    pub command: Option<String>,
}

/// The config after command-line overrides, validated.
pub fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| invalid("--config", format!("{}: {e}", args.config.display())))?;
    let mut value: toml::Table = toml::from_str(&text).map_err(|e| invalid("<document>", e.message()))?;
    if let Some(c) = &args.command {
        let c: Command = c.parse()?;
        value.insert("command".into(), toml::Value::String(c.name().into()));
    }
    let mut cfg = RunConfig::parse(&toml::to_string(&value).map_err(|e| invalid("<document>", e.to_string()))?)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(WORKERS_ENV, format!("`{v}` is not a positive integer")))?;
    // Only the first call in a process can configure the global pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn persist(cfg: &RunConfig, outcome: &Result<Outcome, CliError>, started: Instant) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let null = serde_json::Value::Null;
    let (passed, error, results) = match outcome {
        Ok(o) => {
            o.table.write_csv(&dir.join(RESULTS_CSV))?;
            if cfg.plot && !o.series.is_empty() {
                write_plot(&o.series, &dir.join(PLOT_DAT))?;
            }
            (o.passed, o.failure.clone(), &o.payload)
        }
        Err(e) => (false, Some(e.to_string()), &null),
    };
    let record = RunRecord {
        version: version(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        config: cfg,
        passed,
        error,
        results,
        wall_time: started.elapsed().as_secs_f64(),
    };
    append_record(&record, &dir.join(RUN_LOG))
}

/// Run with parsed arguments; returns the exit code.
pub fn run(args: &Args) -> i32 {
    let started = Instant::now();
    let cfg = match resolve(args).and_then(|c| init_workers().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let outcome = commands::run(&cfg);
    if let Err(e) = persist(&cfg, &outcome, started) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match outcome {
        Ok(o) if o.passed => {
            println!("{}: pass", cfg.command);
            EXIT_PASS
        }
        Ok(o) => {
            println!("{}: FAIL: {}", cfg.command, o.failure.unwrap_or_default());
            EXIT_FAIL
        }
        Err(e) if is_assertion(&e) => {
            println!("{}: FAIL: {e}", cfg.command);
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
