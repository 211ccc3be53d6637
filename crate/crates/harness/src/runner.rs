//! Parallel sweep execution and artifact persistence.
//!
//! Runs share nothing mutable: each job owns its oracle and RNG stream, results come back
//! in input order, and the single caller writes all files, so outputs do not depend on
//! scheduling.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Point};
use crate::experiments::{run_point, PointRun};
use crate::output::{write_json, ResultSummary};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "KLOPT_THREADS";

/// Thread cap from `KLOPT_THREADS`, else the machine's parallelism.
pub fn thread_cap() -> usize {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                warn!("ignoring {THREADS_ENV}={v:?}: expected a positive integer");
                default_threads()
            }
        },
        Err(_) => default_threads(),
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(thread_cap())
            .thread_name(|i| format!("klopt-{i}"))
            .build()
            .expect("thread pool")
    })
}

/// Order-preserving parallel map on the capped pool.
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    pool().install(|| items.into_par_iter().map(f).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub params: Point,
    pub seeds: Vec<u64>,
    pub trace: String,
    pub summary: ResultSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub swept: Vec<String>,
    pub points: Vec<PointReport>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.summary.pass)
    }
}

/// Output directory: `--out`, else the config's `output_path`, else `out/<kind>`.
pub fn output_dir(cfg: &ExperimentConfig, cli_out: Option<&Path>) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()))
}

/// Runs every sweep point, writes `<kind>_<i>.csv` (averaged trace), one CSV per extra
/// trace and `summary.json` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    cfg.check_seeds()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let runs: Vec<Result<PointRun>> = par_map(cfg.points.iter().collect(), |p| run_point(p, &cfg.seeds));
    let mut points = Vec::with_capacity(runs.len());
    for (i, (p, run)) in cfg.points.iter().zip(runs).enumerate() {
        let run = run.with_context(|| format!("sweep point {i}"))?;
        let stem = format!("{}_{i:03}", cfg.kind.name());
        let trace = format!("{stem}.csv");
        run.main.write_csv(&out.join(&trace))?;
        for (name, t) in &run.extra {
            t.write_csv(&out.join(format!("{stem}_{name}.csv")))?;
        }
        info!(
            "{stem}: fitted {:?} predicted {:?} pass {} ({:.2}s)",
            run.summary.fitted_slope, run.summary.predicted_slope, run.summary.pass, run.summary.wall_time
        );
        points.push(PointReport { index: i, params: p.clone(), seeds: cfg.seeds.clone(), trace, summary: run.summary });
    }
    let report = ExperimentReport { kind: cfg.kind.name().to_string(), swept: cfg.swept.clone(), points };
    write_json(&out.join("summary.json"), &report)?;
    Ok(report)
}
