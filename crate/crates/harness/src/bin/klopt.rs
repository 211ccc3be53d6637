//! `klopt` command line.
//!
//! Exit codes: 0 success (every point / criterion passes), 1 a point or criterion failed its
//! check, 2 bad usage, invalid config or a runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use klopt_harness::acceptance::{run_acceptance, AcceptOptions};
use klopt_harness::runner::output_dir;
use klopt_harness::{parse_config, run_experiment, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "klopt", version, about = "KŁ-rate simulations, stochastic optimizers and their acceptance suite")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// experiment config file (`[kind]` header, `key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// extra seed appended to the config's seeds; repeatable
    #[arg(long = "seed", global = true)]
    seeds: Vec<u64>,
    /// output directory (overrides `output_path`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// suppress the config echo and per-row details
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Verb {
    Dynamics,
    Tightness,
    Optimize,
    #[command(name = "finite-sum")]
    FiniteSum,
    Rl,
    Verify,
    /// run the acceptance criteria and print one row per criterion
    Accept {
        /// comma-separated criterion ids, e.g. `1,4,11`; an empty list runs nothing
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        only: Option<Vec<String>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "warn" } else { "info" }))
        .init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let kind = match &cli.verb {
        Verb::Accept { only } => return accept(cli, only.as_deref()),
        Verb::Dynamics => Kind::Dynamics,
        Verb::Tightness => Kind::Tightness,
        Verb::Optimize => Kind::Optimize,
        Verb::FiniteSum => Kind::FiniteSum,
        Verb::Rl => Kind::Rl,
        Verb::Verify => Kind::Verify,
    };
    let path = cli.config.as_ref().context("--config PATH is required for experiment verbs")?;
    let mut cfg: ExperimentConfig = parse_config(path)?;
    if cfg.kind != kind {
        bail!("{} is a `{}` config but the verb is `{}`", path.display(), cfg.kind.name(), kind.name());
    }
    cfg.seeds.extend(&cli.seeds);
    cfg.check_seeds()?;
    if !cli.quiet {
        println!("{}", cfg.echo());
    }
    let out = output_dir(&cfg, cli.out.as_deref());
    let report = run_experiment(&cfg, &out).with_context(|| format!("running {}", path.display()))?;
    for p in &report.points {
        let s = &p.summary;
        let slope = match (s.fitted_slope, s.predicted_slope) {
            (Some(f), Some(q)) => format!("fitted {f:.4} predicted {q:.4} tol {:.3}", s.tolerance.unwrap_or(f64::NAN)),
            _ => String::new(),
        };
        println!("[{}] {} {slope} ({:.2}s)", if s.pass { "PASS" } else { "FAIL" }, p.trace, s.wall_time);
    }
    println!("artifacts in {}", out.display());
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn accept(cli: &Cli, only: Option<&[String]>) -> Result<u8> {
    let only = only
        .map(|ids| {
            ids.iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<u32>().with_context(|| format!("--only: `{s}` is not a criterion id")))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let report = run_acceptance(&AcceptOptions { only, ..Default::default() });
    print!("{}", report.table(!cli.quiet));
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        klopt_harness::output::write_json(&dir.join("acceptance.json"), &report)?;
    }
    Ok(report.exit_code() as u8)
}
