use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use macdoall::config::{parse_poset_file, ConfigError, PosetSummary, RunConfig};
use macdoall::engine::{verify_reliability, write_jsonl, Outcome};
use macdoall::harness::{
    fit_ratio, ratio_spread, sweep, write_report, BoundFormula, ExperimentConfig, HarnessError,
    SweepReport, DEFAULT_SPREAD_THRESHOLD,
};
use macdoall::verify::{brute_force_doall_oracle, standard_suite};

#[derive(Parser)]
#[command(
    name = "macdoall",
    version,
    about = "Do-All simulator on a shared channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print its metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for `trace.jsonl` and `metrics.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid and write CSV and JSON results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit mean work against a bound, from a sweep report or a fresh sweep.
    Fit {
        /// Sweep report written by `sweep`.
        report: Option<PathBuf>,
        /// Experiment config to sweep first.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Bound name; defaults to the one recorded in the report.
        #[arg(long)]
        bound: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SPREAD_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the statistical checks and the small-instance oracle.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the width, chain cover and thickness of a poset file.
    PosetCheck { file: PathBuf },
}

enum Failure {
    Check(String),
    Config(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InsufficientCells { .. } => Failure::Check(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let mut cfg = RunConfig::from_json(&read(config)?)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (trace, metrics) = cfg.run()?;
    let report = verify_reliability(&trace, cfg.t);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&trace, std::fs::File::create(dir.join("trace.jsonl"))?)?;
        std::fs::write(
            dir.join("metrics.json"),
            serde_json::to_string_pretty(&metrics)?,
        )?;
    }
    print_json(&json!({
        "metrics": metrics,
        "outcome": trace.outcome,
        "violations": report.violations,
    }))?;
    match (&trace.outcome, report.passed()) {
        (Outcome::Violation { reason }, _) => Err(Failure::Check(format!("violation: {reason:?}"))),
        (_, false) => Err(Failure::Check("reliability check failed".into())),
        _ => Ok(()),
    }
}

fn sweep_from(
    config: &Path,
    seed: Option<u64>,
) -> Result<(ExperimentConfig, SweepReport), Failure> {
    let mut cfg = ExperimentConfig::from_json(&read(config)?)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let report = sweep(&cfg)?;
    Ok((cfg, report))
}

fn summarize(report: &SweepReport) {
    for row in &report.cells {
        eprintln!(
            "{} mean_work={:.1} bound={:.1} ratio={:.4} violations={}",
            row.cell,
            row.mean_work,
            row.bound_value,
            row.ratio,
            row.violations.len()
        );
    }
}

fn run_sweep(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let (cfg, report) = sweep_from(config, seed)?;
    summarize(&report);
    let dir = out
        .map(Path::to_path_buf)
        .or(cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let (csv, json_path) = write_report(&report, &dir)?;
    let ratios: Vec<f64> = report.cells.iter().map(|c| c.ratio).collect();
    print_json(&json!({
        "csv": csv,
        "json": json_path,
        "cells": report.cells.len(),
        "runs": report.runs.len(),
        "violations": report.violations(),
        "ratio_spread": ratio_spread(&ratios),
    }))?;
    if report.violations() > 0 {
        return Err(Failure::Check(format!(
            "{} runs violated reliability",
            report.violations()
        )));
    }
    Ok(())
}

fn parse_bound(name: &str) -> Result<BoundFormula, Failure> {
    serde_json::from_value(json!(name))
        .map_err(|_| Failure::Config(format!("unknown bound `{name}`")))
}

fn run_fit(
    report: Option<&Path>,
    config: Option<&Path>,
    seed: Option<u64>,
    bound: Option<&str>,
    threshold: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let report: SweepReport = match (report, config) {
        (Some(path), None) => serde_json::from_str(&read(path)?)?,
        (None, Some(cfg)) => sweep_from(cfg, seed)?.1,
        _ => {
            return Err(Failure::Config(
                "give either a report file or --config".into(),
            ))
        }
    };
    let bound = match bound {
        Some(name) => parse_bound(name)?,
        None => report
            .cells
            .first()
            .map(|c| c.bound)
            .ok_or_else(|| Failure::Check("report has no cells".into()))?,
    };
    let fit = fit_ratio(&report.cells, bound, threshold)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&fit)?)?;
    }
    print_json(&fit)?;
    if fit.holds {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "spread {:.3} not below {threshold}",
            fit.spread
        )))
    }
}

fn run_verify(seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let checks = standard_suite(seed);
    let oracle = [
        (1, 1, vec![None]),
        (2, 2, vec![None, None]),
        (2, 2, vec![None, Some(1)]),
    ]
    .into_iter()
    .map(|(p, t, schedule)| {
        let work = brute_force_doall_oracle(p, t, &schedule).ok();
        json!({"p": p, "t": t, "crashes": schedule, "min_work": work})
    })
    .collect::<Vec<_>>();
    for c in &checks {
        eprintln!(
            "{} {} statistic={:.4} bound={:.4} margin={:.4}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.bound,
            c.margin
        );
    }
    let report = json!({"checks": checks, "oracle": oracle});
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("verify.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
    }
    print_json(&report)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} checks failed")));
    }
    Ok(())
}

fn poset_check(file: &Path) -> Result<(), Failure> {
    let poset = parse_poset_file(&read(file)?)?;
    print_json(&PosetSummary::of(&poset)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => run(config, *seed, out.as_deref()),
        Command::Sweep { config, seed, out } => run_sweep(config, *seed, out.as_deref()),
        Command::Fit {
            report,
            config,
            seed,
            bound,
            threshold,
            out,
        } => run_fit(
            report.as_deref(),
            config.as_deref(),
            *seed,
            bound.as_deref(),
            *threshold,
            out.as_deref(),
        ),
        Command::Verify { seed, out } => run_verify(*seed, out.as_deref()),
        Command::PosetCheck { file } => poset_check(file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
