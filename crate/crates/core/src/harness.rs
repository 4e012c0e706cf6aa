//! Parameter sweeps, per-cell aggregation and bound-ratio fits.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelKind;
use crate::config::{AdversaryConfig, ConfigError, LabelName, RunConfig};
use crate::engine::{verify_reliability, Outcome, TraceLevel, Violation};
use crate::math::ceil_sqrt;
use crate::protocols::{ProtocolKind, ProtocolOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid cell {cell}: {reason}")]
    ConfigInvalid { cell: String, reason: String },
    #[error("invalid grid expression `{0}`")]
    BadExpression(String),
    #[error("fit needs at least {needed} cells, got {got}")]
    InsufficientCells { needed: usize, got: usize },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A grid value: a literal or an affine expression in `p` such as `"4p"`,
/// `"p/2"`, `"p-1"` or `"7p/8"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Literal(usize),
    Expr(String),
}

impl GridValue {
    pub fn eval(&self, p: usize) -> Result<usize, HarnessError> {
        match self {
            GridValue::Literal(v) => Ok(*v),
            GridValue::Expr(e) => eval_expr(e, p),
        }
    }
}

impl From<usize> for GridValue {
    fn from(v: usize) -> Self {
        GridValue::Literal(v)
    }
}

impl From<&str> for GridValue {
    fn from(v: &str) -> Self {
        GridValue::Expr(v.to_string())
    }
}

/// Evaluates `[a]p[/b][(+|-)c]` or a plain integer, rounding the quotient
/// down and saturating at zero.
pub fn eval_expr(expr: &str, p: usize) -> Result<usize, HarnessError> {
    let bad = || HarnessError::BadExpression(expr.to_string());
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let (head, tail) = s.split_once('p').ok_or_else(bad)?;
    let a: usize = if head.is_empty() {
        1
    } else {
        head.trim_end_matches('*').parse().map_err(|_| bad())?
    };
    let (div, offset) = match tail.find(['+', '-']) {
        Some(i) => (&tail[..i], &tail[i..]),
        None => (tail, ""),
    };
    let b: usize = match div.strip_prefix('/') {
        Some(d) => d.parse().map_err(|_| bad())?,
        None if div.is_empty() => 1,
        None => return Err(bad()),
    };
    if b == 0 {
        return Err(bad());
    }
    let base = a * p / b;
    Ok(match offset.as_bytes().first() {
        None => base,
        Some(b'+') => base + offset[1..].parse::<usize>().map_err(|_| bad())?,
        Some(_) => base.saturating_sub(offset[1..].parse::<usize>().map_err(|_| bad())?),
    })
}

/// Cartesian grid; `t`, `f` and `k` may refer to `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub p: Vec<usize>,
    pub t: Vec<GridValue>,
    #[serde(default = "zero_list")]
    pub f: Vec<GridValue>,
    #[serde(default)]
    pub k: Vec<GridValue>,
}

fn zero_list() -> Vec<GridValue> {
    vec![GridValue::Literal(0)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub p: usize,
    pub t: usize,
    #[serde(default)]
    pub f: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(out, "(p={}, t={}, f={}", self.p, self.t, self.f)?;
        if let Some(k) = self.k {
            write!(out, ", k={k}")?;
        }
        write!(out, ")")
    }
}

/// Closed-form work bounds, with `log` meaning `log2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    /// `t + p sqrt(t) log p`
    Robal,
    /// `t + p sqrt(t) + p min(p/(p-f), t) log p`
    GrubtechWeak,
    /// `t + p sqrt(t) + p min(p/(p-f), t, k) log p`
    GrubtechChains,
    /// `t + p sqrt(t) log^2 p`
    Gilet,
    /// `t + p sqrt(t) + p min(f, t)`
    TwoLists,
    /// `t + p ceil(sqrt t)`
    TwoListsCeil,
}

impl BoundFormula {
    pub fn label(self) -> &'static str {
        match self {
            BoundFormula::Robal => "robal",
            BoundFormula::GrubtechWeak => "grubtech_weak",
            BoundFormula::GrubtechChains => "grubtech_chains",
            BoundFormula::Gilet => "gilet",
            BoundFormula::TwoLists => "two_lists",
            BoundFormula::TwoListsCeil => "two_lists_ceil",
        }
    }

    pub fn eval(self, cell: &Cell) -> f64 {
        let (p, t, f) = (cell.p as f64, cell.t as f64, cell.f as f64);
        let sqrt_t = t.sqrt();
        let log_p = p.log2();
        let leader_cost = || {
            let ratio = if cell.f >= cell.p { t } else { p / (p - f) };
            ratio.min(t)
        };
        match self {
            BoundFormula::Robal => t + p * sqrt_t * log_p,
            BoundFormula::GrubtechWeak => t + p * sqrt_t + p * leader_cost() * log_p,
            BoundFormula::GrubtechChains => {
                let k = cell.k.map_or(f64::INFINITY, |k| k as f64);
                t + p * sqrt_t + p * leader_cost().min(k) * log_p
            }
            BoundFormula::Gilet => t + p * sqrt_t * log_p * log_p,
            BoundFormula::TwoLists => t + p * sqrt_t + p * f.min(t),
            BoundFormula::TwoListsCeil => {
                (cell.t as u64 + cell.p as u64 * ceil_sqrt(cell.t as u64)) as f64
            }
        }
    }

    /// The bound matching a protocol under an adversary label.
    pub fn default_for(protocol: ProtocolKind, label: LabelName) -> Self {
        match protocol {
            ProtocolKind::Robal => BoundFormula::Robal,
            ProtocolKind::Grubtech => match label {
                LabelName::KChainOrdered | LabelName::KThickOrdered => BoundFormula::GrubtechChains,
                _ => BoundFormula::GrubtechWeak,
            },
            ProtocolKind::Gilet => BoundFormula::Gilet,
            ProtocolKind::TwoLists | ProtocolKind::GroupsTogether => BoundFormula::TwoLists,
        }
    }
}

fn default_seeds() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub protocol: ProtocolKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelKind>,
    /// Template; `f` and `k` are overwritten per cell.
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Explicit cells, swept after the grid ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<Cell>,
    #[serde(default = "default_seeds")]
    pub seeds_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundFormula>,
    #[serde(default)]
    pub options: ProtocolOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind, adversary: AdversaryConfig) -> Self {
        ExperimentConfig {
            name: String::new(),
            protocol,
            channel: None,
            adversary,
            grid: None,
            cells: Vec::new(),
            seeds_per_cell: default_seeds(),
            master_seed: 0,
            bound: None,
            options: ProtocolOptions::default(),
            round_cap: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn bound(&self) -> BoundFormula {
        self.bound
            .unwrap_or_else(|| BoundFormula::default_for(self.protocol, self.adversary.label))
    }

    /// Grid cells in `p, t, f, k` nesting order, then the explicit ones.
    pub fn expand(&self) -> Result<Vec<Cell>, HarnessError> {
        let mut cells = Vec::new();
        if let Some(grid) = &self.grid {
            for &p in &grid.p {
                for t in &grid.t {
                    for f in &grid.f {
                        let (t, f) = (t.eval(p)?, f.eval(p)?);
                        if grid.k.is_empty() {
                            cells.push(Cell { p, t, f, k: None });
                        }
                        for k in &grid.k {
                            cells.push(Cell {
                                p,
                                t,
                                f,
                                k: Some(k.eval(p)?),
                            });
                        }
                    }
                }
            }
        }
        cells.extend(self.cells.iter().copied());
        for cell in &cells {
            self.check_cell(cell)?;
        }
        Ok(cells)
    }

    fn check_cell(&self, cell: &Cell) -> Result<(), HarnessError> {
        let invalid = |reason: String| HarnessError::ConfigInvalid {
            cell: cell.to_string(),
            reason,
        };
        if cell.p == 0 || cell.t == 0 {
            return Err(invalid("need p >= 1 and t >= 1".into()));
        }
        if cell.f + 1 > cell.p {
            return Err(invalid("need f <= p - 1".into()));
        }
        if let Some(k) = cell.k {
            if k == 0 || k > cell.f.max(1) {
                return Err(invalid("need 1 <= k <= f".into()));
            }
        }
        Ok(())
    }

    /// The run configuration of replicate `replicate` in cell `index`.
    pub fn run_config(&self, index: usize, cell: &Cell, replicate: usize) -> RunConfig {
        let seed = run_seed(self.master_seed, index, replicate);
        let mut adversary = self.adversary.clone();
        adversary.f = cell.f;
        if cell.k.is_some() {
            adversary.k = cell.k;
        }
        adversary.strategy.seed = mix(adversary.strategy.seed, seed);
        RunConfig {
            protocol: self.protocol,
            channel: self.channel,
            p: cell.p,
            t: cell.t,
            seed,
            adversary,
            round_cap: self.round_cap,
            options: self.options,
            trace: TraceLevel::Summary,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of replicate `replicate` in the cell whose base seed is
/// `master_seed + index`.
pub fn run_seed(master_seed: u64, index: usize, replicate: usize) -> u64 {
    mix(master_seed.wrapping_add(index as u64), replicate as u64)
}

/// One simulation, in the stable CSV layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub protocol: String,
    pub channel: String,
    pub adversary: String,
    pub strategy: String,
    pub p: usize,
    pub t: usize,
    pub f: usize,
    pub k: Option<usize>,
    pub seed: u64,
    pub work: u64,
    pub time: u64,
    pub energy: u64,
}

/// Aggregate over one cell's replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: Cell,
    pub works: Vec<u64>,
    pub mean_work: f64,
    pub median_work: f64,
    pub max_work: u64,
    pub mean_time: f64,
    pub mean_energy: f64,
    pub bound: BoundFormula,
    pub bound_value: f64,
    pub ratio: f64,
    pub violations: Vec<(u64, Violation)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub runs: Vec<RunRow>,
    pub cells: Vec<ResultRow>,
}

impl SweepReport {
    pub fn violations(&self) -> usize {
        self.cells.iter().map(|c| c.violations.len()).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut writer = csv::Writer::from_writer(out);
        for row in &self.runs {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

struct RunResult {
    row: RunRow,
    violation: Option<Violation>,
}

fn run_one(cfg: &RunConfig) -> Result<RunResult, ConfigError> {
    let (trace, metrics) = cfg.run()?;
    let violation = match &trace.outcome {
        Outcome::Violation { reason } => Some(reason.clone()),
        _ => verify_reliability(&trace, cfg.t)
            .violations
            .into_iter()
            .next(),
    };
    Ok(RunResult {
        row: RunRow {
            protocol: cfg.protocol.label().to_string(),
            channel: trace.header.channel.label().to_string(),
            adversary: trace.header.adversary.clone(),
            strategy: trace.header.strategy.clone(),
            p: cfg.p,
            t: cfg.t,
            f: cfg.adversary.f,
            k: cfg.adversary.k,
            seed: cfg.seed,
            work: metrics.work,
            time: metrics.time,
            energy: metrics.energy,
        },
        violation,
    })
}

fn pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("MACDOALL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))
}

fn aggregate(cell: Cell, bound: BoundFormula, results: Vec<RunResult>) -> ResultRow {
    let n = results.len().max(1) as f64;
    let mut works: Vec<u64> = results.iter().map(|r| r.row.work).collect();
    let mean_work = works.iter().sum::<u64>() as f64 / n;
    let mean_time = results.iter().map(|r| r.row.time).sum::<u64>() as f64 / n;
    let mean_energy = results.iter().map(|r| r.row.energy).sum::<u64>() as f64 / n;
    let violations = results
        .iter()
        .filter_map(|r| r.violation.clone().map(|v| (r.row.seed, v)))
        .collect();
    let mut sorted = works.clone();
    sorted.sort_unstable();
    let median_work = match sorted.len() {
        0 => 0.0,
        len if len % 2 == 1 => sorted[len / 2] as f64,
        len => (sorted[len / 2 - 1] + sorted[len / 2]) as f64 / 2.0,
    };
    let bound_value = bound.eval(&cell);
    works.shrink_to_fit();
    ResultRow {
        cell,
        max_work: sorted.last().copied().unwrap_or(0),
        works,
        mean_work,
        median_work,
        mean_time,
        mean_energy,
        bound,
        bound_value,
        ratio: mean_work / bound_value,
        violations,
    }
}

/// Runs every replicate of every cell, in parallel, and aggregates by cell.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepReport, HarnessError> {
    let cells = config.expand()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..config.seeds_per_cell).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<(usize, RunResult), HarnessError>> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(i, j)| {
                let cfg = config.run_config(i, &cells[i], j);
                run_one(&cfg)
                    .map(|r| (i, r))
                    .map_err(|e| HarnessError::ConfigInvalid {
                        cell: cells[i].to_string(),
                        reason: e.to_string(),
                    })
            })
            .collect()
    });
    let mut per_cell: Vec<Vec<RunResult>> = cells.iter().map(|_| Vec::new()).collect();
    for r in results {
        let (i, run) = r?;
        per_cell[i].push(run);
    }
    let bound = config.bound();
    let mut runs = Vec::with_capacity(jobs.len());
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, results) in cells.into_iter().zip(per_cell) {
        runs.extend(results.iter().map(|r| r.row.clone()));
        rows.push(aggregate(cell, bound, results));
    }
    Ok(SweepReport {
        name: config.name.clone(),
        runs,
        cells: rows,
    })
}

/// Writes `<name>.csv` and `<name>.json` into `dir`.
pub fn write_report(
    report: &SweepReport,
    dir: &std::path::Path,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let stem = if report.name.is_empty() {
        "sweep"
    } else {
        report.name.as_str()
    };
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    report.write_csv(std::fs::File::create(&csv_path)?)?;
    serde_json::to_writer_pretty(std::fs::File::create(&json_path)?, report)?;
    Ok((csv_path, json_path))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub bound: BoundFormula,
    pub cells: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// The largest ratio, taken as the constant in front of the bound.
    pub constant_estimate: f64,
    pub spread: f64,
    pub threshold: f64,
    pub holds: bool,
}

pub const DEFAULT_SPREAD_THRESHOLD: f64 = 10.0;

/// `max/min` of the ratios, or infinity if any ratio is not positive.
pub fn ratio_spread(ratios: &[f64]) -> f64 {
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 && min.is_finite() && max.is_finite() {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Fits `mean work / bound` across at least three cells.
pub fn fit_ratio(
    rows: &[ResultRow],
    bound: BoundFormula,
    threshold: f64,
) -> Result<FitReport, HarnessError> {
    if rows.len() < 3 {
        return Err(HarnessError::InsufficientCells {
            needed: 3,
            got: rows.len(),
        });
    }
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r.mean_work / bound.eval(&r.cell))
        .collect();
    let spread = ratio_spread(&ratios);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitReport {
        bound,
        cells: rows.len(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio,
        constant_estimate: max_ratio,
        spread,
        threshold,
        holds: spread < threshold,
    })
}
