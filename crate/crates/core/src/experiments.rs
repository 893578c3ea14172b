//! Instance generators, the two experiment protocols, ratio statistics and
//! CSV reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Budget, ClockMode};
use crate::geometry::Point;
use crate::instance::{validate_allocation, Instance, InstanceError};
use crate::mechanisms::{run, MechanismKind, UnknownMechanism};
use crate::tsplib::{self, TsplibError};

/// Coordinates a permutation base file must provide.
pub const CH130_SIZE: usize = 130;
pub const CIRCLE_RADIUS: f64 = 150.0;
pub const CIRCLE_CENTRE: f64 = 150.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed base file: {0}")]
    Tsplib(#[from] TsplibError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Mechanism(#[from] UnknownMechanism),
    #[error("quantile of an empty list")]
    Empty,
}

// ---- generators ----

/// Instance `i` of the ordinate-permutation family: city `c` keeps the
/// abscissa of base city `c` and takes the ordinate of base city
/// `(c + i) % 130`. Only the first `n` cities are used.
pub fn gen_ch130(base: &[Point<f64>], i: usize, n: usize, m: usize) -> Result<Instance<f64>, ExperimentError> {
    if base.len() != CH130_SIZE {
        return Err(ExperimentError::Config(format!(
            "base file has {} coordinates, expected {CH130_SIZE}",
            base.len()
        )));
    }
    if n > CH130_SIZE {
        return Err(ExperimentError::Config(format!("n = {n} exceeds {CH130_SIZE}")));
    }
    let points = (0..n)
        .map(|c| Point::new(base[c].x, base[(c + i) % CH130_SIZE].y))
        .collect();
    Ok(Instance::round_robin(points, m)?)
}

/// Reads the base coordinates for [`gen_ch130`] from a TSPLIB file.
pub fn load_ch130_base(path: &Path) -> Result<Vec<Point<f64>>, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let file = tsplib::parse::<f64>(&text)?;
    if file.points.len() != CH130_SIZE {
        return Err(ExperimentError::Config(format!(
            "{} has {} coordinates, expected {CH130_SIZE}",
            path.display(),
            file.points.len()
        )));
    }
    Ok(file.points)
}

/// Instance `i` of the circle family: every city, the depot included, lies
/// at radius 150 around (150, 150) at a uniform angle in [0°, 360°). A
/// positive `radius_sd` draws the radius from a normal distribution instead.
pub fn gen_circle(seed: u64, i: usize, n: usize, m: usize, radius_sd: f64) -> Result<Instance<f64>, ExperimentError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let radius = if radius_sd > 0.0 {
        Some(Normal::new(CIRCLE_RADIUS, radius_sd).map_err(|e| ExperimentError::Config(e.to_string()))?)
    } else {
        None
    };
    let points = (0..n)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..360.0);
            let r = radius.map_or(CIRCLE_RADIUS, |d| d.sample(&mut rng));
            let t = theta.to_radians();
            Point::new(CIRCLE_CENTRE + r * t.cos(), CIRCLE_CENTRE + r * t.sin())
        })
        .collect();
    Ok(Instance::round_robin(points, m)?)
}

// ---- statistics ----

/// Nearest-rank quantile: the sorted value at rank `⌈q·N⌉`.
pub fn decile(values: &[f64], q: f64) -> Result<f64, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // the small slack keeps 0.9 * 10 at rank 9 despite rounding
    let rank = ((q * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

// ---- configuration ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "ch130-permute")]
    Ch130Permute,
    #[serde(rename = "circle")]
    Circle,
}

/// Budgets in clock units: nodes, or milliseconds in wall mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSchedule {
    List(Vec<f64>),
    Rule(BudgetRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetRule {
    /// `start / 2^k` for `k` in `0..steps`.
    Halving { start: f64, steps: u32 },
    /// The halving stage followed by `count` budgets
    /// `start / 2^pivot - decrement * (1 + k)`.
    HalvingThenLinear {
        start: f64,
        steps: u32,
        pivot: u32,
        decrement: f64,
        count: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Screening,
    Detailed,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Screening => "screening",
            Stage::Detailed => "detailed",
        })
    }
}

impl BudgetSchedule {
    pub fn points(&self, mode: ClockMode) -> Vec<(Stage, f64)> {
        let snap = |v: f64| if mode == ClockMode::Nodes { v.floor() } else { v };
        match self {
            BudgetSchedule::List(v) => v.iter().map(|&b| (Stage::Screening, snap(b))).collect(),
            BudgetSchedule::Rule(BudgetRule::Halving { start, steps }) => {
                (0..*steps).map(|k| (Stage::Screening, snap(start / 2f64.powi(k as i32)))).collect()
            }
            BudgetSchedule::Rule(BudgetRule::HalvingThenLinear {
                start,
                steps,
                pivot,
                decrement,
                count,
            }) => {
                let pivot_budget = start / 2f64.powi(*pivot as i32);
                (0..*steps)
                    .map(|k| (Stage::Screening, snap(start / 2f64.powi(k as i32))))
                    .chain((0..*count).map(|k| (Stage::Detailed, snap(pivot_budget - decrement * f64::from(1 + k)))))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

impl Sizes {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Sizes::One(n) => vec![*n],
            Sizes::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub instances: usize,
    pub n: Sizes,
    pub m: usize,
    pub mechanisms: Vec<String>,
    pub budget_schedule: BudgetSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: ClockMode,
    /// TSPLIB file with the 130 base coordinates of the permutation family.
    #[serde(default)]
    pub base: Option<PathBuf>,
    /// Directory receiving the CSV reports.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Standard deviation of the circle radius; zero keeps every city on the circle.
    #[serde(default)]
    pub radius_sd: f64,
}

fn default_mode() -> ClockMode {
    ClockMode::Nodes
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |s: String| Err(ExperimentError::Config(s));
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.n.values().is_empty() {
            return bad("n must list at least one size".into());
        }
        if let Some(&n) = self.n.values().iter().find(|&&n| n < self.m + 1) {
            return bad(format!("n = {n} leaves a salesman without a city (m = {})", self.m));
        }
        if self.m < 2 {
            return bad("m must be at least 2".into());
        }
        let points = self.budget_schedule.points(self.mode);
        if points.is_empty() {
            return bad("budget schedule is empty".into());
        }
        if let Some((_, b)) = points.iter().find(|(_, b)| !(*b > 0.0) || !b.is_finite()) {
            return bad(format!("budget {b} is not positive"));
        }
        if !(self.radius_sd >= 0.0) {
            return bad("radius_sd must be non-negative".into());
        }
        if self.generator == Generator::Ch130Permute && self.base.is_none() {
            return bad("the ch130-permute generator needs `base`".into());
        }
        self.mechanism_kinds()?;
        Ok(())
    }

    pub fn mechanism_kinds(&self) -> Result<Vec<MechanismKind>, ExperimentError> {
        let mut kinds = Vec::new();
        for name in &self.mechanisms {
            let k: MechanismKind = name.parse()?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        if kinds.is_empty() {
            return Err(ExperimentError::Config("no mechanism listed".into()));
        }
        Ok(kinds)
    }

    pub fn budget_for(&self, value: f64) -> Budget {
        match self.mode {
            ClockMode::Nodes => Budget::nodes(value as u64),
            ClockMode::Wall => Budget::new(ClockMode::Wall, Some((value * 1000.0).round() as u64)),
        }
    }
}

// ---- ratio tables ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryKey {
    N,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub mechanism: MechanismKind,
    pub n: usize,
    pub m: usize,
    pub budget: f64,
    pub stage: Stage,
    pub instance: usize,
    pub ratio: f64,
    /// Total route length of the mechanism.
    pub total: f64,
    /// Total route length of the reference run on the same instance.
    pub reference_total: f64,
    /// The reference run proved every solve optimal.
    pub reference_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mechanism: MechanismKind,
    pub key: f64,
    pub median: f64,
    pub d9: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub key: SummaryKey,
    pub rows: Vec<RatioRow>,
    pub warnings: Vec<String>,
}

impl RatioTable {
    pub fn empty(key: SummaryKey) -> Self {
        Self {
            key,
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn key_of(&self, row: &RatioRow) -> f64 {
        match self.key {
            SummaryKey::N => row.n as f64,
            SummaryKey::Budget => row.budget,
        }
    }

    pub fn ratios(&self, mechanism: MechanismKind, key: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.mechanism == mechanism && self.key_of(r) == key)
            .map(|r| r.ratio)
            .collect()
    }

    /// Median and ninth decile per (mechanism, key), ordered by mechanism
    /// then key.
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.summary_where(|_| true)
    }

    pub fn summary_for_stage(&self, stage: Stage) -> Vec<SummaryRow> {
        self.summary_where(|r| r.stage == stage)
    }

    fn summary_where(&self, keep: impl Fn(&RatioRow) -> bool) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(MechanismKind, OrdF64), Vec<f64>> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| keep(r)) {
            groups.entry((r.mechanism, OrdF64(self.key_of(r)))).or_default().push(r.ratio);
        }
        groups
            .into_iter()
            .map(|((mechanism, key), v)| SummaryRow {
                mechanism,
                key: key.0,
                median: decile(&v, 0.5).expect("groups are nonempty"),
                d9: decile(&v, 0.9).expect("groups are nonempty"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

// ---- runners ----

struct Job {
    n: usize,
    stage: Stage,
    budget: f64,
    instance: usize,
}

enum Outcome {
    Done { total: f64, optimal: bool },
    Failed(String),
}

fn run_checked(kind: MechanismKind, inst: &Instance<f64>, budget: Budget) -> Outcome {
    match catch_unwind(AssertUnwindSafe(|| run(kind, inst, budget))) {
        Err(_) => Outcome::Failed("panicked".into()),
        Ok(r) => {
            let violations = validate_allocation(inst, &r.allocation);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
                Outcome::Failed(format!("invalid allocation: {}", list.join(", ")))
            } else if !r.total.is_finite() || r.total <= 0.0 {
                Outcome::Failed(format!("total length {}", r.total))
            } else {
                Outcome::Done {
                    total: r.total,
                    optimal: r.all_optimal,
                }
            }
        }
    }
}

fn generate(cfg: &ExperimentConfig, base: Option<&[Point<f64>]>, i: usize, n: usize) -> Result<Instance<f64>, ExperimentError> {
    match cfg.generator {
        Generator::Ch130Permute => gen_ch130(base.expect("loaded with the config"), i, n, cfg.m),
        Generator::Circle => gen_circle(cfg.seed, i, n, cfg.m, cfg.radius_sd),
    }
}

/// Rows and warnings produced by one job.
type JobOutput = (Vec<RatioRow>, Vec<String>);

/// Runs every (size, budget, instance, mechanism) combination. The reference
/// mechanism always runs, listed or not; rows come out in (size, budget,
/// instance, mechanism) order whatever the thread interleaving.
fn run_grid(cfg: &ExperimentConfig, key: SummaryKey) -> Result<RatioTable, ExperimentError> {
    cfg.validate()?;
    let kinds = cfg.mechanism_kinds()?;
    let base = match cfg.generator {
        Generator::Ch130Permute => Some(load_ch130_base(cfg.base.as_deref().expect("validated"))?),
        Generator::Circle => None,
    };
    let mut jobs = Vec::new();
    for n in cfg.n.values() {
        for (stage, budget) in cfg.budget_schedule.points(cfg.mode) {
            for instance in 0..cfg.instances {
                jobs.push(Job {
                    n,
                    stage,
                    budget,
                    instance,
                });
            }
        }
    }
    let results: Vec<Result<JobOutput, ExperimentError>> = jobs
        .par_iter()
        .map(|job| {
            let inst = generate(cfg, base.as_deref(), job.instance, job.n)?;
            let mut warnings = Vec::new();
            let label = format!("n={} budget={} instance={}", job.n, job.budget, job.instance);
            let (reference_total, reference_optimal) =
                match run_checked(MechanismKind::CentrB, &inst, cfg.budget_for(job.budget)) {
                    Outcome::Done { total, optimal } => (total, optimal),
                    Outcome::Failed(why) => {
                        warnings.push(format!("{label}: centr_b failed ({why}); instance excluded"));
                        return Ok((Vec::new(), warnings));
                    }
                };
            let mut rows = Vec::new();
            for &kind in &kinds {
                let outcome = if kind == MechanismKind::CentrB {
                    Outcome::Done {
                        total: reference_total,
                        optimal: reference_optimal,
                    }
                } else {
                    run_checked(kind, &inst, cfg.budget_for(job.budget))
                };
                match outcome {
                    Outcome::Done { total, .. } => rows.push(RatioRow {
                        mechanism: kind,
                        n: job.n,
                        m: cfg.m,
                        budget: job.budget,
                        stage: job.stage,
                        instance: job.instance,
                        ratio: total / reference_total,
                        total,
                        reference_total,
                        reference_optimal,
                    }),
                    Outcome::Failed(why) => warnings.push(format!("{label}: {kind} failed ({why}); instance excluded")),
                }
            }
            Ok((rows, warnings))
        })
        .collect();
    let mut table = RatioTable::empty(key);
    for r in results {
        let (rows, warnings) = r?;
        table.rows.extend(rows);
        table.warnings.extend(warnings);
    }
    Ok(table)
}

/// Fixed budget, summarised per instance size.
pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<RatioTable, ExperimentError> {
    if cfg.budget_schedule.points(cfg.mode).len() != 1 {
        return Err(ExperimentError::Config("experiment 1 takes exactly one budget".into()));
    }
    run_grid(cfg, SummaryKey::N)
}

/// Budget sweep at one instance size, summarised per budget.
pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<RatioTable, ExperimentError> {
    if cfg.n.values().len() != 1 {
        return Err(ExperimentError::Config("experiment 2 takes exactly one instance size".into()));
    }
    run_grid(cfg, SummaryKey::Budget)
}

/// The budget schedule of the time-sweep experiment in milliseconds: ten
/// halvings from 30 minutes, then ten steps of 1.25 s down from
/// 1800000 / 2^7 ms.
pub fn reference_time_schedule() -> BudgetSchedule {
    BudgetSchedule::Rule(BudgetRule::HalvingThenLinear {
        start: 1_800_000.0,
        steps: 10,
        pivot: 7,
        decrement: 1250.0,
        count: 10,
    })
}

// ---- reports ----

pub const DETAIL_FILE: &str = "detail.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub detail: PathBuf,
    pub summary: PathBuf,
    /// One summary per stage when the table mixes screening and detailed budgets.
    pub stages: Vec<PathBuf>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["mechanism", "budget_or_n", "median", "d9"])?;
    for r in rows {
        w.write_record([r.mechanism.name().to_string(), num(r.key), num(r.median), num(r.d9)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `detail.csv` and `summary.csv` (plus `summary_<stage>.csv` when
/// both stages are present) into `dir`.
pub fn emit_report(table: &RatioTable, dir: &Path) -> Result<ReportFiles, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let detail = dir.join(DETAIL_FILE);
    let mut w = csv::Writer::from_path(&detail)?;
    w.write_record(["mechanism", "n", "m", "budget", "instance_id", "ratio"])?;
    let mut rows: Vec<&RatioRow> = table.rows.iter().collect();
    rows.sort_by(|a, b| {
        (a.mechanism, a.n, OrdF64(a.budget), a.instance).cmp(&(b.mechanism, b.n, OrdF64(b.budget), b.instance))
    });
    for r in rows {
        w.write_record([
            r.mechanism.name().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            num(r.budget),
            r.instance.to_string(),
            num(r.ratio),
        ])?;
    }
    w.flush()?;
    let summary = dir.join(SUMMARY_FILE);
    write_summary(&summary, &table.summary())?;
    let present: BTreeSet<Stage> = table.rows.iter().map(|r| r.stage).collect();
    let mut stages = Vec::new();
    if present.len() > 1 {
        for stage in present {
            let path = dir.join(format!("summary_{stage}.csv"));
            write_summary(&path, &table.summary_for_stage(stage))?;
            stages.push(path);
        }
    }
    Ok(ReportFiles { detail, summary, stages })
}

#[derive(Debug, Deserialize)]
struct DetailRecord {
    mechanism: String,
    n: usize,
    m: usize,
    budget: f64,
    instance_id: usize,
    ratio: f64,
}

/// Reads a detail CSV back. The summary key is the budget when several
/// budgets occur, the size otherwise. Totals are not stored, so they read
/// back as NaN.
pub fn read_detail(path: &Path) -> Result<RatioTable, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let rec: DetailRecord = rec?;
        rows.push(RatioRow {
            mechanism: rec.mechanism.parse()?,
            n: rec.n,
            m: rec.m,
            budget: rec.budget,
            stage: Stage::Screening,
            instance: rec.instance_id,
            ratio: rec.ratio,
            total: f64::NAN,
            reference_total: f64::NAN,
            reference_optimal: false,
        });
    }
    let budgets: BTreeSet<OrdF64> = rows.iter().map(|r| OrdF64(r.budget)).collect();
    let key = if budgets.len() > 1 { SummaryKey::Budget } else { SummaryKey::N };
    Ok(RatioTable {
        key,
        rows,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_deciles() {
        assert_eq!(decile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(decile(&ten, 0.9).unwrap(), 9.0);
        assert!(decile(&[], 0.5).is_err());
    }

    #[test]
    fn reference_schedule_values() {
        let pts = reference_time_schedule().points(ClockMode::Wall);
        assert_eq!(pts.len(), 20);
        assert_eq!(pts[0].1, 1_800_000.0);
        assert!((pts[9].1 - 3515.625).abs() < 1e-9);
        assert_eq!(pts[10], (Stage::Detailed, 12812.5));
        assert_eq!(pts[19], (Stage::Detailed, 1562.5));
    }

    #[test]
    fn config_parses_both_schedule_forms() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            generator = "circle"
            instances = 2
            n = [5, 6]
            m = 2
            mechanisms = ["centr_b", "p2p_s"]
            budget_schedule = [500]
            seed = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.n.values(), vec![5, 6]);
        assert_eq!(cfg.mode, ClockMode::Nodes);
        let cfg = ExperimentConfig::from_toml(
            r#"
            generator = "circle"
            instances = 1
            n = 5
            m = 2
            mechanisms = ["norealloc"]
            budget_schedule = { kind = "halving", start = 1000, steps = 3 }
            "#,
        )
        .unwrap();
        let budgets: Vec<f64> = cfg.budget_schedule.points(cfg.mode).into_iter().map(|p| p.1).collect();
        assert_eq!(budgets, vec![1000.0, 500.0, 250.0]);
    }

    #[test]
    fn config_rejects_bad_values() {
        let base = |extra: &str| {
            format!(
                "generator = \"circle\"\nn = 5\nm = 2\nmechanisms = [\"centr_b\"]\nbudget_schedule = [10]\n{extra}"
            )
        };
        assert!(ExperimentConfig::from_toml(&base("instances = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&base("instances = 1\nmode = \"nodes\"")).is_ok());
        let zero = base("instances = 1").replace("[10]", "[0]");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
        let selfish_cluster = base("instances = 1").replace("centr_b", "cluster_s");
        assert!(matches!(
            ExperimentConfig::from_toml(&selfish_cluster),
            Err(ExperimentError::Mechanism(UnknownMechanism::Unspecified(_)))
        ));
    }
}
