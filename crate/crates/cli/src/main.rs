//! `mtsp`: instance generation, single mechanism runs, experiments and reports.
//!
//! Exit codes: 0 on success, 1 on a usage error (bad flags, unknown
//! mechanism, invalid config), 2 on a runtime failure (I/O, unreadable
//! instance).

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mtsp_core::clock::{Budget, ClockMode};
use mtsp_core::experiments::{
    self, emit_report, gen_ch130, gen_circle, load_ch130_base, read_detail, run_experiment1, run_experiment2, write_summary,
    ExperimentConfig, ExperimentError, RatioTable,
};
use mtsp_core::instance::{validate_allocation, Instance};
use mtsp_core::mechanisms::{run, trace::write_trace, MechanismKind};
use mtsp_core::tsplib;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "MTSP_OUT_DIR";

#[derive(Parser)]
#[command(name = "mtsp", version, about = "City allocation mechanisms for multiple travelling salesmen")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    #[value(name = "circle")]
    Circle,
    #[value(name = "ch130-permute")]
    Ch130Permute,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nodes,
    Wall,
}

impl From<ModeArg> for ClockMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nodes => ClockMode::Nodes,
            ModeArg::Wall => ClockMode::Wall,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write generated instances as TSPLIB files.
    Gen {
        #[arg(long, value_enum)]
        generator: GeneratorArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// 130-city TSPLIB file for the permutation generator.
        #[arg(long)]
        base: Option<PathBuf>,
        /// Standard deviation of the circle radius.
        #[arg(long, default_value_t = 0.0)]
        radius_sd: f64,
    },
    /// Run one mechanism on one instance and print the total route length.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        mechanism: String,
        /// Budget in nodes, or milliseconds in wall mode; unlimited when absent.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, value_enum, default_value = "nodes")]
        mode: ModeArg,
        /// Salesman count for files without a `SALESMEN` header.
        #[arg(long)]
        m: Option<usize>,
        /// Write the round and message trace here as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fixed-budget experiment over instance sizes.
    Exp1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Budget-sweep experiment.
    Exp2 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the summary from a detail CSV.
    Report {
        #[arg(long)]
        detail_csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Toml(_) | ExperimentError::Config(_) | ExperimentError::Mechanism(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn out_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or(configured)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen {
            generator,
            seed,
            n,
            m,
            count,
            out,
            base,
            radius_sd,
        } => generate(generator, seed, n, m, count, &out_dir(out, None), base.as_deref(), radius_sd),
        Command::Run {
            instance,
            mechanism,
            budget,
            mode,
            m,
            trace,
        } => run_one(&instance, &mechanism, budget, mode.into(), m, trace.as_deref()),
        Command::Exp1 { config, out } => experiment(&config, out, run_experiment1),
        Command::Exp2 { config, out } => experiment(&config, out, run_experiment2),
        Command::Report { detail_csv, out } => {
            let table = read_detail(&detail_csv)?;
            let dir = out_dir(out, None);
            fs::create_dir_all(&dir)?;
            let path = dir.join(experiments::SUMMARY_FILE);
            write_summary(&path, &table.summary())?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    generator: GeneratorArg,
    seed: u64,
    n: usize,
    m: usize,
    count: usize,
    dir: &Path,
    base: Option<&Path>,
    radius_sd: f64,
) -> Result<(), Failure> {
    if n < m + 1 || m < 2 {
        return Err(Failure::Usage(format!("need m >= 2 and n >= m + 1 (got n = {n}, m = {m})")));
    }
    let base = match generator {
        GeneratorArg::Ch130Permute => {
            let path = base.ok_or_else(|| Failure::Usage("--base is required for ch130-permute".into()))?;
            Some(load_ch130_base(path)?)
        }
        GeneratorArg::Circle => None,
    };
    fs::create_dir_all(dir)?;
    for i in 0..count {
        let (inst, name) = match &base {
            Some(points) => (gen_ch130(points, i, n, m)?, format!("ch130p_n{n}_m{m}_{i}")),
            None => (gen_circle(seed, i, n, m, radius_sd)?, format!("circle_s{seed}_n{n}_m{m}_{i}")),
        };
        let path = dir.join(format!("{name}.tsp"));
        fs::write(&path, tsplib::write_instance(&inst, &name))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run_one(
    path: &Path,
    mechanism: &str,
    budget: Option<f64>,
    mode: ClockMode,
    m: Option<usize>,
    trace: Option<&Path>,
) -> Result<(), Failure> {
    let kind: MechanismKind = mechanism.parse().map_err(|e: mtsp_core::mechanisms::UnknownMechanism| Failure::Usage(e.to_string()))?;
    let budget = match budget {
        None => Budget::unlimited(mode),
        Some(b) if !(b > 0.0) || !b.is_finite() => return Err(Failure::Usage(format!("budget {b} is not positive"))),
        Some(b) => match mode {
            ClockMode::Nodes => Budget::nodes(b as u64),
            ClockMode::Wall => Budget::new(ClockMode::Wall, Some((b * 1000.0).round() as u64)),
        },
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let inst: Instance<f64> =
        tsplib::read_instance(&text, m).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let result = run(kind, &inst, budget);
    let violations = validate_allocation(&inst, &result.allocation);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Failure::Runtime(format!("invalid allocation: {}", list.join(", "))));
    }
    println!("total {:.6}", result.total);
    for (a, r) in result.routes.iter().enumerate() {
        let cities: Vec<String> = r.cities.iter().map(ToString::to_string).collect();
        println!("s{a} {:.6} {}", r.length, cities.join(" "));
    }
    println!(
        "rounds {} elapsed {} termination {} optimal {}",
        result.rounds.len(),
        result.budget.elapsed_reported(),
        serde_json::to_string(&result.termination).expect("plain enum").trim_matches('"'),
        result.all_optimal
    );
    if let Some(trace) = trace {
        let mut w = BufWriter::new(fs::File::create(trace)?);
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
        write_trace(&mut w, kind.name(), name, &result.rounds, &result.messages)?;
        w.flush()?;
    }
    Ok(())
}

fn experiment(
    config: &Path,
    out: Option<PathBuf>,
    runner: fn(&ExperimentConfig) -> Result<RatioTable, ExperimentError>,
) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure::Runtime(format!("{}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    // a relative base file is resolved against the config's directory
    if let (Some(base), Some(parent)) = (cfg.base.clone(), config.parent()) {
        if base.is_relative() {
            cfg.base = Some(parent.join(base));
        }
    }
    let table = runner(&cfg)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let files = emit_report(&table, &out_dir(out, cfg.out.clone()))?;
    println!("{}", files.detail.display());
    println!("{}", files.summary.display());
    for s in &files.stages {
        println!("{}", s.display());
    }
    Ok(())
}
