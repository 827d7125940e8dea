//! `casim` command-line front end.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 unreadable or malformed
//! config (and usage errors), 3 a scenario invariant is violated.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_scenario, ConfigError};
use crate::emulator::write_trace_csv;
use crate::metrics::{compare, OrderingReport};
use crate::model::{CarrierId, ScenarioConfig};
use crate::scalar::Scalar;
use crate::scheduler::{
    cycle_for_alpha, prefix_for_delay, scenario_prefix, CycleSource, SchedulingPlan,
};
use crate::{simulate, ExactScenario};

pub const SEED_ENV: &str = "CASIM_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "casim",
    version,
    about = "Two-carrier satellite carrier-aggregation simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write report.json, comparison.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write trace.csv with per-PDU timestamps (ns).
        #[arg(long)]
        trace: bool,
    },
    /// Run every *.cfg in a directory and write a combined comparison.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the scheduling plan for a factor or a scenario.
    Plan(PlanArgs),
    /// Print the multi-orbit prefix and its intermediate values.
    Prefix {
        #[arg(long)]
        config: PathBuf,
        /// Use this differential delay instead of the orbit geometry.
        #[arg(long)]
        delta_t_ms: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct PlanArgs {
    /// Load-balancing factor, e.g. 0.4 or 2/5.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invariant(inner) => CliError::Invariant(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invariant(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return e.exit_code();
        }
    };
    let seed = std::env::var(SEED_ENV).ok();
    match execute(cli.command, seed.as_deref(), stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "casim: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(
    command: Command,
    seed: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let seed = seed
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Config(format!("{SEED_ENV}={s:?}: {e}")))
        })
        .transpose()?;
    match command {
        Command::Run { config, out, trace } => cmd_run(&config, &out, trace, seed, stdout),
        Command::Suite { dir, out } => cmd_suite(&dir, &out, seed, stdout),
        Command::Plan(args) => cmd_plan(args.alpha.as_deref(), args.config.as_deref(), stdout),
        Command::Prefix { config, delta_t_ms } => {
            cmd_prefix(&config, delta_t_ms.as_deref(), stdout)
        }
    }
}

/// Config text, its SHA-256, and the parsed scenario.
pub fn load_scenario(path: &Path) -> Result<(ExactScenario, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    let scenario = parse_scenario(&text)?;
    Ok((scenario, hash))
}

/// Shifts every varying orbit by a seed-derived phase in `[0, period)`.
pub fn apply_seed<T: Scalar>(scenario: &mut ScenarioConfig<T>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in [&mut scenario.carrier1, &mut scenario.carrier2] {
        let phase = rng.gen_range(0.0..c.orbit.variation_period_s);
        if !c.orbit.is_constant() {
            c.orbit.phase_offset_s = phase;
        }
    }
}

fn format_cycle(cycle: &[CarrierId]) -> String {
    let items: Vec<String> = cycle.iter().map(|c| c.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn format_prefix<T: Scalar>(
    plan: &SchedulingPlan<T>,
    scenario: Option<&ScenarioConfig<T>>,
) -> String {
    match (plan.prefix_carrier(), scenario) {
        (None, _) => "none".to_string(),
        (Some(c), Some(s)) => format!("{}×{}", plan.prefix.len(), s.carrier(c).orbit.kind),
        (Some(c), None) => format!("{}×carrier{c}", plan.prefix.len()),
    }
}

#[derive(Debug, Serialize)]
struct PlanSummary {
    prefix_len: usize,
    prefix_carrier: Option<CarrierId>,
    cycle: Vec<CarrierId>,
    cycle_source: CycleSource,
    alpha_used: String,
}

#[derive(Debug, Serialize)]
struct AlphaSummary {
    exact: String,
    value: f64,
}

#[derive(Debug, Serialize)]
pub struct ScenarioReport {
    label: String,
    config_hash: String,
    scheduler: String,
    alpha: AlphaSummary,
    plan: PlanSummary,
    report: OrderingReport,
}

/// Identifies one run and where its outputs went.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub label: String,
    pub config_hash: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    pub seed: Option<u64>,
}

struct RunResult {
    report: ScenarioReport,
    trace_csv: Vec<u8>,
}

fn run_scenario(scenario: &ExactScenario, hash: &str) -> Result<RunResult, CliError> {
    let sim = simulate(scenario)?;
    let mut trace_csv = Vec::new();
    write_trace_csv(&sim.traces, &mut trace_csv).expect("writing to a Vec cannot fail");
    let report = ScenarioReport {
        label: scenario.label.clone(),
        config_hash: hash.to_string(),
        scheduler: scenario.scheduler.to_string(),
        alpha: AlphaSummary {
            exact: sim.plan.alpha_measured.to_config_string(),
            value: sim.plan.alpha_measured.as_f64(),
        },
        plan: PlanSummary {
            prefix_len: sim.plan.prefix.len(),
            prefix_carrier: sim.plan.prefix_carrier(),
            cycle: sim.plan.cycle.clone(),
            cycle_source: sim.plan.source,
            alpha_used: sim.plan.alpha_used.to_config_string(),
        },
        report: sim.report,
    };
    Ok(RunResult { report, trace_csv })
}

/// Writes all files via temporaries, renaming only once every write
/// succeeded.
fn write_all(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let tmp_of = |p: &Path| {
        let mut name = OsString::from(".");
        name.push(p.file_name().unwrap_or_default());
        name.push(".tmp");
        p.with_file_name(name)
    };
    let mut written = Vec::new();
    for (path, bytes) in files {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let tmp = tmp_of(path);
        if let Err(e) = fs::write(&tmp, bytes) {
            for t in &written {
                let _ = fs::remove_file(t);
            }
            return Err(io_err(&tmp, e));
        }
        written.push(tmp);
    }
    for ((path, _), tmp) in files.iter().zip(&written) {
        fs::rename(tmp, path).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

fn to_json<S: Serialize>(v: &S) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn cmd_run(
    config: &Path,
    out: &Path,
    trace: bool,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let started = Instant::now();
    let (mut scenario, hash) = load_scenario(config)?;
    if let Some(seed) = seed {
        apply_seed(&mut scenario, seed);
    }
    let result = run_scenario(&scenario, &hash)?;
    let table = compare(&[(scenario.label.as_str(), result.report.report.clone())]);

    let mut files = vec![
        (out.join("report.json"), to_json(&result.report)),
        (out.join("comparison.csv"), table.to_csv().into_bytes()),
    ];
    if trace {
        files.push((out.join("trace.csv"), result.trace_csv));
    }
    let manifest_path = out.join("manifest.json");
    let mut outputs: Vec<PathBuf> = files.iter().map(|(p, _)| p.clone()).collect();
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        label: scenario.label.clone(),
        config_hash: hash,
        outputs,
        wall_clock_s: started.elapsed().as_secs_f64(),
        seed,
    };
    files.push((manifest_path, to_json(&manifest)));
    write_all(&files)?;

    writeln!(stdout, "cycle: {}", format_cycle(&result.report.plan.cycle)).ok();
    write!(stdout, "{table}").ok();
    Ok(())
}

pub fn cmd_suite(
    dir: &Path,
    out: &Path,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let started = Instant::now();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cfg"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "no .cfg files in {}",
            dir.display()
        )));
    }

    let loaded = paths
        .iter()
        .map(|p| {
            let (mut s, h) = load_scenario(p)?;
            if let Some(seed) = seed {
                apply_seed(&mut s, seed);
            }
            Ok((p.clone(), s, h))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    // scenario runs are independent
    let results: Vec<Result<RunResult, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .iter()
            .map(|(_, s, h)| scope.spawn(move || run_scenario(s, h)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for ((path, scenario, _), result) in loaded.iter().zip(&results) {
        let stem = path.file_stem().unwrap_or_default();
        files.push((out.join(stem).join("report.json"), to_json(&result.report)));
        rows.push((scenario.label.clone(), result.report.report.clone()));
    }
    let table = compare(&rows);
    files.push((out.join("comparison.csv"), table.to_csv().into_bytes()));
    let reports: Vec<&ScenarioReport> = results.iter().map(|r| &r.report).collect();
    files.push((out.join("report.json"), to_json(&reports)));
    let manifest_path = out.join("manifest.json");
    let mut outputs: Vec<PathBuf> = files.iter().map(|(p, _)| p.clone()).collect();
    outputs.push(manifest_path.clone());
    let mut hasher = Sha256::new();
    for (_, _, h) in &loaded {
        hasher.update(h.as_bytes());
    }
    let manifest = RunManifest {
        label: format!("suite:{}", dir.display()),
        config_hash: hex::encode(hasher.finalize()),
        outputs,
        wall_clock_s: started.elapsed().as_secs_f64(),
        seed,
    };
    files.push((manifest_path, to_json(&manifest)));
    write_all(&files)?;

    write!(stdout, "{table}").ok();
    Ok(())
}

pub fn cmd_plan(
    alpha: Option<&str>,
    config: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (plan, scenario): (SchedulingPlan<BigRational>, Option<ExactScenario>) =
        match (alpha, config) {
            (Some(a), _) => {
                let value = BigRational::parse_decimal(a)
                    .ok_or_else(|| CliError::Config(format!("--alpha {a:?} is not a number")))?;
                let (cycle, source) = cycle_for_alpha(&value)?;
                let mut plan = SchedulingPlan::new(vec![], cycle, source);
                plan.alpha_measured = value;
                (plan, None)
            }
            (None, Some(path)) => {
                let (s, _) = load_scenario(path)?;
                (crate::scheduler::build_plan(&s)?, Some(s))
            }
            (None, None) => return Err(CliError::Config("pass --alpha or --config".into())),
        };
    writeln!(stdout, "alpha: {}", plan.alpha_measured.to_config_string()).ok();
    writeln!(stdout, "alpha_used: {}", plan.alpha_used.to_config_string()).ok();
    writeln!(
        stdout,
        "source: {}",
        serde_json::to_value(plan.source)
            .unwrap()
            .as_str()
            .unwrap_or("")
    )
    .ok();
    writeln!(
        stdout,
        "prefix: {}",
        format_prefix(&plan, scenario.as_ref())
    )
    .ok();
    writeln!(stdout, "cycle: {}", format_cycle(&plan.cycle)).ok();
    Ok(())
}

pub fn cmd_prefix(
    config: &Path,
    delta_t_ms: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (scenario, _) = load_scenario(config)?;
    let (fast, geometric) = scenario_prefix(&scenario)?;
    let calc = match delta_t_ms {
        None => geometric,
        Some(ms) => {
            let ms = BigRational::parse_decimal(ms)
                .ok_or_else(|| CliError::Config(format!("--delta-t-ms {ms:?} is not a number")))?;
            if ms < BigRational::from_ratio(0, 1) {
                return Err(CliError::Config("--delta-t-ms must be non-negative".into()));
            }
            prefix_for_delay(
                scenario.carrier(fast),
                scenario.pdu_size_bytes,
                ms / BigRational::from_ratio(1000, 1),
            )?
        }
    };
    writeln!(
        stdout,
        "fast_carrier: {fast} ({})",
        scenario.carrier(fast).orbit.kind
    )
    .ok();
    writeln!(stdout, "delta_t_ms: {:.4}", calc.delta_t_s.as_f64() * 1e3).ok();
    writeln!(stdout, "superframes: {:.4}", calc.superframes.as_f64()).ok();
    writeln!(stdout, "pdus_per_fecframe: {}", calc.pdus_per_fecframe).ok();
    writeln!(stdout, "raw: {:.4}", calc.raw.as_f64()).ok();
    writeln!(stdout, "prefix: {}", calc.length).ok();
    Ok(())
}
