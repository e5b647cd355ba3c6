//! The `diffnet` command: scenario generation, simulation, closed-form
//! analysis and rule comparison.

pub mod config;
pub mod presets;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::write_json;
use crate::linalg::spectral_radius;
use crate::network::{CombinationMatrices, Slot, TrajectoryMode};
use crate::rules::RuleSpec;
use crate::sim::{run_monte_carlo, steady_state_window, to_db, LearningCurve};
use crate::theory::{analyze, assemble_mean_dynamics, TheoryReport};

pub use config::{Scenario, ScenarioConfig};
pub use presets::Preset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "diffnet", version, about = "Diffusion LMS over noisy networks: simulation and steady-state theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a preset scenario and its network file.
    GenScenario {
        preset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the Monte-Carlo experiment and write the learning curve.
    Simulate(RunArgs),
    /// Evaluate bias, stability and steady-state MSD/EMSE.
    Theory(RunArgs),
    /// Rank combination rules for one slot by steady-state MSD.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated rule names.
        #[arg(long, value_delimiter = ',', required = true)]
        rules: Vec<String>,
        #[arg(long, default_value = "a2")]
        slot: String,
        /// Also simulate each rule.
        #[arg(long)]
        simulate: bool,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for outputs (defaults to the config's directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<Scenario> {
        let mut cfg: ScenarioConfig = crate::format::read_json(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(i) = self.iters {
            cfg.iterations = i;
        }
        let base = self.config.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::from_config(cfg, &base)
    }

    fn out_dir(&self, scenario: &Scenario) -> PathBuf {
        self.out.clone().unwrap_or_else(|| scenario.base_dir.clone())
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MeanUnstable { .. }
        | Error::MeanSquareUnstable { .. }
        | Error::SeriesNotConverged { .. }
        | Error::Numerical(_) => EXIT_UNSTABLE,
        _ => EXIT_CONFIG,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::GenScenario { preset, seed, out } => {
            let (cfg, net) = gen_scenario(preset.parse()?, seed, &out)?;
            say(format_args!("wrote {} and {}", cfg.display(), net.display()));
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => {
            let scenario = args.load()?;
            let summary = simulate(&scenario, &args.out_dir(&scenario))?;
            say(format_args!("{summary}"));
            Ok(EXIT_OK)
        }
        Command::Theory(args) => {
            let scenario = args.load()?;
            let (report, path) = theory(&scenario, &args.out_dir(&scenario))?;
            say(format_args!("{}", serde_json::to_string_pretty(&report).expect("report serializes")));
            eprintln!("wrote {}", path.display());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if report.is_stable() { EXIT_OK } else { EXIT_UNSTABLE })
        }
        Command::Compare { run, rules, slot, simulate } => {
            let scenario = run.load()?;
            let rules = rules.iter().map(|r| r.parse()).collect::<Result<Vec<RuleSpec>>>()?;
            let (rows, path) = compare(&scenario, &rules, parse_slot(&slot)?, simulate, &run.out_dir(&scenario))?;
            for r in &rows {
                say(format_args!(
                    "{:<20} msd {:>9} dB  emse {:>9} dB{}",
                    r.rule,
                    fmt_db(r.msd_db),
                    fmt_db(r.emse_db),
                    r.sim_msd_db.map(|m| format!("  (sim msd {m:.2} dB)")).unwrap_or_default()
                ));
            }
            eprintln!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
    }
}

/// Prints a line, ignoring a closed stdout.
fn say(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{args}");
}

fn fmt_db(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

pub fn parse_slot(s: &str) -> Result<Slot> {
    match s.to_ascii_lowercase().as_str() {
        "a1" => Ok(Slot::A1),
        "c" => Ok(Slot::C),
        "a2" => Ok(Slot::A2),
        _ => Err(Error::Config(format!("unknown slot '{s}' (expected a1, c or a2)"))),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(io_err(p)),
        _ => Ok(()),
    }
}

/// Writes `scenario.json` and `network.json` into `out`.
pub fn gen_scenario(preset: Preset, seed: u64, out: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let (cfg, net) = presets::generate(preset, seed, "network.json")?;
    let cfg_path = out.join("scenario.json");
    let net_path = out.join("network.json");
    write_json(&net_path, &net)?;
    write_json(&cfg_path, &cfg)?;
    Ok((cfg_path, net_path))
}

/// One row of the learning-curve CSV. `iter` counts from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iter: usize,
    pub msd_db: f64,
    pub emse_db: f64,
    pub msd_linear: f64,
    pub emse_linear: f64,
    pub divergent_runs: usize,
}

pub fn curve_rows(curve: &LearningCurve) -> Vec<CurveRow> {
    curve
        .msd
        .iter()
        .zip(&curve.emse)
        .enumerate()
        .map(|(i, (&m, &e))| CurveRow {
            iter: i,
            msd_db: to_db(m),
            emse_db: to_db(e),
            msd_linear: m,
            emse_linear: e,
            divergent_runs: curve.divergent_runs,
        })
        .collect()
}

pub fn write_curve_csv(path: &Path, curve: &LearningCurve) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in curve_rows(curve) {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// Columns `iter, wbar1_re, wbar1_im, ..., wo1_re, wo1_im, ...`.
pub fn write_trajectory_csv(path: &Path, curve: &LearningCurve) -> Result<()> {
    let traj = curve
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::Config("no trajectory was recorded".into()))?;
    let m = traj.first().map_or(0, |(w, _)| w.len());
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["iter".to_string()];
    for prefix in ["wbar", "wo"] {
        for j in 1..=m {
            header.push(format!("{prefix}{j}_re"));
            header.push(format!("{prefix}{j}_im"));
        }
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, (avg, truth)) in traj.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        for z in avg.iter().chain(truth) {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn resolve(out_dir: &Path, file: Option<&PathBuf>, default: &str) -> PathBuf {
    out_dir.join(file.map_or_else(|| PathBuf::from(default), Clone::clone))
}

/// Linear steady-state averages of a curve: the settled tail if there is
/// one, otherwise the last 20%.
pub fn steady_state_average(curve: &LearningCurve, rho_b: f64) -> (f64, f64) {
    let n = curve.msd.len();
    let range = steady_state_window(n, rho_b).unwrap_or((n * 4 / 5).min(n - 1)..n);
    curve.average(range)
}

fn rho_b(scenario: &Scenario, mats: &CombinationMatrices) -> Result<f64> {
    let md = assemble_mean_dynamics(&scenario.network, mats, scenario.network.w0())?;
    spectral_radius(&md.b)
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub curve_path: PathBuf,
    pub trajectory_path: Option<PathBuf>,
    pub runs: usize,
    pub divergent_runs: usize,
    pub msd_db: f64,
    pub emse_db: f64,
}

impl std::fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "steady-state MSD {:.3} dB, EMSE {:.3} dB ({} runs, {} divergent); curve in {}",
            self.msd_db,
            self.emse_db,
            self.runs,
            self.divergent_runs,
            self.curve_path.display()
        )?;
        if let Some(p) = &self.trajectory_path {
            write!(f, ", trajectory in {}", p.display())?;
        }
        Ok(())
    }
}

pub fn simulate(scenario: &Scenario, out_dir: &Path) -> Result<SimulateSummary> {
    let mats = scenario.matrices()?;
    let mut opts = scenario.sim_options()?;
    let outputs = &scenario.config.outputs;
    opts.record_trajectory = outputs.trajectory.is_some();
    let curve = run_monte_carlo(&scenario.network, &mats, &opts)?;

    let curve_path = resolve(out_dir, outputs.curve.as_ref(), "curve.csv");
    write_curve_csv(&curve_path, &curve)?;
    let trajectory_path = match &outputs.trajectory {
        Some(p) => {
            let path = out_dir.join(p);
            write_trajectory_csv(&path, &curve)?;
            Some(path)
        }
        None => None,
    };
    if curve.runs == 0 {
        return Err(Error::Numerical(format!("all {} runs diverged", curve.divergent_runs)));
    }
    let (msd, emse) = steady_state_average(&curve, rho_b(scenario, &mats)?);
    Ok(SimulateSummary {
        curve_path,
        trajectory_path,
        runs: curve.runs,
        divergent_runs: curve.divergent_runs,
        msd_db: to_db(msd),
        emse_db: to_db(emse),
    })
}

/// Writes the report even when the configuration is unstable.
pub fn theory(scenario: &Scenario, out_dir: &Path) -> Result<(TheoryReport, PathBuf)> {
    if scenario.is_adaptive()? {
        return Err(Error::Config("the adaptive rule has no closed-form steady state; use simulate".into()));
    }
    let mats = scenario.matrices()?;
    let mut report = analyze(&scenario.network, &mats)?;
    if scenario.network.trajectory.mode() == TrajectoryMode::Rotation {
        report
            .warnings
            .push("rotating target: values are for a fixed target at the initial vector".into());
    }
    let path = resolve(out_dir, scenario.config.outputs.theory.as_ref(), "theory.json");
    ensure_parent(&path)?;
    write_json(&path, &report)?;
    Ok((report, path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub rule: String,
    pub msd: Option<f64>,
    pub emse: Option<f64>,
    pub msd_db: Option<f64>,
    pub emse_db: Option<f64>,
    pub sim_msd_db: Option<f64>,
    pub sim_emse_db: Option<f64>,
    pub divergent_runs: Option<usize>,
}

/// Evaluates each rule in `slot` with the other slots as configured. Rows
/// are sorted by theoretical MSD; rules without one (adaptive, unstable)
/// come last in input order.
pub fn compare_rows(scenario: &Scenario, rules: &[RuleSpec], slot: Slot, simulate: bool) -> Result<Vec<CompareRow>> {
    if rules.len() < 2 {
        return Err(Error::Config("compare needs at least two rules".into()));
    }
    if rules.iter().any(RuleSpec::is_adaptive) {
        if slot != Slot::A2 {
            return Err(Error::Config(format!("the adaptive rule is only available for A2, not {slot}")));
        }
        if !simulate {
            return Err(Error::Config("the adaptive rule has no closed form; add --simulate".into()));
        }
    }
    let mut rows = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut cfg = scenario.config.clone();
        cfg.rules.set(slot, rule.to_string());
        let sc = Scenario { config: cfg, network: scenario.network.clone(), base_dir: scenario.base_dir.clone() };
        let mats = sc.matrices()?;
        let mut row = CompareRow {
            rule: rule.to_string(),
            msd: None,
            emse: None,
            msd_db: None,
            emse_db: None,
            sim_msd_db: None,
            sim_emse_db: None,
            divergent_runs: None,
        };
        if !rule.is_adaptive() {
            let report = analyze(&sc.network, &mats)?;
            row.msd = report.msd;
            row.emse = report.emse;
            row.msd_db = report.msd_db;
            row.emse_db = report.emse_db;
        }
        if simulate {
            let curve = run_monte_carlo(&sc.network, &mats, &sc.sim_options()?)?;
            row.divergent_runs = Some(curve.divergent_runs);
            if curve.runs > 0 {
                let (m, e) = steady_state_average(&curve, rho_b(&sc, &mats)?);
                row.sim_msd_db = Some(to_db(m));
                row.sim_emse_db = Some(to_db(e));
            }
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| match (a.msd, b.msd) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}

pub fn compare(
    scenario: &Scenario,
    rules: &[RuleSpec],
    slot: Slot,
    simulate: bool,
    out_dir: &Path,
) -> Result<(Vec<CompareRow>, PathBuf)> {
    let rows = compare_rows(scenario, rules, slot, simulate)?;
    let path = resolve(out_dir, scenario.config.outputs.compare.as_ref(), "compare.csv");
    ensure_parent(&path)?;
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok((rows, path))
}

pub fn read_compare_csv(path: &Path) -> Result<Vec<CompareRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}
