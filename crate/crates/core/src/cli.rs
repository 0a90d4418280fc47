//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 infeasible or
//! horizon exhausted, 4 branch-and-bound node limit.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::PlanningConfig;
use crate::planner::{
    compare_report, damage_constrained_search, goal_sweep, min_time_search, Mode, PlanError, SearchOptions,
    SearchStrategy, TrajectoryPlan,
};
use crate::solver::{dump, solve_lp, solve_milp, LpStatus, MilpStatus, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NODE_LIMIT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_INTERNAL,
            CliError::Plan(e) => plan_exit_code(e),
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

pub fn plan_exit_code(e: &PlanError) -> i32 {
    match e {
        PlanError::Config(_) | PlanError::InvalidArgument(_) => EXIT_INVALID,
        PlanError::HorizonExhausted { .. } => EXIT_INFEASIBLE,
        PlanError::NodeLimit { .. } => EXIT_NODE_LIMIT,
        PlanError::Solver(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Free,
    Tolerant,
    Damage,
}

impl ModeArg {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "free" => Some(Self::Free),
            "tolerant" => Some(Self::Tolerant),
            "damage" => Some(Self::Damage),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Free => "free",
            Self::Tolerant => "tolerant",
            Self::Damage => "damage",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ctplan", version, about = "Collision-tolerant minimum-time planning near a wall")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimum-time plan for one mode; writes a trajectory CSV.
    Plan(RunArgs),
    /// Collision-free vs collision-tolerant (vs damage-capped) report.
    Compare(RunArgs),
    /// Collision-tolerant minimum time over a range of goals.
    Sweep(SweepArgs),
    /// Solve an LP/MILP dump file.
    SolveLp { path: PathBuf },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    dmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tau_max: Option<usize>,
    /// Probe every horizon upward instead of galloping plus bisection.
    #[arg(long)]
    linear_scan: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

/// Scenario file contents: planning parameters plus run options.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: PlanningConfig,
    pub mode: Option<ModeArg>,
    pub tau_max: Option<usize>,
    pub linear_scan: bool,
    pub sweep_start: Option<f64>,
    pub sweep_end: Option<f64>,
    pub sweep_step: Option<f64>,
    pub out: Option<PathBuf>,
}

const REQUIRED_KEYS: [&str; 6] = ["x_init", "x_goal", "x_wall", "a_max", "a_min", "v_max"];

/// Parses `key = value` lines. `#` starts a comment. Unknown and repeated
/// keys are rejected. Unlisted optional keys keep their defaults: zero
/// boundary rates, `dt = 0.05`, inelastic contact, no caps.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let mut c = PlanningConfig::reference();
    let mut s = Scenario {
        config: c.clone(),
        mode: None,
        tau_max: None,
        linear_scan: false,
        sweep_start: None,
        sweep_end: None,
        sweep_step: None,
        out: None,
    };
    let mut seen: Vec<String> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::Invalid(format!("scenario line {line}: {msg}"));
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| bad("expected `key = value`".into()))?;
        if seen.iter().any(|s| s == key) {
            return Err(bad(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        let num = || -> Result<f64, CliError> {
            value.parse::<f64>().map_err(|_| bad(format!("`{key}` expects a number, got `{value}`")))
        };
        let count = || -> Result<usize, CliError> {
            value.parse::<usize>().map_err(|_| bad(format!("`{key}` expects a count, got `{value}`")))
        };
        match key {
            "x_init" => c.x_init = num()?,
            "v_init" => c.v_init = num()?,
            "a_init" => c.a_init = num()?,
            "x_goal" => c.x_goal = num()?,
            "v_final" => c.v_final = num()?,
            "a_final" => c.a_final = num()?,
            "x_wall" => c.x_wall = num()?,
            "dt" => c.dt = num()?,
            "a_max" => c.a_max = num()?,
            "a_min" => c.a_min = num()?,
            "v_max" => c.v_max = num()?,
            "restitution" => c.restitution = num()?,
            "d_max" => c.d_max = Some(num()?),
            "d_total_max" => c.d_total_max = Some(num()?),
            "max_contact_steps" => c.max_contact_steps = Some(count()?),
            "pin_initial_accel" => {
                c.pin_initial_accel = value.parse().map_err(|_| bad(format!("`{key}` expects true or false")))?
            }
            "mode" => s.mode = Some(ModeArg::parse(value).ok_or_else(|| bad(format!("unknown mode `{value}`")))?),
            "tau_max" => s.tau_max = Some(count()?),
            "linear_scan" => {
                s.linear_scan = value.parse().map_err(|_| bad(format!("`{key}` expects true or false")))?
            }
            "sweep_start" => s.sweep_start = Some(num()?),
            "sweep_end" => s.sweep_end = Some(num()?),
            "sweep_step" => s.sweep_step = Some(num()?),
            "out" => s.out = Some(PathBuf::from(value)),
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
    }
    if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !seen.iter().any(|s| s == *k)) {
        return Err(CliError::Invalid(format!("scenario is missing required key `{missing}`")));
    }
    s.config = c;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text)
}

/// Fixed-point with nine significant digits (at most twelve decimals).
/// Zero, including values that round to zero, prints as `0`.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 12) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

/// Number rounded the way [`fmt_num`] prints it, for JSON records.
fn num(v: f64) -> Value {
    fmt_num(v).parse::<f64>().ok().and_then(|f| serde_json::Number::from_f64(f).map(Value::Number)).unwrap_or(Value::Null)
}

pub const TRAJECTORY_HEADER: &str = "t,x,v,a,zeta,D";

pub fn trajectory_csv(plan: &TrajectoryPlan) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for t in 0..=plan.horizon {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(t as f64 * plan.dt),
            fmt_num(plan.x[t]),
            fmt_num(plan.v[t]),
            fmt_num(plan.a[t]),
            u8::from(plan.zeta[t]),
            fmt_num(plan.damage[t]),
        );
    }
    out
}

/// Rebuilds a plan from [`trajectory_csv`] output. Solver statistics are not
/// stored and come back empty; `D_total` is the column sum.
pub fn parse_trajectory_csv(text: &str, config: &PlanningConfig, mode: Mode) -> Result<TrajectoryPlan, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(CliError::Invalid(format!("trajectory must start with `{TRAJECTORY_HEADER}`")));
    }
    let (mut x, mut v, mut a, mut zeta, mut damage) = (vec![], vec![], vec![], vec![], vec![]);
    for (k, line) in lines.enumerate() {
        let bad = || CliError::Invalid(format!("trajectory row {}: malformed `{line}`", k + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let n = |s: &str| s.parse::<f64>().map_err(|_| bad());
        x.push(n(f[1])?);
        v.push(n(f[2])?);
        a.push(n(f[3])?);
        zeta.push(match f[4] {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        });
        damage.push(n(f[5])?);
    }
    if x.is_empty() {
        return Err(CliError::Invalid("trajectory has no rows".into()));
    }
    let horizon = x.len() - 1;
    let d_total = damage.iter().sum();
    let effort = a.iter().map(|u: &f64| u.abs()).sum();
    Ok(TrajectoryPlan {
        mode,
        dt: config.dt,
        horizon,
        x,
        v,
        a,
        zeta,
        damage,
        d_total,
        min_time: horizon as f64 * config.dt,
        effort,
        stats: Default::default(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

struct Prepared {
    scenario: Scenario,
    opts: SearchOptions,
}

fn prepare(args: &RunArgs) -> Result<Prepared, CliError> {
    let mut scenario = load_scenario(&args.config)?;
    if let Some(dt) = args.dt {
        scenario.config.dt = dt;
    }
    if let Some(d) = args.dmax {
        scenario.config.d_max = Some(d);
    }
    if args.mode.is_some() {
        scenario.mode = args.mode;
    }
    if args.out.is_some() {
        scenario.out = args.out.clone();
    }
    if args.tau_max.is_some() {
        scenario.tau_max = args.tau_max;
    }
    scenario.linear_scan |= args.linear_scan;
    scenario.config.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let opts = SearchOptions {
        tau_upper: scenario.tau_max,
        strategy: if scenario.linear_scan { SearchStrategy::LinearScan } else { SearchStrategy::Bisection },
        solver: SolverOptions::default(),
        big_m_scale: 1.0,
    };
    Ok(Prepared { scenario, opts })
}

fn run_mode(config: &PlanningConfig, mode: ModeArg, opts: &SearchOptions) -> Result<TrajectoryPlan, PlanError> {
    match mode {
        ModeArg::Free => min_time_search(config, Mode::CollisionFree, opts),
        ModeArg::Tolerant => min_time_search(&config.with_d_max(None), Mode::CollisionTolerant, opts),
        ModeArg::Damage => damage_constrained_search(config, opts),
    }
}

fn plan_record(plan: &TrajectoryPlan) -> Value {
    json!({
        "horizon": plan.horizon,
        "min_time": num(plan.min_time),
        "collided": plan.collided(),
        "contact_steps": plan.contact_steps(),
        "max_impact_speed": num(plan.max_impact_speed()),
        "d_total": num(plan.d_total),
        "effort": num(plan.effort),
        "nodes": plan.stats.nodes,
        "lp_iterations": plan.stats.lp_iterations,
        "probes": plan.stats.probes.len(),
    })
}

fn cmd_plan(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let Prepared { scenario, opts } = prepare(args)?;
    let mode = scenario.mode.unwrap_or(ModeArg::Tolerant);
    if mode == ModeArg::Damage && scenario.config.d_max.is_none() {
        return Err(CliError::Invalid("mode `damage` needs d_max (scenario key or --dmax)".into()));
    }
    let plan = run_mode(&scenario.config, mode, &opts)?;
    let out = scenario.out.unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    write_file(&out, &trajectory_csv(&plan))?;
    let mut record = plan_record(&plan);
    record["command"] = json!("plan");
    record["mode"] = json!(mode.label());
    record["trajectory"] = json!(out.display().to_string());
    emit(stdout, &record)
}

fn emit(stdout: &mut dyn Write, record: &Value) -> Result<(), CliError> {
    writeln!(stdout, "{record}").map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}

fn cmd_compare(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let Prepared { scenario, opts } = prepare(args)?;
    let c = &scenario.config;
    let mut variants = vec![("collision-free", ModeArg::Free), ("collision-tolerant", ModeArg::Tolerant)];
    if c.d_max.is_some() {
        variants.push(("damage-capped", ModeArg::Damage));
    }
    let mut plans = Vec::new();
    let mut failures = Vec::new();
    for (label, mode) in variants {
        match run_mode(c, mode, &opts) {
            Ok(p) => plans.push((label.to_string(), p)),
            Err(e) => failures.push((label, e)),
        }
    }

    let mut text = String::new();
    let mut rows = Vec::new();
    let baseline = "collision-free";
    if plans.iter().any(|(l, _)| l == baseline) {
        let report = compare_report(&plans, baseline)?;
        let _ = writeln!(
            text,
            "{:<20} {:>7} {:>12} {:>9} {:>14} {:>12} {:>14}",
            "variant", "steps", "min_time_s", "collided", "impact_m_s", "d_total", "improvement_%"
        );
        for e in &report.entries {
            let _ = writeln!(
                text,
                "{:<20} {:>7} {:>12} {:>9} {:>14} {:>12} {:>14}",
                e.label,
                e.horizon,
                fmt_num(e.min_time),
                e.collided,
                fmt_num(e.max_impact_speed),
                fmt_num(e.d_total),
                fmt_num(e.improvement_pct)
            );
            rows.push(json!({
                "variant": e.label,
                "horizon": e.horizon,
                "min_time": num(e.min_time),
                "collided": e.collided,
                "max_impact_speed": num(e.max_impact_speed),
                "d_total": num(e.d_total),
                "improvement_pct": num(e.improvement_pct),
            }));
        }
    }
    for (label, e) in &failures {
        let _ = writeln!(text, "{label:<20} failed: {e}");
    }
    let out = scenario.out.clone().unwrap_or_else(|| PathBuf::from("report.txt"));
    write_file(&out, &text)?;
    let failed: Vec<Value> =
        failures.iter().map(|(l, e)| json!({"variant": l, "error": e.to_string(), "exit": plan_exit_code(e)})).collect();
    emit(
        stdout,
        &json!({"command": "compare", "baseline": baseline, "rows": rows, "failures": failed, "report": out.display().to_string()}),
    )?;
    match failures.into_iter().next() {
        Some((_, e)) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let Prepared { scenario, opts } = prepare(&args.run)?;
    let start = args.start.or(scenario.sweep_start).unwrap_or(0.1);
    let end = args.end.or(scenario.sweep_end).unwrap_or(1.0);
    let step = args.step.or(scenario.sweep_step).unwrap_or(0.1);
    let c = scenario.config.with_d_max(None);
    let result = goal_sweep(&c, start, end, step, &opts)?;

    let mut csv = String::from("x_g,min_time,collided\n");
    for p in &result.points {
        let time = p.min_time.map(fmt_num).unwrap_or_default();
        let hit = p.collided.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", fmt_num(p.x_goal), time, hit);
    }
    let out = scenario.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    write_file(&out, &csv)?;
    let failures: Vec<Value> = result
        .points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| json!({"x_goal": num(p.x_goal), "error": e})))
        .collect();
    emit(
        stdout,
        &json!({
            "command": "sweep",
            "points": result.points.len(),
            "transitions": result.transitions(),
            "failures": failures,
            "sweep": out.display().to_string(),
        }),
    )?;
    match result.points.into_iter().find_map(|p| p.failure) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_solve_lp(path: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let problem = dump::parse(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
    let opts = SolverOptions::default();
    let invalid = |e: crate::solver::SolverError| CliError::Invalid(e.to_string());
    let (status, objective, values, feasible) = if problem.binary_vars.is_empty() {
        let s = solve_lp(&problem.base, &opts).map_err(invalid)?;
        (format!("{:?}", s.status), s.objective, s.values, s.status == LpStatus::Optimal)
    } else {
        let s = solve_milp(&problem, &opts).map_err(invalid)?;
        let ok = s.status == MilpStatus::Optimal;
        (format!("{:?}", s.status), s.objective, s.values, ok)
    };
    let values: Vec<Value> = values.iter().map(|&v| num(v)).collect();
    emit(
        stdout,
        &json!({"command": "solve-lp", "status": status, "objective": if feasible { num(objective) } else { Value::Null }, "values": values}),
    )?;
    if feasible {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!("problem is {status}")))
    }
}

/// Runs the CLI on explicit arguments (first item is the program name) and
/// returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::SolveLp { path } => cmd_solve_lp(path, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(2.5500000000000003), "2.55000000");
        assert_eq!(fmt_num(10.0), "10.0000000");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(-1e-15), "0");
        assert_eq!(fmt_num(186.181818181818), "186.181818");
        assert_eq!(fmt_num(0.000123456789123), "0.000123456789");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
    }

    #[test]
    fn scenario_keys() {
        let s = parse_scenario(
            "# demo\nx_init = 10\nx_goal = 0.3 # goal\nx_wall = 0\na_max = 6\na_min = -6\nv_max = 15\nd_max = 6\nmode = damage\n",
        )
        .unwrap();
        assert_eq!(s.config, PlanningConfig::reference().with_d_max(Some(6.0)));
        assert_eq!(s.mode, Some(ModeArg::Damage));

        let unknown = parse_scenario("x_init = 1\nspeed = 3\n").unwrap_err();
        assert!(unknown.to_string().contains("line 2") && unknown.to_string().contains("speed"));
        let missing = parse_scenario("x_init = 1\n").unwrap_err();
        assert!(missing.to_string().contains("x_goal"), "{missing}");
        assert!(parse_scenario("x_init = 1\nx_init = 2\n").is_err());
        assert!(parse_scenario("x_init = ten\n").is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let c = PlanningConfig { x_init: 1.0, x_goal: 0.5, x_wall: -1.0, ..PlanningConfig::reference() };
        let plan = min_time_search(&c, Mode::CollisionFree, &SearchOptions::default()).unwrap();
        let text = trajectory_csv(&plan);
        assert!(text.starts_with("t,x,v,a,zeta,D\n0,1.00000000,0,"), "{text}");
        let back = parse_trajectory_csv(&text, &c, Mode::CollisionFree).unwrap();
        assert_eq!(back.horizon, plan.horizon);
        assert_eq!(trajectory_csv(&back), text);
    }
}
