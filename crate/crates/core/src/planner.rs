//! Minimum-horizon search, damage-capped planning, goal sweeps and
//! comparison reports.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    big_m_bound, build_collision_free, build_collision_tolerant_with_m, ConfigError, PlanningConfig,
    VariableLayout,
};
use crate::solver::{
    solve_lp, solve_milp, LpProblem, LpStatus, MilpProblem, MilpStatus, Sense, SolverError, SolverOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    CollisionFree,
    CollisionTolerant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Gallop upward from the analytic lower bound, then bisect.
    Bisection,
    /// Try every horizon from the lower bound upward.
    LinearScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub tau_upper: Option<usize>,
    pub strategy: SearchStrategy,
    pub solver: SolverOptions,
    /// Multiplier on the derived big-M constant.
    pub big_m_scale: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tau_upper: None,
            strategy: SearchStrategy::Bisection,
            solver: SolverOptions::default(),
            big_m_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("no feasible horizon up to {tau_upper} steps")]
    HorizonExhausted { tau_upper: usize },
    #[error("branch-and-bound node limit reached at horizon {horizon}")]
    NodeLimit { horizon: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    /// `(horizon, feasible)` for every feasibility probe, in order.
    pub probes: Vec<(usize, bool)>,
    pub nodes: usize,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPlan {
    pub mode: Mode,
    pub dt: f64,
    pub horizon: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub zeta: Vec<bool>,
    pub damage: Vec<f64>,
    pub d_total: f64,
    pub min_time: f64,
    /// Sum of |a(t)| over the horizon.
    pub effort: f64,
    pub stats: SearchStats,
}

impl TrajectoryPlan {
    pub fn collided(&self) -> bool {
        self.zeta.iter().any(|&z| z)
    }

    pub fn contact_steps(&self) -> Vec<usize> {
        (0..self.zeta.len()).filter(|&t| self.zeta[t]).collect()
    }

    /// Largest pre-impact speed over contact steps (0 without contact).
    pub fn max_impact_speed(&self) -> f64 {
        self.contact_steps().into_iter().map(|t| -self.v[t]).fold(0.0, f64::max)
    }

    fn at_rest(config: &PlanningConfig, mode: Mode) -> Self {
        Self {
            mode,
            dt: config.dt,
            horizon: 0,
            x: vec![config.x_init],
            v: vec![config.v_init],
            a: vec![config.a_init],
            zeta: vec![false],
            damage: vec![0.0],
            d_total: 0.0,
            min_time: 0.0,
            effort: config.a_init.abs(),
            stats: SearchStats::default(),
        }
    }

    fn from_values(config: &PlanningConfig, mode: Mode, layout: &VariableLayout, values: &[f64]) -> Self {
        let tau = layout.horizon;
        let pick = |f: &dyn Fn(usize) -> usize| (0..=tau).map(|t| values[f(t)]).collect::<Vec<_>>();
        let x = pick(&|t| layout.x(t));
        let v = pick(&|t| layout.v(t));
        let a = pick(&|t| layout.a(t));
        let (zeta, damage, d_total) = if layout.is_collision_tolerant() {
            (
                (0..=tau).map(|t| values[layout.zeta(t).unwrap()] > 0.5).collect(),
                pick(&|t| layout.damage(t).unwrap()),
                values[layout.d_total().unwrap()],
            )
        } else {
            (vec![false; tau + 1], vec![0.0; tau + 1], 0.0)
        };
        let effort = a.iter().map(|v| v.abs()).sum();
        Self {
            mode,
            dt: config.dt,
            horizon: tau,
            x,
            v,
            a,
            zeta,
            damage,
            d_total,
            min_time: tau as f64 * config.dt,
            effort,
            stats: SearchStats::default(),
        }
    }
}

/// Adds `s(t) >= |a(t)|` auxiliaries and sets the objective to `sum s(t)`.
pub fn add_effort_objective(lp: &mut LpProblem, layout: &VariableLayout) {
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    for t in 0..=layout.horizon {
        let s = lp.add_var(0.0, f64::INFINITY, 1.0);
        let a = layout.a(t);
        lp.add_constraint(vec![(s, 1.0), (a, -1.0)], Sense::Ge, 0.0);
        lp.add_constraint(vec![(s, 1.0), (a, 1.0)], Sense::Ge, 0.0);
    }
}

/// Collision-tolerant MILP with the effort objective, as solved at the
/// minimum horizon.
pub fn effort_milp(
    config: &PlanningConfig,
    horizon: usize,
    big_m_scale: f64,
) -> Result<(MilpProblem, VariableLayout), ConfigError> {
    let m = big_m_bound(config, horizon).value * big_m_scale;
    let (mut milp, layout) = build_collision_tolerant_with_m(config, horizon, m)?;
    add_effort_objective(&mut milp.base, &layout);
    Ok((milp, layout))
}

enum Probe {
    Feasible(Box<TrajectoryPlan>),
    Infeasible,
}

struct Solved {
    probe: Probe,
    nodes: usize,
    iterations: usize,
}

fn solve_at(
    config: &PlanningConfig,
    mode: Mode,
    horizon: usize,
    with_effort: bool,
    opts: &SearchOptions,
) -> Result<Solved, PlanError> {
    match mode {
        Mode::CollisionFree => {
            let (mut lp, layout) = build_collision_free(config, horizon)?;
            if with_effort {
                add_effort_objective(&mut lp, &layout);
            }
            let s = solve_lp(&lp, &opts.solver)?;
            let probe = match s.status {
                LpStatus::Optimal => {
                    Probe::Feasible(Box::new(TrajectoryPlan::from_values(config, mode, &layout, &s.values)))
                }
                LpStatus::Infeasible => Probe::Infeasible,
                LpStatus::Unbounded => unreachable!("objective is bounded below by zero"),
            };
            Ok(Solved { probe, nodes: 0, iterations: s.iterations })
        }
        Mode::CollisionTolerant => {
            let m = big_m_bound(config, horizon).value * opts.big_m_scale;
            let (mut milp, layout) = build_collision_tolerant_with_m(config, horizon, m)?;
            if with_effort {
                add_effort_objective(&mut milp.base, &layout);
            }
            let s = solve_milp(&milp, &opts.solver)?;
            let probe = match s.status {
                MilpStatus::Optimal => {
                    Probe::Feasible(Box::new(TrajectoryPlan::from_values(config, mode, &layout, &s.values)))
                }
                MilpStatus::Infeasible => Probe::Infeasible,
                MilpStatus::NodeLimit => return Err(PlanError::NodeLimit { horizon }),
                MilpStatus::Unbounded => unreachable!("all variables are boxed"),
            };
            Ok(Solved { probe, nodes: s.nodes_explored, iterations: s.lp_iterations })
        }
    }
}

/// Why [`analytic_min_time`] declines to give a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NoOracle {
    #[error("continuous-time bound needs rest-to-rest boundary conditions")]
    NotRestToRest,
    #[error("continuous-time bound would exceed the speed limit")]
    SpeedLimited,
    #[error("continuous-time contact bound assumes inelastic contact")]
    Elastic,
}

/// Rest-to-rest transfer time over distance `d` accelerating at `a1` and
/// braking at `a2`, plus the peak speed.
fn rest_to_rest(d: f64, a1: f64, a2: f64) -> (f64, f64) {
    let k = 1.0 / a1 + 1.0 / a2;
    ((2.0 * d * k).sqrt(), (2.0 * d / k).sqrt())
}

/// Continuous-time bang-bang minimum time; a lower bound on the discrete
/// minimum horizon times `dt`.
pub fn analytic_min_time(config: &PlanningConfig, mode: Mode) -> Result<f64, NoOracle> {
    let c = config;
    if c.v_init.abs() > 1e-12 || c.v_final.abs() > 1e-12 {
        return Err(NoOracle::NotRestToRest);
    }
    let (toward, away) = (-c.a_min, c.a_max);
    let (free, peak) = rest_to_rest((c.x_init - c.x_goal).abs(), toward, away);
    if peak > c.v_max {
        return Err(NoOracle::SpeedLimited);
    }
    if mode == Mode::CollisionFree || c.max_contact_steps == Some(0) {
        return Ok(free);
    }
    if c.restitution != 0.0 {
        return Err(NoOracle::Elastic);
    }
    // Run at the wall, stop on impact, then rest-to-rest to the goal.
    let approach = c.x_init - c.x_wall;
    let full_speed = (2.0 * approach * toward).sqrt();
    if full_speed > c.v_max {
        return Err(NoOracle::SpeedLimited);
    }
    let cap = match (c.d_max, c.d_total_max) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => f64::INFINITY,
    };
    let approach_time = if full_speed <= cap {
        full_speed / toward
    } else {
        // Accelerate to v_p, brake to the capped impact speed.
        let k = 1.0 / toward + 1.0 / away;
        let vp = ((2.0 * approach + cap * cap / away) / k).sqrt();
        vp / toward + (vp - cap) / away
    };
    let (leg, _) = rest_to_rest(c.x_goal - c.x_wall, away, toward);
    Ok(free.min(approach_time + leg))
}

/// `ceil(3 T / dt)` clamped to at least 20 steps, or 400 without a bound.
pub fn default_tau_upper(config: &PlanningConfig, mode: Mode) -> usize {
    match analytic_min_time(config, mode) {
        Ok(t) => ((3.0 * t / config.dt).ceil() as usize).max(20),
        Err(_) => 400,
    }
}

fn is_degenerate(c: &PlanningConfig) -> bool {
    (c.x_init - c.x_goal).abs() <= 1e-12 && (c.v_init - c.v_final).abs() <= 1e-12
}

/// Smallest feasible horizon for `mode`, re-solved with the effort
/// tie-breaker. Feasibility is monotone in the horizon (a feasible plan
/// extends by holding at the goal), which makes the bisection valid.
pub fn min_time_search(
    config: &PlanningConfig,
    mode: Mode,
    opts: &SearchOptions,
) -> Result<TrajectoryPlan, PlanError> {
    config.validate()?;
    if is_degenerate(config) {
        return Ok(TrajectoryPlan::at_rest(config, mode));
    }
    let tau_upper = opts.tau_upper.unwrap_or_else(|| default_tau_upper(config, mode));
    if tau_upper < 1 {
        return Err(PlanError::InvalidArgument("tau_upper must be at least 1".into()));
    }
    let tau_lb = analytic_min_time(config, mode)
        .map(|t| (t / config.dt).floor() as usize)
        .unwrap_or(1)
        .clamp(1, tau_upper);

    let mut stats = SearchStats::default();
    let mut known: BTreeMap<usize, bool> = BTreeMap::new();
    let mut probe = |tau: usize, stats: &mut SearchStats| -> Result<bool, PlanError> {
        if let Some(&f) = known.get(&tau) {
            return Ok(f);
        }
        let s = solve_at(config, mode, tau, false, opts)?;
        let feasible = matches!(s.probe, Probe::Feasible(_));
        stats.probes.push((tau, feasible));
        stats.nodes += s.nodes;
        stats.lp_iterations += s.iterations;
        known.insert(tau, feasible);
        Ok(feasible)
    };

    let tau_min = match opts.strategy {
        SearchStrategy::LinearScan => {
            let mut found = None;
            for tau in tau_lb..=tau_upper {
                if probe(tau, &mut stats)? {
                    found = Some(tau);
                    break;
                }
            }
            found.ok_or(PlanError::HorizonExhausted { tau_upper })?
        }
        SearchStrategy::Bisection => {
            let mut infeasible_below = tau_lb - 1;
            let mut feasible_at = None;
            let mut step = 1;
            let mut tau = tau_lb;
            loop {
                if probe(tau, &mut stats)? {
                    feasible_at = Some(tau);
                    break;
                }
                infeasible_below = tau;
                if tau == tau_upper {
                    break;
                }
                tau = (tau_lb + step).min(tau_upper);
                step *= 2;
            }
            let mut hi = feasible_at.ok_or(PlanError::HorizonExhausted { tau_upper })?;
            let mut lo = infeasible_below + 1;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if probe(mid, &mut stats)? {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            hi
        }
    };

    // Confirm minimality; walk down if the analytic bound was not tight.
    let mut tau_min = tau_min;
    while tau_min > 1 && probe(tau_min - 1, &mut stats)? {
        tau_min -= 1;
    }

    let solved = solve_at(config, mode, tau_min, true, opts)?;
    stats.nodes += solved.nodes;
    stats.lp_iterations += solved.iterations;
    match solved.probe {
        Probe::Feasible(plan) => {
            let mut plan = *plan;
            plan.stats = stats;
            Ok(plan)
        }
        Probe::Infeasible => Err(PlanError::Solver(SolverError::NonFinite(format!(
            "horizon {tau_min} feasible without objective but infeasible with it"
        )))),
    }
}

/// Collision-tolerant search with the per-step impact-speed cap active.
pub fn damage_constrained_search(config: &PlanningConfig, opts: &SearchOptions) -> Result<TrajectoryPlan, PlanError> {
    match config.d_max {
        Some(d) if d >= 0.0 => min_time_search(config, Mode::CollisionTolerant, opts),
        _ => Err(PlanError::InvalidArgument("damage-constrained search needs d_max >= 0".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub x_goal: f64,
    pub horizon: Option<usize>,
    pub min_time: Option<f64>,
    pub collided: Option<bool>,
    pub error: Option<String>,
    #[serde(skip)]
    pub failure: Option<PlanError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Number of times the collided flag changes between consecutive
    /// successful points.
    pub fn transitions(&self) -> usize {
        let flags: Vec<bool> = self.points.iter().filter_map(|p| p.collided).collect();
        flags.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Once a goal avoids contact, every farther goal does too.
    pub fn avoidance_is_monotone(&self) -> bool {
        let flags: Vec<bool> = self.points.iter().filter_map(|p| p.collided).collect();
        flags.windows(2).all(|w| w[0] || !w[1])
    }
}

/// Goal values `start, start + step, ...` up to `end` (inclusive, with a
/// small tolerance for accumulated rounding).
pub fn sweep_goals(start: f64, end: f64, step: f64) -> Result<Vec<f64>, PlanError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(PlanError::InvalidArgument("sweep step must be positive".into()));
    }
    if !(start.is_finite() && end.is_finite()) || start > end {
        return Err(PlanError::InvalidArgument("sweep start must not exceed end".into()));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// One collision-tolerant minimum-time search per goal value, run in
/// parallel. Results keep the goal order.
pub fn goal_sweep_plans(
    config: &PlanningConfig,
    start: f64,
    end: f64,
    step: f64,
    opts: &SearchOptions,
) -> Result<Vec<(f64, Result<TrajectoryPlan, PlanError>)>, PlanError> {
    config.validate()?;
    if start < config.x_wall {
        return Err(PlanError::InvalidArgument("sweep start must be outside the wall".into()));
    }
    let goals = sweep_goals(start, end, step)?;
    Ok(goals
        .par_iter()
        .map(|&x_goal| (x_goal, min_time_search(&config.with_goal(x_goal), Mode::CollisionTolerant, opts)))
        .collect())
}

/// [`goal_sweep_plans`] reduced to one summary row per goal. Failures are
/// recorded per point.
pub fn goal_sweep(
    config: &PlanningConfig,
    start: f64,
    end: f64,
    step: f64,
    opts: &SearchOptions,
) -> Result<SweepResult, PlanError> {
    let points = goal_sweep_plans(config, start, end, step, opts)?
        .into_iter()
        .map(|(x_goal, outcome)| match outcome {
            Ok(plan) => SweepPoint {
                x_goal,
                horizon: Some(plan.horizon),
                min_time: Some(plan.min_time),
                collided: Some(plan.collided()),
                error: None,
                failure: None,
            },
            Err(e) => SweepPoint {
                x_goal,
                horizon: None,
                min_time: None,
                collided: None,
                error: Some(e.to_string()),
                failure: Some(e),
            },
        })
        .collect();
    Ok(SweepResult { points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub horizon: usize,
    pub min_time: f64,
    pub collided: bool,
    pub max_impact_speed: f64,
    pub d_total: f64,
    /// `100 (T_baseline - T) / T_baseline`; zero for the baseline itself.
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub entries: Vec<ComparisonEntry>,
}

pub fn improvement_pct(t_baseline: f64, t: f64) -> f64 {
    if t_baseline == 0.0 {
        0.0
    } else {
        100.0 * (t_baseline - t) / t_baseline
    }
}

/// Tabulates plans against the entry labelled `baseline`. All plans must
/// share the time step and the start/goal states.
pub fn compare_report(plans: &[(String, TrajectoryPlan)], baseline: &str) -> Result<ComparisonReport, PlanError> {
    let base = plans
        .iter()
        .find(|(l, _)| l == baseline)
        .map(|(_, p)| p)
        .ok_or_else(|| PlanError::InvalidArgument(format!("baseline `{baseline}` not among the plans")))?;
    let ends = |p: &TrajectoryPlan| (p.x[0], p.v[0], *p.x.last().unwrap(), *p.v.last().unwrap());
    for (label, p) in plans {
        let (a, b) = (ends(base), ends(p));
        let same = (p.dt - base.dt).abs() <= 1e-12
            && [(a.0, b.0), (a.1, b.1), (a.2, b.2), (a.3, b.3)].iter().all(|(u, w)| (u - w).abs() <= 1e-6);
        if !same {
            return Err(PlanError::InvalidArgument(format!("plan `{label}` does not share the baseline scenario")));
        }
    }
    let entries = plans
        .iter()
        .map(|(label, p)| ComparisonEntry {
            label: label.clone(),
            horizon: p.horizon,
            min_time: p.min_time,
            collided: p.collided(),
            max_impact_speed: p.max_impact_speed(),
            d_total: p.d_total,
            improvement_pct: improvement_pct(base.min_time, p.min_time),
        })
        .collect();
    Ok(ComparisonReport { baseline: baseline.to_string(), entries })
}
