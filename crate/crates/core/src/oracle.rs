//! Independent checks: forward replay of a plan and brute-force enumeration
//! of contact patterns with a big-M-free LP per pattern.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ConfigError, PlanningConfig};
use crate::planner::TrajectoryPlan;
use crate::solver::{solve_lp, LpProblem, LpStatus, Sense, SolverError, SolverOptions};

pub const REPLAY_TOL: f64 = 1e-6;
pub const MAX_BRUTE_FORCE_HORIZON: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("brute force limited to horizons <= {MAX_BRUTE_FORCE_HORIZON}, got {0}")]
    HorizonTooLarge(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Largest violation per constraint family.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReplayResult {
    /// Distance between the plan and its forward re-simulation.
    pub dynamics: f64,
    pub saturation: f64,
    pub speed: f64,
    /// Non-penetration off contact and `x <= x_wall` on contact.
    pub indicator: f64,
    pub collision_law: f64,
    pub damage: f64,
    pub boundary: f64,
    pub pass: bool,
}

impl ReplayResult {
    pub fn worst(&self) -> f64 {
        [self.dynamics, self.saturation, self.speed, self.indicator, self.collision_law, self.damage, self.boundary]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Simulates from `(x_init, v_init)`. Free steps use the zero-order hold;
/// contact steps place the vehicle at `x_wall + dt v(t+1)`.
pub fn forward(config: &PlanningConfig, a: &[f64], zeta: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let dt = config.dt;
    let mut x = vec![config.x_init];
    let mut v = vec![config.v_init];
    for t in 0..a.len().saturating_sub(1) {
        let v1 = v[t] + dt * a[t];
        let x1 = if zeta.get(t).copied().unwrap_or(false) {
            config.x_wall + dt * v1
        } else {
            x[t] + dt * v[t] + 0.5 * dt * dt * a[t]
        };
        x.push(x1);
        v.push(v1);
    }
    (x, v)
}

pub fn replay(plan: &TrajectoryPlan, config: &PlanningConfig) -> Result<ReplayResult, OracleError> {
    let n = plan.horizon + 1;
    let lens = [plan.x.len(), plan.v.len(), plan.a.len(), plan.zeta.len(), plan.damage.len()];
    if lens.iter().any(|&l| l != n) {
        return Err(OracleError::DimensionMismatch(format!("horizon {} but series lengths {lens:?}", plan.horizon)));
    }
    if (plan.dt - config.dt).abs() > 1e-12 {
        return Err(OracleError::DimensionMismatch(format!("plan dt {} vs config dt {}", plan.dt, config.dt)));
    }
    let c = config;
    let pos = |v: f64| v.max(0.0);
    let mut r = ReplayResult::default();

    let (xs, vs) = forward(c, &plan.a, &plan.zeta);
    for t in 0..n {
        r.dynamics = r.dynamics.max((xs[t] - plan.x[t]).abs()).max((vs[t] - plan.v[t]).abs());
    }

    for t in 0..n {
        let (x, v, a, d) = (plan.x[t], plan.v[t], plan.a[t], plan.damage[t]);
        if plan.zeta[t] {
            r.indicator = r.indicator.max(pos(x - c.x_wall));
            r.damage = r.damage.max((d + v).abs());
            if t + 1 < n {
                r.collision_law = r.collision_law.max((plan.v[t + 1] + c.restitution * v).abs());
            }
        } else {
            r.indicator = r.indicator.max(pos(c.x_wall - x));
            r.saturation = r.saturation.max(pos(a - c.a_max)).max(pos(c.a_min - a));
            r.speed = r.speed.max(pos(v.abs() - c.v_max));
            r.damage = r.damage.max(d.abs());
        }
        if let Some(cap) = c.d_max {
            r.damage = r.damage.max(pos(d - cap));
        }
    }
    let sum: f64 = plan.damage.iter().sum();
    r.damage = r.damage.max((plan.d_total - sum).abs());
    if let Some(cap) = c.d_total_max {
        r.damage = r.damage.max(pos(plan.d_total - cap));
    }
    if let Some(k) = c.max_contact_steps {
        let contacts = plan.zeta.iter().filter(|&&z| z).count();
        r.indicator = r.indicator.max(contacts.saturating_sub(k) as f64);
    }

    let tau = plan.horizon;
    let mut bnd = [
        plan.x[0] - c.x_init,
        plan.v[0] - c.v_init,
        plan.x[tau] - c.x_goal,
        plan.v[tau] - c.v_final,
    ]
    .into_iter()
    .fold(0.0f64, |m, e| m.max(e.abs()));
    if tau > 0 {
        bnd = bnd.max((plan.a[tau] - c.a_final).abs());
    }
    if c.pin_initial_accel {
        bnd = bnd.max((plan.a[0] - c.a_init).abs());
    }
    r.boundary = bnd;
    r.pass = r.worst() <= REPLAY_TOL;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub feasible: bool,
    /// Minimum of `sum |a(t)|`; infinite when infeasible.
    pub objective: f64,
    /// Optimal contact pattern; empty when infeasible.
    pub pattern: Vec<bool>,
    pub patterns_tried: usize,
    pub patterns_feasible: usize,
}

/// LP for one fixed contact pattern: `x, v, a` per step, then damage and one
/// `s >= |a|` slot per step. The objective is `sum s`.
pub fn pattern_lp(config: &PlanningConfig, pattern: &[bool]) -> LpProblem {
    let c = config;
    let n = pattern.len();
    let tau = n - 1;
    let (x, v, a) = (|t: usize| t, |t: usize| n + t, |t: usize| 2 * n + t);
    let d = |t: usize| 3 * n + t;
    let s = |t: usize| 4 * n + t;
    let inf = f64::INFINITY;
    let mut lp = LpProblem::new(5 * n);
    for t in 0..n {
        lp.set_bounds(x(t), -inf, inf);
        lp.set_bounds(v(t), -inf, inf);
        lp.set_bounds(a(t), -inf, inf);
        lp.set_bounds(d(t), -inf, inf);
        lp.objective[s(t)] = 1.0;
        lp.add_constraint(vec![(s(t), 1.0), (a(t), -1.0)], Sense::Ge, 0.0);
        lp.add_constraint(vec![(s(t), 1.0), (a(t), 1.0)], Sense::Ge, 0.0);
    }
    lp.set_bounds(x(0), c.x_init, c.x_init);
    lp.set_bounds(v(0), c.v_init, c.v_init);
    lp.set_bounds(x(tau), c.x_goal, c.x_goal);
    lp.set_bounds(v(tau), c.v_final, c.v_final);
    lp.set_bounds(a(tau), c.a_final, c.a_final);
    if c.pin_initial_accel {
        lp.set_bounds(a(0), c.a_init, c.a_init);
    }

    for (t, &contact) in pattern.iter().enumerate() {
        if contact {
            lp.add_constraint(vec![(x(t), 1.0)], Sense::Le, c.x_wall);
            lp.add_constraint(vec![(d(t), 1.0), (v(t), 1.0)], Sense::Eq, 0.0);
            if t < tau {
                lp.add_constraint(vec![(v(t + 1), 1.0), (v(t), c.restitution)], Sense::Eq, 0.0);
                lp.add_constraint(vec![(x(t + 1), 1.0), (v(t + 1), -c.dt)], Sense::Eq, c.x_wall);
            }
        } else {
            lp.add_constraint(vec![(x(t), 1.0)], Sense::Ge, c.x_wall);
            lp.set_bounds(a(t), c.a_min, c.a_max);
            if t == tau {
                lp.set_bounds(a(t), c.a_final, c.a_final);
            }
            lp.add_constraint(vec![(v(t), 1.0)], Sense::Le, c.v_max);
            lp.add_constraint(vec![(v(t), 1.0)], Sense::Ge, -c.v_max);
            lp.set_bounds(d(t), 0.0, 0.0);
            if t < tau {
                let dt = c.dt;
                lp.add_constraint(
                    vec![(x(t + 1), 1.0), (x(t), -1.0), (v(t), -dt), (a(t), -0.5 * dt * dt)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        if t < tau {
            lp.add_constraint(vec![(v(t + 1), 1.0), (v(t), -1.0), (a(t), -c.dt)], Sense::Eq, 0.0);
        }
        if let Some(cap) = c.d_max {
            lp.add_constraint(vec![(d(t), 1.0)], Sense::Le, cap);
        }
    }
    if let Some(cap) = c.d_total_max {
        lp.add_constraint((0..n).map(|t| (d(t), 1.0)).collect(), Sense::Le, cap);
    }
    lp
}

/// Solves [`pattern_lp`] for every contact pattern over `horizon + 1` steps
/// and keeps the best. Ties go to the lexicographically smallest pattern.
pub fn brute_force_plan(
    config: &PlanningConfig,
    horizon: usize,
    opts: &SolverOptions,
) -> Result<BruteForceResult, OracleError> {
    config.validate()?;
    if horizon > MAX_BRUTE_FORCE_HORIZON {
        return Err(OracleError::HorizonTooLarge(horizon));
    }
    if horizon == 0 {
        return Err(OracleError::Config(ConfigError::EmptyHorizon));
    }
    let n = horizon + 1;
    // Pattern k sets zeta(t) to bit (n - 1 - t), so increasing k is
    // lexicographic order.
    let decode = |k: usize| (0..n).map(|t| (k >> (n - 1 - t)) & 1 == 1).collect::<Vec<bool>>();
    let limit = config.max_contact_steps.unwrap_or(n);
    let outcomes: Vec<Option<f64>> = (0..1usize << n)
        .into_par_iter()
        .map(|k| -> Result<Option<f64>, OracleError> {
            if (k.count_ones() as usize) > limit {
                return Ok(None);
            }
            let s = solve_lp(&pattern_lp(config, &decode(k)), opts)?;
            Ok(match s.status {
                LpStatus::Optimal => Some(s.objective),
                _ => None,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if let Some(obj) = *o {
            if best.is_none_or(|(_, b)| obj < b - 1e-9 * (1.0 + b.abs())) {
                best = Some((k, obj));
            }
        }
    }
    let patterns_feasible = outcomes.iter().filter(|o| o.is_some()).count();
    Ok(match best {
        Some((k, objective)) => BruteForceResult {
            feasible: true,
            objective,
            pattern: decode(k),
            patterns_tried: outcomes.len(),
            patterns_feasible,
        },
        None => BruteForceResult {
            feasible: false,
            objective: f64::INFINITY,
            pattern: Vec::new(),
            patterns_tried: outcomes.len(),
            patterns_feasible,
        },
    })
}
