//! Collision-free LP and collision-tolerant MILP encodings of the 1-D
//! wall-contact planning problem.
//!
//! Time is sampled at `t = 0..=tau` with zero-order-hold acceleration:
//!
//! ```text
//! x(t+1) = x(t) + dt v(t) + dt^2/2 a(t)
//! v(t+1) = v(t) + dt a(t)
//! ```
//!
//! In the collision-tolerant model a binary `zeta(t)` marks contact
//! (`x(t) <= x_wall`). A contact step lifts the acceleration and speed limits,
//! applies the restitution law `v(t+1) = -e v(t)`, places the vehicle back on
//! the wall surface (`x(t+1) = x_wall + dt v(t+1)`), and records the impact
//! speed `D(t) = -v(t)` as damage. Every switch is a big-M pair.

mod config;

pub use config::{ConfigError, PlanningConfig};

use crate::solver::{LpProblem, MilpProblem, Sense};

/// Index map from model symbols to solver variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    pub horizon: usize,
    x0: usize,
    v0: usize,
    a0: usize,
    zeta0: Option<usize>,
    d0: Option<usize>,
    d_total: Option<usize>,
    pub num_vars: usize,
}

impl VariableLayout {
    fn collision_free(horizon: usize) -> Self {
        let n = horizon + 1;
        Self { horizon, x0: 0, v0: n, a0: 2 * n, zeta0: None, d0: None, d_total: None, num_vars: 3 * n }
    }

    fn collision_tolerant(horizon: usize) -> Self {
        let n = horizon + 1;
        Self {
            horizon,
            x0: 0,
            v0: n,
            a0: 2 * n,
            zeta0: Some(3 * n),
            d0: Some(4 * n),
            d_total: Some(5 * n),
            num_vars: 5 * n + 1,
        }
    }

    pub fn x(&self, t: usize) -> usize {
        debug_assert!(t <= self.horizon);
        self.x0 + t
    }

    pub fn v(&self, t: usize) -> usize {
        debug_assert!(t <= self.horizon);
        self.v0 + t
    }

    pub fn a(&self, t: usize) -> usize {
        debug_assert!(t <= self.horizon);
        self.a0 + t
    }

    pub fn zeta(&self, t: usize) -> Option<usize> {
        self.zeta0.map(|z| z + t)
    }

    pub fn damage(&self, t: usize) -> Option<usize> {
        self.d0.map(|d| d + t)
    }

    pub fn d_total(&self) -> Option<usize> {
        self.d_total
    }

    pub fn is_collision_tolerant(&self) -> bool {
        self.zeta0.is_some()
    }

    /// Binary indices in increasing time order.
    pub fn binaries(&self) -> Vec<usize> {
        match self.zeta0 {
            Some(z) => (z..z + self.horizon + 1).collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BigMTerm {
    /// Distance from the start to the wall plus the farthest drift at `v_max`.
    PositionSpan,
    /// Width of the acceleration box.
    AccelerationSpan,
    /// Impulsive acceleration a contact step can induce.
    CollisionLaw,
    Speed,
}

/// Big-M constant with the bound terms that produced it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BigM {
    pub value: f64,
    pub terms: Vec<(BigMTerm, f64)>,
    pub dominant: BigMTerm,
}

/// `M = 2 max(|x_init - x_wall| + v_max tau dt, a_max - a_min,
/// (1+e) v_max / dt + max|a|, v_max)`.
pub fn big_m_bound(config: &PlanningConfig, horizon: usize) -> BigM {
    let c = config;
    let terms = vec![
        (BigMTerm::PositionSpan, (c.x_init - c.x_wall).abs() + c.v_max * horizon as f64 * c.dt),
        (BigMTerm::AccelerationSpan, c.a_max - c.a_min),
        (BigMTerm::CollisionLaw, (1.0 + c.restitution) * c.v_max / c.dt + c.accel_magnitude()),
        (BigMTerm::Speed, c.v_max),
    ];
    let &(dominant, largest) = terms
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four terms");
    BigM { value: 2.0 * largest, terms, dominant }
}

fn check(config: &PlanningConfig, horizon: usize) -> Result<(), ConfigError> {
    config.validate()?;
    if horizon < 1 {
        return Err(ConfigError::EmptyHorizon);
    }
    Ok(())
}

fn add_dynamics_rows(lp: &mut LpProblem, layout: &VariableLayout, dt: f64, t: usize, relax: Option<(usize, f64)>) {
    let (x, v, a) = (layout.x(t), layout.v(t), layout.a(t));
    let pos = vec![(layout.x(t + 1), 1.0), (x, -1.0), (v, -dt), (a, -0.5 * dt * dt)];
    match relax {
        None => lp.add_constraint(pos, Sense::Eq, 0.0),
        Some((zeta, m)) => {
            let mut le = pos.clone();
            le.push((zeta, -m));
            lp.add_constraint(le, Sense::Le, 0.0);
            let mut ge = pos;
            ge.push((zeta, m));
            lp.add_constraint(ge, Sense::Ge, 0.0);
        }
    }
    lp.add_constraint(vec![(layout.v(t + 1), 1.0), (v, -1.0), (a, -dt)], Sense::Eq, 0.0);
}

/// Collision-free LP: dynamics, boundary values, saturation, speed limits and
/// `x(t) >= x_wall` for `t >= 1`, with a zero objective.
pub fn build_collision_free(
    config: &PlanningConfig,
    horizon: usize,
) -> Result<(LpProblem, VariableLayout), ConfigError> {
    check(config, horizon)?;
    let c = config;
    let layout = VariableLayout::collision_free(horizon);
    let mut lp = LpProblem::new(layout.num_vars);
    for t in 0..=horizon {
        lp.set_bounds(layout.x(t), c.x_wall, f64::INFINITY);
        lp.set_bounds(layout.v(t), -c.v_max, c.v_max);
        lp.set_bounds(layout.a(t), c.a_min, c.a_max);
    }
    set_boundary_values(&mut lp, &layout, c);
    for t in 0..horizon {
        add_dynamics_rows(&mut lp, &layout, c.dt, t, None);
    }
    Ok((lp, layout))
}

fn set_boundary_values(lp: &mut LpProblem, layout: &VariableLayout, c: &PlanningConfig) {
    let tau = layout.horizon;
    lp.set_bounds(layout.x(0), c.x_init, c.x_init);
    lp.set_bounds(layout.v(0), c.v_init, c.v_init);
    lp.set_bounds(layout.x(tau), c.x_goal, c.x_goal);
    lp.set_bounds(layout.v(tau), c.v_final, c.v_final);
    lp.set_bounds(layout.a(tau), c.a_final, c.a_final);
    if c.pin_initial_accel {
        lp.set_bounds(layout.a(0), c.a_init, c.a_init);
    }
}

/// Collision-tolerant MILP with the big-M constant from [`big_m_bound`].
pub fn build_collision_tolerant(
    config: &PlanningConfig,
    horizon: usize,
) -> Result<(MilpProblem, VariableLayout), ConfigError> {
    check(config, horizon)?;
    let m = big_m_bound(config, horizon).value;
    build_collision_tolerant_with_m(config, horizon, m)
}

/// Collision-tolerant MILP with an explicit big-M constant (must dominate
/// [`big_m_bound`] for the encoding to be exact).
pub fn build_collision_tolerant_with_m(
    config: &PlanningConfig,
    horizon: usize,
    m: f64,
) -> Result<(MilpProblem, VariableLayout), ConfigError> {
    check(config, horizon)?;
    let c = config;
    let e = c.restitution;
    let layout = VariableLayout::collision_tolerant(horizon);
    let mut lp = LpProblem::new(layout.num_vars);
    let n = horizon + 1;

    for t in 0..=horizon {
        lp.set_bounds(layout.x(t), c.x_wall - m, c.x_wall + m);
        lp.set_bounds(layout.v(t), -m, m);
        lp.set_bounds(layout.a(t), -m, m);
        let d_hi = c.d_max.unwrap_or(m).min(m);
        lp.set_bounds(layout.damage(t).expect("damage"), -m, d_hi);
    }
    let total = layout.d_total().expect("d_total");
    let total_cap = n as f64 * m;
    lp.set_bounds(total, -total_cap, c.d_total_max.unwrap_or(total_cap).min(total_cap));
    set_boundary_values(&mut lp, &layout, c);

    for t in 0..=horizon {
        let (x, v, a) = (layout.x(t), layout.v(t), layout.a(t));
        let z = layout.zeta(t).expect("zeta");
        let d = layout.damage(t).expect("damage");

        // Contact indicator: zeta = 1 <=> x <= x_wall.
        lp.add_constraint(vec![(x, 1.0), (z, m)], Sense::Ge, c.x_wall);
        lp.add_constraint(vec![(x, 1.0), (z, m)], Sense::Le, c.x_wall + m);

        // Saturation and speed limits, lifted during contact.
        lp.add_constraint(vec![(a, 1.0), (z, -m)], Sense::Le, c.a_max);
        lp.add_constraint(vec![(a, 1.0), (z, m)], Sense::Ge, c.a_min);
        lp.add_constraint(vec![(v, 1.0), (z, -m)], Sense::Le, c.v_max);
        lp.add_constraint(vec![(v, 1.0), (z, m)], Sense::Ge, -c.v_max);

        // Damage: zero off contact, impact speed -v(t) on contact.
        lp.add_constraint(vec![(d, 1.0), (z, -m)], Sense::Le, 0.0);
        lp.add_constraint(vec![(d, 1.0), (z, m)], Sense::Ge, 0.0);
        lp.add_constraint(vec![(d, 1.0), (v, 1.0), (z, m)], Sense::Le, m);
        lp.add_constraint(vec![(d, 1.0), (v, 1.0), (z, -m)], Sense::Ge, -m);

        if t < horizon {
            add_dynamics_rows(&mut lp, &layout, c.dt, t, Some((z, m)));
            let (x1, v1) = (layout.x(t + 1), layout.v(t + 1));
            // Restitution: v(t+1) = -e v(t) on contact.
            lp.add_constraint(vec![(v1, 1.0), (v, e), (z, m)], Sense::Le, m);
            lp.add_constraint(vec![(v1, 1.0), (v, e), (z, -m)], Sense::Ge, -m);
            // Wall placement: x(t+1) = x_wall + dt v(t+1) on contact.
            lp.add_constraint(vec![(x1, 1.0), (v1, -c.dt), (z, m)], Sense::Le, c.x_wall + m);
            lp.add_constraint(vec![(x1, 1.0), (v1, -c.dt), (z, -m)], Sense::Ge, c.x_wall - m);
        }
    }

    let mut sum = vec![(total, 1.0)];
    sum.extend((0..=horizon).map(|t| (layout.damage(t).expect("damage"), -1.0)));
    lp.add_constraint(sum, Sense::Eq, 0.0);

    if let Some(k) = c.max_contact_steps {
        let zs = layout.binaries().into_iter().map(|z| (z, 1.0)).collect();
        lp.add_constraint(zs, Sense::Le, k as f64);
    }

    let binaries = layout.binaries();
    Ok((MilpProblem::new(lp, binaries), layout))
}
