use serde::Serialize;
use thiserror::Error;

/// Scenario parameters for a 1-D vehicle approaching a wall at `x_wall`.
/// SI units throughout. Free space is `x >= x_wall`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanningConfig {
    pub x_init: f64,
    pub v_init: f64,
    pub a_init: f64,
    pub x_goal: f64,
    pub v_final: f64,
    pub a_final: f64,
    pub x_wall: f64,
    pub dt: f64,
    pub a_max: f64,
    pub a_min: f64,
    pub v_max: f64,
    /// Coefficient of restitution, 0 = perfectly inelastic.
    pub restitution: f64,
    /// Per-step damage cap (impact speed, m/s).
    pub d_max: Option<f64>,
    /// Cap on summed damage over the horizon.
    pub d_total_max: Option<f64>,
    /// Cap on the number of contact steps.
    pub max_contact_steps: Option<usize>,
    /// Also pin the first held acceleration to `a_init`.
    pub pin_initial_accel: bool,
}

impl PlanningConfig {
    /// Rest-to-rest transfer from 10 m to 0.3 m with a wall at 0, |a| <= 6,
    /// |v| <= 15, 50 ms steps, inelastic contact.
    pub fn reference() -> Self {
        Self {
            x_init: 10.0,
            v_init: 0.0,
            a_init: 0.0,
            x_goal: 0.3,
            v_final: 0.0,
            a_final: 0.0,
            x_wall: 0.0,
            dt: 0.05,
            a_max: 6.0,
            a_min: -6.0,
            v_max: 15.0,
            restitution: 0.0,
            d_max: None,
            d_total_max: None,
            max_contact_steps: None,
            pin_initial_accel: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let named = [
            ("x_init", self.x_init),
            ("v_init", self.v_init),
            ("a_init", self.a_init),
            ("x_goal", self.x_goal),
            ("v_final", self.v_final),
            ("a_final", self.a_final),
            ("x_wall", self.x_wall),
            ("dt", self.dt),
            ("a_max", self.a_max),
            ("a_min", self.a_min),
            ("v_max", self.v_max),
            ("restitution", self.restitution),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(ConfigError::NonFinite(name));
            }
        }
        if self.dt <= 0.0 {
            return Err(ConfigError::Invariant("dt > 0".into()));
        }
        if !(self.a_min < 0.0 && 0.0 < self.a_max) {
            return Err(ConfigError::Invariant("a_min < 0 < a_max".into()));
        }
        if self.v_max <= 0.0 {
            return Err(ConfigError::Invariant("v_max > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(ConfigError::Invariant("0 <= restitution <= 1".into()));
        }
        if self.x_init < self.x_wall {
            return Err(ConfigError::Invariant("x_init >= x_wall (start outside the wall)".into()));
        }
        if self.x_goal < self.x_wall {
            return Err(ConfigError::Invariant("x_goal >= x_wall (goal outside the wall)".into()));
        }
        if self.v_init.abs() > self.v_max || self.v_final.abs() > self.v_max {
            return Err(ConfigError::Invariant("|v_init|, |v_final| <= v_max".into()));
        }
        let accel = self.a_min..=self.a_max;
        if !accel.contains(&self.a_init) || !accel.contains(&self.a_final) {
            return Err(ConfigError::Invariant("a_min <= a_init, a_final <= a_max".into()));
        }
        if let Some(d) = self.d_max {
            if !d.is_finite() || d < 0.0 {
                return Err(ConfigError::Invariant("d_max >= 0".into()));
            }
        }
        if let Some(d) = self.d_total_max {
            if !d.is_finite() || d < 0.0 {
                return Err(ConfigError::Invariant("d_total_max >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn with_goal(&self, x_goal: f64) -> Self {
        Self { x_goal, ..self.clone() }
    }

    pub fn with_d_max(&self, d_max: Option<f64>) -> Self {
        Self { d_max, ..self.clone() }
    }

    /// Largest acceleration magnitude either bound allows.
    pub fn accel_magnitude(&self) -> f64 {
        self.a_max.abs().max(self.a_min.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config invariant violated: {0}")]
    Invariant(String),
    #[error("config value `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("horizon must be at least one step")]
    EmptyHorizon,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        PlanningConfig::reference().validate().unwrap();
    }

    #[test]
    fn goal_behind_wall_names_invariant() {
        let c = PlanningConfig { x_goal: -0.1, ..PlanningConfig::reference() };
        let e = c.validate().unwrap_err();
        assert!(e.to_string().contains("x_goal >= x_wall"), "{e}");
    }

    #[test]
    fn rejects_bad_bounds() {
        let base = PlanningConfig::reference();
        assert!(PlanningConfig { dt: 0.0, ..base.clone() }.validate().is_err());
        assert!(PlanningConfig { a_min: 1.0, ..base.clone() }.validate().is_err());
        assert!(PlanningConfig { v_max: 0.0, ..base.clone() }.validate().is_err());
        assert!(PlanningConfig { restitution: 1.5, ..base.clone() }.validate().is_err());
        assert!(PlanningConfig { d_max: Some(-1.0), ..base.clone() }.validate().is_err());
        assert!(PlanningConfig { x_init: f64::NAN, ..base }.validate().is_err());
    }
}
