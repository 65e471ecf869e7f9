use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::InitialLaw;

/// Whether data-parallel loops may use the rayon pool.
///
/// `Parallel` degrades to `Sequential` when the crate is built without the
/// `parallel` feature. Results never depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Order of the two sub-steps inside one time step of the density engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepOrder {
    /// Shift by the boundary increment at `t_k`, then diffuse over `[t_k, t_{k+1})`.
    #[default]
    IncrementThenDiffuse,
    /// Diffuse first, then shift. Only meant for convergence studies.
    DiffuseThenIncrement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub alpha: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    #[serde(default = "defaults::step")]
    pub dt: f64,
    #[serde(default = "defaults::step")]
    pub dx: f64,
    #[serde(default = "defaults::x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "defaults::picard_max_iters")]
    pub picard_max_iters: usize,
    #[serde(default = "defaults::jump_refine")]
    pub jump_refine: bool,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default, skip_serializing_if = "is_default_order")]
    pub step_order: StepOrder,
}

fn is_default_order(o: &StepOrder) -> bool {
    *o == StepOrder::default()
}

mod defaults {
    pub fn horizon() -> f64 {
        1.0
    }
    pub fn step() -> f64 {
        1e-3
    }
    pub fn x_max() -> f64 {
        6.0
    }
    pub fn picard_tol() -> f64 {
        1e-8
    }
    pub fn picard_max_iters() -> usize {
        500
    }
    pub fn jump_refine() -> bool {
        true
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            horizon: defaults::horizon(),
            dt: defaults::step(),
            dx: defaults::step(),
            x_max: defaults::x_max(),
            seed: 0,
            picard_tol: defaults::picard_tol(),
            picard_max_iters: defaults::picard_max_iters(),
            jump_refine: defaults::jump_refine(),
            execution: Execution::default(),
            step_order: StepOrder::default(),
        }
    }
}

impl SimulationConfig {
    pub fn new(alpha: f64, horizon: f64, dt: f64, dx: f64, x_max: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            horizon,
            dt,
            dx,
            x_max,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("dx", self.dx),
            ("x_max", self.x_max),
            ("picard_tol", self.picard_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.dt >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "dt ({}) must be smaller than the horizon ({})",
                self.dt, self.horizon
            )));
        }
        if self.dx >= self.x_max {
            return Err(Error::InvalidConfig(format!(
                "dx ({}) must be smaller than x_max ({})",
                self.dx, self.x_max
            )));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidConfig(
                "picard_max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of time steps; grid times are `k * dt` for `k = 0..=steps()`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn cells(&self) -> usize {
        (self.x_max / self.dx).round() as usize
    }

    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| k as f64 * self.dt).collect()
    }

    /// Spatial cutoff with `P(X > x_max - 3 sqrt(T)) < 1e-8`, rounded up to the grid.
    pub fn auto_x_max(&self, law: &InitialLaw) -> f64 {
        let q = law.upper_quantile(1e-8);
        let x = q.max(0.0) + 3.0 * self.horizon.sqrt();
        (x / self.dx).ceil() * self.dx
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}
