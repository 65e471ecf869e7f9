//! Deterministic evolution of the surviving mass and the loss operator Γ.
//!
//! The sub-probability density of live particles lives on the cells of
//! `(0, x_max]`. One time step applies the boundary increment as a rigid left
//! shift and then diffuses for `dt` with the killed heat kernel
//! `φ(x - y) - φ(x + y)`, integrated over cells. Everything that crosses zero
//! is added to the lost mass, which is what the loss process counts.
//!
//! Grid value convention: the value recorded at `t_k` is the loss accumulated
//! over `[0, t_k + dt)` while the boundary is held at its `t_k` value, i.e. the
//! step path is self-consistent on each interval `[t_k, t_{k+1})`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{Execution, SimulationConfig, StepOrder};
use crate::error::{Error, Result};
use crate::grid::SubProbabilityGrid;
use crate::law::InitialLaw;
use crate::par;
use crate::path::BoundaryPath;
use crate::special::norm_sf;

/// Kernel truncation radius in standard deviations.
pub const KERNEL_SIGMAS: f64 = 8.0;

/// Cell masses below this are moved to `escaped_mass` to avoid subnormals.
const UNDERFLOW_FLOOR: f64 = 1e-280;

/// Discretized one-step transition of Brownian motion killed at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingStepPlan {
    pub dt: f64,
    pub dx: f64,
    pub kernel_halfwidth: usize,
    /// `weights[k]` = probability that a step moves `k` cells to the right
    /// (equivalently left); `weights[0] + 2 Σ_{k≥1} weights[k] = 1`.
    weights: Vec<f64>,
    /// Full symmetric kernel of length `2K + 1`, centred at index `K`.
    full: Vec<f64>,
    /// `tail[k] = Σ_{l ≥ k} weights[l]`, zero past the halfwidth.
    tail: Vec<f64>,
}

impl AbsorbingStepPlan {
    pub fn new(dt: f64, dx: f64) -> Self {
        let sigma = dt.sqrt();
        let halfwidth = ((KERNEL_SIGMAS * sigma / dx).ceil() as usize).max(1);
        Self::with_halfwidth(dt, dx, halfwidth)
    }

    pub fn with_halfwidth(dt: f64, dx: f64, halfwidth: usize) -> Self {
        let sigma = dt.sqrt();
        let z = |k: f64| (k * dx) / sigma;
        let mut weights = Vec::with_capacity(halfwidth + 1);
        weights.push(1.0 - 2.0 * norm_sf(z(0.5)));
        for k in 1..=halfwidth {
            let kf = k as f64;
            weights.push((norm_sf(z(kf - 0.5)) - norm_sf(z(kf + 0.5))).max(0.0));
        }
        let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
        for w in &mut weights {
            *w /= total;
        }
        // Exact monotonicity in |k| keeps every killed transition nonnegative.
        for k in 1..weights.len() {
            if weights[k] > weights[k - 1] {
                weights[k] = weights[k - 1];
            }
        }
        let mut full = Vec::with_capacity(2 * halfwidth + 1);
        full.extend(weights.iter().rev());
        full.extend(weights.iter().skip(1));
        let mut tail = vec![0.0; halfwidth + 2];
        for k in (0..=halfwidth).rev() {
            tail[k] = tail[k + 1] + weights[k];
        }
        Self {
            dt,
            dx,
            kernel_halfwidth: halfwidth,
            weights,
            full,
            tail,
        }
    }

    pub fn for_config(cfg: &SimulationConfig) -> Self {
        Self::new(cfg.dt, cfg.dx)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn w(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(0.0)
    }

    fn tail_at(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// One killed-diffusion step of length `plan.dt`; returns the new state and
/// the mass absorbed at zero during the step.
pub fn absorbing_step(
    nu: &SubProbabilityGrid,
    plan: &AbsorbingStepPlan,
    exec: Execution,
) -> (SubProbabilityGrid, f64) {
    let m = &nu.cell_masses;
    let n = m.len();
    let kk = plan.kernel_halfwidth;
    let mut out = nu.clone();
    let Some(lo) = m.iter().position(|v| *v != 0.0) else {
        return (out, 0.0);
    };
    let hi = m.iter().rposition(|v| *v != 0.0).unwrap_or(lo);

    let j_lo = lo.saturating_sub(kk);
    let j_hi = (hi + kk + 1).min(n);
    out.cell_masses.iter_mut().for_each(|v| *v = 0.0);
    let full = &plan.full;
    par::fill_indexed(exec, &mut out.cell_masses[j_lo..j_hi], |off| {
        let j = j_lo + off;
        let i_lo = j.saturating_sub(kk).max(lo);
        let i_hi = (j + kk + 1).min(hi + 1);
        if i_lo >= i_hi {
            return 0.0;
        }
        if j < kk {
            // Near the boundary: free and image parts combined per source so
            // that every term is nonnegative.
            let mut s = 0.0;
            for (i, mi) in m.iter().enumerate().take(i_hi).skip(i_lo) {
                let free = plan.w(i.abs_diff(j));
                let image = plan.w(i + j + 1);
                s += mi * (free - image);
            }
            s
        } else {
            let k0 = i_lo + kk - j;
            dot(&m[i_lo..i_hi], &full[k0..k0 + (i_hi - i_lo)])
        }
    });

    let mut absorbed = 0.0;
    let mut escaped = 0.0;
    for (i, mi) in m.iter().enumerate().take(hi + 1).skip(lo) {
        absorbed += mi * 2.0 * plan.tail_at(i + 1);
        if n - i <= kk {
            escaped += mi * (plan.tail_at(n - i) - plan.tail_at(n + i + 1));
        }
    }
    for v in out.cell_masses.iter_mut() {
        if *v != 0.0 && *v < UNDERFLOW_FLOOR {
            escaped += *v;
            *v = 0.0;
        }
    }
    out.lost_mass += absorbed;
    out.escaped_mass += escaped;
    (out, absorbed)
}

/// Translates the density left by `delta` (piecewise-constant within cells);
/// mass pushed to or below zero is returned as absorbed.
pub fn apply_boundary_increment(
    nu: &SubProbabilityGrid,
    delta: f64,
) -> Result<(SubProbabilityGrid, f64)> {
    if delta < 0.0 || delta.is_nan() {
        return Err(Error::NegativeIncrement(delta));
    }
    let mut out = nu.clone();
    if delta == 0.0 {
        return Ok((out, 0.0));
    }
    let n = nu.len();
    let s = delta / nu.dx;
    if s >= n as f64 {
        let absorbed = nu.live_mass();
        out.cell_masses.iter_mut().for_each(|v| *v = 0.0);
        out.lost_mass += absorbed;
        return Ok((out, absorbed));
    }
    let q = s.floor() as usize;
    let r = s - q as f64;
    let m = &nu.cell_masses;
    let mut absorbed: f64 = m[..q].iter().sum();
    absorbed += r * m[q];
    for j in 0..n {
        let a = m.get(j + q).map_or(0.0, |v| (1.0 - r) * v);
        let b = m.get(j + q + 1).map_or(0.0, |v| r * v);
        out.cell_masses[j] = a + b;
    }
    out.lost_mass += absorbed;
    Ok((out, absorbed))
}

/// Smallest jump allowed by the physical condition:
/// `inf{x > 0 : α ν((0, x]) < x}`.
///
/// With `refine` the crossing is located inside its cell by linear
/// interpolation of the cumulative mass; otherwise the right edge of the
/// first violating cell is returned (and zero if it is the first cell).
pub fn physical_jump(nu: &SubProbabilityGrid, alpha: f64, refine: bool) -> f64 {
    physical_jump_seeded(nu, alpha, 0.0, refine)
}

/// `inf{x > 0 : seed + α ν((0, x]) < x}`: the physical jump when `seed` of
/// loss is already pending at the same instant.
pub fn physical_jump_seeded(nu: &SubProbabilityGrid, alpha: f64, seed: f64, refine: bool) -> f64 {
    let h = nu.dx;
    let mut cum = 0.0;
    for (k, mk) in nu.cell_masses.iter().enumerate() {
        let left = k as f64 * h;
        let right = left + h;
        let next = cum + mk;
        if seed + alpha * next < right {
            if refine {
                let slope = alpha * mk / h;
                let x = left + (seed + alpha * cum - left) / (1.0 - slope);
                return x.clamp(left, right);
            }
            return if k == 0 && seed == 0.0 { 0.0 } else { right };
        }
        cum = next;
    }
    // The curve stays above the diagonal across the whole grid; beyond it the
    // loss is flat at its total.
    (seed + alpha * cum).max(nu.x_max())
}

/// Per-step mass bookkeeping of a density solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassLedgerRow {
    pub t: f64,
    pub live: f64,
    pub lost: f64,
    pub escaped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GammaDiagnostics {
    pub ledger: Vec<MassLedgerRow>,
    /// `max_k |live + lost + escaped - 1|`.
    pub max_ledger_error: f64,
    pub escaped_mass: f64,
}

impl GammaDiagnostics {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,live,lost,escaped")?;
        for r in &self.ledger {
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e},{:.11e}",
                r.t, r.live, r.lost, r.escaped
            )?;
        }
        Ok(())
    }
}

/// Stateful engine: a density, a kernel and the boundary level applied so far.
#[derive(Debug, Clone)]
pub struct DensityEngine {
    pub grid: SubProbabilityGrid,
    plan: AbsorbingStepPlan,
    alpha: f64,
    exec: Execution,
    order: StepOrder,
    /// Boundary level `ℓ` already applied as a shift.
    level: f64,
}

impl DensityEngine {
    pub fn new(law: &InitialLaw, cfg: &SimulationConfig) -> Self {
        Self::with_plan(law, cfg, AbsorbingStepPlan::for_config(cfg))
    }

    pub fn with_plan(law: &InitialLaw, cfg: &SimulationConfig, plan: AbsorbingStepPlan) -> Self {
        Self {
            grid: SubProbabilityGrid::from_law(law, cfg.dx, cfg.cells()),
            plan,
            alpha: cfg.alpha,
            exec: cfg.execution,
            order: cfg.step_order,
            level: 0.0,
        }
    }

    /// `α` times the lost mass.
    pub fn loss(&self) -> f64 {
        (self.alpha * self.grid.lost_mass).min(self.alpha)
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn plan(&self) -> &AbsorbingStepPlan {
        &self.plan
    }

    /// Raises the applied boundary to `target` (never lowers it).
    pub fn shift_to(&mut self, target: f64) -> f64 {
        let inc = target - self.level;
        if inc <= 0.0 {
            return 0.0;
        }
        let (g, absorbed) = apply_boundary_increment(&self.grid, inc).expect("positive increment");
        self.grid = g;
        self.level = target;
        absorbed
    }

    pub fn diffuse(&mut self) -> f64 {
        let (g, absorbed) = absorbing_step(&self.grid, &self.plan, self.exec);
        self.grid = g;
        absorbed
    }

    /// One grid step with the boundary held at `target`; returns the loss afterwards.
    pub fn step(&mut self, target: f64) -> f64 {
        match self.order {
            StepOrder::IncrementThenDiffuse => {
                self.shift_to(target);
                self.diffuse();
            }
            StepOrder::DiffuseThenIncrement => {
                self.diffuse();
                self.shift_to(target);
            }
        }
        self.loss()
    }

    fn ledger_row(&self, t: f64) -> MassLedgerRow {
        MassLedgerRow {
            t,
            live: self.grid.live_mass(),
            lost: self.grid.lost_mass,
            escaped: self.grid.escaped_mass,
        }
    }
}

/// `Γ[ℓ; X₀₋]` on the configured grid, with the mass ledger.
pub fn gamma_map_with_diagnostics(
    law: &InitialLaw,
    ell: &BoundaryPath,
    cfg: &SimulationConfig,
) -> (BoundaryPath, GammaDiagnostics) {
    let levels = ell.grid_values();
    let mut engine = DensityEngine::new(law, cfg);
    let mut values = Vec::with_capacity(levels.len());
    let mut diag = GammaDiagnostics::default();
    let initial_total = engine.grid.total();
    for (k, target) in levels.iter().enumerate() {
        let loss = engine.step(*target);
        // Rounding in the lost mass must never break monotonicity.
        let prev = values.last().copied().unwrap_or(0.0);
        values.push(loss.max(prev));
        let row = engine.ledger_row(k as f64 * cfg.dt);
        diag.max_ledger_error = diag
            .max_ledger_error
            .max((row.live + row.lost + row.escaped - initial_total).abs());
        diag.ledger.push(row);
    }
    diag.escaped_mass = engine.grid.escaped_mass;
    let path = BoundaryPath::from_grid(cfg.dt, &values).expect("loss is nondecreasing");
    (path, diag)
}

/// `Γ[ℓ; X₀₋]_t = α P(τ^ℓ ≤ t)` on the configured grid.
pub fn gamma_map(law: &InitialLaw, ell: &BoundaryPath, cfg: &SimulationConfig) -> BoundaryPath {
    gamma_map_with_diagnostics(law, ell, cfg).0
}

/// The surviving density just before the boundary moves at grid index `k`,
/// with the boundary frozen to `ell` on earlier steps.
pub fn density_before(
    law: &InitialLaw,
    ell: &BoundaryPath,
    cfg: &SimulationConfig,
    k: usize,
) -> SubProbabilityGrid {
    let levels = ell.grid_values();
    let mut engine = DensityEngine::new(law, cfg);
    for target in levels.iter().take(k) {
        engine.step(*target);
    }
    engine.grid
}
