//! Minimal solution by Picard iteration, physical solution by time stepping.

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::density::{gamma_map, physical_jump_seeded, DensityEngine};
use crate::law::InitialLaw;
use crate::path::BoundaryPath;

/// Iterates kept in a trace: the first, every `TRACE_STRIDE`-th, and the last.
pub const TRACE_STRIDE: usize = 10;

/// Inner cascade rounds per time step before the physical stepper gives up
/// refining and accepts the current level.
const MAX_CASCADE_ROUNDS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    /// Retained iterates `Γᵏ[0]` (see [`TRACE_STRIDE`]).
    pub iterates: Vec<BoundaryPath>,
    /// Iteration index of each retained iterate.
    pub iterate_indices: Vec<usize>,
    /// `sup_t |Λ⁽ᵏ⁺¹⁾ - Λ⁽ᵏ⁾|` for every iteration.
    pub sup_deltas: Vec<f64>,
    /// Largest observed `Λ⁽ᵏ⁾(t) - Λ⁽ᵏ⁺¹⁾(t)`; iterates must not decrease.
    pub max_order_violation: f64,
    pub converged: bool,
}

impl PicardTrace {
    pub fn iterations(&self) -> usize {
        self.sup_deltas.len()
    }

    /// True when the iteration stopped at the cap with the increment above tolerance.
    pub fn non_convergence(&self) -> bool {
        !self.converged
    }
}

/// Minimal solution `lim Γⁿ[0; X₀₋]`.
///
/// Stops once successive iterates are within `picard_tol` in sup norm, or at
/// `picard_max_iters` with `converged = false`.
pub fn minimal_picard(law: &InitialLaw, cfg: &SimulationConfig) -> (BoundaryPath, PicardTrace) {
    minimal_picard_from(law, cfg, BoundaryPath::zero(cfg.dt, cfg.steps()))
}

/// Picard iteration started from an arbitrary boundary.
///
/// Started from any path below the minimal solution (and with `Γ[start] ≥
/// start`), the iterates increase to it.
pub fn minimal_picard_from(
    law: &InitialLaw,
    cfg: &SimulationConfig,
    start: BoundaryPath,
) -> (BoundaryPath, PicardTrace) {
    let mut trace = PicardTrace {
        iterates: vec![start.clone()],
        iterate_indices: vec![0],
        sup_deltas: Vec::new(),
        max_order_violation: 0.0,
        converged: false,
    };
    let mut current = start;
    for k in 1..=cfg.picard_max_iters {
        let next = gamma_map(law, &current, cfg);
        let delta = next.sup_distance(&current);
        let violation = -next.min_difference(&current);
        trace.max_order_violation = trace.max_order_violation.max(violation);
        debug_assert!(
            violation <= 1e-9,
            "Picard iterates decreased by {violation}"
        );
        trace.sup_deltas.push(delta);
        current = next;
        let done = delta < cfg.picard_tol;
        if done || k % TRACE_STRIDE == 0 || k == cfg.picard_max_iters {
            trace.iterates.push(current.clone());
            trace.iterate_indices.push(k);
        }
        if done {
            trace.converged = true;
            break;
        }
    }
    (current, trace)
}

/// `sup_t |ℓ(t) - Γ[ℓ; X₀₋](t)|` over the grid.
pub fn solve_residual(law: &InitialLaw, candidate: &BoundaryPath, cfg: &SimulationConfig) -> f64 {
    candidate.sup_distance(&gamma_map(law, candidate, cfg))
}

/// One grid time of the physical stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalStep {
    pub t: f64,
    /// Loss already pending before the boundary moved (atom at time zero,
    /// rounding carry-over otherwise).
    pub seed: f64,
    /// Jump from the inf-formula evaluated on the pre-step density.
    pub instant_jump: f64,
    /// Total boundary increment recorded at this time.
    pub increment: f64,
    /// Inf-formula re-evaluations needed to settle the step.
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSolution {
    pub path: BoundaryPath,
    pub steps: Vec<PhysicalStep>,
    /// `max_k |Λ_k - α · lost mass after step k|`.
    pub max_mismatch: f64,
}

/// A physical solution by time stepping.
///
/// At each grid time the jump `inf{x > 0 : seed + α ν((0, x]) < x}` is taken
/// on the current surviving density, the boundary is shifted by it, and the
/// step's diffusion is run. Any loss not yet matched by the boundary is fed
/// back into the inf-formula on the shifted density until the boundary level
/// equals the accumulated loss; this is the discrete cascade.
pub fn physical_timestep(law: &InitialLaw, cfg: &SimulationConfig) -> BoundaryPath {
    physical_timestep_detailed(law, cfg).path
}

pub fn physical_timestep_detailed(law: &InitialLaw, cfg: &SimulationConfig) -> PhysicalSolution {
    let alpha = cfg.alpha;
    let eps = 1e-14 * alpha.max(1.0);
    let mut engine = DensityEngine::new(law, cfg);
    let mut values = Vec::with_capacity(cfg.steps() + 1);
    let mut steps = Vec::with_capacity(cfg.steps() + 1);
    let mut max_mismatch: f64 = 0.0;

    for k in 0..=cfg.steps() {
        let base = engine.level();
        let seed = (engine.loss() - base).max(0.0);
        let instant = physical_jump_seeded(&engine.grid, alpha, seed, cfg.jump_refine);
        let mut target = (base + instant).min(alpha.max(base));
        let mut rounds = 1;
        let accepted = loop {
            let mut shifted = engine.clone();
            shifted.shift_to(target);
            let mut stepped = shifted.clone();
            stepped.diffuse();
            let pending = stepped.loss() - target;
            if pending <= eps || rounds >= MAX_CASCADE_ROUNDS || target >= alpha {
                break stepped;
            }
            let extra = physical_jump_seeded(&shifted.grid, alpha, pending, cfg.jump_refine);
            let next = (target + extra).min(alpha);
            if next <= target {
                break stepped;
            }
            target = next;
            rounds += 1;
        };
        engine = accepted;
        let value = target.max(values.last().copied().unwrap_or(0.0));
        max_mismatch = max_mismatch.max((value - engine.loss()).abs());
        steps.push(PhysicalStep {
            t: k as f64 * cfg.dt,
            seed,
            instant_jump: instant,
            increment: value - base,
            rounds,
        });
        values.push(value);
    }
    PhysicalSolution {
        path: BoundaryPath::from_grid(cfg.dt, &values).expect("levels are nondecreasing"),
        steps,
        max_mismatch,
    }
}
