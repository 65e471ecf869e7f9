//! Initial-data sensitivity experiments: shift scans, ordered-law limits,
//! the left-limit gap and physical-jump residuals of limits.

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::density::{density_before, physical_jump_seeded};
use crate::error::{Error, Result};
use crate::law::{comparison_grid, dominance_check, InitialLaw};
use crate::m1::{
    default_probe_times, dense_convergence_report, levy_m1_distance, DenseConvergenceReport,
};
use crate::par;
use crate::path::BoundaryPath;
use crate::solvers::{minimal_picard_from, physical_timestep, solve_residual, PicardTrace};

/// Rounding slack for pointwise comparisons of solutions.
pub const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Picard,
    Physical,
}

/// Grid parameters attached to every reported number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub alpha: f64,
    pub horizon: f64,
    pub dt: f64,
    pub dx: f64,
    pub x_max: f64,
    pub picard_tol: f64,
}

impl From<&SimulationConfig> for GridMeta {
    fn from(c: &SimulationConfig) -> Self {
        Self {
            alpha: c.alpha,
            horizon: c.horizon,
            dt: c.dt,
            dx: c.dx,
            x_max: c.x_max,
            picard_tol: c.picard_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub label: String,
    /// Shift or smoothing rate that produced the law.
    pub parameter: f64,
    pub solver: SolverKind,
    pub grid: GridMeta,
    pub initial_value: f64,
    pub final_value: f64,
    /// `(t, size)` of grid increments above the jump threshold.
    pub jumps: Vec<(f64, f64)>,
    pub residual: f64,
    pub picard_iterations: Option<usize>,
    pub converged: Option<bool>,
    #[serde(skip)]
    pub path: Option<BoundaryPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub from: String,
    pub to: String,
    pub distance: f64,
    pub grid: GridMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub grid: GridMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: SimulationConfig,
    pub solutions: Vec<SolutionSummary>,
    pub distances: Vec<DistanceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<DenseConvergenceReport>,
    pub checks: Vec<InvariantCheck>,
}

impl ExperimentReport {
    fn new(experiment: &str, cfg: &SimulationConfig) -> Self {
        Self {
            experiment: experiment.into(),
            config: cfg.clone(),
            solutions: Vec::new(),
            distances: Vec::new(),
            gap: None,
            convergence: None,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Paths of the solutions, in report order.
    pub fn paths(&self) -> Vec<&BoundaryPath> {
        self.solutions
            .iter()
            .filter_map(|s| s.path.as_ref())
            .collect()
    }

    fn push_check(&mut self, name: impl Into<String>, value: f64, tolerance: f64, passed: bool) {
        self.checks.push(InvariantCheck {
            name: name.into(),
            passed,
            value,
            tolerance,
            grid: GridMeta::from(&self.config),
        });
    }

    fn push_distance(&mut self, from: &str, to: &str, distance: f64) {
        self.distances.push(DistanceRow {
            from: from.into(),
            to: to.into(),
            distance,
            grid: GridMeta::from(&self.config),
        });
    }
}

/// Increments larger than this count as jumps in summaries.
pub fn jump_threshold(cfg: &SimulationConfig) -> f64 {
    10.0 * cfg.dx.max(cfg.dt)
}

fn summarize(
    label: String,
    parameter: f64,
    solver: SolverKind,
    law: &InitialLaw,
    path: BoundaryPath,
    trace: Option<&PicardTrace>,
    cfg: &SimulationConfig,
) -> SolutionSummary {
    SolutionSummary {
        label,
        parameter,
        solver,
        grid: GridMeta::from(cfg),
        initial_value: path.grid_values()[0],
        final_value: path.final_value(),
        jumps: path.jumps(jump_threshold(cfg)),
        residual: solve_residual(law, &path, cfg),
        picard_iterations: trace.map(|t| t.iterations()),
        converged: trace.map(|t| t.converged),
        path: Some(path),
    }
}

/// Minimal solutions for laws whose minimal solutions increase along the
/// slice. Each solve starts from the previous solution, which lies below the
/// next minimal solution, so the outputs are pointwise nondecreasing.
pub fn solve_picard_chain(
    laws: &[InitialLaw],
    cfg: &SimulationConfig,
) -> Vec<(BoundaryPath, PicardTrace)> {
    let mut out: Vec<(BoundaryPath, PicardTrace)> = Vec::with_capacity(laws.len());
    let mut start = BoundaryPath::zero(cfg.dt, cfg.steps());
    for law in laws {
        let (path, trace) = minimal_picard_from(law, cfg, start);
        start = path.clone();
        out.push((path, trace));
    }
    out
}

fn ensure_sorted(xs: &[f64], what: &str) -> Result<()> {
    if xs.windows(2).any(|w| w[0] >= w[1]) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{what} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

fn shift_label(x: f64) -> String {
    format!("shift {x:+.6e}")
}

/// Solves for `X₀₋ + x` at each shift and compares neighbours.
///
/// A smaller shift moves mass towards the boundary, so solutions must
/// decrease in `x` pointwise.
pub fn shift_scan(
    law: &InitialLaw,
    shifts: &[f64],
    solver: SolverKind,
    cfg: &SimulationConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    ensure_sorted(shifts, "shifts")?;
    let laws: Vec<InitialLaw> = shifts.iter().map(|x| law.shift(*x)).collect();
    let solved: Vec<(BoundaryPath, Option<PicardTrace>)> = match solver {
        SolverKind::Picard => {
            let rev: Vec<InitialLaw> = laws.iter().rev().cloned().collect();
            let mut s: Vec<_> = solve_picard_chain(&rev, cfg)
                .into_iter()
                .map(|(p, t)| (p, Some(t)))
                .collect();
            s.reverse();
            s
        }
        SolverKind::Physical => {
            par::map_collect(cfg.execution, &laws, |l| (physical_timestep(l, cfg), None))
        }
    };

    let mut report = ExperimentReport::new("shift-scan", cfg);
    for ((x, l), (path, trace)) in shifts.iter().zip(&laws).zip(solved) {
        report.solutions.push(summarize(
            shift_label(*x),
            *x,
            solver,
            l,
            path,
            trace.as_ref(),
            cfg,
        ));
    }
    let mut worst = 0.0f64;
    for i in 1..report.solutions.len() {
        let (a, b) = (&report.solutions[i - 1], &report.solutions[i]);
        let (pa, pb) = (a.path.as_ref().unwrap(), b.path.as_ref().unwrap());
        worst = worst.min(pa.min_difference(pb));
        let d = levy_m1_distance(pa, pb)?;
        let (fa, fb) = (a.label.clone(), b.label.clone());
        report.push_distance(&fa, &fb, d);
    }
    report.push_check("dominance", worst, ORDER_SLACK, worst >= -ORDER_SLACK);
    if let Some(k) = shifts.iter().position(|x| *x == 0.0) {
        let base = report.solutions[k].path.clone().unwrap();
        let label = report.solutions[k].label.clone();
        for i in 0..report.solutions.len() {
            if i != k {
                let d = levy_m1_distance(report.solutions[i].path.as_ref().unwrap(), &base)?;
                let from = report.solutions[i].label.clone();
                report.push_distance(&from, &label, d);
            }
        }
    }
    Ok(report)
}

/// Ordered approximations of an initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum ProbeSequence {
    /// Right shifts `xₙ ↓ 0`.
    Shifts(Vec<f64>),
    /// Exponential smoothing with increasing rates.
    Rates(Vec<f64>),
    /// Arbitrary laws, listed in the order of the sequence.
    Laws(Vec<InitialLaw>),
}

impl ProbeSequence {
    pub fn laws(&self, law: &InitialLaw) -> Result<Vec<(f64, InitialLaw)>> {
        match self {
            ProbeSequence::Shifts(xs) => Ok(xs.iter().map(|x| (*x, law.shift(*x))).collect()),
            ProbeSequence::Rates(rs) => rs
                .iter()
                .map(|r| Ok((*r, law.smooth_exponential(*r)?)))
                .collect(),
            ProbeSequence::Laws(ls) => Ok(ls
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, l)| (i as f64, l))
                .collect()),
        }
    }
}

/// Right-continuity in the initial law along a sequence with
/// `F ≥ Fⁿ ≥ Fᵐ` for `m < n`.
///
/// The ordering of the laws is verified first; a violation aborts with
/// [`Error::OrderingViolation`].
pub fn right_continuity_probe(
    law: &InitialLaw,
    sequence: &ProbeSequence,
    cfg: &SimulationConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let members = sequence.laws(law)?;
    for (i, (p, l)) in members.iter().enumerate() {
        if !dominance_check(law, l) {
            return Err(Error::OrderingViolation(format!(
                "member {i} (parameter {p}) is not dominated by the limit law"
            )));
        }
        if i > 0 && !dominance_check(l, &members[i - 1].1) {
            return Err(Error::OrderingViolation(format!(
                "member {i} (parameter {p}) does not dominate member {}",
                i - 1
            )));
        }
    }

    let mut chain: Vec<InitialLaw> = members.iter().map(|(_, l)| l.clone()).collect();
    chain.push(law.clone());
    let solved = solve_picard_chain(&chain, cfg);

    let mut report = ExperimentReport::new("right-continuity", cfg);
    for (i, (path, trace)) in solved.into_iter().enumerate() {
        let (label, p, l) = match members.get(i) {
            Some((p, l)) => (format!("member {i}"), *p, l),
            None => ("limit".to_string(), 0.0, law),
        };
        report.solutions.push(summarize(
            label,
            p,
            SolverKind::Picard,
            l,
            path,
            Some(&trace),
            cfg,
        ));
    }
    let limit = report.solutions.last().unwrap().path.clone().unwrap();
    let n = members.len();

    let mut order = 0.0f64;
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let p = report.solutions[i].path.clone().unwrap();
        let next = report.solutions[i + 1].path.as_ref().unwrap();
        order = order.min(next.min_difference(&p));
        let d = levy_m1_distance(&p, &limit)?;
        let from = report.solutions[i].label.clone();
        report.push_distance(&from, "limit", d);
        dists.push(d);
    }
    report.push_check(
        "pointwise_nondecreasing",
        order,
        ORDER_SLACK,
        order >= -ORDER_SLACK,
    );
    let worst_rise = dists
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    report.push_check(
        "distance_nonincreasing",
        worst_rise.max(0.0),
        ORDER_SLACK,
        n < 2 || worst_rise <= ORDER_SLACK,
    );

    let seq: Vec<BoundaryPath> = report.solutions[..n]
        .iter()
        .map(|s| s.path.clone().unwrap())
        .collect();
    let probes = default_probe_times(&limit, jump_threshold(cfg), 4);
    let tol = (5.0 * cfg.dx).max(2.0 * cfg.picard_tol);
    report.convergence = Some(dense_convergence_report(&seq, &limit, &probes, tol));
    Ok(report)
}

/// Default left shifts `-2⁻ⁿ`, `n = 1..=count`, increasing to zero.
pub fn default_left_shifts(count: u32) -> Vec<f64> {
    (1..=count).map(|n| -(0.5f64).powi(n as i32)).collect()
}

/// Default right shifts `2⁻ⁿ`, `n = 1..=count`, decreasing to zero.
pub fn default_right_shifts(count: u32) -> Vec<f64> {
    (1..=count).map(|n| (0.5f64).powi(n as i32)).collect()
}

/// Estimates the left limit `Λ⁰` of minimal solutions for shifts `xₙ ↑ 0`
/// and compares it with the minimal solution at `x = 0`.
///
/// The estimate is the last member of the sequence (no extrapolation); the
/// per-probe tail is reported so convergence can be judged.
pub fn left_limit_probe(
    law: &InitialLaw,
    shifts: &[f64],
    cfg: &SimulationConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    ensure_sorted(shifts, "shifts")?;
    if shifts.iter().any(|x| *x >= 0.0) {
        return Err(Error::InvalidConfig(
            "left-limit shifts must be negative".into(),
        ));
    }
    // Minimal solutions increase as the shift decreases: solve from the
    // unshifted law outwards.
    let mut chain = vec![law.clone()];
    chain.extend(shifts.iter().rev().map(|x| law.shift(*x)));
    let solved = solve_picard_chain(&chain, cfg);

    let mut report = ExperimentReport::new("left-limit", cfg);
    let mut it = solved.into_iter();
    let (base, base_trace) = it.next().unwrap();
    let mut members: Vec<(f64, BoundaryPath, PicardTrace)> = it
        .zip(shifts.iter().rev())
        .map(|((p, t), x)| (*x, p, t))
        .collect();
    members.reverse();
    for (x, p, t) in &members {
        report.solutions.push(summarize(
            shift_label(*x),
            *x,
            SolverKind::Picard,
            &law.shift(*x),
            p.clone(),
            Some(t),
            cfg,
        ));
    }
    report.solutions.push(summarize(
        "minimal".into(),
        0.0,
        SolverKind::Picard,
        law,
        base.clone(),
        Some(&base_trace),
        cfg,
    ));

    let mut order = 0.0f64;
    for w in members.windows(2) {
        order = order.min(w[0].1.min_difference(&w[1].1));
    }
    report.push_check("shift_ordering", order, ORDER_SLACK, order >= -ORDER_SLACK);

    let estimate = members.last().unwrap().1.clone();
    let tol = (5.0 * cfg.dx).max(2.0 * cfg.picard_tol);
    let residual = solve_residual(law, &estimate, cfg);
    report.push_check("limit_residual", residual, tol, residual <= tol);
    let below = estimate.min_difference(&base);
    report.push_check(
        "maximality_direction",
        below,
        ORDER_SLACK,
        below >= -ORDER_SLACK,
    );
    let gap = estimate
        .times()
        .iter()
        .chain(base.times())
        .map(|t| estimate.eval(*t) - base.eval(*t))
        .fold(f64::NEG_INFINITY, f64::max);
    report.gap = Some(gap);
    report.push_check("gap", gap, tol, gap >= -ORDER_SLACK && gap < tol);
    for (x, p, _) in &members {
        let d = levy_m1_distance(p, &base)?;
        report.push_distance(&shift_label(*x), "minimal", d);
    }
    let seq: Vec<BoundaryPath> = members.iter().map(|m| m.1.clone()).collect();
    let probes = default_probe_times(&estimate, jump_threshold(cfg), 4);
    report.convergence = Some(dense_convergence_report(&seq, &estimate, &probes, tol));
    Ok(report)
}

/// Checks that the limit of physical solutions for laws converging to
/// `limit_law` jumps according to the inf-formula under `limit_law`.
///
/// The last solution stands in for the limit path. At each of its jumps the
/// surviving density just before the jump is recomputed under `limit_law`
/// with the limit path frozen, and the recorded jump is compared with the
/// inf-formula.
pub fn physical_limit_residual(
    laws: &[InitialLaw],
    solutions: &[BoundaryPath],
    limit_law: &InitialLaw,
    cfg: &SimulationConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if laws.is_empty() || laws.len() != solutions.len() {
        return Err(Error::InvalidConfig(format!(
            "{} laws but {} solutions",
            laws.len(),
            solutions.len()
        )));
    }
    let mut report = ExperimentReport::new("physical-limit", cfg);
    for (i, (l, p)) in laws.iter().zip(solutions).enumerate() {
        let grid = comparison_grid(l, limit_law);
        let cdf_gap = grid
            .iter()
            .map(|x| (l.cdf(*x) - limit_law.cdf(*x)).abs())
            .fold(0.0, f64::max);
        report.solutions.push(summarize(
            format!("member {i}"),
            cdf_gap,
            SolverKind::Physical,
            l,
            p.clone(),
            None,
            cfg,
        ));
    }
    let limit = solutions.last().unwrap().clone();
    let probes = default_probe_times(&limit, jump_threshold(cfg), 4);
    let tol = (5.0 * cfg.dx).max(2.0 * cfg.picard_tol);
    report.convergence = Some(dense_convergence_report(solutions, &limit, &probes, tol));

    let values = limit.grid_values();
    let threshold = jump_threshold(cfg);
    let continuous = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d <= threshold)
        .fold(values[0].min(threshold), f64::max);
    let jump_tol = (5.0 * cfg.dx).max(continuous);
    let mut worst = 0.0f64;
    for (k, v) in values.iter().enumerate() {
        let prev = if k == 0 { 0.0 } else { values[k - 1] };
        let size = v - prev;
        if size <= threshold {
            continue;
        }
        let nu = density_before(limit_law, &limit, cfg, k);
        let seed = (cfg.alpha * nu.lost_mass - prev).max(0.0);
        let predicted = physical_jump_seeded(&nu, cfg.alpha, seed, cfg.jump_refine);
        let err = (size - predicted).abs();
        worst = worst.max(err);
        report.push_distance(
            &format!("jump at {:.6e}", k as f64 * cfg.dt),
            "inf-formula",
            err,
        );
    }
    report.push_check("jump_condition", worst, jump_tol, worst <= jump_tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(alpha: f64) -> SimulationConfig {
        SimulationConfig {
            picard_tol: 1e-11,
            ..SimulationConfig::new(alpha, 1.0, 1e-2, 1e-2, 5.0).unwrap()
        }
    }

    #[test]
    fn single_shift_has_no_distances() {
        let r = shift_scan(
            &InitialLaw::dirac(1.0),
            &[0.0],
            SolverKind::Picard,
            &coarse(1.0),
        )
        .unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert!(r.distances.is_empty());
        assert!(r.passed());
    }

    #[test]
    fn shift_scan_dominance() {
        for solver in [SolverKind::Picard, SolverKind::Physical] {
            let r = shift_scan(
                &InitialLaw::dirac(1.0),
                &[-0.5, 0.0, 0.5],
                solver,
                &coarse(1.0),
            )
            .unwrap();
            assert!(r.passed(), "{:?}", r.failed_checks());
            let p = r.paths();
            assert!(p[0].min_difference(p[1]) >= -ORDER_SLACK);
            assert!(p[1].min_difference(p[2]) >= -ORDER_SLACK);
            assert_eq!(r.distances.len(), 4);
        }
    }

    #[test]
    fn unsorted_shifts_are_rejected() {
        assert!(shift_scan(
            &InitialLaw::dirac(1.0),
            &[0.5, 0.0],
            SolverKind::Picard,
            &coarse(1.0)
        )
        .is_err());
    }

    #[test]
    fn constant_sequence_has_zero_distances() {
        let law = InitialLaw::uniform(0.5, 1.5).unwrap();
        let seq = ProbeSequence::Laws(vec![law.clone(), law.clone()]);
        let r = right_continuity_probe(&law, &seq, &coarse(1.0)).unwrap();
        assert!(r.passed());
        assert!(
            r.distances.iter().all(|d| d.distance < 1e-9),
            "{:?}",
            r.distances
        );
    }

    #[test]
    fn crossing_laws_are_an_ordering_violation() {
        let law = InitialLaw::uniform(0.0, 2.0).unwrap();
        let seq = ProbeSequence::Laws(vec![InitialLaw::uniform(0.9, 1.1).unwrap()]);
        assert!(matches!(
            right_continuity_probe(&law, &seq, &coarse(1.0)),
            Err(Error::OrderingViolation(_))
        ));
    }

    #[test]
    fn smoothing_rates_converge_from_the_right() {
        let law = InitialLaw::uniform(0.2, 1.0).unwrap();
        let seq = ProbeSequence::Rates(vec![1.0, 4.0, 16.0, 64.0, 256.0]);
        let r = right_continuity_probe(&law, &seq, &coarse(0.8)).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks());
        assert!(r.distances.last().unwrap().distance < 2e-2);
    }

    #[test]
    fn left_limit_gap_in_uniqueness_regime() {
        let cfg = coarse(0.5);
        let r = left_limit_probe(&InitialLaw::dirac(1.0), &default_left_shifts(10), &cfg).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks());
        assert!(r.gap.unwrap() >= -1e-12);
    }

    #[test]
    fn blow_up_limit_recovers_full_jump() {
        let alpha = 1.0;
        let cfg = coarse(alpha);
        let law = InitialLaw::uniform(0.0, alpha / 2.0).unwrap();
        let laws: Vec<InitialLaw> = default_right_shifts(6)
            .iter()
            .map(|x| law.shift(*x))
            .collect();
        let sols: Vec<BoundaryPath> = laws.iter().map(|l| physical_timestep(l, &cfg)).collect();
        let r = physical_limit_residual(&laws, &sols, &law, &cfg).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks());
        let phys = physical_timestep(&law, &cfg);
        assert!((phys.grid_values()[0] - alpha).abs() <= cfg.dx);
    }

    #[test]
    fn report_serializes_with_grid_metadata() {
        let r = shift_scan(
            &InitialLaw::dirac(1.0),
            &[0.0, 0.5],
            SolverKind::Picard,
            &coarse(1.0),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["solutions"][0]["grid"]["dx"], 1e-2);
        assert_eq!(v["distances"][0]["grid"]["dt"], 1e-2);
        assert_eq!(v["checks"][0]["name"], "dominance");
    }
}
