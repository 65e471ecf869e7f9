//! Lévy-type distance for nondecreasing paths on `[-1, T]`.
//!
//! On monotone paths, convergence in this distance is the same as pointwise
//! convergence at continuity points and both endpoints, which is how M1
//! convergence is checked here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{BoundaryPath, LEFT_END};

const BISECTION_STEPS: usize = 80;

/// Extends a path to `[-1, T]` with the value `0` before time zero.
///
/// Any samples before zero are replaced, so embedding twice is the identity.
pub fn embed_left(path: &BoundaryPath) -> BoundaryPath {
    let mut times = vec![LEFT_END];
    let mut values = vec![0.0];
    for (t, v) in path.times().iter().zip(path.values()) {
        if *t >= 0.0 {
            times.push(*t);
            values.push(*v);
        }
    }
    BoundaryPath::new(times, values).expect("embedding keeps order")
}

fn check_common_horizon(f: &BoundaryPath, g: &BoundaryPath) -> Result<()> {
    let scale = f.horizon().abs().max(1.0);
    if (f.horizon() - g.horizon()).abs() > 1e-9 * scale {
        return Err(Error::HorizonMismatch(f.horizon(), g.horizon()));
    }
    if (f.start() - g.start()).abs() > 1e-9 {
        return Err(Error::HorizonMismatch(f.start(), g.start()));
    }
    Ok(())
}

/// True when `f(t-ε) - ε ≤ g(t) ≤ f(t+ε) + ε` at every grid time.
fn within(f: &BoundaryPath, g: &BoundaryPath, times: &[f64], eps: f64) -> bool {
    times
        .iter()
        .all(|t| f.eval(t - eps) - eps <= g.eval(*t) && g.eval(*t) <= f.eval(t + eps) + eps)
}

/// Distance between two embedded nondecreasing paths.
///
/// The infimum over `ε` is taken in both directions, so the result is
/// symmetric; the endpoint gaps are included because M1 convergence pins
/// both ends.
pub fn levy_m1_distance(f: &BoundaryPath, g: &BoundaryPath) -> Result<f64> {
    check_common_horizon(f, g)?;
    let mut times: Vec<f64> = f.times().iter().chain(g.times()).copied().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let ends = (f.values()[0] - g.values()[0])
        .abs()
        .max((f.final_value() - g.final_value()).abs());
    let mut hi = f.sup_distance(g);
    if hi == 0.0 {
        return Ok(0.0);
    }
    let ok = |eps: f64| within(f, g, &times, eps) && within(g, f, &times, eps);
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(hi.max(ends))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseConvergenceReport {
    pub probe_times: Vec<f64>,
    /// `errors[p][n] = |fⁿ(t_p) - f(t_p)|`.
    pub errors: Vec<Vec<f64>>,
    /// Probes whose last error exceeds the tolerance.
    pub non_vanishing: Vec<f64>,
    /// Probes whose errors increase somewhere along the sequence.
    pub non_monotone: Vec<f64>,
    pub tol: f64,
}

impl DenseConvergenceReport {
    pub fn converged(&self) -> bool {
        self.non_vanishing.is_empty()
    }

    pub fn max_final_error(&self) -> f64 {
        self.errors
            .iter()
            .filter_map(|e| e.last().copied())
            .fold(0.0, f64::max)
    }
}

/// Pointwise errors of a sequence against its limit at the probe times.
pub fn dense_convergence_report(
    sequence: &[BoundaryPath],
    limit: &BoundaryPath,
    probe_times: &[f64],
    tol: f64,
) -> DenseConvergenceReport {
    let errors: Vec<Vec<f64>> = probe_times
        .iter()
        .map(|t| {
            sequence
                .iter()
                .map(|f| (f.eval(*t) - limit.eval(*t)).abs())
                .collect()
        })
        .collect();
    let mut non_vanishing = Vec::new();
    let mut non_monotone = Vec::new();
    for (t, e) in probe_times.iter().zip(&errors) {
        if e.last().is_some_and(|v| *v > tol) {
            non_vanishing.push(*t);
        }
        if e.windows(2).any(|w| w[1] > w[0] + tol) {
            non_monotone.push(*t);
        }
    }
    DenseConvergenceReport {
        probe_times: probe_times.to_vec(),
        errors,
        non_vanishing,
        non_monotone,
        tol,
    }
}

/// Both endpoints plus `per_gap` evenly spaced points strictly inside each
/// interval between jumps larger than `jump_threshold` (with one point this
/// is the midpoint).
pub fn default_probe_times(limit: &BoundaryPath, jump_threshold: f64, per_gap: usize) -> Vec<f64> {
    let mut cuts = vec![limit.start()];
    cuts.extend(limit.jumps(jump_threshold).iter().map(|(t, _)| *t));
    cuts.push(limit.horizon());
    cuts.dedup();
    let mut probes = vec![limit.start()];
    for w in cuts.windows(2) {
        for i in 1..=per_gap {
            probes.push(w[0] + (w[1] - w[0]) * i as f64 / (per_gap + 1) as f64);
        }
    }
    probes.push(limit.horizon());
    probes.dedup();
    probes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step_at(s: f64, horizon: f64) -> BoundaryPath {
        BoundaryPath::new(vec![-1.0, s, horizon], vec![0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn embedding_is_idempotent_and_continuous_at_left_end() {
        let p = BoundaryPath::new(vec![0.0, 0.5, 1.0], vec![0.3, 0.4, 0.9]).unwrap();
        let e = embed_left(&p);
        assert_eq!(e.times(), &[-1.0, 0.0, 0.5, 1.0]);
        assert_eq!(e.eval(-0.5), 0.0);
        assert_eq!(e.eval(0.0), 0.3);
        assert_eq!(embed_left(&e), e);
    }

    #[test]
    fn distance_examples() {
        let zero = BoundaryPath::new(vec![-1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let c = BoundaryPath::new(vec![-1.0, 2.0], vec![0.7, 0.7]).unwrap();
        assert_eq!(levy_m1_distance(&zero, &zero).unwrap(), 0.0);
        assert!((levy_m1_distance(&zero, &c).unwrap() - 0.7).abs() < 1e-12);
        for delta in [0.01, 0.25, 0.6] {
            let d = levy_m1_distance(&step_at(1.0, 3.0), &step_at(1.0 + delta, 3.0)).unwrap();
            assert!((d - delta).abs() < 1e-9, "{d} vs {delta}");
        }
    }

    #[test]
    fn brute_force_scan_agrees() {
        let f = step_at(1.0, 3.0);
        let g = step_at(1.3, 3.0);
        let times: Vec<f64> = vec![-1.0, 1.0, 1.3, 3.0];
        let scan = (1..=10_000)
            .map(|i| i as f64 * 1e-4)
            .find(|e| within(&f, &g, &times, *e) && within(&g, &f, &times, *e))
            .unwrap();
        let d = levy_m1_distance(&f, &g).unwrap();
        assert!((d - scan).abs() <= 1e-4);
    }

    #[test]
    fn horizons_must_match() {
        assert!(matches!(
            levy_m1_distance(&step_at(1.0, 3.0), &step_at(1.0, 2.0)),
            Err(Error::HorizonMismatch(..))
        ));
    }

    fn monotone_path(incs: Vec<f64>) -> BoundaryPath {
        let mut acc = 0.0;
        let values: Vec<f64> = incs
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        BoundaryPath::from_grid(0.1, &values).unwrap()
    }

    fn increments() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![3 => Just(0.0), 1 => 0.0f64..0.5], 21)
    }

    proptest! {
        #[test]
        fn distance_is_a_pseudo_metric(a in increments(), b in increments(), c in increments()) {
            let (f, g, h) = (monotone_path(a), monotone_path(b), monotone_path(c));
            let fg = levy_m1_distance(&f, &g).unwrap();
            let gf = levy_m1_distance(&g, &f).unwrap();
            prop_assert!((fg - gf).abs() < 1e-12);
            let fh = levy_m1_distance(&f, &h).unwrap();
            let gh = levy_m1_distance(&g, &h).unwrap();
            prop_assert!(fh <= fg + gh + 2.0 * 0.1);
            prop_assert_eq!(levy_m1_distance(&f, &f).unwrap(), 0.0);
        }
    }

    #[test]
    fn report_tracks_one_over_n() {
        let limit = step_at(1.0, 3.0);
        let seq: Vec<BoundaryPath> = (1..=20)
            .map(|n| {
                let c = 1.0 / n as f64;
                BoundaryPath::new(vec![-1.0, 1.0, 3.0], vec![c, 1.0 + c, 1.0 + c]).unwrap()
            })
            .collect();
        let probes = default_probe_times(&limit, 0.5, 1);
        assert_eq!(probes, vec![-1.0, 0.0, 2.0, 3.0]);
        let r = dense_convergence_report(&seq, &limit, &probes, 0.06);
        assert!(r.converged());
        assert!(r.non_monotone.is_empty());
        assert!(r.errors.iter().all(|e| (e[9] - 0.1).abs() < 1e-12));
        let same = dense_convergence_report(std::slice::from_ref(&limit), &limit, &probes, 0.0);
        assert_eq!(same.max_final_error(), 0.0);
    }
}
