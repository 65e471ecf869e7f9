//! Finite particle system `Xⁱ = Xⁱ₀₋ + Bⁱ − L^N` with greedy cascades.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Execution, SimulationConfig};
use crate::error::{Error, Result};
use crate::law::InitialLaw;
use crate::par;
use crate::path::BoundaryPath;

/// Greedy linear rounds before the cascade switches to a sorted sweep.
const LINEAR_ROUNDS: usize = 8;

/// Stream used for drawing initial positions; particle streams use their index.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
struct Particle {
    /// `X₀₋ + B_t`, i.e. the position before subtracting the loss.
    x: f64,
    rng: ChaCha8Rng,
    hit: bool,
}

/// N particles sharing one loss process.
///
/// Positions are stored without the loss: particle `i` is alive while
/// `positions[i] > loss`. Each particle draws from its own ChaCha stream keyed
/// by `(seed, i)`, so the result does not depend on how particles are
/// distributed over threads.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    particles: Vec<Particle>,
    alive: Vec<bool>,
    hit_times: Vec<Option<f64>>,
    dead: usize,
    alpha: f64,
    exec: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeEvent {
    pub t: f64,
    /// Particles killed by their own motion during the step.
    pub direct_hits: usize,
    /// Further particles absorbed by the resulting jump of the loss.
    pub cascade_size: usize,
    pub rounds: usize,
    pub jump: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CascadeLog {
    pub events: Vec<CascadeEvent>,
}

impl CascadeLog {
    pub fn largest(&self) -> Option<&CascadeEvent> {
        self.events.iter().max_by(|a, b| a.jump.total_cmp(&b.jump))
    }
}

impl ParticleEnsemble {
    /// Draws `n` initial positions from `law`.
    pub fn new(law: &InitialLaw, n: usize, cfg: &SimulationConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "particle count must be positive".into(),
            ));
        }
        let mut init = ChaCha8Rng::seed_from_u64(cfg.seed);
        init.set_stream(INIT_STREAM);
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut init)).collect();
        Ok(Self::from_positions(&xs, cfg))
    }

    pub fn from_positions(xs: &[f64], cfg: &SimulationConfig) -> Self {
        let particles = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                Particle {
                    x: *x,
                    rng,
                    hit: false,
                }
            })
            .collect();
        Self {
            particles,
            alive: vec![true; xs.len()],
            hit_times: vec![None; xs.len()],
            dead: 0,
            alpha: cfg.alpha,
            exec: cfg.execution,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `L^N = (α/N) · #dead`.
    pub fn loss(&self) -> f64 {
        self.loss_at(self.dead)
    }

    fn loss_at(&self, dead: usize) -> f64 {
        self.alpha * dead as f64 / self.len() as f64
    }

    pub fn dead(&self) -> usize {
        self.dead
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn hit_times(&self) -> &[Option<f64>] {
        &self.hit_times
    }

    /// Current positions `X₀₋ + B − L^N`.
    pub fn positions(&self) -> Vec<f64> {
        let l = self.loss();
        self.particles.iter().map(|p| p.x - l).collect()
    }

    /// Moves every survivor by one Euler step with the loss frozen, applying
    /// the Brownian-bridge kill test. Returns the number of particles hit.
    fn advance(&mut self, dt: f64) -> usize {
        let l = self.loss();
        let sd = dt.sqrt();
        let alive = &self.alive;
        par::for_each_mut(self.exec, &mut self.particles, |i, p| {
            if !alive[i] {
                return;
            }
            let before = p.x - l;
            let z: f64 = p.rng.sample(StandardNormal);
            let u: f64 = p.rng.random();
            p.x += sd * z;
            let after = p.x - l;
            p.hit = after <= 0.0 || u < (-2.0 * before * after / dt).exp();
        });
        self.particles.iter().filter(|p| p.hit).count()
    }

    /// Kills hit particles at time `t` and resolves the cascade they trigger.
    fn settle(&mut self, t: f64, direct_hits: usize, log: &mut CascadeLog) {
        if direct_hits == 0 {
            return;
        }
        for (i, p) in self.particles.iter_mut().enumerate() {
            if p.hit {
                p.hit = false;
                self.alive[i] = false;
                self.hit_times[i] = Some(t);
            }
        }
        let base = self.dead + direct_hits;
        let (extra, rounds) = self.cascade_count(base);
        let threshold = self.loss_at(base + extra);
        for (i, p) in self.particles.iter().enumerate() {
            if self.alive[i] && p.x <= threshold {
                self.alive[i] = false;
                self.hit_times[i] = Some(t);
            }
        }
        let before = self.loss();
        self.dead = base + extra;
        log.events.push(CascadeEvent {
            t,
            direct_hits,
            cascade_size: extra,
            rounds,
            jump: self.loss() - before,
        });
    }

    /// Smallest `j` with `#{alive : x ≤ L(base + j)} = j`.
    fn cascade_count(&self, base: usize) -> (usize, usize) {
        let mut j = 0;
        let mut rounds = 0;
        while rounds < LINEAR_ROUNDS {
            rounds += 1;
            let level = self.loss_at(base + j);
            let next = self
                .particles
                .iter()
                .zip(&self.alive)
                .filter(|(p, a)| **a && p.x <= level)
                .count();
            if next == j {
                return (j, rounds);
            }
            j = next;
        }
        // Long cascade: one sorted sweep over all survivors.
        let mut rest: Vec<f64> = self
            .particles
            .iter()
            .zip(&self.alive)
            .filter(|(_, a)| **a)
            .map(|(p, _)| p.x)
            .collect();
        rest.sort_by(f64::total_cmp);
        let mut k = 0;
        while k < rest.len() && rest[k] <= self.loss_at(base + k) {
            k += 1;
        }
        (k, rounds + 1)
    }
}

/// Simulates the particle system; the loss at grid index `k` includes every
/// death during `[t_k, t_k + dt)`, the same convention as the density engine.
pub fn simulate(
    law: &InitialLaw,
    n: usize,
    cfg: &SimulationConfig,
) -> Result<(BoundaryPath, CascadeLog)> {
    let (path, log, _) = simulate_ensemble(law, n, cfg)?;
    Ok((path, log))
}

/// As [`simulate`], also returning the final ensemble.
pub fn simulate_ensemble(
    law: &InitialLaw,
    n: usize,
    cfg: &SimulationConfig,
) -> Result<(BoundaryPath, CascadeLog, ParticleEnsemble)> {
    cfg.validate()?;
    let mut ens = ParticleEnsemble::new(law, n, cfg)?;
    let mut log = CascadeLog::default();

    let mut initial = 0;
    for p in ens.particles.iter_mut() {
        p.hit = p.x <= 0.0;
        initial += p.hit as usize;
    }
    ens.settle(0.0, initial, &mut log);

    let mut values = Vec::with_capacity(cfg.steps() + 1);
    for k in 0..=cfg.steps() {
        let t = k as f64 * cfg.dt;
        let hits = ens.advance(cfg.dt);
        ens.settle(t, hits, &mut log);
        values.push(ens.loss());
    }
    let path = BoundaryPath::from_grid(cfg.dt, &values)?;
    Ok((path, log, ens))
}

/// Greedy cascade on survivor positions measured from the current boundary.
///
/// Starts from `Δ = c · newly_hit` and absorbs every survivor with position
/// `≤ Δ`, adding `c` per absorption, until nothing new is absorbed. Returns
/// the final `Δ` and the absorbed indices in ascending order.
pub fn cascade_resolve(
    positions: &[f64],
    per_particle_loss: f64,
    newly_hit: usize,
) -> (f64, Vec<usize>) {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|a, b| positions[*a].total_cmp(&positions[*b]));
    let level = |j: usize| per_particle_loss * (newly_hit + j) as f64;
    let mut j = 0;
    while j < order.len() && positions[order[j]] <= level(j) {
        j += 1;
    }
    let mut absorbed = order[..j].to_vec();
    absorbed.sort_unstable();
    (level(j), absorbed)
}

/// Fraction of windows that fail to go strictly below their starting value
/// within the first `h` time units, at the sampling resolution `dt`.
///
/// Each window is a sampled path starting at a hitting time. A window of
/// length zero counts as failing.
pub fn crossing_diagnostic(windows: &[Vec<f64>], dt: f64, h: f64) -> f64 {
    if windows.is_empty() {
        return 1.0;
    }
    let steps = (h / dt).round() as usize;
    let failing = windows
        .iter()
        .filter(|w| {
            let start = w[0];
            let end = (steps + 1).min(w.len());
            w[1..end].iter().all(|v| *v >= start)
        })
        .count();
    failing as f64 / windows.len() as f64
}

/// `count` Brownian paths started at zero, sampled every `dt` up to `h`.
pub fn brownian_windows(count: usize, dt: f64, h: f64, seed: u64) -> Vec<Vec<f64>> {
    let steps = (h / dt).round() as usize;
    let sd = dt.sqrt();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = 0.0;
            let mut w = Vec::with_capacity(steps + 1);
            w.push(0.0);
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                x += sd * z;
                w.push(x);
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_sf;
    use proptest::prelude::*;

    fn cfg(alpha: f64, dt: f64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            seed,
            ..SimulationConfig::new(alpha, 1.0, dt, dt, 6.0).unwrap()
        }
    }

    /// Smallest `Δ = c (m + |S|)` over subsets `S` containing exactly the
    /// survivors with position `≤ Δ`.
    pub(crate) fn exhaustive_fixed_point(xs: &[f64], c: f64, m: usize) -> f64 {
        let n = xs.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let size = mask.count_ones() as usize;
            let delta = c * (m + size) as f64;
            let consistent = (0..n).all(|i| ((mask >> i) & 1 == 1) == (xs[i] <= delta));
            if consistent {
                best = best.min(delta);
            }
        }
        best
    }

    #[test]
    fn cascade_examples() {
        let c = 1.0 / 3.0;
        let (d, a) = cascade_resolve(&[0.2, 0.3, 0.9], c, 1);
        assert!((d - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(a, vec![0, 1, 2]);
        let (d, a) = cascade_resolve(&[1.0, 2.0], c, 1);
        assert!((d - c).abs() < 1e-15);
        assert!(a.is_empty());
        let (d, a) = cascade_resolve(&[0.35, 0.3], c, 1);
        assert!((d - 1.0).abs() < 1e-15);
        assert_eq!(a, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn cascade_is_smallest_fixed_point(
            xs in prop::collection::vec(0.0f64..2.0, 0..10),
            c in 0.01f64..0.5,
            m in 1usize..4,
        ) {
            let (d, _) = cascade_resolve(&xs, c, m);
            prop_assert_eq!(d, exhaustive_fixed_point(&xs, c, m));
        }

        #[test]
        fn cascade_is_permutation_invariant(
            xs in prop::collection::vec(0.0f64..2.0, 1..30),
            c in 0.01f64..0.5,
            rot in 0usize..30,
        ) {
            let mut ys = xs.clone();
            ys.rotate_left(rot % xs.len());
            ys.reverse();
            prop_assert_eq!(cascade_resolve(&xs, c, 1).0, cascade_resolve(&ys, c, 1).0);
        }

        #[test]
        fn cascade_is_monotone(
            xs in prop::collection::vec(0.0f64..2.0, 1..30),
            c in 0.01f64..0.5,
            i in 0usize..30,
            drop in 0.0f64..1.0,
        ) {
            let mut ys = xs.clone();
            let i = i % xs.len();
            ys[i] = (ys[i] - drop).max(0.0);
            prop_assert!(cascade_resolve(&ys, c, 1).0 >= cascade_resolve(&xs, c, 1).0);
        }
    }

    #[test]
    fn ensemble_cascade_matches_resolver() {
        let xs = [0.05, 0.1, 0.2, 0.3, 0.35, 0.9, 1.7, 2.4];
        let c = cfg(1.6, 1e-2, 0);
        let mut ens = ParticleEnsemble::from_positions(&xs, &c);
        ens.particles[0].hit = true;
        let mut log = CascadeLog::default();
        ens.settle(0.0, 1, &mut log);
        let (d, absorbed) = cascade_resolve(&xs[1..], 0.2, 1);
        assert_eq!(ens.dead(), 1 + absorbed.len());
        assert_eq!(ens.loss(), d);
        assert_eq!(log.events[0].cascade_size, absorbed.len());
    }

    #[test]
    fn long_cascade_uses_sorted_sweep() {
        // Spacing just below c forces one absorption per greedy round.
        let n = 50;
        let xs: Vec<f64> = (1..n).map(|i| 0.0199 * i as f64 + 1e-4).collect();
        let mut all = vec![-1.0];
        all.extend(&xs);
        let c = cfg(1.0, 1e-2, 0);
        let mut ens = ParticleEnsemble::from_positions(&all, &c);
        ens.particles[0].hit = true;
        let mut log = CascadeLog::default();
        ens.settle(0.0, 1, &mut log);
        let (d, absorbed) = cascade_resolve(&xs, 1.0 / n as f64, 1);
        assert!(log.events[0].rounds > LINEAR_ROUNDS);
        assert_eq!(ens.dead(), 1 + absorbed.len());
        assert_eq!(ens.loss(), d);
    }

    #[test]
    fn single_particle_first_passage() {
        let runs = 100_000;
        let c = cfg(1.0, 1e-2, 0);
        let law = InitialLaw::dirac(1.0);
        let mut hits = 0usize;
        for r in 0..runs {
            let c = SimulationConfig {
                seed: r as u64,
                ..c.clone()
            };
            let (path, _) = simulate(&law, 1, &c).unwrap();
            hits += (path.final_value() > 0.0) as usize;
        }
        let p = 2.0 * norm_sf(1.0);
        let mean = hits as f64 / runs as f64;
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        assert!((mean - p).abs() < 3.0 * se, "{mean} vs {p}");
    }

    #[test]
    fn far_particles_never_die() {
        let (path, log) = simulate(&InitialLaw::dirac(100.0), 500, &cfg(1.0, 1e-2, 3)).unwrap();
        assert!(path.values().iter().all(|v| *v == 0.0));
        assert!(log.events.is_empty());
    }

    #[test]
    fn loss_steps_are_multiples_of_alpha_over_n() {
        let n = 400;
        let alpha = 0.7;
        let c = cfg(alpha, 1e-2, 11);
        let (path, log, ens) =
            simulate_ensemble(&InitialLaw::uniform(0.0, 1.0).unwrap(), n, &c).unwrap();
        for v in path.grid_values() {
            let k = (v * n as f64 / alpha).round();
            assert_eq!(*v, alpha * k / n as f64);
        }
        let dead = ens.alive().iter().filter(|a| !**a).count();
        assert_eq!(dead, ens.dead());
        assert_eq!(ens.hit_times().iter().filter(|h| h.is_some()).count(), dead);
        assert_eq!(path.final_value(), ens.loss());
        let total: usize = log
            .events
            .iter()
            .map(|e| e.direct_hits + e.cascade_size)
            .sum();
        assert_eq!(total, dead);
    }

    #[test]
    fn initial_nonpositive_mass_dies_at_zero() {
        let law = InitialLaw::dirac_mixture(vec![(-0.5, 0.5), (3.0, 0.5)]).unwrap();
        let (path, log) = simulate(&law, 1000, &cfg(0.5, 1e-2, 5)).unwrap();
        assert_eq!(log.events[0].t, 0.0);
        assert!(path.grid_values()[0] > 0.2);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let law = InitialLaw::uniform(0.0, 1.0).unwrap();
        let c = SimulationConfig {
            execution: Execution::Parallel,
            ..cfg(0.9, 1e-2, 42)
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate(&law, 5000, &c).unwrap().0)
        };
        let a = run(1);
        let b = run(8);
        assert_eq!(a, b);
        let seq = simulate(
            &law,
            5000,
            &SimulationConfig {
                execution: Execution::Sequential,
                ..c.clone()
            },
        )
        .unwrap()
        .0;
        assert_eq!(a, seq);
    }

    #[test]
    fn crossing_diagnostic_conventions() {
        let rising = vec![(0..20).map(|i| i as f64).collect::<Vec<_>>(); 5];
        assert_eq!(crossing_diagnostic(&rising, 0.1, 1.0), 1.0);
        assert_eq!(crossing_diagnostic(&rising, 0.1, 0.0), 1.0);
        let falling = vec![(0..20).map(|i| -(i as f64)).collect::<Vec<_>>(); 5];
        assert_eq!(crossing_diagnostic(&falling, 0.1, 1.0), 0.0);
    }

    #[test]
    fn brownian_windows_cross_immediately() {
        // A random walk with n symmetric continuous steps stays nonnegative
        // with probability C(2n, n) / 4^n.
        let stay = |n: usize| (1..=n).fold(1.0, |p, k| p * (2 * k - 1) as f64 / (2 * k) as f64);
        let count = 4000;
        let coarse = crossing_diagnostic(&brownian_windows(count, 1e-2, 0.1, 1), 1e-2, 0.1);
        let fine = crossing_diagnostic(&brownian_windows(count, 1e-3, 0.1, 1), 1e-3, 0.1);
        for (f, n) in [(coarse, 10), (fine, 100)] {
            let p = stay(n);
            let se = (p * (1.0 - p) / count as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se, "{f} vs {p}");
        }
        assert!(fine < coarse);
    }
}
