//! Laws of the initial condition `X₀₋`.
//!
//! Every law is a probability measure on the real line. Mass at or below zero
//! is absorbed at time zero by all solvers; it is kept at its true location
//! here so that shifts compose exactly, and only collapsed into an atom when
//! the law is discretized onto a solver grid.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_inv, norm_pdf, norm_sf};

const MASS_TOL: f64 = 1e-12;

/// Beyond this many mean lengths the exponential tail is below 1e-17.
const EXP_TAIL: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawKind {
    /// Piecewise-constant density on cells `(origin + k dx, origin + (k+1) dx]`
    /// plus an atom of mass `atom` at `atom_at`.
    GridDensity {
        #[serde(default)]
        origin: f64,
        dx: f64,
        masses: Vec<f64>,
        #[serde(default)]
        atom: f64,
        #[serde(default)]
        atom_at: f64,
    },
    /// Equally weighted samples, sorted ascending.
    Empirical {
        samples: Vec<f64>,
    },
    /// `(location, weight)` pairs.
    DiracMixture {
        atoms: Vec<(f64, f64)>,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Normal conditioned on `X > lower`.
    TruncatedNormal {
        mean: f64,
        sd: f64,
        #[serde(default)]
        lower: f64,
    },
    /// Law of `base + E` with `E ~ Exp(rate)` independent of `base`.
    ExpSmoothed {
        base: Box<InitialLaw>,
        rate: f64,
    },
}

/// The law of `X₀₋`, with `E|X₀₋|` cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawKind", into = "LawKind")]
pub struct InitialLaw {
    kind: LawKind,
    mean_abs: f64,
    /// Prefix sums of grid cell masses (grid laws only).
    cum: Vec<f64>,
}

/// A law lumped onto the solver grid `(0, n dx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub masses: Vec<f64>,
    /// Mass at or below zero.
    pub atom: f64,
    /// Mass beyond the last cell.
    pub beyond: f64,
}

impl TryFrom<LawKind> for InitialLaw {
    type Error = Error;

    fn try_from(kind: LawKind) -> Result<Self> {
        Self::from_kind(kind)
    }
}

impl From<InitialLaw> for LawKind {
    fn from(law: InitialLaw) -> Self {
        law.kind
    }
}

fn check_total(total: f64) -> Result<()> {
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidLaw(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidLaw(format!("{name} is not finite: {v}")));
    }
    Ok(())
}

impl InitialLaw {
    pub fn from_kind(kind: LawKind) -> Result<Self> {
        let mut cum = Vec::new();
        match &kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                finite("origin", *origin)?;
                finite("atom_at", *atom_at)?;
                if !(*dx > 0.0 && dx.is_finite()) {
                    return Err(Error::InvalidLaw(format!(
                        "grid dx must be positive, got {dx}"
                    )));
                }
                if masses
                    .iter()
                    .chain([atom])
                    .any(|m| !(*m >= 0.0 && m.is_finite()))
                {
                    return Err(Error::InvalidLaw("grid masses must be nonnegative".into()));
                }
                cum.reserve(masses.len() + 1);
                cum.push(0.0);
                let mut acc = 0.0;
                for m in masses {
                    acc += m;
                    cum.push(acc);
                }
                check_total(acc + atom)?;
            }
            LawKind::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidLaw(
                        "empirical law needs at least one sample".into(),
                    ));
                }
                if samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::InvalidLaw("empirical samples must be finite".into()));
                }
                if samples.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidLaw("empirical samples must be sorted".into()));
                }
            }
            LawKind::DiracMixture { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidLaw(
                        "dirac mixture needs at least one atom".into(),
                    ));
                }
                for (x, w) in atoms {
                    finite("atom location", *x)?;
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidLaw(format!("negative weight {w}")));
                    }
                }
                check_total(atoms.iter().map(|a| a.1).sum())?;
            }
            LawKind::Uniform { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if a >= b {
                    return Err(Error::InvalidLaw(format!(
                        "uniform needs a < b, got ({a}, {b})"
                    )));
                }
            }
            LawKind::TruncatedNormal { mean, sd, lower } => {
                finite("mean", *mean)?;
                finite("lower", *lower)?;
                if !(*sd > 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidLaw(format!("sd must be positive, got {sd}")));
                }
                if norm_sf((lower - mean) / sd) <= 0.0 {
                    return Err(Error::InvalidLaw("truncation leaves no mass".into()));
                }
            }
            LawKind::ExpSmoothed { base, rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::NonPositiveRate(*rate));
                }
                if !base.is_smoothable() {
                    return Err(Error::NotDiscretizable(base.kind_name().into()));
                }
            }
        }
        let mut law = Self {
            kind,
            mean_abs: 0.0,
            cum,
        };
        law.mean_abs = law.compute_mean_abs();
        Ok(law)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::from_kind(LawKind::Uniform { a, b })
    }

    pub fn dirac(x: f64) -> Self {
        Self::from_kind(LawKind::DiracMixture {
            atoms: vec![(x, 1.0)],
        })
        .expect("finite dirac location")
    }

    pub fn dirac_mixture(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::from_kind(LawKind::DiracMixture { atoms })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        samples.sort_by(f64::total_cmp);
        Self::from_kind(LawKind::Empirical { samples })
    }

    /// Normal(mean, sd) conditioned to be positive.
    pub fn truncated_normal(mean: f64, sd: f64) -> Result<Self> {
        Self::from_kind(LawKind::TruncatedNormal {
            mean,
            sd,
            lower: 0.0,
        })
    }

    /// Cell masses on `(k dx, (k+1) dx]` with an atom at zero.
    pub fn grid_density(dx: f64, masses: Vec<f64>, atom: f64) -> Result<Self> {
        Self::from_kind(LawKind::GridDensity {
            origin: 0.0,
            dx,
            masses,
            atom,
            atom_at: 0.0,
        })
    }

    /// Reads a two-column `x,density` CSV with equally spaced cell centers.
    ///
    /// The density is normalized to unit mass when it is within 1% of it.
    pub fn from_density_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (centers, density) = read_xy_csv(path)?;
        if centers.len() < 2 {
            return Err(Error::InvalidLaw(
                "density csv needs at least two rows".into(),
            ));
        }
        let dx = centers[1] - centers[0];
        for w in centers.windows(2) {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
                return Err(Error::InvalidLaw(
                    "density csv must be equally spaced".into(),
                ));
            }
        }
        let masses: Vec<f64> = density.iter().map(|d| d * dx).collect();
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-2 {
            return Err(Error::InvalidLaw(format!(
                "density integrates to {total}, expected 1"
            )));
        }
        Self::from_kind(LawKind::GridDensity {
            origin: centers[0] - 0.5 * dx,
            dx,
            masses: masses.into_iter().map(|m| m / total).collect(),
            atom: 0.0,
            atom_at: 0.0,
        })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            LawKind::GridDensity { .. } => "grid_density",
            LawKind::Empirical { .. } => "empirical",
            LawKind::DiracMixture { .. } => "dirac_mixture",
            LawKind::Uniform { .. } => "uniform",
            LawKind::TruncatedNormal { .. } => "truncated_normal",
            LawKind::ExpSmoothed { .. } => "exp_smoothed",
        }
    }

    /// `E|X₀₋|`.
    pub fn mean_abs(&self) -> f64 {
        self.mean_abs
    }

    fn is_atomic(&self) -> bool {
        matches!(
            self.kind,
            LawKind::Empirical { .. } | LawKind::DiracMixture { .. }
        )
    }

    fn is_smoothable(&self) -> bool {
        matches!(
            self.kind,
            LawKind::Empirical { .. }
                | LawKind::DiracMixture { .. }
                | LawKind::GridDensity { .. }
                | LawKind::Uniform { .. }
        )
    }

    /// `P(X₀₋ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                let atom_part = if *atom_at <= x { *atom } else { 0.0 };
                let s = (x - origin) / dx;
                let cells = if s <= 0.0 {
                    0.0
                } else if s >= masses.len() as f64 {
                    self.cum[masses.len()]
                } else {
                    let k = s.floor() as usize;
                    self.cum[k] + masses[k] * (s - k as f64)
                };
                (atom_part + cells).min(1.0)
            }
            LawKind::Empirical { samples } => {
                samples.partition_point(|s| *s <= x) as f64 / samples.len() as f64
            }
            LawKind::DiracMixture { atoms } => atoms
                .iter()
                .filter(|a| a.0 <= x)
                .map(|a| a.1)
                .sum::<f64>()
                .min(1.0),
            LawKind::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            LawKind::TruncatedNormal { mean, sd, lower } => {
                if x <= *lower {
                    return 0.0;
                }
                let zl = (lower - mean) / sd;
                let zx = (x - mean) / sd;
                // Difference of upper tails keeps precision when the cut is deep in a tail.
                let tail = norm_sf(zl);
                ((tail - norm_sf(zx)) / tail).clamp(0.0, 1.0)
            }
            LawKind::ExpSmoothed { base, rate } => base.smoothed_cdf(*rate, x).clamp(0.0, 1.0),
        }
    }

    /// CDF of `self + Exp(rate)`, for the smoothable kinds.
    fn smoothed_cdf(&self, rate: f64, x: f64) -> f64 {
        let point = |y: f64| {
            if y > x {
                0.0
            } else {
                -(-rate * (x - y)).exp_m1()
            }
        };
        // Contribution of a uniform cell (c, c + h] carrying mass m.
        let cell = |c: f64, h: f64, m: f64| {
            if x <= c || m == 0.0 {
                return 0.0;
            }
            let u = x.min(c + h);
            let integral = (u - c) - ((-rate * (x - u)).exp() - (-rate * (x - c)).exp()) / rate;
            m / h * integral
        };
        let far = x - EXP_TAIL / rate;
        match &self.kind {
            LawKind::DiracMixture { atoms } => atoms.iter().map(|(y, w)| w * point(*y)).sum(),
            LawKind::Empirical { samples } => {
                let full = samples.partition_point(|s| *s < far);
                let stop = samples.partition_point(|s| *s <= x);
                let partial: f64 = samples[full..stop].iter().map(|s| point(*s)).sum();
                (full as f64 + partial) / samples.len() as f64
            }
            LawKind::Uniform { a, b } => cell(*a, b - a, 1.0),
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                let n = masses.len();
                // Cells entirely left of `far` contribute their full mass.
                let full = (((far - origin) / dx).floor() - 1.0).clamp(0.0, n as f64) as usize;
                let stop = (((x - origin) / dx).ceil()).clamp(0.0, n as f64) as usize;
                let mut acc = self.cum[full];
                for (k, m) in masses.iter().enumerate().take(stop).skip(full) {
                    acc += cell(origin + k as f64 * dx, *dx, *m);
                }
                acc + atom * point(*atom_at)
            }
            _ => unreachable!("checked at construction"),
        }
    }

    /// Law of `X₀₋ + x`.
    pub fn shift(&self, x: f64) -> Self {
        if x == 0.0 {
            return self.clone();
        }
        let kind = match &self.kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => LawKind::GridDensity {
                origin: origin + x,
                dx: *dx,
                masses: masses.clone(),
                atom: *atom,
                atom_at: atom_at + x,
            },
            LawKind::Empirical { samples } => LawKind::Empirical {
                samples: samples.iter().map(|s| s + x).collect(),
            },
            LawKind::DiracMixture { atoms } => LawKind::DiracMixture {
                atoms: atoms.iter().map(|(y, w)| (y + x, *w)).collect(),
            },
            LawKind::Uniform { a, b } => LawKind::Uniform { a: a + x, b: b + x },
            LawKind::TruncatedNormal { mean, sd, lower } => LawKind::TruncatedNormal {
                mean: mean + x,
                sd: *sd,
                lower: lower + x,
            },
            LawKind::ExpSmoothed { base, rate } => LawKind::ExpSmoothed {
                base: Box::new(base.shift(x)),
                rate: *rate,
            },
        };
        Self::from_kind(kind).expect("shift preserves validity")
    }

    /// Law of `X₀₋ + E` with `E ~ Exp(rate)` independent.
    ///
    /// Larger rates give pointwise larger CDFs, converging to the CDF of
    /// `X₀₋` as the rate grows.
    pub fn smooth_exponential(&self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::NonPositiveRate(rate));
        }
        if !self.is_smoothable() {
            return Err(Error::NotDiscretizable(format!(
                "{} cannot be exponentially smoothed; convert it with to_grid first",
                self.kind_name()
            )));
        }
        Self::from_kind(LawKind::ExpSmoothed {
            base: Box::new(self.clone()),
            rate,
        })
    }

    /// Re-expresses the law as a grid density with cells of width `dx` on `(lo, hi]`.
    pub fn to_grid(&self, dx: f64) -> Result<Self> {
        let (lo, hi) = self.support();
        let origin = (lo / dx).floor() * dx;
        let n = (((hi - origin) / dx).ceil() as usize).max(1);
        let mut masses = Vec::with_capacity(n);
        let mut prev = self.cdf(origin);
        for k in 0..n {
            let next = self.cdf(origin + (k + 1) as f64 * dx);
            masses.push((next - prev).max(0.0));
            prev = next;
        }
        let atom = self.cdf(origin);
        let total: f64 = masses.iter().sum::<f64>() + atom;
        Self::from_kind(LawKind::GridDensity {
            origin,
            dx,
            masses: masses.into_iter().map(|m| m / total).collect(),
            atom: atom / total,
            atom_at: origin,
        })
    }

    /// Interval outside of which the law has (numerically) no mass.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                let hi = origin + masses.len() as f64 * dx;
                if *atom > 0.0 {
                    (origin.min(*atom_at), hi.max(*atom_at))
                } else {
                    (*origin, hi)
                }
            }
            LawKind::Empirical { samples } => (samples[0], samples[samples.len() - 1]),
            LawKind::DiracMixture { atoms } => atoms
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (y, _)| {
                    (lo.min(*y), hi.max(*y))
                }),
            LawKind::Uniform { a, b } => (*a, *b),
            LawKind::TruncatedNormal { mean, sd, lower } => (*lower, lower.max(*mean) + 12.0 * sd),
            LawKind::ExpSmoothed { base, rate } => {
                let (lo, hi) = base.support();
                (lo, hi + EXP_TAIL / rate)
            }
        }
    }

    /// Points where the CDF may jump or change slope.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            LawKind::Empirical { samples } => samples.clone(),
            LawKind::DiracMixture { atoms } => atoms.iter().map(|a| a.0).collect(),
            LawKind::Uniform { a, b } => vec![*a, *b],
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom_at,
                ..
            } => {
                let mut v: Vec<f64> = (0..=masses.len()).map(|k| origin + k as f64 * dx).collect();
                v.push(*atom_at);
                v
            }
            LawKind::TruncatedNormal { lower, .. } => vec![*lower],
            LawKind::ExpSmoothed { base, .. } => base.breakpoints(),
        }
    }

    /// Smallest `x` with `P(X₀₋ > x) < eps`, found by bisection.
    pub fn upper_quantile(&self, eps: f64) -> f64 {
        let (lo, hi) = self.support();
        if 1.0 - self.cdf(lo) < eps {
            return lo;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if 1.0 - self.cdf(m) < eps {
                b = m;
            } else {
                a = m;
            }
            if b - a <= 1e-12 * (1.0 + b.abs()) {
                break;
            }
        }
        b
    }

    /// Mass at or below zero.
    pub fn nonpositive_mass(&self) -> f64 {
        self.cdf(0.0)
    }

    /// Lumps the law onto `n` cells of width `dx` covering `(0, n dx]`.
    ///
    /// Atomic laws split each atom linearly between the two nearest cell
    /// centers; the other kinds assign each cell the exact mass it carries.
    /// Either way the total mass is preserved.
    pub fn discretize(&self, dx: f64, n: usize) -> Discretized {
        let mut masses = vec![0.0; n];
        let edge = n as f64 * dx;
        if self.is_atomic() {
            let mut atom = 0.0;
            let mut beyond = 0.0;
            let mut put = |y: f64, w: f64| {
                if y <= 0.0 {
                    atom += w;
                } else if y > edge {
                    beyond += w;
                } else {
                    let s = y / dx - 0.5;
                    if s <= 0.0 {
                        masses[0] += w;
                    } else if s >= (n - 1) as f64 {
                        masses[n - 1] += w;
                    } else {
                        let i = s.floor() as usize;
                        let f = s - i as f64;
                        masses[i] += w * (1.0 - f);
                        masses[i + 1] += w * f;
                    }
                }
            };
            match &self.kind {
                LawKind::DiracMixture { atoms } => atoms.iter().for_each(|(y, w)| put(*y, *w)),
                LawKind::Empirical { samples } => {
                    let w = 1.0 / samples.len() as f64;
                    samples.iter().for_each(|y| put(*y, w));
                }
                _ => unreachable!(),
            }
            return Discretized {
                masses,
                atom,
                beyond,
            };
        }
        let atom = self.cdf(0.0);
        let mut prev = atom;
        for (k, m) in masses.iter_mut().enumerate() {
            let next = self.cdf((k + 1) as f64 * dx);
            *m = (next - prev).max(0.0);
            prev = next.max(prev);
        }
        Discretized {
            masses,
            atom,
            beyond: (1.0 - prev).max(0.0),
        }
    }

    /// Draws one sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                let u: f64 = rng.random();
                if u < *atom {
                    return *atom_at;
                }
                let target = (u - atom).min(self.cum[masses.len()]);
                let k = self.cum[1..]
                    .partition_point(|c| *c < target)
                    .min(masses.len() - 1);
                let within: f64 = rng.random();
                origin + (k as f64 + within) * dx
            }
            LawKind::Empirical { samples } => samples[rng.random_range(0..samples.len())],
            LawKind::DiracMixture { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (y, w) in atoms {
                    acc += w;
                    if u < acc {
                        return *y;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            LawKind::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            LawKind::TruncatedNormal { mean, sd, lower } => {
                let p0 = norm_cdf((lower - mean) / sd);
                let u: f64 = rng.random();
                let p = (p0 + u * (1.0 - p0)).clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
                (mean + sd * norm_inv(p)).max(*lower)
            }
            LawKind::ExpSmoothed { base, rate } => {
                let u: f64 = rng.random();
                base.sample(rng) - (1.0 - u).ln() / rate
            }
        }
    }

    fn compute_mean_abs(&self) -> f64 {
        match &self.kind {
            LawKind::GridDensity {
                origin,
                dx,
                masses,
                atom,
                atom_at,
            } => {
                let cells: f64 = masses
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let (a, b) = (origin + k as f64 * dx, origin + (k + 1) as f64 * dx);
                        m * uniform_mean_abs(a, b)
                    })
                    .sum();
                cells + atom * atom_at.abs()
            }
            LawKind::Empirical { samples } => {
                samples.iter().map(|s| s.abs()).sum::<f64>() / samples.len() as f64
            }
            LawKind::DiracMixture { atoms } => atoms.iter().map(|(y, w)| w * y.abs()).sum(),
            LawKind::Uniform { a, b } => uniform_mean_abs(*a, *b),
            LawKind::TruncatedNormal { mean, sd, lower } => {
                // E[X; X in (a, b)] for X ~ N(mean, sd²).
                let partial = |a: f64, b: f64| {
                    let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
                    mean * (norm_cdf(zb) - norm_cdf(za)) + sd * (norm_pdf(za) - norm_pdf(zb))
                };
                let z = norm_sf((lower - mean) / sd);
                let pos = partial(lower.max(0.0), f64::INFINITY);
                let neg = if *lower < 0.0 {
                    partial(*lower, 0.0)
                } else {
                    0.0
                };
                (pos - neg) / z
            }
            LawKind::ExpSmoothed { base, rate } => base.mean_abs + 1.0 / rate,
        }
    }
}

fn uniform_mean_abs(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (a + b)
    } else if b <= 0.0 {
        -0.5 * (a + b)
    } else {
        (a * a + b * b) / (2.0 * (b - a))
    }
}

/// `P(X₀₋ ≤ x)` for the given law.
pub fn cdf_eval(law: &InitialLaw, x: f64) -> f64 {
    law.cdf(x)
}

/// Law of `X₀₋ + x`.
pub fn shift_law(law: &InitialLaw, x: f64) -> InitialLaw {
    law.shift(x)
}

/// Law of `X₀₋ + Exp(rate)`.
pub fn smooth_law_exponential(law: &InitialLaw, rate: f64) -> Result<InitialLaw> {
    law.smooth_exponential(rate)
}

/// Grid on which two laws are compared: the union of their breakpoints
/// (and points just left of them) with a uniform grid over both supports.
pub fn comparison_grid(f: &InitialLaw, g: &InitialLaw) -> Vec<f64> {
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    let (lo, hi) = (fl.min(gl), fh.max(gh));
    let span = (hi - lo).max(1e-9);
    let mut grid: Vec<f64> = (0..=4000).map(|k| lo + span * k as f64 / 4000.0).collect();
    for p in f.breakpoints().into_iter().chain(g.breakpoints()) {
        grid.push(p);
        grid.push(p - 1e-9 * span);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// True iff `F ≥ G` at every point of `grid`, up to rounding (1e-12).
pub fn dominance_check_on(f: &InitialLaw, g: &InitialLaw, grid: &[f64]) -> bool {
    grid.iter().all(|x| f.cdf(*x) >= g.cdf(*x) - 1e-12)
}

/// True iff the CDF of `f` dominates the CDF of `g` everywhere on the common
/// comparison grid, i.e. `g` puts its mass further right.
pub fn dominance_check(f: &InitialLaw, g: &InitialLaw) -> bool {
    dominance_check_on(f, g, &comparison_grid(f, g))
}

pub(crate) fn read_xy_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidLaw("expected two columns".into()));
        }
        let (Ok(x), Ok(y)) = (rec[0].parse::<f64>(), rec[1].parse::<f64>()) else {
            if xs.is_empty() {
                continue; // header row
            }
            return Err(Error::InvalidLaw(format!("unparseable row {:?}", rec)));
        };
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}
