//! Nondecreasing càdlàg boundary paths sampled on a time grid.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Left end of the extended time axis.
pub const LEFT_END: f64 = -1.0;

/// A nondecreasing step function `t ↦ Λ_t`.
///
/// The value at `times[k]` holds on `[times[k], times[k+1])` and after the
/// last time. Paths produced by the solvers start at `-1` with value `0`
/// (the left extension), followed by the grid `0, dt, ..., T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl BoundaryPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPath(
                "times must be strictly increasing".into(),
            ));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::InvalidPath(format!(
                "values must be nondecreasing ({} then {})",
                w[0], w[1]
            )));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite entry".into()));
        }
        Ok(Self { times, values })
    }

    /// Path on the grid `k dt`, `k = 0..values.len()`, with the left extension.
    pub fn from_grid(dt: f64, values: &[f64]) -> Result<Self> {
        let mut times = Vec::with_capacity(values.len() + 1);
        let mut vals = Vec::with_capacity(values.len() + 1);
        times.push(LEFT_END);
        vals.push(0.0);
        for (k, v) in values.iter().enumerate() {
            times.push(k as f64 * dt);
            vals.push(*v);
        }
        Self::new(times, vals)
    }

    /// The zero path on the grid `0, dt, ..., steps dt`.
    pub fn zero(dt: f64, steps: usize) -> Self {
        Self::from_grid(dt, &vec![0.0; steps + 1]).expect("zero path is valid")
    }

    /// The constant path `c` on `[0, T]`, zero before time zero.
    pub fn constant(dt: f64, steps: usize, c: f64) -> Result<Self> {
        Self::from_grid(dt, &vec![c; steps + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn final_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at an arbitrary time (right-continuous step interpolation,
    /// clamped to the first and last values outside the grid).
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|s| *s <= t);
        if k == 0 {
            self.values[0]
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `f(t−)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|s| *s < t);
        if k == 0 {
            self.values[0]
        } else {
            self.values[k - 1]
        }
    }

    /// Values on the nonnegative part of the grid (drops the left extension).
    pub fn grid_values(&self) -> &[f64] {
        let k = self.times.partition_point(|s| *s < 0.0);
        &self.values[k..]
    }

    /// Index of time zero, if present.
    pub fn zero_index(&self) -> Option<usize> {
        self.times.iter().position(|t| *t == 0.0)
    }

    /// `sup_t |f(t) - g(t)|` over the union of both grids.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.times
            .iter()
            .chain(other.times.iter())
            .map(|t| (self.eval(*t) - other.eval(*t)).abs())
            .fold(0.0, f64::max)
    }

    /// `min_t (f(t) - g(t))` over the union of both grids.
    pub fn min_difference(&self, other: &Self) -> f64 {
        self.times
            .iter()
            .chain(other.times.iter())
            .map(|t| self.eval(*t) - other.eval(*t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest single increment between consecutive grid points at or after zero.
    pub fn max_increment(&self) -> f64 {
        self.grid_values()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Grid times at which the path increases by more than `threshold`,
    /// with the size of the increase. The value at the first time of the
    /// nonnegative grid is compared with the value just before zero.
    pub fn jumps(&self, threshold: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 1..self.times.len() {
            if self.times[k] < 0.0 {
                continue;
            }
            let d = self.values[k] - self.values[k - 1];
            if d > threshold {
                out.push((self.times[k], d));
            }
        }
        if self.times[0] >= 0.0 && self.values[0] > threshold {
            out.insert(0, (self.times[0], self.values[0]));
        }
        out
    }

    /// Writes `t,lambda` with 12 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,lambda")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{:.11e},{:.11e}", t, v)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (t, v) = crate::law::read_xy_csv(path)?;
        Self::new(t, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_path_has_left_extension() {
        let p = BoundaryPath::from_grid(0.5, &[0.2, 0.3, 0.3]).unwrap();
        assert_eq!(p.times(), &[-1.0, 0.0, 0.5, 1.0]);
        assert_eq!(p.eval(-0.5), 0.0);
        assert_eq!(p.eval(0.0), 0.2);
        assert_eq!(p.eval(0.7), 0.3);
        assert_eq!(p.eval_left(0.0), 0.0);
        assert_eq!(p.eval_left(0.5), 0.2);
        assert_eq!(p.grid_values(), &[0.2, 0.3, 0.3]);
        assert_eq!(p.jumps(0.05), vec![(0.0, 0.2), (0.5, 0.09999999999999998)]);
    }

    #[test]
    fn rejects_decreasing_values_and_bad_times() {
        assert!(BoundaryPath::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(BoundaryPath::new(vec![0.0, 0.0], vec![0.0, 0.5]).is_err());
        assert!(BoundaryPath::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_twelve_digits() {
        let p = BoundaryPath::from_grid(0.1, &[0.0, 1.0 / 3.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,lambda\n"));
        assert!(text.contains("3.33333333333e-1"));
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        std::fs::write(&f, &text).unwrap();
        let q = BoundaryPath::load_csv(&f).unwrap();
        assert!(p.sup_distance(&q) < 1e-12);
    }
}
