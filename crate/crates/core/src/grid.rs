use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{read_xy_csv, InitialLaw};

/// Mass of surviving particles on the cells `(k dx, (k+1) dx]` of `(0, x_max]`.
///
/// `lost_mass` counts absorbed particles (it feeds the loss process) and
/// `escaped_mass` counts mass that left the tracked grid to the right or fell
/// below the underflow floor. The three always add up to the initial total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubProbabilityGrid {
    pub dx: f64,
    pub cell_masses: Vec<f64>,
    pub lost_mass: f64,
    pub escaped_mass: f64,
}

impl SubProbabilityGrid {
    pub fn new(dx: f64, cell_masses: Vec<f64>) -> Self {
        Self {
            dx,
            cell_masses,
            lost_mass: 0.0,
            escaped_mass: 0.0,
        }
    }

    /// Constant density on `(0, width]`, zero elsewhere on `(0, x_max]`.
    pub fn flat(dx: f64, x_max: f64, density: f64, width: f64) -> Self {
        let n = (x_max / dx).round() as usize;
        let masses = (0..n)
            .map(|k| {
                let (a, b) = (k as f64 * dx, (k + 1) as f64 * dx);
                density * (b.min(width) - a).max(0.0)
            })
            .collect();
        Self::new(dx, masses)
    }

    /// Reads `(cell centre, density)` rows on an equally spaced grid starting
    /// at `dx / 2`. The density need not integrate to one.
    pub fn from_density_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (centers, density) = read_xy_csv(path)?;
        if centers.len() < 2 {
            return Err(Error::InvalidLaw(
                "density csv needs at least two rows".into(),
            ));
        }
        let dx = centers[1] - centers[0];
        if dx.is_nan() || dx <= 0.0 {
            return Err(Error::InvalidLaw("cell centres must increase".into()));
        }
        let mut masses = Vec::new();
        for (c, d) in centers.iter().zip(&density) {
            let k = (c / dx - 0.5).round();
            if (c - (k + 0.5) * dx).abs() > 1e-6 * dx || k < 0.0 {
                return Err(Error::InvalidLaw(format!(
                    "centre {c} is not on the grid (k + 1/2) dx"
                )));
            }
            if d.is_nan() || *d < 0.0 {
                return Err(Error::InvalidLaw(format!("negative density {d} at {c}")));
            }
            let k = k as usize;
            if masses.len() <= k {
                masses.resize(k + 1, 0.0);
            }
            masses[k] += d * dx;
        }
        Ok(Self::new(dx, masses))
    }

    /// Initial state for a law: nonpositive mass is already lost at time zero.
    pub fn from_law(law: &InitialLaw, dx: f64, n: usize) -> Self {
        let d = law.discretize(dx, n);
        Self {
            dx,
            cell_masses: d.masses,
            lost_mass: d.atom,
            escaped_mass: d.beyond,
        }
    }

    pub fn len(&self) -> usize {
        self.cell_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_masses.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.len() as f64 * self.dx
    }

    pub fn live_mass(&self) -> f64 {
        self.cell_masses.iter().sum()
    }

    /// Live + lost + escaped; conserved by every engine operation.
    pub fn total(&self) -> f64 {
        self.live_mass() + self.lost_mass + self.escaped_mass
    }

    /// `ν((0, x])`, linear within cells.
    pub fn cumulative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x / self.dx;
        let k = (s.floor() as usize).min(self.len());
        let head: f64 = self.cell_masses[..k].iter().sum();
        if k == self.len() {
            head
        } else {
            head + self.cell_masses[k] * (s - k as f64)
        }
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_csv_keeps_sub_probability_mass() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("d.csv");
        std::fs::write(&f, "x,density\n0.05,2\n0.15,2\n0.35,1\n").unwrap();
        let g = SubProbabilityGrid::from_density_csv(&f).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g.live_mass() - 0.5).abs() < 1e-12);
        assert_eq!(g.cell_masses[2], 0.0);
        std::fs::write(&f, "0.0,1\n0.1,1\n").unwrap();
        assert!(SubProbabilityGrid::from_density_csv(&f).is_err());
    }
}
