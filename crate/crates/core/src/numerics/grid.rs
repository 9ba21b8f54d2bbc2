use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic 1D spatial grid. Dimensionless units, hbar = 1.
///
/// The number of points must be a power of two so the spectral transforms
/// stay radix-2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    dx: f64,
    x0: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, dx: f64, x0: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::GridNotPowerOfTwo(n_points));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGridSpacing(dx));
        }
        Ok(Self { n_points, dx, x0 })
    }

    /// Grid symmetric about x = 0.
    pub fn centered(n_points: usize, dx: f64) -> Result<Self> {
        let x0 = -(n_points as f64) / 2.0 * dx;
        Self::new(n_points, dx, x0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn span(&self) -> f64 {
        self.n_points as f64 * self.dx
    }

    pub fn center(&self) -> f64 {
        self.x(self.n_points / 2)
    }

    /// Shift the coordinate origin by `cells` grid cells (used when the
    /// wave packet is recentered).
    pub fn shifted(&self, cells: i64) -> Self {
        Self {
            n_points: self.n_points,
            dx: self.dx,
            x0: self.x0 + cells as f64 * self.dx,
        }
    }

    /// Angular wavenumber of FFT bin `j`, with the Nyquist bin mapped to
    /// the negative branch.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n_points as i64;
        let j = j as i64;
        let k_index = if j <= n / 2 - 1 { j } else { j - n };
        2.0 * std::f64::consts::PI * k_index as f64 / (self.n_points as f64 * self.dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid1D::new(100, 0.1, 0.0).is_err());
        assert!(Grid1D::new(128, 0.1, 0.0).is_ok());
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(Grid1D::new(64, 0.0, 0.0).is_err());
        assert!(Grid1D::new(64, -0.5, 0.0).is_err());
    }

    #[test]
    fn centered_grid_brackets_zero() {
        let g = Grid1D::centered(64, 0.25).unwrap();
        assert!(g.x(0) < 0.0 && g.x(63) > 0.0);
        assert_eq!(g.center(), 0.0);
    }
}
