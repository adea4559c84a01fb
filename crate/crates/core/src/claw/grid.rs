use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Profile;

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::BadInput(format!("grid needs at least 2 cells, got {n_cells}")));
        }
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::EmptyInterval { lo: x_min, hi: x_max });
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    /// Grid with spacing `h` (rounded so the cells tile the interval).
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::BadInput(format!("cell size must be positive, got {h}")));
        }
        Self::new(x_min, x_max, ((x_max - x_min) / h).round().max(2.0) as usize)
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.h()
    }

    /// Left edge of cell `i` (so `edge(n_cells) = x_max`).
    pub fn edge(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.h()).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.n_cells - 1)
        }
    }

    /// Exact cell averages of `s0`.
    pub fn cell_averages(&self, profile: &Profile) -> Vec<f64> {
        let h = self.h();
        (0..self.n_cells)
            .map(|i| profile.integral(self.edge(i), self.edge(i + 1)) / h)
            .collect()
    }

    /// `s0` sampled at cell centres.
    pub fn sample(&self, profile: &Profile) -> Vec<f64> {
        self.centers().into_iter().map(|x| profile.value(x)).collect()
    }

    /// `sum |a_i - b_i| h` over the cells whose centres lie in `[lo, hi]`.
    pub fn l1_distance_on(&self, a: &[f64], b: &[f64], lo: f64, hi: f64) -> f64 {
        let h = self.h();
        (0..self.n_cells)
            .filter(|&i| {
                let x = self.center(i);
                x >= lo && x <= hi
            })
            .map(|i| (a[i] - b[i]).abs() * h)
            .sum()
    }
}

pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
