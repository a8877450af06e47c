use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform `(t, x)` grid: `M` nodes on `[x_lo, x_hi]`, `N` steps on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub m: usize,
    pub horizon: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, m: usize, horizon: f64, n: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes, got {m}")));
        }
        if n < 1 {
            return Err(Error::Grid("need at least one time step".into()));
        }
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Grid(format!("empty state interval [{x_lo}, {x_hi}]")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { x_lo, x_hi, m, horizon, n })
    }

    pub fn with_steps(&self, n: usize) -> Result<Self> {
        Self::new(self.x_lo, self.x_hi, self.m, self.horizon, n)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.m - 1) as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.m {
            self.x_hi
        } else {
            self.x_lo + self.dx() * i as f64
        }
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        if k == self.n {
            self.horizon
        } else {
            self.dt() * k as f64
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.t(k)).collect()
    }

    /// Nearest node, clamped to the grid.
    #[inline]
    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x - self.x_lo) / self.dx()).round();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.m - 1)
        }
    }

    /// Nearest time index, clamped to `0..=N`.
    pub fn nearest_time(&self, t: f64) -> usize {
        let s = (t / self.dt()).round();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }

    /// Nodes with `|x| ≤ radius`, excluding the two boundary nodes.
    pub fn interior_within(&self, radius: f64) -> Vec<usize> {
        (1..self.m - 1).filter(|&i| self.x(i).abs() <= radius + 1e-12).collect()
    }
}
