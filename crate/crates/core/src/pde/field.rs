use crate::error::{Error, Result};
use crate::pde::Grid;

/// Values on `(time step, node)`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn filled(name: impl Into<String>, rows: usize, cols: usize, value: f64) -> Self {
        Self { name: name.into(), rows, cols, data: vec![value; rows * cols] }
    }

    /// One row per grid time `t₀, …, t_N`.
    pub fn constant(name: impl Into<String>, grid: &Grid, value: f64) -> Self {
        Self::filled(name, grid.n + 1, grid.m, value)
    }

    pub fn from_fn(name: impl Into<String>, grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::constant(name, grid, 0.0);
        for k in 0..=grid.n {
            let t = grid.t(k);
            for i in 0..grid.m {
                field.data[k * grid.m + i] = f(t, grid.x(i));
            }
        }
        field
    }

    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Grid("ragged field rows".into()));
        }
        let n_rows = rows.len();
        Ok(Self { name: name.into(), rows: n_rows, cols, data: rows.concat() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.cols + i]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, value: f64) {
        self.data[k * self.cols + i] = value;
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self { name: name.into(), rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Linear interpolation in `x` on row `k`; constant beyond the ends.
    pub fn interp(&self, k: usize, grid: &Grid, x: f64) -> f64 {
        let row = self.row(k);
        let s = (x - grid.x_lo) / grid.dx();
        if s <= 0.0 {
            return row[0];
        }
        let last = self.cols - 1;
        if s >= last as f64 {
            return row[last];
        }
        let j = s.floor() as usize;
        let w = s - j as f64;
        row[j] + w * (row[j + 1] - row[j])
    }

    /// First non-finite entry, if any.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite { k: p / self.cols, i: p % self.cols }),
            None => Ok(()),
        }
    }

    /// `max |self − other|` over rows `0..rows` of both and the given columns.
    pub fn max_abs_diff(&self, other: &Field, cols: &[usize]) -> f64 {
        let rows = self.rows.min(other.rows);
        let mut worst: f64 = 0.0;
        for k in 0..rows {
            for &i in cols {
                worst = worst.max((self.get(k, i) - other.get(k, i)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_and_interpolation() {
        let grid = Grid::new(0.0, 1.0, 11, 1.0, 2).unwrap();
        let f = Field::from_fn("f", &grid, |t, x| t + 2.0 * x);
        assert_eq!(f.rows(), 3);
        assert_eq!(f.get(2, 10), 3.0);
        assert!((f.interp(1, &grid, 0.55) - 1.6).abs() < 1e-14);
        assert_eq!(f.interp(0, &grid, -1.0), 0.0);
        assert_eq!(f.interp(0, &grid, 7.0), 2.0);
    }

    #[test]
    fn reports_first_non_finite() {
        let mut f = Field::filled("f", 3, 4, 1.0);
        f.set(2, 1, f64::NAN);
        f.set(2, 3, f64::INFINITY);
        assert!(matches!(f.check_finite(), Err(Error::NonFinite { k: 2, i: 1 })));
    }
}
