//! The `N x N` evaluation grid over the unit square and scalar fields
//! indexed on it.
//!
//! Indices are row-major in `0..N^2`, coordinates are evenly spaced in
//! `[0, 1]^2` including both endpoints, with `x1` varying fastest.

use crate::error::{Error, Result};

/// Regular `N x N` grid over `[0, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n_side: usize,
}

impl Grid {
    /// A grid needs at least two points per side to have a defined spacing.
    pub fn new(n_side: usize) -> Result<Grid> {
        if n_side < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid side must be >= 2, got {n_side}"
            )));
        }
        Ok(Grid { n_side })
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn n_points(&self) -> usize {
        self.n_side * self.n_side
    }

    /// Distance between adjacent grid points along one axis.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_side - 1) as f64
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.n_points()
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.n_points()
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_side, index % self.n_side)
    }

    #[inline]
    pub fn index_of(&self, row: usize, col: usize) -> usize {
        row * self.n_side + col
    }

    /// Coordinates `(x1, x2)` of a grid index; `x1` follows the column.
    #[inline]
    pub fn coord(&self, index: usize) -> (f64, f64) {
        let (row, col) = self.row_col(index);
        let h = self.spacing();
        (col as f64 * h, row as f64 * h)
    }

    /// Euclidean distance between two grid indices in unit-square coordinates.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (ri, ci) = self.row_col(i);
        let (rj, cj) = self.row_col(j);
        let dr = ri.abs_diff(rj) as f64;
        let dc = ci.abs_diff(cj) as f64;
        self.spacing() * (dr * dr + dc * dc).sqrt()
    }

    /// The 4-neighborhood of a grid index (two to four entries).
    pub fn neighbors4(&self, index: usize) -> impl Iterator<Item = usize> {
        let n = self.n_side;
        let (row, col) = self.row_col(index);
        [
            (row > 0).then(|| index - n),
            (row + 1 < n).then(|| index + n),
            (col > 0).then(|| index - 1),
            (col + 1 < n).then(|| index + 1),
        ]
        .into_iter()
        .flatten()
    }
}

/// A scalar field defined at every grid index.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn constant(grid: Grid, value: f64) -> Field {
        Field {
            grid,
            values: vec![value; grid.n_points()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Field {
        let values = grid
            .indices()
            .map(|i| {
                let (x1, x2) = grid.coord(i);
                f(x1, x2)
            })
            .collect();
        Field { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidField(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.n_points(),
                grid.n_side(),
                grid.n_side(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}
