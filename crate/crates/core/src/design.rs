//! A design: an ordered set of distinct grid points selected for measurement.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    points: Vec<usize>,
}

impl Design {
    /// An ordered list of distinct grid indices. Order is meaningful: the
    /// greedy construction and sequential campaigns rely on it.
    pub fn new(points: Vec<usize>, grid: &Grid) -> Result<Design> {
        if let Some(&bad) = points.iter().find(|&&p| !grid.contains(p)) {
            return Err(Error::InvalidDesign(format!(
                "index {bad} is outside the {}-point grid",
                grid.n_points()
            )));
        }
        let mut seen = vec![false; grid.n_points()];
        for &p in &points {
            if seen[p] {
                return Err(Error::InvalidDesign(format!("duplicate index {p}")));
            }
            seen[p] = true;
        }
        Ok(Design { points })
    }

    pub fn empty() -> Design {
        Design { points: Vec::new() }
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.points.contains(&index)
    }

    /// The first `m` points, in selection order.
    pub fn prefix(&self, m: usize) -> Design {
        Design {
            points: self.points[..m].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_grid_indices() {
        let grid = Grid::new(3).unwrap();
        assert!(Design::new(vec![0, 4, 0], &grid).is_err());
        assert!(Design::new(vec![0, 9], &grid).is_err());
        let d = Design::new(vec![8, 0, 4], &grid).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.prefix(2).points(), &[8, 0]);
    }
}
