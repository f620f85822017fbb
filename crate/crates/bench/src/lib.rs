//! Shared scenario builders for the benchmark targets.

use targdes::{Aggregator, CriterionSpec, Field, Grid, MaternParams, MetaModel, WeightSpec};

/// The 50x50 reference scenario: anisotropic exponential peak mean,
/// Matérn(0.7, 0.7, 0.2) kernel, threshold 0.85.
pub fn reference_model(n_side: usize) -> MetaModel {
    let grid = Grid::new(n_side).unwrap();
    let mean = Field::from_fn(grid, |x1, x2| {
        2.0 * (-(((x1 - 1.0).powi(2) + 3.0 * (x2 - 0.5).powi(2)).sqrt()) / 3.0).exp()
    });
    let params = MaternParams::new(0.7, 0.7, 0.2).unwrap();
    MetaModel::new(grid, mean, params).unwrap()
}

pub fn level_set_criterion(aggregator: Aggregator) -> CriterionSpec {
    CriterionSpec {
        weight: WeightSpec::LevelSet { threshold: 0.85 },
        aggregator,
    }
}
