//! Lazy per-point conditioning against brute-force dense conditioning of
//! the full joint Gaussian, plus the conditioning invariants.

use proptest::prelude::*;

use targdes::oracle::dense_condition;
use targdes::{condition, Design, Field, Grid, MaternParams, MetaModel};

fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn two_point_design_matches_the_dense_oracle_on_a_5x5_grid() {
    let grid = Grid::new(5).unwrap();
    let mean = Field::from_fn(grid, |x1, x2| 0.3 + x1 - 0.5 * x2);
    let params = MaternParams::new(0.7, 0.7, 0.2).unwrap();
    let model = MetaModel::new(grid, mean, params).unwrap();
    let design = Design::new(vec![6, 18], &grid).unwrap();
    let values = [1.2, 0.4];

    let lazy = condition(&model, &design, Some(&values)).unwrap();
    let dense = dense_condition(&model, &design, Some(&values));
    assert!(max_abs_diff(&lazy.mean, &dense.mean) <= 1e-8);
    assert!(max_abs_diff(&lazy.variance, &dense.variance) <= 1e-8);

    // virtual mode: identical variance, prior mean
    let lazy = condition(&model, &design, None).unwrap();
    let dense = dense_condition(&model, &design, None);
    assert_eq!(lazy.mean, dense.mean);
    assert!(max_abs_diff(&lazy.variance, &dense.variance) <= 1e-8);
}

fn small_instance() -> impl Strategy<
    Value = (
        usize,      // grid side
        f64,        // sigma
        f64,        // nu
        f64,        // kappa
        Vec<usize>, // design as raw picks (deduped modulo grid)
        Vec<f64>,   // observed values
    ),
> {
    (
        3usize..=6,
        0.1f64..2.0,
        0.1f64..2.0,
        0.1f64..2.0,
        proptest::collection::vec(0usize..36, 1..=4),
        proptest::collection::vec(-2.0f64..2.0, 4),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_oracle_equivalence_on_small_grids(
        (n_side, sigma, nu, kappa, picks, raw_values) in small_instance()
    ) {
        let grid = Grid::new(n_side).unwrap();
        let mut points: Vec<usize> = picks.into_iter().map(|p| p % grid.n_points()).collect();
        points.sort_unstable();
        points.dedup();
        let values = &raw_values[..points.len()];

        let mean = Field::from_fn(grid, |x1, x2| 0.85 + (x1 - x2) * 0.7);
        let params = MaternParams::new(sigma, nu, kappa).unwrap();
        let model = MetaModel::new(grid, mean, params).unwrap();
        let design = Design::new(points, &grid).unwrap();

        let lazy = condition(&model, &design, Some(values)).unwrap();
        let dense = dense_condition(&model, &design, Some(values));
        prop_assert!(max_abs_diff(&lazy.mean, &dense.mean) <= 1e-8);
        prop_assert!(max_abs_diff(&lazy.variance, &dense.variance) <= 1e-8);
    }

    #[test]
    fn variance_shrinks_under_design_growth(
        (n_side, sigma, nu, kappa, picks, _) in small_instance(),
        extra in 0usize..36,
    ) {
        let grid = Grid::new(n_side).unwrap();
        let mut points: Vec<usize> = picks.into_iter().map(|p| p % grid.n_points()).collect();
        points.sort_unstable();
        points.dedup();
        let extra = extra % grid.n_points();
        prop_assume!(!points.contains(&extra));

        let params = MaternParams::new(sigma, nu, kappa).unwrap();
        let model = MetaModel::new(grid, Field::constant(grid, 0.0), params).unwrap();

        let smaller = condition(&model, &Design::new(points.clone(), &grid).unwrap(), None).unwrap();
        let mut grown = points.clone();
        grown.push(extra);
        let larger = condition(&model, &Design::new(grown, &grid).unwrap(), None).unwrap();
        for i in grid.indices() {
            prop_assert!(
                larger.variance[i] <= smaller.variance[i] + 1e-8,
                "variance grew at {i}: {} -> {}",
                smaller.variance[i],
                larger.variance[i]
            );
        }
    }

    #[test]
    fn observed_points_interpolate_and_zero_out(
        (n_side, sigma, nu, kappa, picks, raw_values) in small_instance()
    ) {
        let grid = Grid::new(n_side).unwrap();
        let mut points: Vec<usize> = picks.into_iter().map(|p| p % grid.n_points()).collect();
        points.sort_unstable();
        points.dedup();
        let values = &raw_values[..points.len()];

        let params = MaternParams::new(sigma, nu, kappa).unwrap();
        let model = MetaModel::new(grid, Field::constant(grid, 0.3), params).unwrap();
        let design = Design::new(points.clone(), &grid).unwrap();
        let summary = condition(&model, &design, Some(values)).unwrap();
        for (&p, &v) in points.iter().zip(values) {
            prop_assert!((summary.mean[p] - v).abs() <= 1e-6,
                "mean at observed {p}: {} vs {v}", summary.mean[p]);
            prop_assert!(summary.variance[p] <= model.jitter() + 1e-8);
        }
        // posterior variance never exceeds the prior variance
        for i in grid.indices() {
            prop_assert!(summary.variance[i] <= params.variance());
        }
    }
}
