//! Brute-force reference implementations backing the test suites: dense
//! joint-Gaussian conditioning and exhaustive design enumeration.
//!
//! Everything here trades speed for directness — the dense path builds the
//! full grid covariance from the kernel and conditions it with dense
//! linear algebra, independently of the per-point factorized path used by
//! the library. Not part of the public API.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{criterion_value, CriterionSpec};
use crate::design::Design;
use crate::error::Result;
use crate::gp::{condition, matern_cov, MetaModel, PosteriorSummary};
use crate::grid::Field;

/// Condition the full joint Gaussian by explicit block partitioning: build
/// the complete grid covariance, invert the design block densely, and
/// apply the linear update row by row.
pub fn dense_condition(
    model: &MetaModel,
    design: &Design,
    values: Option<&[f64]>,
) -> PosteriorSummary {
    let grid = model.grid();
    let nn = grid.n_points();
    let params = model.kernel();
    let full = DMatrix::from_fn(nn, nn, |i, j| {
        matern_cov(grid.coord(i), grid.coord(j), params)
    });

    let d: Vec<usize> = design.points().to_vec();
    let n = d.len();
    if n == 0 {
        return PosteriorSummary {
            mean: model.prior_mean().clone(),
            variance: Field::from_values(grid, (0..nn).map(|i| full[(i, i)]).collect())
                .expect("grid sized"),
        };
    }

    // the design block carries the model's diagonal jitter: that is part
    // of the joint model being conditioned, not of the evaluation path
    let k_dd = DMatrix::from_fn(n, n, |a, b| {
        full[(d[a], d[b])] + if a == b { model.jitter() } else { 0.0 }
    });
    let k_dd_inv = k_dd
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| k_dd.try_inverse())
        .expect("design covariance invertible");

    let residual: Option<DVector<f64>> = values.map(|v| {
        DVector::from_iterator(n, v.iter().zip(&d).map(|(&y, &p)| y - model.prior_mean()[p]))
    });

    let mut mean = Vec::with_capacity(nn);
    let mut variance = Vec::with_capacity(nn);
    for x in 0..nn {
        let k_xd = DVector::from_iterator(n, d.iter().map(|&p| full[(x, p)]));
        let solved = &k_dd_inv * &k_xd;
        let m = match &residual {
            Some(r) => model.prior_mean()[x] + solved.dot(r),
            None => model.prior_mean()[x],
        };
        let v = (full[(x, x)] - solved.dot(&k_xd)).max(0.0);
        mean.push(m);
        variance.push(v);
    }
    PosteriorSummary {
        mean: Field::from_values(grid, mean).expect("grid sized"),
        variance: Field::from_values(grid, variance).expect("grid sized"),
    }
}

/// All size-`k` subsets of `0..n_points`, lexicographic.
pub fn all_designs(n_points: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=n.saturating_sub(remaining) {
            current.push(i);
            recurse(i + 1, n, k, current, out);
            current.pop();
        }
    }
    recurse(0, n_points, k, &mut current, &mut out);
    out
}

/// Criterion value of one candidate design through the public conditioning
/// path (virtual mode: the search-time semantics).
pub fn criterion_of(model: &MetaModel, spec: &CriterionSpec, points: &[usize]) -> Result<f64> {
    let design = Design::new(points.to_vec(), &model.grid())?;
    let summary = condition(model, &design, None)?;
    criterion_value(&summary, spec)
}

/// Exhaustively evaluate every size-`k` design. Returns the values in
/// enumeration order together with the minimum.
pub fn exhaustive_criterion_values(
    model: &MetaModel,
    spec: &CriterionSpec,
    k: usize,
) -> Result<(Vec<Vec<usize>>, Vec<f64>, f64)> {
    let designs = all_designs(model.grid().n_points(), k);
    let mut values = Vec::with_capacity(designs.len());
    let mut best = f64::INFINITY;
    for d in &designs {
        let v = criterion_of(model, spec, d)?;
        best = best.min(v);
        values.push(v);
    }
    Ok((designs, values, best))
}

/// Indices of `values` within relative tolerance of the minimum.
pub fn argmin_set(values: &[f64], rel_tol: f64) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = rel_tol * min.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + slack)
        .map(|(i, _)| i)
        .collect()
}
