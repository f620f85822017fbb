//! Discrete level-set extraction on the grid and the three quality scores
//! comparing an estimated level set against the actual one.
//!
//! The continuous set `{x : y(x) = T}` almost never hits grid points, so
//! membership is decided by zero crossings: a point belongs when its value
//! equals the threshold exactly, or when a 4-neighbor sits on the other
//! side of the threshold and the point itself is the nearer side of that
//! crossing (ties keep both sides). Empty sets are legal and make the
//! distance and value scores undefined — reported as missing, never 0.

use crate::grid::{Field, Grid};

/// A discrete level set: the grid indices straddling the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub points: Vec<usize>,
    pub threshold: f64,
}

impl LevelSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Quality scores for an estimated level set. `q_dist` and `q_value` are
/// undefined when either level set is empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityScores {
    /// Symmetric average nearest-neighbor distance, in unit-square units.
    pub q_dist: Option<f64>,
    /// Symmetric average |value - threshold| discrepancy, in response units.
    pub q_value: Option<f64>,
    /// Misclassified-area proportion in [0, 1].
    pub q_area: f64,
}

/// Extract the discrete level set of a field at a threshold.
pub fn extract_level_set(field: &Field, threshold: f64) -> LevelSet {
    let grid = field.grid();
    let mut points = Vec::new();
    for x in grid.indices() {
        let fx = field[x] - threshold;
        if fx == 0.0 {
            points.push(x);
            continue;
        }
        let nearer_crossing = grid.neighbors4(x).any(|nb| {
            let fnb = field[nb] - threshold;
            let opposite = (fx > 0.0 && fnb < 0.0) || (fx < 0.0 && fnb > 0.0);
            opposite && fx.abs() <= fnb.abs()
        });
        if nearer_crossing {
            points.push(x);
        }
    }
    LevelSet { points, threshold }
}

fn mean_nearest_distance(from: &[usize], to: &[usize], grid: &Grid) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&x| {
            to.iter()
                .map(|&y| grid.distance(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / from.len() as f64
}

/// Symmetric average distance between two level sets; `None` when either
/// set is empty.
pub fn q_dist(actual: &LevelSet, estimated: &LevelSet, grid: &Grid) -> Option<f64> {
    if actual.is_empty() || estimated.is_empty() {
        return None;
    }
    let to_estimated = mean_nearest_distance(&actual.points, &estimated.points, grid);
    let to_actual = mean_nearest_distance(&estimated.points, &actual.points, grid);
    Some(0.5 * (to_estimated + to_actual))
}

/// Symmetric average discrepancy from the threshold: the actual response
/// over the estimated set and the estimated response over the actual set;
/// `None` when either set is empty.
pub fn q_value(
    actual_field: &Field,
    estimated_field: &Field,
    actual_set: &LevelSet,
    estimated_set: &LevelSet,
    threshold: f64,
) -> Option<f64> {
    if actual_set.is_empty() || estimated_set.is_empty() {
        return None;
    }
    let est_component: f64 = estimated_set
        .points
        .iter()
        .map(|&x| (actual_field[x] - threshold).abs())
        .sum::<f64>()
        / estimated_set.len() as f64;
    let actual_component: f64 = actual_set
        .points
        .iter()
        .map(|&x| (estimated_field[x] - threshold).abs())
        .sum::<f64>()
        / actual_set.len() as f64;
    Some(0.5 * (est_component + actual_component))
}

/// Proportion of grid points classified on opposite sides of the threshold
/// by the two fields. Points sitting exactly on the threshold in either
/// field are never misclassified.
pub fn q_area(actual_field: &Field, estimated_field: &Field, threshold: f64) -> f64 {
    let grid = actual_field.grid();
    let misclassified = grid
        .indices()
        .filter(|&x| {
            let y = actual_field[x];
            let est = estimated_field[x];
            (est < threshold && y > threshold) || (est > threshold && y < threshold)
        })
        .count();
    misclassified as f64 / grid.n_points() as f64
}

/// All three scores between an actual and an estimated field.
pub fn quality_scores(
    actual_field: &Field,
    estimated_field: &Field,
    threshold: f64,
) -> QualityScores {
    let grid = actual_field.grid();
    let actual_set = extract_level_set(actual_field, threshold);
    let estimated_set = extract_level_set(estimated_field, threshold);
    QualityScores {
        q_dist: q_dist(&actual_set, &estimated_set, &grid),
        q_value: q_value(
            actual_field,
            estimated_field,
            &actual_set,
            &estimated_set,
            threshold,
        ),
        q_area: q_area(actual_field, estimated_field, threshold),
    }
}
