//! Weight functions targeting the area of interest, the weighted variance
//! `c(x; d)`, and the global max/integrated criteria built from it.
//!
//! Three weight families are provided: a level-set weight driven by the
//! two-tailed normal test, an exceedance weight `P(y(x) > T)`, and a
//! smoothed Gaussian reference weight with calibration parameter σ²_ε.
//!
//! The level-set weight exists in two variants. `PValue` (the default) is
//! large wherever the threshold is plausible given the posterior —
//! approaching 1 for large posterior spread — and is what the targeting
//! semantics and all shipped scenarios use. `Printed` is its complement,
//! kept selectable for comparison.

use crate::error::{Error, Result};
use crate::gp::PosteriorSummary;
use crate::grid::Field;
use crate::special::{erfc, normal_cdf};

/// Which algebraic form of the level-set weight to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelSetVariant {
    /// `2 (1 - F(|μ_x - T| / σ_x))`: the two-tailed p-value of `y(x) = T`.
    PValue,
    /// `2 |1/2 - F((μ_x - T) / σ_x)|`, the complement of `PValue`.
    Printed,
}

/// Weight function selection: kind, threshold, and (for the smoothed
/// reference weight) the calibration parameter σ²_ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightSpec {
    LevelSet { threshold: f64 },
    LevelSetPrinted { threshold: f64 },
    Exceedance { threshold: f64 },
    SmoothedReference { threshold: f64, sigma_eps_sq: f64 },
}

impl WeightSpec {
    pub fn threshold(&self) -> f64 {
        match *self {
            WeightSpec::LevelSet { threshold }
            | WeightSpec::LevelSetPrinted { threshold }
            | WeightSpec::Exceedance { threshold }
            | WeightSpec::SmoothedReference { threshold, .. } => threshold,
        }
    }

    /// Evaluate the weight from the posterior mean and variance at a point.
    pub fn evaluate(&self, mean_x: f64, var_x: f64) -> Result<f64> {
        let sigma_x = var_x.max(0.0).sqrt();
        match *self {
            WeightSpec::LevelSet { threshold } => {
                Ok(weight_ls(mean_x, sigma_x, threshold, LevelSetVariant::PValue))
            }
            WeightSpec::LevelSetPrinted { threshold } => Ok(weight_ls(
                mean_x,
                sigma_x,
                threshold,
                LevelSetVariant::Printed,
            )),
            WeightSpec::Exceedance { threshold } => Ok(weight_exc(mean_x, sigma_x, threshold)),
            WeightSpec::SmoothedReference {
                threshold,
                sigma_eps_sq,
            } => weight_w(mean_x, var_x.max(0.0), threshold, sigma_eps_sq),
        }
    }

    /// A bound `w(x) <= b` valid for every posterior state, when one
    /// exists. Lets max-criterion scans skip weight evaluation at points
    /// whose variance alone cannot beat the current maximum.
    pub(crate) fn upper_bound(&self) -> Option<f64> {
        match *self {
            WeightSpec::LevelSet { .. }
            | WeightSpec::LevelSetPrinted { .. }
            | WeightSpec::Exceedance { .. } => Some(1.0),
            WeightSpec::SmoothedReference { sigma_eps_sq, .. } => {
                if sigma_eps_sq > 0.0 {
                    Some(1.0 / (2.0 * std::f64::consts::PI * sigma_eps_sq).sqrt())
                } else {
                    None
                }
            }
        }
    }
}

/// Aggregation of the weighted variance over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    /// Worst weighted variance over the grid.
    Max,
    /// Sum of the weighted variance over the grid.
    Integrated,
}

/// A complete design criterion `C(d)`: weight plus aggregator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionSpec {
    pub weight: WeightSpec,
    pub aggregator: Aggregator,
}

/// Level-set weight. At `σ_x = 0` the limits are explicit: a point with no
/// posterior spread either is on the level set (`μ_x = T`) or is not.
pub fn weight_ls(mean_x: f64, sigma_x: f64, threshold: f64, variant: LevelSetVariant) -> f64 {
    if sigma_x == 0.0 {
        let on_set = mean_x == threshold;
        return match variant {
            LevelSetVariant::PValue => {
                if on_set {
                    1.0
                } else {
                    0.0
                }
            }
            LevelSetVariant::Printed => {
                if on_set {
                    0.0
                } else {
                    1.0
                }
            }
        };
    }
    match variant {
        // 2 (1 - F(|t|)) computed through erfc to keep tail accuracy
        LevelSetVariant::PValue => {
            erfc((mean_x - threshold).abs() / (sigma_x * std::f64::consts::SQRT_2)).min(1.0)
        }
        LevelSetVariant::Printed => {
            (2.0 * (0.5 - normal_cdf((mean_x - threshold) / sigma_x)).abs()).min(1.0)
        }
    }
}

/// Exceedance weight `P(y(x) > T) = F((μ_x - T) / σ_x)`.
pub fn weight_exc(mean_x: f64, sigma_x: f64, threshold: f64) -> f64 {
    if sigma_x == 0.0 {
        return match mean_x.partial_cmp(&threshold) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        };
    }
    normal_cdf((mean_x - threshold) / sigma_x)
}

/// Smoothed Gaussian reference weight,
/// `(2π(σ²_ε + σ²_x))^{-1/2} exp(-(μ_x - T)² / (2(σ²_ε + σ²_x)))`.
///
/// Unbounded when both σ²_ε and the posterior variance vanish; that state
/// is an error rather than an infinity.
pub fn weight_w(mean_x: f64, var_x: f64, threshold: f64, sigma_eps_sq: f64) -> Result<f64> {
    let denom = sigma_eps_sq + var_x;
    if denom <= 0.0 {
        return Err(Error::UnboundedWeight);
    }
    let diff = mean_x - threshold;
    Ok((-diff * diff / (2.0 * denom)).exp() / (2.0 * std::f64::consts::PI * denom).sqrt())
}

/// The weighted variance `c(x; d) = w(x) · Var(y(x) | d)` at one grid index.
pub fn weighted_variance(
    index: usize,
    posterior: &PosteriorSummary,
    weight: &WeightSpec,
) -> Result<f64> {
    let var_x = posterior.variance[index];
    Ok(weight.evaluate(posterior.mean[index], var_x)? * var_x)
}

/// The global criterion over the full grid: `max_x c(x; d)` or
/// `Σ_x c(x; d)` depending on the aggregator.
pub fn criterion_value(posterior: &PosteriorSummary, spec: &CriterionSpec) -> Result<f64> {
    let grid = posterior.mean.grid();
    match spec.aggregator {
        Aggregator::Max => {
            let mut best = f64::NEG_INFINITY;
            for i in grid.indices() {
                best = best.max(weighted_variance(i, posterior, &spec.weight)?);
            }
            Ok(best)
        }
        Aggregator::Integrated => {
            let mut sum = 0.0;
            for i in grid.indices() {
                sum += weighted_variance(i, posterior, &spec.weight)?;
            }
            Ok(sum)
        }
    }
}

/// The recommended calibration of σ²_ε from the current mean field:
/// `(max_x μ(x) - min_x μ(x)) / 20`.
pub fn calibrate_sigma_eps(mean_field: &Field) -> f64 {
    (mean_field.max() - mean_field.min()) / 20.0
}
