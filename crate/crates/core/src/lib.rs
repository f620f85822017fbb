//! Targeted spatial measurement designs for Gaussian-field meta-models.
//!
//! Given a prior Gaussian field over a grid (mean function plus Matérn
//! covariance), this crate constructs measurement designs that concentrate
//! effort where it matters for a stated goal — estimating a level set
//! `{x : y(x) = T}` or mapping an exceedance region `{x : y(x) > T}` —
//! rather than filling space uniformly. It provides:
//!
//! * exact point-wise conditioning of the field on observed or planned
//!   design points ([`gp`]),
//! * target-area weight functions and the max/integrated design criteria
//!   built from the weighted posterior variance ([`criteria`]),
//! * greedy construction, exchange improvement, random/maximin baselines
//!   and restart-based efficiency factors ([`search`]),
//! * sequential campaigns that alternate observation and reconditioning
//!   ([`sequential`]),
//! * discrete level-set extraction and quality scores ([`scores`]).
//!
//! Everything is deterministic given the configured seeds.

pub mod criteria;
pub mod design;
pub mod error;
pub mod gp;
pub mod grid;
mod linalg;
#[doc(hidden)]
pub mod oracle;
pub mod scores;
pub mod search;
pub mod sequential;
pub mod special;

pub use crate::criteria::{
    calibrate_sigma_eps, criterion_value, weight_exc, weight_ls, weight_w, weighted_variance,
    Aggregator, CriterionSpec, LevelSetVariant, WeightSpec,
};
pub use crate::design::Design;
pub use crate::error::{Error, Result};
pub use crate::gp::{
    condition, matern_cov, matern_cov_dist, CondPoint, MaternParams, MetaModel, Posterior,
    PosteriorSummary,
};
pub use crate::grid::{Field, Grid};
pub use crate::scores::{
    extract_level_set, q_area, q_dist, q_value, quality_scores, LevelSet, QualityScores,
};
pub use crate::search::{
    best_of_restarts, efficiency, exchange, exchange_traced, greedy_start, greedy_start_traced,
    maximin_design, random_design, EfficiencyReport, GreedyTrace, SearchConfig,
};
pub use crate::sequential::{
    default_prior, run_campaign, run_stage, CampaignHistory, GroundTruth, InitialDesign,
    StagePlan, StageRecord,
};
pub use crate::special::{bessel_k, erf, erfc, normal_cdf};
