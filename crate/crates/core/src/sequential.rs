//! Multi-stage adaptive design simulation: observe a ground-truth field at
//! the chosen points, recondition the meta-model, and select the next
//! stage's points by the chosen criterion.
//!
//! A one-point stage takes the exact argmax of the current weighted
//! variance over the unobserved grid — the one-point minimizer of both the
//! max and the integrated criterion under the variance-to-zero model (that
//! reduction is validated by enumeration in the acceptance suite). Larger
//! stages run the greedy construction followed by the exchange algorithm
//! on the updated model.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::criteria::{calibrate_sigma_eps, criterion_value, CriterionSpec, WeightSpec};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::gp::{MetaModel, PosteriorSummary};
use crate::grid::{Field, Grid};
use crate::scores::{extract_level_set, quality_scores, LevelSet, QualityScores};
use crate::search::{exchange, greedy_start, maximin_design, SearchConfig};

/// Grid-point budget above which prior sampling refuses to build the dense
/// grid covariance (a 64x64 grid; beyond that, supply the truth as a file
/// or an analytic formula).
pub const MAX_SAMPLE_POINTS: usize = 4096;

/// The true response on the grid: loaded, analytic, or sampled.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    field: Field,
}

impl GroundTruth {
    pub fn new(field: Field) -> GroundTruth {
        GroundTruth { field }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.field[index]
    }

    /// Draw one realization of the prior Gaussian field, deterministically
    /// per seed. Requires the dense grid covariance, so the grid is capped
    /// at [`MAX_SAMPLE_POINTS`] points.
    pub fn sample_from_prior(model: &MetaModel, seed: u64) -> Result<GroundTruth> {
        let grid = model.grid();
        let nn = grid.n_points();
        if nn > MAX_SAMPLE_POINTS {
            return Err(Error::InvalidParam(format!(
                "prior sampling needs the dense {nn}x{nn} grid covariance; grids above \
                 {MAX_SAMPLE_POINTS} points must use an analytic or file-based truth"
            )));
        }
        let cov = model.cov_table();
        let sigma2 = model.kernel().variance();
        let mut matrix = DMatrix::zeros(nn, nn);
        for i in 0..nn {
            for j in 0..nn {
                matrix[(i, j)] = cov.between(i, j);
            }
        }
        // the dense grid covariance is far worse conditioned than any
        // design covariance; escalate jitter until the factorization holds
        let mut chol = None;
        for jitter_rel in [1e-10, 1e-8, 1e-6] {
            let mut jittered = matrix.clone();
            for i in 0..nn {
                jittered[(i, i)] += jitter_rel * sigma2;
            }
            if let Some(c) = jittered.cholesky() {
                chol = Some(c);
                break;
            }
        }
        let chol = chol.ok_or_else(|| Error::Factorization {
            design: (0..nn).collect(),
            pivot: 0,
        })?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..nn)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let correlated = chol.l() * DMatrix::from_column_slice(nn, 1, &z);
        let values: Vec<f64> = (0..nn)
            .map(|i| model.prior_mean()[i] + correlated[(i, 0)])
            .collect();
        Ok(GroundTruth {
            field: Field::from_values(grid, values)?,
        })
    }
}

/// How the first observed design is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialDesign {
    Points(Design),
    /// Greedy maximin design of the given size.
    Maximin(usize),
}

/// A campaign plan: initial design, per-stage sizes, criterion, σ²_ε
/// policy and the search budget for multi-point stages.
#[derive(Clone, Debug)]
pub struct StagePlan {
    pub initial: InitialDesign,
    pub stage_sizes: Vec<usize>,
    pub criterion: CriterionSpec,
    /// Recalibrate σ²_ε from the current posterior mean at every stage
    /// (smoothed-reference weight only).
    pub sigma_eps_auto: bool,
    pub search: SearchConfig,
}

impl StagePlan {
    pub fn n_stages(&self) -> usize {
        self.stage_sizes.len()
    }
}

/// Everything recorded about one campaign stage. Stage 0 is the initial
/// observation; stages 1.. follow the plan.
#[derive(Clone, Debug)]
pub struct StageRecord {
    pub stage: usize,
    /// Points added at this stage, in selection order.
    pub new_points: Vec<usize>,
    /// Cumulative design after this stage.
    pub design: Design,
    /// Cumulative observations, aligned with `design`.
    pub observations: Vec<f64>,
    pub posterior: PosteriorSummary,
    /// Criterion value of the current design under the resolved spec.
    pub criterion_value: f64,
    /// σ²_ε in effect at this stage (smoothed-reference weight only).
    pub sigma_eps_sq: Option<f64>,
    pub estimated_level_set: LevelSet,
    pub scores: QualityScores,
}

/// Full record of a sequential campaign.
#[derive(Clone, Debug)]
pub struct CampaignHistory {
    pub threshold: f64,
    pub stages: Vec<StageRecord>,
}

impl CampaignHistory {
    pub fn final_design(&self) -> &Design {
        &self.stages.last().expect("stage 0 always present").design
    }
}

/// The recommended no-prior-information model: mean identically equal to
/// the threshold, so every point potentially lies on the level set.
pub fn default_prior(grid: Grid, threshold: f64, kernel: crate::gp::MaternParams) -> Result<MetaModel> {
    MetaModel::new(grid, Field::constant(grid, threshold), kernel)
}

/// Select and observe one stage: `n_i = 1` takes the exact argmax of the
/// weighted variance over unobserved points; larger increments run greedy
/// + exchange. Returns the increment and the reconditioned model.
pub fn run_stage(
    model: &MetaModel,
    truth: &GroundTruth,
    spec: &CriterionSpec,
    n_i: usize,
    search: &SearchConfig,
) -> Result<(Design, MetaModel)> {
    let grid = model.grid();
    if n_i == 0 {
        return Err(Error::InvalidParam("stage size must be >= 1".into()));
    }
    let available = grid.n_points() - model.conditioning().len();
    if available < n_i {
        return Err(Error::GridExhausted {
            needed: n_i,
            available,
        });
    }

    let increment = if n_i == 1 {
        let summary = model.posterior()?.summary()?;
        let mut best: Option<(usize, f64)> = None;
        for x in grid.indices() {
            if model.is_conditioned_at(x) {
                continue;
            }
            let c = crate::criteria::weighted_variance(x, &summary, &spec.weight)?;
            match best {
                Some((_, bc)) if c <= bc => {}
                _ => best = Some((x, c)),
            }
        }
        Design::new(vec![best.expect("grid not exhausted").0], &grid)?
    } else {
        let start = greedy_start(model, spec, n_i)?;
        exchange(&start, model, spec, search)?
    };

    let values: Vec<f64> = increment
        .points()
        .iter()
        .map(|&p| truth.value_at(p))
        .collect();
    let next = model.with_observations(&increment, &values)?;
    Ok((increment, next))
}

/// Run a full campaign: observe the initial design, then one stage per
/// entry of the plan, recording posterior snapshots, criterion values and
/// level-set quality scores against the truth after every stage.
pub fn run_campaign(
    plan: &StagePlan,
    truth: &GroundTruth,
    prior: &MetaModel,
) -> Result<CampaignHistory> {
    let grid = prior.grid();
    let threshold = plan.criterion.weight.threshold();
    let actual_field = truth.field();

    let initial = match &plan.initial {
        InitialDesign::Points(d) => d.clone(),
        InitialDesign::Maximin(k) => maximin_design(*k, &grid)?,
    };
    let initial_values: Vec<f64> = initial
        .points()
        .iter()
        .map(|&p| truth.value_at(p))
        .collect();
    let mut model = prior.with_observations(&initial, &initial_values)?;
    let mut design_points: Vec<usize> = initial.points().to_vec();
    let mut observations = initial_values;

    let mut stages = Vec::with_capacity(plan.n_stages() + 1);
    let mut record_stage = |stage: usize,
                            new_points: Vec<usize>,
                            design_points: &[usize],
                            observations: &[f64],
                            model: &MetaModel|
     -> Result<CriterionSpec> {
        let summary = model.posterior()?.summary()?;
        let resolved = resolve_spec(&plan.criterion, plan.sigma_eps_auto, &summary.mean);
        let criterion = criterion_value(&summary, &resolved)?;
        let estimated = extract_level_set(&summary.mean, threshold);
        let scores = quality_scores(actual_field, &summary.mean, threshold);
        stages.push(StageRecord {
            stage,
            new_points,
            design: Design::new(design_points.to_vec(), &grid)?,
            observations: observations.to_vec(),
            criterion_value: criterion,
            sigma_eps_sq: resolved_sigma_eps(&resolved),
            posterior: summary,
            estimated_level_set: estimated,
            scores,
        });
        Ok(resolved)
    };

    let mut spec = record_stage(
        0,
        design_points.clone(),
        &design_points,
        &observations,
        &model,
    )?;

    for (k, &n_i) in plan.stage_sizes.iter().enumerate() {
        let stage_cfg = SearchConfig {
            max_iterations: plan.search.max_iterations,
            restarts: plan.search.restarts,
            rng_seed: plan.search.rng_seed.wrapping_add(k as u64 + 1),
        };
        let (increment, next) = run_stage(&model, truth, &spec, n_i, &stage_cfg)?;
        model = next;
        design_points.extend_from_slice(increment.points());
        observations.extend(increment.points().iter().map(|&p| truth.value_at(p)));
        spec = record_stage(
            k + 1,
            increment.points().to_vec(),
            &design_points,
            &observations,
            &model,
        )?;
    }

    Ok(CampaignHistory { threshold, stages })
}

/// Substitute the stage-calibrated σ²_ε into a smoothed-reference spec.
fn resolve_spec(spec: &CriterionSpec, auto: bool, mean: &Field) -> CriterionSpec {
    match spec.weight {
        WeightSpec::SmoothedReference { threshold, .. } if auto => CriterionSpec {
            weight: WeightSpec::SmoothedReference {
                threshold,
                sigma_eps_sq: calibrate_sigma_eps(mean),
            },
            aggregator: spec.aggregator,
        },
        _ => *spec,
    }
}

fn resolved_sigma_eps(spec: &CriterionSpec) -> Option<f64> {
    match spec.weight {
        WeightSpec::SmoothedReference { sigma_eps_sq, .. } => Some(sigma_eps_sq),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Aggregator;
    use crate::gp::MaternParams;

    fn paper_kernel() -> MaternParams {
        MaternParams::new(0.7, 0.7, 0.2).unwrap()
    }

    fn ls_spec(threshold: f64) -> CriterionSpec {
        CriterionSpec {
            weight: WeightSpec::LevelSet { threshold },
            aggregator: Aggregator::Max,
        }
    }

    fn quick_search(seed: u64) -> SearchConfig {
        SearchConfig::new(50, 1, seed).unwrap()
    }

    #[test]
    fn default_prior_is_constant_at_the_threshold() {
        let grid = Grid::new(6).unwrap();
        let model = default_prior(grid, 0.85, paper_kernel()).unwrap();
        for i in grid.indices() {
            assert_eq!(model.prior_mean()[i], 0.85);
        }
        // prior variance is sigma^2 = 0.49 and the level-set weight is 1
        let summary = model.posterior().unwrap().summary().unwrap();
        assert_eq!(summary.variance[0], paper_kernel().variance());
        assert!((summary.variance[0] - 0.49).abs() < 1e-15);
        let spec = ls_spec(0.85);
        let w = spec.weight.evaluate(summary.mean[0], summary.variance[0]).unwrap();
        assert_eq!(w, 1.0);
    }

    #[test]
    fn one_point_stage_takes_the_weighted_variance_argmax() {
        let grid = Grid::new(6).unwrap();
        let model = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::from_fn(grid, |x1, x2| x1 + x2));
        let initial = Design::new(vec![14], &grid).unwrap();
        let model = model
            .with_observations(&initial, &[truth.value_at(14)])
            .unwrap();
        let spec = ls_spec(0.85);
        let (inc, _) = run_stage(&model, &truth, &spec, 1, &quick_search(1)).unwrap();

        // independent full-grid scan through the public conditioning path
        let summary = model.posterior().unwrap().summary().unwrap();
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for x in grid.indices() {
            if x == 14 {
                continue;
            }
            let c = crate::criteria::weighted_variance(x, &summary, &spec.weight).unwrap();
            if c > best.1 {
                best = (x, c);
            }
        }
        assert_eq!(inc.points(), &[best.0]);
    }

    #[test]
    fn observed_points_are_never_reselected() {
        let grid = Grid::new(5).unwrap();
        let model = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::constant(grid, 0.85));
        let mut model = model;
        let mut seen = std::collections::HashSet::new();
        let spec = ls_spec(0.85);
        for stage in 0..10 {
            let (inc, next) = run_stage(&model, &truth, &spec, 1, &quick_search(stage)).unwrap();
            assert!(seen.insert(inc.points()[0]), "point reselected at {stage}");
            // the level-set weight never selects an exhausted (zero
            // variance) point while positive-variance points remain
            model = next;
        }
    }

    #[test]
    fn incremental_conditioning_matches_one_shot_conditioning() {
        let grid = Grid::new(6).unwrap();
        let model = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::from_fn(grid, |x1, x2| {
            0.85 + (3.0 * x1).sin() * (2.0 * x2).cos()
        }));
        let spec = ls_spec(0.85);

        let mut staged = model
            .with_observations(&Design::new(vec![7], &grid).unwrap(), &[truth.value_at(7)])
            .unwrap();
        for _ in 0..2 {
            let (_, next) = run_stage(&staged, &truth, &spec, 1, &quick_search(3)).unwrap();
            staged = next;
        }
        let staged_summary = staged.posterior().unwrap().summary().unwrap();

        let all_points: Vec<usize> = staged.conditioning_indices();
        let values: Vec<f64> = all_points.iter().map(|&p| truth.value_at(p)).collect();
        let oneshot = model
            .with_observations(&Design::new(all_points, &grid).unwrap(), &values)
            .unwrap();
        let oneshot_summary = oneshot.posterior().unwrap().summary().unwrap();

        for i in grid.indices() {
            assert!(
                (staged_summary.mean[i] - oneshot_summary.mean[i]).abs() <= 1e-8,
                "mean mismatch at {i}"
            );
            assert!(
                (staged_summary.variance[i] - oneshot_summary.variance[i]).abs() <= 1e-8,
                "variance mismatch at {i}"
            );
        }
    }

    #[test]
    fn zero_stage_campaign_records_only_the_initial_snapshot() {
        let grid = Grid::new(5).unwrap();
        let prior = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::from_fn(grid, |x1, _| 2.0 * x1));
        let plan = StagePlan {
            initial: InitialDesign::Maximin(3),
            stage_sizes: vec![],
            criterion: ls_spec(0.85),
            sigma_eps_auto: false,
            search: quick_search(5),
        };
        let history = run_campaign(&plan, &truth, &prior).unwrap();
        assert_eq!(history.stages.len(), 1);
        assert_eq!(history.stages[0].design.len(), 3);
        assert_eq!(history.stages[0].stage, 0);
    }

    #[test]
    fn observations_match_the_truth_exactly_and_designs_nest() {
        let grid = Grid::new(6).unwrap();
        let prior = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::from_fn(grid, |x1, x2| {
            0.6 + x1 * x2 + 0.3 * (5.0 * x1).sin()
        }));
        let plan = StagePlan {
            initial: InitialDesign::Maximin(3),
            stage_sizes: vec![1, 1, 2, 1],
            criterion: ls_spec(0.85),
            sigma_eps_auto: false,
            search: quick_search(11),
        };
        let history = run_campaign(&plan, &truth, &prior).unwrap();
        assert_eq!(history.stages.len(), 5);
        for pair in history.stages.windows(2) {
            let prev = pair[0].design.points();
            let next = pair[1].design.points();
            assert_eq!(&next[..prev.len()], prev, "designs must nest");
            assert!(next.len() > prev.len(), "designs must strictly grow");
        }
        for record in &history.stages {
            for (&p, &v) in record.design.points().iter().zip(&record.observations) {
                assert_eq!(v, truth.value_at(p), "observation differs from truth");
            }
            // interpolation at observed points
            for &p in record.design.points() {
                assert!((record.posterior.mean[p] - truth.value_at(p)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn truth_equal_to_the_prior_mean_interpolates_trivially() {
        let grid = Grid::new(5).unwrap();
        let prior = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::constant(grid, 0.85));
        let plan = StagePlan {
            initial: InitialDesign::Maximin(4),
            stage_sizes: vec![],
            criterion: ls_spec(0.85),
            sigma_eps_auto: false,
            search: quick_search(2),
        };
        let history = run_campaign(&plan, &truth, &prior).unwrap();
        let record = &history.stages[0];
        for &p in record.design.points() {
            assert!((record.posterior.mean[p] - 0.85).abs() <= 1e-9);
        }
    }

    #[test]
    fn prior_sample_is_deterministic_and_grid_capped() {
        let grid = Grid::new(10).unwrap();
        let model = default_prior(grid, 0.0, paper_kernel()).unwrap();
        let a = GroundTruth::sample_from_prior(&model, 31).unwrap();
        let b = GroundTruth::sample_from_prior(&model, 31).unwrap();
        assert_eq!(a.field().values(), b.field().values());
        let c = GroundTruth::sample_from_prior(&model, 32).unwrap();
        assert_ne!(a.field().values(), c.field().values());

        let big = Grid::new(80).unwrap();
        let big_model = default_prior(big, 0.0, paper_kernel()).unwrap();
        assert!(GroundTruth::sample_from_prior(&big_model, 1).is_err());
    }

    #[test]
    fn auto_sigma_eps_tracks_the_posterior_mean_range() {
        let grid = Grid::new(5).unwrap();
        let prior = default_prior(grid, 0.85, paper_kernel()).unwrap();
        let truth = GroundTruth::new(Field::from_fn(grid, |x1, _| 2.0 * x1));
        let plan = StagePlan {
            initial: InitialDesign::Maximin(3),
            stage_sizes: vec![1, 1],
            criterion: CriterionSpec {
                weight: WeightSpec::SmoothedReference {
                    threshold: 0.85,
                    sigma_eps_sq: 0.05,
                },
                aggregator: Aggregator::Integrated,
            },
            sigma_eps_auto: true,
            search: quick_search(9),
        };
        let history = run_campaign(&plan, &truth, &prior).unwrap();
        for record in &history.stages {
            let expected = calibrate_sigma_eps(&record.posterior.mean);
            assert_eq!(record.sigma_eps_sq, Some(expected));
        }
    }
}
