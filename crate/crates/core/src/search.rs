//! Design construction: the greedy starting design, the exchange
//! improvement loop, random and maximin baselines, restart-based reference
//! designs and efficiency factors.
//!
//! All searches evaluate candidate designs from scratch against the
//! model's covariance table — no incremental swap bookkeeping — and are
//! pure functions of their inputs and seeds. Restarts run in parallel;
//! the winner is picked by (criterion value, restart index) so thread
//! scheduling never changes the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criteria::{Aggregator, CriterionSpec};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::gp::{clamp_variance, CovTable, MetaModel};
use crate::grid::{Field, Grid};
use crate::linalg::PackedCholesky;

/// Exchange iteration budget, restart count and seed for randomized search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximal number of exchange iterations `M`.
    pub max_iterations: usize,
    /// Number of random starts feeding the reference design.
    pub restarts: usize,
    pub rng_seed: u64,
}

impl SearchConfig {
    pub fn new(max_iterations: usize, restarts: usize, rng_seed: u64) -> Result<SearchConfig> {
        if restarts == 0 {
            return Err(Error::InvalidParam("restarts must be >= 1".into()));
        }
        Ok(SearchConfig {
            max_iterations,
            restarts,
            rng_seed,
        })
    }
}

/// Instrumentation counters for the greedy construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GreedyTrace {
    /// Full-grid argmax scans performed (one per selected point).
    pub argmax_passes: usize,
    /// Variance reconditionings triggered by previously selected points.
    pub variance_updates: usize,
}

/// Efficiency of a candidate design against the restart reference `d**`.
#[derive(Clone, Debug)]
pub struct EfficiencyReport {
    /// `C(d**) / C(candidate)`.
    pub efficiency: f64,
    pub candidate: Design,
    pub reference: Design,
    pub candidate_value: f64,
    pub reference_value: f64,
    /// True when the candidate beat every restart result (efficiency > 1).
    pub exceeds_reference: bool,
}

/// Criterion evaluation engine for design search.
///
/// Holds the model's covariance table, the mean field the weights read
/// (fixed during a search: planned points never update the mean), the
/// model's own conditioning set as a fixed base, and reusable scratch.
pub(crate) struct Evaluator<'a> {
    grid: Grid,
    cov: &'a CovTable,
    mean: &'a [f64],
    base: Vec<usize>,
    spec: CriterionSpec,
    sigma2: f64,
    jitter: f64,
    weight_bound: Option<f64>,
    indices: Vec<usize>,
    coords: Vec<(usize, usize)>,
    packed: Vec<f64>,
    kvec: Vec<f64>,
    yvec: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a MetaModel, mean: &'a Field, spec: &CriterionSpec) -> Evaluator<'a> {
        Evaluator {
            grid: model.grid(),
            cov: model.cov_table().as_ref(),
            mean: mean.values(),
            base: model.conditioning_indices(),
            spec: *spec,
            sigma2: model.kernel().variance(),
            jitter: model.jitter(),
            weight_bound: spec.weight.upper_bound(),
            indices: Vec::new(),
            coords: Vec::new(),
            packed: Vec::new(),
            kvec: Vec::new(),
            yvec: Vec::new(),
        }
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    fn factor(&mut self, extra: &[usize]) -> Result<Option<PackedCholesky>> {
        self.indices.clear();
        self.indices.extend_from_slice(&self.base);
        self.indices.extend_from_slice(extra);
        let m = self.indices.len();
        if m == 0 {
            return Ok(None);
        }
        self.packed.clear();
        for i in 0..m {
            let pi = self.indices[i];
            for j in 0..i {
                self.packed.push(self.cov.between(pi, self.indices[j]));
            }
            self.packed.push(self.cov.between(pi, pi) + self.jitter);
        }
        self.coords.clear();
        self.coords
            .extend(self.indices.iter().map(|&p| self.grid.row_col(p)));
        self.kvec.resize(m, 0.0);
        self.yvec.resize(m, 0.0);
        PackedCholesky::factor(&self.packed, m)
            .map(Some)
            .map_err(|pivot| Error::Factorization {
                design: self.indices.clone(),
                pivot,
            })
    }

    /// `C(base ∪ extra)` under the evaluator's criterion.
    pub fn criterion(&mut self, extra: &[usize]) -> Result<f64> {
        let chol = self.factor(extra)?;
        match self.spec.aggregator {
            Aggregator::Max => self.scan_max(chol.as_ref()),
            Aggregator::Integrated => self.scan_sum(chol.as_ref()),
        }
    }

    fn scan_max(&mut self, chol: Option<&PackedCholesky>) -> Result<f64> {
        let mut best = 0.0f64;
        let n_side = self.grid.n_side();
        let mut x = 0usize;
        for rx in 0..n_side {
            for cx in 0..n_side {
                let var = self.variance_at(chol, (rx, cx), x)?;
                // bounded weights cannot lift this point above the current max
                if let Some(bound) = self.weight_bound {
                    if var * bound <= best {
                        x += 1;
                        continue;
                    }
                }
                let c = self.spec.weight.evaluate(self.mean[x], var)? * var;
                if c > best {
                    best = c;
                }
                x += 1;
            }
        }
        Ok(best)
    }

    fn scan_sum(&mut self, chol: Option<&PackedCholesky>) -> Result<f64> {
        let mut sum = 0.0;
        let n_side = self.grid.n_side();
        let mut x = 0usize;
        for rx in 0..n_side {
            for cx in 0..n_side {
                let var = self.variance_at(chol, (rx, cx), x)?;
                sum += self.spec.weight.evaluate(self.mean[x], var)? * var;
                x += 1;
            }
        }
        Ok(sum)
    }

    #[inline]
    fn variance_at(
        &mut self,
        chol: Option<&PackedCholesky>,
        at: (usize, usize),
        index: usize,
    ) -> Result<f64> {
        match chol {
            None => Ok(self.sigma2),
            Some(chol) => {
                for (slot, &p) in self.kvec.iter_mut().zip(&self.coords) {
                    *slot = self.cov.between_rc(at, p);
                }
                clamp_variance(
                    self.sigma2 - chol.forward_norm_sq(&self.kvec, &mut self.yvec),
                    index,
                )
            }
        }
    }

    /// The weighted-variance field `c(x; base ∪ extra)` over the grid.
    pub fn weighted_variance_field(&mut self, extra: &[usize], out: &mut Vec<f64>) -> Result<()> {
        let chol = self.factor(extra)?;
        out.clear();
        out.reserve(self.grid.n_points());
        let n_side = self.grid.n_side();
        let mut x = 0usize;
        for rx in 0..n_side {
            for cx in 0..n_side {
                let var = self.variance_at(chol.as_ref(), (rx, cx), x)?;
                out.push(self.spec.weight.evaluate(self.mean[x], var)? * var);
                x += 1;
            }
        }
        Ok(())
    }
}

/// Smallest index attaining the maximum among eligible entries.
fn argmax_eligible(values: &[f64], eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !eligible(i) {
            continue;
        }
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy construction of an `n`-point starting design.
///
/// Each step scores every unselected point by the current weighted
/// variance, takes the argmax (ties resolve to the smallest grid index),
/// then reconditions the variance on the enlarged design. The mean stays
/// fixed: planned points carry no observations. Every prefix of the result
/// is itself the greedy design of that size.
pub fn greedy_start(model: &MetaModel, spec: &CriterionSpec, n: usize) -> Result<Design> {
    greedy_start_traced(model, spec, n).map(|(d, _)| d)
}

/// [`greedy_start`] with instrumentation counters.
pub fn greedy_start_traced(
    model: &MetaModel,
    spec: &CriterionSpec,
    n: usize,
) -> Result<(Design, GreedyTrace)> {
    let grid = model.grid();
    if n > grid.n_points() {
        return Err(Error::DesignTooLarge {
            n,
            capacity: grid.n_points(),
        });
    }
    let mean = model.posterior()?.mean_field();
    let mut evaluator = Evaluator::new(model, &mean, spec);

    let mut taken = vec![false; grid.n_points()];
    for &b in evaluator.base() {
        taken[b] = true;
    }
    let available = taken.iter().filter(|t| !**t).count();
    if available < n {
        return Err(Error::GridExhausted {
            needed: n,
            available,
        });
    }

    let mut selected: Vec<usize> = Vec::with_capacity(n);
    let mut trace = GreedyTrace::default();
    let mut c_field = Vec::new();
    for _ in 0..n {
        if !selected.is_empty() {
            trace.variance_updates += 1;
        }
        evaluator.weighted_variance_field(&selected, &mut c_field)?;
        trace.argmax_passes += 1;
        let next = argmax_eligible(&c_field, |i| !taken[i]).expect("capacity checked");
        taken[next] = true;
        selected.push(next);
    }
    Ok((Design::new(selected, &grid)?, trace))
}

fn check_start(model: &MetaModel, start: &Design) -> Result<()> {
    for &p in start.points() {
        if model.is_conditioned_at(p) {
            return Err(Error::InvalidDesign(format!(
                "start design point {p} is already in the model's conditioning set"
            )));
        }
    }
    Ok(())
}

fn exchange_with_rng(
    start: &Design,
    model: &MetaModel,
    spec: &CriterionSpec,
    max_iterations: usize,
    rng: &mut ChaCha8Rng,
    mut trajectory: Option<&mut Vec<f64>>,
) -> Result<(Design, f64)> {
    let grid = model.grid();
    check_start(model, start)?;
    let mean = model.posterior()?.mean_field();
    let mut evaluator = Evaluator::new(model, &mean, spec);

    let mut current: Vec<usize> = start.points().to_vec();
    let mut unavailable = vec![false; grid.n_points()];
    for &b in evaluator.base() {
        unavailable[b] = true;
    }
    for &p in &current {
        unavailable[p] = true;
    }
    let mut complement: Vec<usize> = grid.indices().filter(|&i| !unavailable[i]).collect();

    let mut value = evaluator.criterion(&current)?;
    if let Some(t) = trajectory.as_mut() {
        t.push(value);
    }
    if current.is_empty() || complement.is_empty() {
        return Ok((Design::new(current, &grid)?, value));
    }

    for _ in 0..max_iterations {
        let i = rng.gen_range(0..current.len());
        let j = rng.gen_range(0..complement.len());
        let old = current[i];
        current[i] = complement[j];
        let candidate_value = evaluator.criterion(&current)?;
        if candidate_value < value {
            complement[j] = old;
            value = candidate_value;
        } else {
            current[i] = old;
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(value);
        }
    }
    Ok((Design::new(current, &grid)?, value))
}

/// Exchange improvement: `M` random inner/outer permutations, each
/// accepted only on strict criterion decrease. Deterministic per seed.
pub fn exchange(
    start: &Design,
    model: &MetaModel,
    spec: &CriterionSpec,
    cfg: &SearchConfig,
) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    exchange_with_rng(start, model, spec, cfg.max_iterations, &mut rng, None).map(|(d, _)| d)
}

/// [`exchange`] also returning the criterion trajectory `C(d^(0..M))`.
pub fn exchange_traced(
    start: &Design,
    model: &MetaModel,
    spec: &CriterionSpec,
    cfg: &SearchConfig,
) -> Result<(Design, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut trajectory = Vec::with_capacity(cfg.max_iterations + 1);
    let (design, _) = exchange_with_rng(
        start,
        model,
        spec,
        cfg.max_iterations,
        &mut rng,
        Some(&mut trajectory),
    )?;
    Ok((design, trajectory))
}

fn sample_distinct(
    n: usize,
    grid: &Grid,
    excluded: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let mut excluded_mask = vec![false; grid.n_points()];
    for &e in excluded {
        excluded_mask[e] = true;
    }
    let mut available: Vec<usize> = grid.indices().filter(|&i| !excluded_mask[i]).collect();
    if n > available.len() {
        return Err(Error::DesignTooLarge {
            n,
            capacity: available.len(),
        });
    }
    // partial Fisher-Yates
    for t in 0..n {
        let j = rng.gen_range(t..available.len());
        available.swap(t, j);
    }
    available.truncate(n);
    Ok(available)
}

/// Uniform sample of `n` distinct grid points, deterministic per seed.
pub fn random_design(n: usize, grid: &Grid, seed: u64) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Design::new(sample_distinct(n, grid, &[], &mut rng)?, grid)
}

/// Greedy maximin design: start at the grid center, then repeatedly add
/// the point maximizing its minimum distance to the chosen set. Ties
/// resolve to the smallest grid index.
pub fn maximin_design(n: usize, grid: &Grid) -> Result<Design> {
    if n > grid.n_points() {
        return Err(Error::DesignTooLarge {
            n,
            capacity: grid.n_points(),
        });
    }
    let mut points: Vec<usize> = Vec::with_capacity(n);
    if n == 0 {
        return Design::new(points, grid);
    }
    let center = grid
        .indices()
        .map(|i| {
            let (x1, x2) = grid.coord(i);
            ((x1 - 0.5).powi(2) + (x2 - 0.5).powi(2), i)
        })
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .map(|(_, i)| i)
        .unwrap();
    points.push(center);

    let mut min_dist: Vec<f64> = grid
        .indices()
        .map(|i| grid.distance(i, center))
        .collect();
    for _ in 1..n {
        let next = argmax_eligible(&min_dist, |i| !points.contains(&i)).unwrap();
        points.push(next);
        for i in grid.indices() {
            min_dist[i] = min_dist[i].min(grid.distance(i, next));
        }
    }
    Design::new(points, grid)
}

/// Best design over many exchange runs from random starts (`d**`): the
/// reference against which efficiency factors are measured.
///
/// Restart `r` derives its sub-seed as `rng_seed + r`; restarts run in
/// parallel and the minimum is taken by (value, restart index).
pub fn best_of_restarts(
    model: &MetaModel,
    spec: &CriterionSpec,
    n: usize,
    cfg: &SearchConfig,
) -> Result<Design> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidParam("restarts must be >= 1".into()));
    }
    let base = model.conditioning_indices();
    let results: Vec<(f64, usize, Design)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let sub_seed = cfg.rng_seed.wrapping_add(r as u64);
            let mut sample_rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let start = Design::new(
                sample_distinct(n, &model.grid(), &base, &mut sample_rng)?,
                &model.grid(),
            )?;
            let mut exchange_rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let (design, value) = exchange_with_rng(
                &start,
                model,
                spec,
                cfg.max_iterations,
                &mut exchange_rng,
                None,
            )?;
            Ok((value, r, design))
        })
        .collect::<Result<_>>()?;
    let winner = results
        .into_iter()
        .min_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap())
        .expect("restarts >= 1");
    Ok(winner.2)
}

/// Efficiency factor `eff(d) = C(d**) / C(d)` of a candidate design, with
/// `d**` computed by [`best_of_restarts`] at the candidate's size.
pub fn efficiency(
    candidate: &Design,
    model: &MetaModel,
    spec: &CriterionSpec,
    cfg: &SearchConfig,
) -> Result<EfficiencyReport> {
    check_start(model, candidate)?;
    let mean = model.posterior()?.mean_field();
    let mut evaluator = Evaluator::new(model, &mean, spec);
    let candidate_value = evaluator.criterion(candidate.points())?;
    if candidate_value == 0.0 {
        return Err(Error::PerfectDesign {
            design: candidate.points().to_vec(),
        });
    }
    let reference = best_of_restarts(model, spec, candidate.len(), cfg)?;
    let reference_value = evaluator.criterion(reference.points())?;
    let efficiency = reference_value / candidate_value;
    Ok(EfficiencyReport {
        efficiency,
        candidate: candidate.clone(),
        reference,
        candidate_value,
        reference_value,
        exceeds_reference: efficiency > 1.0,
    })
}
