//! Gaussian-field meta-model on a grid: Matérn covariance and exact
//! conditioning on design points.
//!
//! Conditioning is evaluated point-wise as `σ²_x − k_{xd} K_dd^{-1} k_dx`,
//! so only the design-sized covariance matrix is ever factorized — the full
//! grid covariance (22 500² entries on a 150×150 grid) is never
//! materialized. Posterior means use the standard linear update on the
//! observed subset of the conditioning set; virtual (planned but
//! unobserved) points update the variance only.

use std::sync::Arc;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::PackedCholesky;
use crate::special::{bessel_k, ln_gamma};

/// Diagonal jitter added to the design covariance before factorization,
/// relative to the kernel variance. Well below every test tolerance.
pub const JITTER_REL: f64 = 1e-10;

/// Posterior variances within this distance below zero are round-off and
/// clamp to zero; anything more negative is a conditioning bug.
pub const NEG_VARIANCE_TOL: f64 = 1e-8;

/// Matérn covariance parameters: standard deviation, smoothness, range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaternParams {
    pub sigma: f64,
    pub nu: f64,
    pub kappa: f64,
}

impl MaternParams {
    pub fn new(sigma: f64, nu: f64, kappa: f64) -> Result<MaternParams> {
        for (name, v) in [("sigma", sigma), ("nu", nu), ("kappa", kappa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "Matern {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(MaternParams { sigma, nu, kappa })
    }

    /// Prior variance σ².
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Matérn covariance between two points of the unit square:
/// `2^{1-ν} σ² (d√(2ν)/κ)^ν K_ν(d√(2ν)/κ) / Γ(ν)`.
pub fn matern_cov(xi: (f64, f64), xj: (f64, f64), params: &MaternParams) -> f64 {
    let d = ((xi.0 - xj.0).powi(2) + (xi.1 - xj.1).powi(2)).sqrt();
    matern_cov_dist(d, params)
}

/// Matérn covariance as a function of Euclidean distance. The zero-distance
/// limit σ² is returned explicitly, never as `0·∞`.
pub fn matern_cov_dist(d: f64, params: &MaternParams) -> f64 {
    if d == 0.0 {
        return params.variance();
    }
    let a = d * (2.0 * params.nu).sqrt() / params.kappa;
    let bk = bessel_k(params.nu, a).expect("scaled distance is positive");
    let prefactor = ((1.0 - params.nu) * std::f64::consts::LN_2 - ln_gamma(params.nu)).exp();
    params.variance() * prefactor * a.powf(params.nu) * bk
}

/// Covariance between grid points, cached by index offset.
///
/// The kernel is stationary and the grid uniform, so the covariance
/// between two grid points depends only on their (row, column) offset:
/// one table of `N²` kernel evaluations serves every pair.
pub(crate) struct CovTable {
    n_side: usize,
    values: Vec<f64>,
}

impl CovTable {
    pub fn build(grid: Grid, params: &MaternParams) -> CovTable {
        let n = grid.n_side();
        let h = grid.spacing();
        let mut values = vec![0.0; n * n];
        for dr in 0..n {
            for dc in 0..n {
                let d = h * ((dr * dr + dc * dc) as f64).sqrt();
                values[dr * n + dc] = matern_cov_dist(d, params);
            }
        }
        CovTable { n_side: n, values }
    }

    #[inline]
    pub fn between(&self, i: usize, j: usize) -> f64 {
        let n = self.n_side;
        let (ri, ci) = (i / n, i % n);
        let (rj, cj) = (j / n, j % n);
        self.values[ri.abs_diff(rj) * n + ci.abs_diff(cj)]
    }

    /// Covariance by (row, col) pairs; lets scans skip index division.
    #[inline]
    pub fn between_rc(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        self.values[a.0.abs_diff(b.0) * self.n_side + a.1.abs_diff(b.1)]
    }
}

/// One conditioning point: observed (with its measurement) or virtual
/// (planned but unobserved; contributes to the variance update only).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondPoint {
    pub index: usize,
    pub value: Option<f64>,
}

/// Prior mean + Matérn kernel + conditioning set over a grid.
///
/// Immutable after construction; conditioning produces a new model. All
/// posterior evaluation is read-only and safe to run from many threads.
#[derive(Clone)]
pub struct MetaModel {
    grid: Grid,
    prior_mean: Arc<Field>,
    kernel: MaternParams,
    cov: Arc<CovTable>,
    conditioning: Vec<CondPoint>,
    jitter: f64,
}

impl MetaModel {
    pub fn new(grid: Grid, prior_mean: Field, kernel: MaternParams) -> Result<MetaModel> {
        if prior_mean.grid() != grid {
            return Err(Error::InvalidField(
                "prior mean field is defined on a different grid".into(),
            ));
        }
        let cov = Arc::new(CovTable::build(grid, &kernel));
        Ok(MetaModel {
            grid,
            prior_mean: Arc::new(prior_mean),
            kernel,
            cov,
            conditioning: Vec::new(),
            jitter: JITTER_REL * kernel.variance(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn prior_mean(&self) -> &Field {
        &self.prior_mean
    }

    pub fn kernel(&self) -> &MaternParams {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn conditioning(&self) -> &[CondPoint] {
        &self.conditioning
    }

    pub fn conditioning_indices(&self) -> Vec<usize> {
        self.conditioning.iter().map(|c| c.index).collect()
    }

    pub fn is_conditioned_at(&self, index: usize) -> bool {
        self.conditioning.iter().any(|c| c.index == index)
    }

    pub(crate) fn cov_table(&self) -> &Arc<CovTable> {
        &self.cov
    }

    /// Extend the conditioning set with observed values. The design
    /// covariance is factorized eagerly so an ill-posed extension fails here.
    pub fn with_observations(&self, design: &Design, values: &[f64]) -> Result<MetaModel> {
        if values.len() != design.len() {
            return Err(Error::InvalidDesign(format!(
                "{} observations supplied for a {}-point design",
                values.len(),
                design.len()
            )));
        }
        self.extend(design, Some(values))
    }

    /// Extend the conditioning set with virtual points: the variance is
    /// updated as if they were measured, the mean is left unchanged.
    pub fn with_virtual(&self, design: &Design) -> Result<MetaModel> {
        self.extend(design, None)
    }

    fn extend(&self, design: &Design, values: Option<&[f64]>) -> Result<MetaModel> {
        for &p in design.points() {
            if !self.grid.contains(p) {
                return Err(Error::InvalidDesign(format!(
                    "index {p} is outside the grid"
                )));
            }
            if self.is_conditioned_at(p) {
                return Err(Error::InvalidDesign(format!(
                    "index {p} is already in the conditioning set"
                )));
            }
        }
        let mut extended = self.clone();
        for (k, &p) in design.points().iter().enumerate() {
            extended.conditioning.push(CondPoint {
                index: p,
                value: values.map(|v| v[k]),
            });
        }
        extended.posterior()?; // factorization must succeed
        Ok(extended)
    }

    /// Factorize the conditioning set and return a posterior evaluator.
    pub fn posterior(&self) -> Result<Posterior<'_>> {
        let indices: Vec<usize> = self.conditioning_indices();
        let chol = if indices.is_empty() {
            None
        } else {
            Some(self.factor_design(&indices)?)
        };

        let observed: Vec<&CondPoint> = self
            .conditioning
            .iter()
            .filter(|c| c.value.is_some())
            .collect();
        let mean_adjust = if observed.is_empty() {
            None
        } else {
            let obs_indices: Vec<usize> = observed.iter().map(|c| c.index).collect();
            let residual: Vec<f64> = observed
                .iter()
                .map(|c| c.value.unwrap() - self.prior_mean[c.index])
                .collect();
            let alpha = if obs_indices.len() == indices.len() {
                chol.as_ref().unwrap().solve(&residual)
            } else {
                self.factor_design(&obs_indices)?.solve(&residual)
            };
            Some(MeanAdjust { obs_indices, alpha })
        };

        Ok(Posterior {
            model: self,
            indices,
            chol,
            mean_adjust,
        })
    }

    fn factor_design(&self, indices: &[usize]) -> Result<PackedCholesky> {
        let n = indices.len();
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for (i, &pi) in indices.iter().enumerate() {
            for &pj in &indices[..i] {
                packed.push(self.cov.between(pi, pj));
            }
            packed.push(self.cov.between(pi, pi) + self.jitter);
        }
        PackedCholesky::factor(&packed, n).map_err(|pivot| Error::Factorization {
            design: indices.to_vec(),
            pivot,
        })
    }
}

struct MeanAdjust {
    obs_indices: Vec<usize>,
    alpha: Vec<f64>,
}

/// Factorized posterior of a [`MetaModel`]; evaluates the conditioned mean
/// and variance at any grid index.
pub struct Posterior<'m> {
    model: &'m MetaModel,
    indices: Vec<usize>,
    chol: Option<PackedCholesky>,
    mean_adjust: Option<MeanAdjust>,
}

impl Posterior<'_> {
    /// Posterior mean at a grid index (prior mean if nothing is observed).
    pub fn mean_at(&self, index: usize) -> f64 {
        let mut m = self.model.prior_mean[index];
        if let Some(adj) = &self.mean_adjust {
            for (&obs, &a) in adj.obs_indices.iter().zip(&adj.alpha) {
                m += a * self.model.cov.between(index, obs);
            }
        }
        m
    }

    /// Posterior variance at a grid index.
    pub fn variance_at(&self, index: usize) -> Result<f64> {
        match &self.chol {
            None => Ok(self.model.kernel.variance()),
            Some(chol) => {
                let mut k = vec![0.0; self.indices.len()];
                let mut y = vec![0.0; self.indices.len()];
                self.fill_cross_cov(index, &mut k);
                let v = self.model.kernel.variance() - chol.forward_norm_sq(&k, &mut y);
                clamp_variance(v, index)
            }
        }
    }

    fn fill_cross_cov(&self, index: usize, k: &mut [f64]) {
        for (slot, &p) in k.iter_mut().zip(&self.indices) {
            *slot = self.model.cov.between(index, p);
        }
    }

    /// Posterior mean over the full grid.
    pub fn mean_field(&self) -> Field {
        let grid = self.model.grid;
        Field::from_values(
            grid,
            grid.indices().map(|i| self.mean_at(i)).collect(),
        )
        .expect("grid-sized vector")
    }

    /// Posterior variance over the full grid.
    pub fn variance_field(&self) -> Result<Field> {
        let grid = self.model.grid;
        let sigma2 = self.model.kernel.variance();
        let mut values = Vec::with_capacity(grid.n_points());
        match &self.chol {
            None => values.resize(grid.n_points(), sigma2),
            Some(chol) => {
                let n = self.indices.len();
                let mut k = vec![0.0; n];
                let mut y = vec![0.0; n];
                for i in grid.indices() {
                    self.fill_cross_cov(i, &mut k);
                    let v = sigma2 - chol.forward_norm_sq(&k, &mut y);
                    values.push(clamp_variance(v, i)?);
                }
            }
        }
        Ok(Field::from_values(grid, values).expect("grid-sized vector"))
    }

    /// Materialize both posterior fields.
    pub fn summary(&self) -> Result<PosteriorSummary> {
        Ok(PosteriorSummary {
            mean: self.mean_field(),
            variance: self.variance_field()?,
        })
    }
}

/// Posterior mean and variance fields over the grid.
#[derive(Clone, Debug)]
pub struct PosteriorSummary {
    pub mean: Field,
    pub variance: Field,
}

/// Condition a model on a design and return the posterior fields.
///
/// With `values` the mean follows the linear update; without them the
/// design is treated as virtual and the mean stays the prior mean. The
/// variance update is identical in both modes — it does not depend on the
/// observed values.
pub fn condition(
    model: &MetaModel,
    design: &Design,
    values: Option<&[f64]>,
) -> Result<PosteriorSummary> {
    let extended = match values {
        Some(v) => model.with_observations(design, v)?,
        None => model.with_virtual(design)?,
    };
    extended.posterior()?.summary()
}

pub(crate) fn clamp_variance(v: f64, index: usize) -> Result<f64> {
    if v < -NEG_VARIANCE_TOL {
        Err(Error::NegativeVariance { index, value: v })
    } else {
        Ok(v.max(0.0))
    }
}
