//! Scenario configuration: a versioned JSON schema, semantic validation,
//! and the registry of named analytic formulas for mean and truth fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use targdes::{
    Aggregator, CriterionSpec, Design, Field, Grid, GroundTruth, InitialDesign, MaternParams,
    MetaModel, SearchConfig, StagePlan, WeightSpec,
};

use crate::error::CliError;
use crate::fields::read_field_csv;

pub const SCHEMA_VERSION: u32 = 1;

/// The on-disk scenario schema. Unknown keys are rejected so typos fail
/// loudly, with serde_json's line/column in the message.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub grid: usize,
    pub kernel: KernelConfig,
    pub threshold: f64,
    pub prior_mean: FieldSource,
    pub weight: WeightKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eps: Option<SigmaEps>,
    pub aggregator: AggregatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_size: Option<usize>,
    pub search: SearchSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<StagesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencySection>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub sigma: f64,
    pub nu: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Constant {
        value: f64,
    },
    Analytic {
        formula: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSource {
    Analytic {
        formula: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    Csv {
        path: PathBuf,
    },
    GpSample {
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    LevelSet,
    LevelSetPrinted,
    Exceedance,
    SmoothedReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaEps {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    Max,
    Integrated,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesSection {
    pub initial: InitialSection,
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Maximin { k: usize },
    Points { indices: Vec<usize> },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySection {
    #[serde(default = "default_n_random")]
    pub n_random: usize,
    #[serde(default = "default_n_maximin")]
    pub n_maximin: usize,
}

fn default_n_random() -> usize {
    20
}

fn default_n_maximin() -> usize {
    1
}

impl Default for EfficiencySection {
    fn default() -> Self {
        EfficiencySection {
            n_random: default_n_random(),
            n_maximin: default_n_maximin(),
        }
    }
}

impl ScenarioConfig {
    /// Parse and semantically validate a config file. Parse errors carry
    /// serde_json's line and column.
    pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{} is not a valid scenario config: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.version != SCHEMA_VERSION {
            return fail(format!(
                "version: expected schema version {SCHEMA_VERSION}, got {}",
                self.version
            ));
        }
        if self.grid < 2 {
            return fail(format!("grid: side must be >= 2, got {}", self.grid));
        }
        let n_points = self.grid * self.grid;
        for (name, v) in [
            ("kernel.sigma", self.kernel.sigma),
            ("kernel.nu", self.kernel.nu),
            ("kernel.kappa", self.kernel.kappa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name}: must be strictly positive, got {v}"));
            }
        }
        if !self.threshold.is_finite() {
            return fail(format!("threshold: must be finite, got {}", self.threshold));
        }
        // sigma_eps may accompany any weight (criterion sweeps use it for
        // their smoothed-reference tokens); it must exist when the config's
        // own weight needs it, and can never be negative
        match (self.weight, &self.sigma_eps) {
            (WeightKind::SmoothedReference, None) => {
                return fail(
                    "sigma_eps: required for the smoothed_reference weight \
                     (a number or \"auto\")"
                        .into(),
                )
            }
            (_, Some(SigmaEps::Value(v))) if *v < 0.0 => {
                return fail(format!("sigma_eps: must be >= 0, got {v}"))
            }
            _ => {}
        }
        if let Some(n) = self.design_size {
            if n > n_points {
                return fail(format!(
                    "design_size: {n} exceeds the {n_points}-point grid"
                ));
            }
        }
        if self.search.restarts == 0 {
            return fail("search.restarts: must be >= 1".into());
        }
        self.check_field_source("prior_mean", &self.prior_mean)?;
        if let Some(truth) = &self.truth {
            match truth {
                TruthSource::Analytic { formula, params } => {
                    Formula::parse("truth", formula, params)?;
                }
                TruthSource::Csv { path } => {
                    if !path.exists() {
                        return fail(format!(
                            "truth.path: file {} does not exist",
                            path.display()
                        ));
                    }
                }
                TruthSource::GpSample { .. } => {}
            }
        }
        if let Some(stages) = &self.stages {
            match &stages.initial {
                InitialSection::Maximin { k } => {
                    if *k == 0 || *k > n_points {
                        return fail(format!(
                            "stages.initial.k: must be in 1..={n_points}, got {k}"
                        ));
                    }
                }
                InitialSection::Points { indices } => {
                    if indices.is_empty() {
                        return fail("stages.initial.indices: must be nonempty".into());
                    }
                    if let Some(&bad) = indices.iter().find(|&&i| i >= n_points) {
                        return fail(format!(
                            "stages.initial.indices: {bad} is outside the {n_points}-point grid"
                        ));
                    }
                }
            }
            if let Some(&bad) = stages.sizes.iter().find(|&&s| s == 0) {
                return fail(format!("stages.sizes: sizes must be >= 1, got {bad}"));
            }
            let initial_len = match &stages.initial {
                InitialSection::Maximin { k } => *k,
                InitialSection::Points { indices } => indices.len(),
            };
            let total: usize = initial_len + stages.sizes.iter().sum::<usize>();
            if total > n_points {
                return fail(format!(
                    "stages: {total} total points exceed the {n_points}-point grid"
                ));
            }
        }
        if let Some(eff) = &self.efficiency {
            if eff.n_random == 0 {
                return fail("efficiency.n_random: must be >= 1".into());
            }
        }
        Ok(())
    }

    fn check_field_source(&self, key: &str, source: &FieldSource) -> Result<(), CliError> {
        match source {
            FieldSource::Constant { value } => {
                if !value.is_finite() {
                    return Err(CliError::Config(format!(
                        "{key}.value: must be finite, got {value}"
                    )));
                }
            }
            FieldSource::Analytic { formula, params } => {
                Formula::parse(key, formula, params)?;
            }
            FieldSource::Csv { path } => {
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "{key}.path: file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    // ---- resolution into core types ----

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid).map_err(CliError::from_core)
    }

    pub fn kernel(&self) -> Result<MaternParams, CliError> {
        MaternParams::new(self.kernel.sigma, self.kernel.nu, self.kernel.kappa)
            .map_err(CliError::from_core)
    }

    pub fn prior_mean_field(&self, grid: Grid) -> Result<Field, CliError> {
        resolve_field_source(&self.prior_mean, grid)
    }

    pub fn model(&self) -> Result<MetaModel, CliError> {
        let grid = self.grid()?;
        let mean = self.prior_mean_field(grid)?;
        MetaModel::new(grid, mean, self.kernel()?).map_err(CliError::from_core)
    }

    /// σ²_ε policy: the resolved value (auto values calibrate later, per
    /// stage or from the prior mean) and whether it tracks the mean.
    pub fn sigma_eps_auto(&self) -> bool {
        matches!(self.sigma_eps, Some(SigmaEps::Auto(_)))
    }

    fn weight_spec_with(&self, weight: WeightKind, mean_field: &Field) -> WeightSpec {
        let threshold = self.threshold;
        match weight {
            WeightKind::LevelSet => WeightSpec::LevelSet { threshold },
            WeightKind::LevelSetPrinted => WeightSpec::LevelSetPrinted { threshold },
            WeightKind::Exceedance => WeightSpec::Exceedance { threshold },
            WeightKind::SmoothedReference => {
                let sigma_eps_sq = match self.sigma_eps {
                    Some(SigmaEps::Value(v)) => v,
                    _ => targdes::calibrate_sigma_eps(mean_field),
                };
                WeightSpec::SmoothedReference {
                    threshold,
                    sigma_eps_sq,
                }
            }
        }
    }

    /// The criterion named by the config itself.
    pub fn criterion_spec(&self, mean_field: &Field) -> CriterionSpec {
        CriterionSpec {
            weight: self.weight_spec_with(self.weight, mean_field),
            aggregator: match self.aggregator {
                AggregatorKind::Max => Aggregator::Max,
                AggregatorKind::Integrated => Aggregator::Integrated,
            },
        }
    }

    /// A criterion named by a sweep token such as `mc_ls` or `ic_w`.
    pub fn criterion_for_token(
        &self,
        token: &str,
        mean_field: &Field,
    ) -> Result<CriterionSpec, CliError> {
        let (agg, weight) = parse_criterion_token(token)?;
        if weight == WeightKind::SmoothedReference
            && !matches!(self.sigma_eps, Some(_))
        {
            return Err(CliError::Config(format!(
                "criterion {token} needs sigma_eps in the config (a number or \"auto\")"
            )));
        }
        Ok(CriterionSpec {
            weight: self.weight_spec_with(weight, mean_field),
            aggregator: agg,
        })
    }

    pub fn truth(&self, grid: Grid, model: &MetaModel) -> Result<GroundTruth, CliError> {
        let source = self.truth.as_ref().ok_or_else(|| {
            CliError::Config("truth: required for this command".into())
        })?;
        match source {
            TruthSource::Analytic { formula, params } => {
                let f = Formula::parse("truth", formula, params)?;
                Ok(GroundTruth::new(f.field(grid)))
            }
            TruthSource::Csv { path } => Ok(GroundTruth::new(read_field_csv(path, grid)?)),
            TruthSource::GpSample { seed } => {
                GroundTruth::sample_from_prior(model, *seed).map_err(CliError::from_core)
            }
        }
    }

    pub fn search_config(&self, seed_override: Option<u64>) -> Result<SearchConfig, CliError> {
        SearchConfig::new(
            self.search.max_iterations,
            self.search.restarts,
            seed_override.unwrap_or(self.search.seed),
        )
        .map_err(CliError::from_core)
    }

    pub fn stage_plan(
        &self,
        grid: Grid,
        criterion: CriterionSpec,
        seed_override: Option<u64>,
    ) -> Result<StagePlan, CliError> {
        let stages = self.stages.as_ref().ok_or_else(|| {
            CliError::Config("stages: required for the sequential command".into())
        })?;
        let initial = match &stages.initial {
            InitialSection::Maximin { k } => InitialDesign::Maximin(*k),
            InitialSection::Points { indices } => InitialDesign::Points(
                Design::new(indices.clone(), &grid).map_err(CliError::from_core)?,
            ),
        };
        Ok(StagePlan {
            initial,
            stage_sizes: stages.sizes.clone(),
            criterion,
            sigma_eps_auto: self.sigma_eps_auto(),
            search: self.search_config(seed_override)?,
        })
    }
}

pub fn parse_criterion_token(token: &str) -> Result<(Aggregator, WeightKind), CliError> {
    let (agg, weight) = token.split_once('_').ok_or_else(|| {
        CliError::Config(format!(
            "criterion token '{token}' is not of the form mc_<weight> or ic_<weight>"
        ))
    })?;
    let aggregator = match agg {
        "mc" => Aggregator::Max,
        "ic" => Aggregator::Integrated,
        other => {
            return Err(CliError::Config(format!(
                "criterion token '{token}': unknown aggregator '{other}' (use mc or ic)"
            )))
        }
    };
    let weight = match weight {
        "ls" => WeightKind::LevelSet,
        "ls_printed" => WeightKind::LevelSetPrinted,
        "exc" => WeightKind::Exceedance,
        "w" => WeightKind::SmoothedReference,
        other => {
            return Err(CliError::Config(format!(
                "criterion token '{token}': unknown weight '{other}' \
                 (use ls, ls_printed, exc or w)"
            )))
        }
    };
    Ok((aggregator, weight))
}

pub fn criterion_token(spec: &CriterionSpec) -> String {
    let agg = match spec.aggregator {
        Aggregator::Max => "mc",
        Aggregator::Integrated => "ic",
    };
    let weight = match spec.weight {
        WeightSpec::LevelSet { .. } => "ls",
        WeightSpec::LevelSetPrinted { .. } => "ls_printed",
        WeightSpec::Exceedance { .. } => "exc",
        WeightSpec::SmoothedReference { .. } => "w",
    };
    format!("{agg}_{weight}")
}

fn resolve_field_source(source: &FieldSource, grid: Grid) -> Result<Field, CliError> {
    match source {
        FieldSource::Constant { value } => Ok(Field::constant(grid, *value)),
        FieldSource::Analytic { formula, params } => {
            Ok(Formula::parse("field", formula, params)?.field(grid))
        }
        FieldSource::Csv { path } => read_field_csv(path, grid),
    }
}

/// A named analytic formula with a parameter map applied over defaults.
pub struct Formula {
    kind: FormulaKind,
    params: BTreeMap<String, f64>,
}

enum FormulaKind {
    /// `amplitude * exp(-sqrt(xw (x1-cx)^2 + yw (x2-cy)^2) / scale)`
    ExpPeak,
    /// `base + amplitude * exp(-((x1-cx)^2 + (x2-cy)^2) / (2 width^2))`
    Bump,
    /// Two Gaussian bumps over a base level.
    TwoBumps,
    /// `offset + gx x1 + gy x2`
    Plane,
}

impl Formula {
    pub fn parse(
        key: &str,
        name: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<Formula, CliError> {
        let (kind, defaults): (FormulaKind, &[(&str, f64)]) = match name {
            "exp_peak" => (
                FormulaKind::ExpPeak,
                &[
                    ("amplitude", 2.0),
                    ("cx", 1.0),
                    ("cy", 0.5),
                    ("xw", 1.0),
                    ("yw", 3.0),
                    ("scale", 3.0),
                ],
            ),
            "bump" => (
                FormulaKind::Bump,
                &[
                    ("base", 0.3),
                    ("amplitude", 1.1),
                    ("cx", 0.45),
                    ("cy", 0.55),
                    ("width", 0.22),
                ],
            ),
            "two_bumps" => (
                FormulaKind::TwoBumps,
                &[
                    ("base", 0.3),
                    ("a1", 1.0),
                    ("c1x", 0.25),
                    ("c1y", 0.7),
                    ("w1", 0.12),
                    ("a2", 0.9),
                    ("c2x", 0.78),
                    ("c2y", 0.25),
                    ("w2", 0.1),
                ],
            ),
            "plane" => (
                FormulaKind::Plane,
                &[("offset", 0.0), ("gx", 1.0), ("gy", 0.0)],
            ),
            other => {
                return Err(CliError::Config(format!(
                    "{key}.formula: unknown formula '{other}' \
                     (known: exp_peak, bump, two_bumps, plane)"
                )))
            }
        };
        let mut resolved: BTreeMap<String, f64> =
            defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in params {
            if !resolved.contains_key(k) {
                return Err(CliError::Config(format!(
                    "{key}.params: formula '{name}' has no parameter '{k}' \
                     (known: {})",
                    defaults
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            if !v.is_finite() {
                return Err(CliError::Config(format!(
                    "{key}.params.{k}: must be finite, got {v}"
                )));
            }
            resolved.insert(k.clone(), *v);
        }
        Ok(Formula {
            kind,
            params: resolved,
        })
    }

    fn p(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn field(&self, grid: Grid) -> Field {
        match self.kind {
            FormulaKind::ExpPeak => {
                let (a, cx, cy) = (self.p("amplitude"), self.p("cx"), self.p("cy"));
                let (xw, yw, scale) = (self.p("xw"), self.p("yw"), self.p("scale"));
                Field::from_fn(grid, move |x1, x2| {
                    a * (-((xw * (x1 - cx).powi(2) + yw * (x2 - cy).powi(2)).sqrt()) / scale).exp()
                })
            }
            FormulaKind::Bump => {
                let (base, a) = (self.p("base"), self.p("amplitude"));
                let (cx, cy, w) = (self.p("cx"), self.p("cy"), self.p("width"));
                Field::from_fn(grid, move |x1, x2| {
                    base + a * (-((x1 - cx).powi(2) + (x2 - cy).powi(2)) / (2.0 * w * w)).exp()
                })
            }
            FormulaKind::TwoBumps => {
                let base = self.p("base");
                let (a1, c1x, c1y, w1) = (self.p("a1"), self.p("c1x"), self.p("c1y"), self.p("w1"));
                let (a2, c2x, c2y, w2) = (self.p("a2"), self.p("c2x"), self.p("c2y"), self.p("w2"));
                Field::from_fn(grid, move |x1, x2| {
                    base + a1
                        * (-((x1 - c1x).powi(2) + (x2 - c1y).powi(2)) / (2.0 * w1 * w1)).exp()
                        + a2 * (-((x1 - c2x).powi(2) + (x2 - c2y).powi(2)) / (2.0 * w2 * w2)).exp()
                })
            }
            FormulaKind::Plane => {
                let (offset, gx, gy) = (self.p("offset"), self.p("gx"), self.p("gy"));
                Field::from_fn(grid, move |x1, x2| offset + gx * x1 + gy * x2)
            }
        }
    }
}
