//! The command implementations. Each command validates its inputs, runs
//! the computation fully in memory, and only then writes files — an
//! invalid config or a numerical failure never leaves partial output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use targdes::{
    best_of_restarts, condition, criterion_value, exchange, greedy_start, maximin_design,
    quality_scores, random_design, run_campaign, CriterionSpec, Design, Field, Grid,
};

use crate::config::{criterion_token, ScenarioConfig};
use crate::error::CliError;
use crate::fields::{
    design_to_csv, field_to_csv, fmt_optional, level_set_to_csv, read_field_csv,
};
use crate::manifest::{RunManifest, ScoresManifest};

/// File contents keyed by name, assembled before anything touches disk.
type Outputs = Vec<(String, String)>;

pub struct RunArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub criteria: Option<Vec<String>>,
}

pub struct ScoresArgs {
    pub grid: usize,
    pub threshold: f64,
    pub actual: PathBuf,
    pub estimated: PathBuf,
    pub out: PathBuf,
}

/// Resolved per-token criterion context shared by the run commands.
struct TokenRun {
    token: String,
    prefix: String,
    spec: CriterionSpec,
}

fn resolve_tokens(
    config: &ScenarioConfig,
    criteria: &Option<Vec<String>>,
    mean: &Field,
) -> Result<Vec<TokenRun>, CliError> {
    match criteria {
        None => {
            let spec = config.criterion_spec(mean);
            Ok(vec![TokenRun {
                token: criterion_token(&spec),
                prefix: String::new(),
                spec,
            }])
        }
        Some(tokens) => {
            if tokens.is_empty() {
                return Err(CliError::Config("criteria: empty sweep list".into()));
            }
            let mut seen = std::collections::BTreeSet::new();
            let mut runs = Vec::new();
            let prefix_needed = tokens.len() > 1;
            for token in tokens {
                if !seen.insert(token.clone()) {
                    return Err(CliError::Config(format!(
                        "criteria: duplicate token '{token}'"
                    )));
                }
                let spec = config.criterion_for_token(token, mean)?;
                runs.push(TokenRun {
                    token: token.clone(),
                    prefix: if prefix_needed {
                        format!("{token}_")
                    } else {
                        String::new()
                    },
                    spec,
                });
            }
            Ok(runs)
        }
    }
}

fn effective_config(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.search.seed = seed;
    }
    Ok(config)
}

fn write_all(out_dir: &Path, outputs: &Outputs, manifest: &RunManifest) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    for (name, content) in outputs {
        std::fs::write(out_dir.join(name), content)?;
    }
    std::fs::write(out_dir.join("manifest.json"), manifest.to_json())?;
    Ok(())
}

fn manifest_skeleton(command: &str, seed: Option<u64>, outputs: &Outputs) -> RunManifest {
    RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        config: None,
        criteria: None,
        scores: None,
        outputs: outputs.iter().map(|(name, _)| name.clone()).collect(),
        timings_ms: BTreeMap::new(),
    }
}

#[derive(Serialize)]
struct DesignReport<'a> {
    criterion: &'a str,
    threshold: f64,
    design_size: usize,
    greedy_value: f64,
    exchange_value: f64,
    seed: u64,
    max_iterations: usize,
}

/// Construct the greedy design and its exchange refinement, and emit the
/// designs, their criterion values and the final weighted-variance field.
pub fn cmd_design(args: &RunArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    design_with(config, &args.out, &args.criteria)
}

fn design_with(
    config: ScenarioConfig,
    out: &Path,
    criteria: &Option<Vec<String>>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = config.search.seed;
    let n = config.design_size.ok_or_else(|| {
        CliError::Config("design_size: required for the design command".into())
    })?;
    let model = config.model()?;
    let grid = model.grid();
    let mean = model.prior_mean().clone();
    let runs = resolve_tokens(&config, criteria, &mean)?;
    let search = config.search_config(None)?;

    let mut outputs: Outputs = Vec::new();
    for run in &runs {
        let greedy = greedy_start(&model, &run.spec, n).map_err(CliError::from_core)?;
        let refined = exchange(&greedy, &model, &run.spec, &search).map_err(CliError::from_core)?;

        let greedy_summary =
            condition(&model, &greedy, None).map_err(CliError::from_core)?;
        let refined_summary =
            condition(&model, &refined, None).map_err(CliError::from_core)?;
        let greedy_value =
            criterion_value(&greedy_summary, &run.spec).map_err(CliError::from_core)?;
        let exchange_value =
            criterion_value(&refined_summary, &run.spec).map_err(CliError::from_core)?;

        let mut c_field = String::from("index,x1,x2,value\n");
        for i in grid.indices() {
            let c = targdes::weighted_variance(i, &refined_summary, &run.spec.weight)
                .map_err(CliError::from_core)?;
            let (x1, x2) = grid.coord(i);
            let _ = writeln!(c_field, "{i},{x1},{x2},{c}");
        }

        let report = DesignReport {
            criterion: &run.token,
            threshold: config.threshold,
            design_size: n,
            greedy_value,
            exchange_value,
            seed,
            max_iterations: search.max_iterations,
        };
        let mut report_json = serde_json::to_string_pretty(&report).expect("report serializes");
        report_json.push('\n');

        outputs.push((
            format!("{}design_greedy.csv", run.prefix),
            design_to_csv(&greedy, &grid),
        ));
        outputs.push((
            format!("{}design_exchange.csv", run.prefix),
            design_to_csv(&refined, &grid),
        ));
        outputs.push((format!("{}weighted_variance.csv", run.prefix), c_field));
        outputs.push((format!("{}criterion.json", run.prefix), report_json));
    }

    let mut manifest = manifest_skeleton("design", Some(seed), &outputs);
    manifest.config = Some(config);
    manifest.criteria = Some(runs.iter().map(|r| r.token.clone()).collect());
    manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_millis());
    write_all(out, &outputs, &manifest)
}

/// Run sequential campaigns (one per criterion token) and emit the
/// per-stage score table and posterior-mean snapshots.
pub fn cmd_sequential(args: &RunArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    sequential_with(config, &args.out, &args.criteria)
}

fn sequential_with(
    config: ScenarioConfig,
    out: &Path,
    criteria: &Option<Vec<String>>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = config.search.seed;
    let model = config.model()?;
    let grid = model.grid();
    let truth = config.truth(grid, &model)?;
    let mean = model.prior_mean().clone();
    let runs = resolve_tokens(&config, criteria, &mean)?;

    let mut scores_csv =
        String::from("criterion,stage,n_points,q_dist,q_value,q_area,criterion_value\n");
    let mut outputs: Outputs = Vec::new();
    for run in &runs {
        let plan = config.stage_plan(grid, run.spec, None)?;
        let history = run_campaign(&plan, &truth, &model).map_err(CliError::from_core)?;
        for record in &history.stages {
            let _ = writeln!(
                scores_csv,
                "{},{},{},{},{},{},{}",
                run.token,
                record.stage,
                record.design.len(),
                fmt_optional(record.scores.q_dist),
                fmt_optional(record.scores.q_value),
                record.scores.q_area,
                record.criterion_value,
            );
            outputs.push((
                format!("{}stage_{:02}_mean.csv", run.prefix, record.stage),
                field_to_csv(&record.posterior.mean),
            ));
        }
        outputs.push((
            format!("{}final_design.csv", run.prefix),
            design_to_csv(history.final_design(), &grid),
        ));
        outputs.push((
            format!("{}estimated_level_set.csv", run.prefix),
            level_set_to_csv(&history.stages.last().unwrap().estimated_level_set, &grid),
        ));
    }
    outputs.push(("scores.csv".into(), scores_csv));
    outputs.push((
        "actual_level_set.csv".into(),
        level_set_to_csv(
            &targdes::extract_level_set(truth.field(), config.threshold),
            &grid,
        ),
    ));

    let mut manifest = manifest_skeleton("sequential", Some(seed), &outputs);
    manifest.config = Some(config);
    manifest.criteria = Some(runs.iter().map(|r| r.token.clone()).collect());
    manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_millis());
    write_all(out, &outputs, &manifest)
}

#[derive(Serialize)]
struct EfficiencyReportJson<'a> {
    criterion: &'a str,
    candidate: &'a str,
    candidate_value: f64,
    reference_value: f64,
    efficiency: f64,
    restarts: usize,
    seed: u64,
}

/// Efficiency factors of the greedy design, its exchange refinement, and
/// random/maximin baselines against the restart reference design.
pub fn cmd_efficiency(args: &RunArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    efficiency_with(config, &args.out, &args.criteria)
}

fn efficiency_with(
    config: ScenarioConfig,
    out: &Path,
    criteria: &Option<Vec<String>>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = config.search.seed;
    let n = config.design_size.ok_or_else(|| {
        CliError::Config("design_size: required for the efficiency command".into())
    })?;
    let efficiency_cfg = config.efficiency.unwrap_or_default();
    let model = config.model()?;
    let grid = model.grid();
    let mean = model.prior_mean().clone();
    let runs = resolve_tokens(&config, criteria, &mean)?;
    let search = config.search_config(None)?;

    let value_of = |design: &Design, spec: &CriterionSpec| -> Result<f64, CliError> {
        let summary = condition(&model, design, None).map_err(CliError::from_core)?;
        criterion_value(&summary, spec).map_err(CliError::from_core)
    };

    let mut outputs: Outputs = Vec::new();
    for run in &runs {
        let greedy = greedy_start(&model, &run.spec, n).map_err(CliError::from_core)?;
        let refined = exchange(&greedy, &model, &run.spec, &search).map_err(CliError::from_core)?;
        let reference =
            best_of_restarts(&model, &run.spec, n, &search).map_err(CliError::from_core)?;
        let reference_value = value_of(&reference, &run.spec)?;

        let mut batch: Vec<(String, Design)> = vec![
            ("greedy".into(), greedy.clone()),
            ("exchange".into(), refined.clone()),
            ("reference".into(), reference.clone()),
            ("maximin".into(), maximin_design(n, &grid).map_err(CliError::from_core)?),
        ];
        for i in 0..efficiency_cfg.n_random {
            let baseline_seed = seed.wrapping_add(1_000_000).wrapping_add(i as u64);
            batch.push((
                format!("random_{i:02}"),
                random_design(n, &grid, baseline_seed).map_err(CliError::from_core)?,
            ));
        }

        let mut csv = String::from("label,criterion,criterion_value,efficiency\n");
        let mut named_values: BTreeMap<&str, f64> = BTreeMap::new();
        for (label, design) in &batch {
            let value = value_of(design, &run.spec)?;
            if value == 0.0 {
                return Err(CliError::Numerical(targdes::Error::PerfectDesign {
                    design: design.points().to_vec(),
                }));
            }
            if label == "greedy" || label == "exchange" {
                named_values.insert(if label == "greedy" { "greedy" } else { "exchange" }, value);
            }
            let eff = reference_value / value;
            let _ = writeln!(csv, "{label},{},{value},{eff}", run.token);
        }

        for (name, design) in [("greedy", &greedy), ("exchange", &refined)] {
            let candidate_value = named_values[name];
            let report = EfficiencyReportJson {
                criterion: &run.token,
                candidate: name,
                candidate_value,
                reference_value,
                efficiency: reference_value / candidate_value,
                restarts: search.restarts,
                seed,
            };
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            outputs.push((format!("{}efficiency_{name}.json", run.prefix), json));
            outputs.push((
                format!("{}design_{name}.csv", run.prefix),
                design_to_csv(design, &grid),
            ));
        }
        outputs.push((
            format!("{}design_reference.csv", run.prefix),
            design_to_csv(&reference, &grid),
        ));
        outputs.push((format!("{}efficiency.csv", run.prefix), csv));
    }

    let mut manifest = manifest_skeleton("efficiency", Some(seed), &outputs);
    manifest.config = Some(config);
    manifest.criteria = Some(runs.iter().map(|r| r.token.clone()).collect());
    manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_millis());
    write_all(out, &outputs, &manifest)
}

#[derive(Serialize)]
struct ScoresReport {
    threshold: f64,
    q_dist: Option<f64>,
    q_value: Option<f64>,
    q_area: f64,
    actual_level_set_size: usize,
    estimated_level_set_size: usize,
}

/// Score an estimated field against an actual field: the three quality
/// scores plus both extracted level sets.
pub fn cmd_scores(args: &ScoresArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let grid = Grid::new(args.grid).map_err(CliError::from_core)?;
    if !args.threshold.is_finite() {
        return Err(CliError::Config(format!(
            "threshold must be finite, got {}",
            args.threshold
        )));
    }
    let actual = read_field_csv(&args.actual, grid)?;
    let estimated = read_field_csv(&args.estimated, grid)?;

    let scores = quality_scores(&actual, &estimated, args.threshold);
    let actual_set = targdes::extract_level_set(&actual, args.threshold);
    let estimated_set = targdes::extract_level_set(&estimated, args.threshold);

    let report = ScoresReport {
        threshold: args.threshold,
        q_dist: scores.q_dist,
        q_value: scores.q_value,
        q_area: scores.q_area,
        actual_level_set_size: actual_set.len(),
        estimated_level_set_size: estimated_set.len(),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');

    let outputs: Outputs = vec![
        ("scores.json".into(), json),
        (
            "actual_level_set.csv".into(),
            level_set_to_csv(&actual_set, &grid),
        ),
        (
            "estimated_level_set.csv".into(),
            level_set_to_csv(&estimated_set, &grid),
        ),
    ];

    let mut manifest = manifest_skeleton("scores", None, &outputs);
    manifest.scores = Some(ScoresManifest {
        grid: args.grid,
        threshold: args.threshold,
        actual: args.actual.clone(),
        estimated: args.estimated.clone(),
    });
    manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_millis());
    write_all(&args.out, &outputs, &manifest)
}

/// Re-run a recorded manifest into a fresh output directory. The embedded
/// config is already resolved, so the rerun reproduces the original
/// output bytes.
pub fn cmd_replay(manifest_path: &Path, out: &Path) -> Result<(), CliError> {
    let manifest = RunManifest::load(manifest_path)?;
    match manifest.command.as_str() {
        "design" | "sequential" | "efficiency" => {
            let mut config = manifest.config.ok_or_else(|| {
                CliError::Config(format!(
                    "manifest for '{}' is missing its config",
                    manifest.command
                ))
            })?;
            if let Some(seed) = manifest.seed {
                config.search.seed = seed;
            }
            config.validate()?;
            match manifest.command.as_str() {
                "design" => design_with(config, out, &manifest.criteria),
                "sequential" => sequential_with(config, out, &manifest.criteria),
                _ => efficiency_with(config, out, &manifest.criteria),
            }
        }
        "scores" => {
            let scores = manifest.scores.ok_or_else(|| {
                CliError::Config("manifest for 'scores' is missing its arguments".into())
            })?;
            cmd_scores(&ScoresArgs {
                grid: scores.grid,
                threshold: scores.threshold,
                actual: scores.actual,
                estimated: scores.estimated,
                out: out.to_path_buf(),
            })
        }
        other => Err(CliError::Config(format!(
            "manifest names unknown command '{other}'"
        ))),
    }
}
