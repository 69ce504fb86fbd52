//! Experiment specs: a list of tasks over grids of trees, edge-set recipes
//! and parameters, run in parallel and recorded in an ordered manifest.

use std::path::{Path, PathBuf};

use bethe_gibbs::dsets::DRecipe;
use bethe_gibbs::groundstate::{build_sigma, Sign};
use bethe_gibbs::mc::{sample, Dynamics, McConfig};
use bethe_gibbs::tree::{Tree, TreeSpec};
use bethe_gibbs::{admissible, CoverKind, EdgeSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ops::{self, Outcome};
use crate::{sha256_hex, to_json_text, with_provenance, write_text, CliError, CliResult, Context, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Gen,
    Ground,
    VerifyGs,
    Stability,
    Peierls,
    Census,
    Marginals,
    FreeMarginals,
    Freeenergy,
    DepthScan,
    BetaScan,
    Mc,
    Render,
    Bijection,
    ContourIdentity,
    EnumerationCheck,
    FreeEnergyOrder,
}

impl Op {
    fn name(self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }
}

/// One task. Grid fields left out fall back to the experiment's defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<TreeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsets: Option<Vec<DRecipe>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    /// Seeded cases for `bijection`, random sets for `free-energy-order`,
    /// induction samples for `peierls`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<Dynamics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sigma: Option<f64>,
    /// Required pooled fraction of Monte Carlo estimates within `n_sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_cap: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Second edge set drawn green by `render`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<DRecipe>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub tree: TreeSpec,
    #[serde(default)]
    pub dsets: Vec<DRecipe>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default)]
    pub depths: Vec<u32>,
    pub tasks: Vec<Task>,
    pub output_dir: PathBuf,
}

fn default_j() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Data task finished.
    Ok,
    /// Check task finished and its property held.
    Passed,
    /// Check task finished and its property failed.
    Failed,
    /// The task could not run.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub op: Op,
    pub label: Option<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub tool: &'static str,
    pub spec_hash: String,
    pub warnings: Vec<String>,
    pub tasks: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn any_failed(&self) -> bool {
        self.tasks.iter().any(|t| matches!(t.status, Status::Failed | Status::Error))
    }
}

/// Parses and checks a spec; returns it with admissibility warnings.
pub fn load_spec(text: &str) -> CliResult<(ExperimentSpec, Vec<String>)> {
    let spec: ExperimentSpec = crate::parse_json(text, "experiment spec")?;
    let warnings = validate(&spec)?;
    Ok((spec, warnings))
}

fn validate(spec: &ExperimentSpec) -> CliResult<Vec<String>> {
    let bad = |field: String, reason: &str| CliError::Validation(format!("field `{field}`: {reason}"));
    spec.tree.validate().map_err(|e| bad("tree".into(), &e.to_string()))?;
    let mut warnings = Vec::new();
    let check_betas = |field: String, betas: &[f64]| -> CliResult<()> {
        match betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            Some(b) => Err(bad(field, &format!("beta {b} must be positive and finite"))),
            None => Ok(()),
        }
    };
    check_betas("betas".into(), &spec.betas)?;
    for (i, task) in spec.tasks.iter().enumerate() {
        if let Some(trees) = &task.trees {
            for (t, tree) in trees.iter().enumerate() {
                tree.validate().map_err(|e| bad(format!("tasks[{i}].trees[{t}]"), &e.to_string()))?;
            }
        }
        if let Some(betas) = &task.betas {
            check_betas(format!("tasks[{i}].betas"), betas)?;
        }
        for (t, recipe) in task.dsets.iter().flatten().enumerate() {
            if recipe.kind == CoverKind::FiniteSet {
                return Err(bad(format!("tasks[{i}].dsets[{t}].kind"), "finite sets cannot be generated"));
            }
        }
        let dsets = if task.op == Op::Census {
            Vec::new()
        } else {
            resolve_dsets(spec, task)
        };
        for tree in resolve_trees(spec, task) {
            for recipe in &dsets {
                let d_max = match recipe.kind {
                    CoverKind::Empty => 0,
                    CoverKind::PathCover => 2,
                    CoverKind::RandomSparse => recipe.d_cap.unwrap_or(1),
                    _ => 1,
                };
                if !admissible(d_max, tree.k) && recipe.kind != CoverKind::Empty {
                    warnings.push(format!(
                        "tasks[{i}]: {} sets on k={} have d_max={d_max}, which is not admissible",
                        recipe.kind, tree.k
                    ));
                }
            }
        }
    }
    warnings.sort();
    warnings.dedup();
    Ok(warnings)
}

fn resolve_trees(spec: &ExperimentSpec, task: &Task) -> Vec<TreeSpec> {
    task.trees.clone().unwrap_or_else(|| vec![spec.tree])
}

fn resolve_dsets(spec: &ExperimentSpec, task: &Task) -> Vec<DRecipe> {
    task.dsets.clone().unwrap_or_else(|| spec.dsets.clone())
}

fn resolve_betas(spec: &ExperimentSpec, task: &Task) -> Vec<f64> {
    task.betas.clone().unwrap_or_else(|| spec.betas.clone())
}

fn require<T>(value: Option<T>, field: &str, op: Op) -> CliResult<T> {
    value.ok_or_else(|| CliError::Validation(format!("task `{}` needs `{field}`", op.name())))
}

struct TaskOutput {
    json: Value,
    figures: Vec<(String, String)>,
    passed: Option<bool>,
}

/// Runs every (tree, dset, beta) point of a task and collects the records.
fn run_task(ctx: &Context, spec: &ExperimentSpec, spec_hash: &str, task: &Task) -> CliResult<TaskOutput> {
    let trees = resolve_trees(spec, task);
    let dsets = resolve_dsets(spec, task);
    let betas = resolve_betas(spec, task);
    let j = task.j.unwrap_or(spec.j);
    let sign = task.sign.unwrap_or(Sign::Plus);
    let relative = task.relative.unwrap_or(true);
    let op = task.op;

    let mut records = Vec::new();
    let mut figures = Vec::new();
    let mut passed: Option<bool> = None;
    let mut rng = None;
    let mut note = |outcome: Outcome, point: Value, records: &mut Vec<Value>| {
        if let Some(p) = outcome.passed {
            passed = Some(passed.unwrap_or(true) && p);
        }
        rng = rng.or(outcome.rng);
        records.push(json!({ "point": point, "result": outcome.body }));
    };
    let build = |tree: &Tree, recipe: &DRecipe| -> CliResult<EdgeSet> { Ok(recipe.build(tree)?) };

    match op {
        Op::Census => {
            for t in &trees {
                let n_max = require(task.n_max, "n_max", op)?;
                note(ops::census(ctx, t.k, n_max, 2, None)?, json!({ "k": t.k }), &mut records);
            }
        }
        Op::FreeEnergyOrder => {
            for t in &trees {
                let tree = ops::ball(ctx, *t)?;
                for &beta in &betas {
                    let p = ops::params(beta, j, false)?;
                    let outcome = ops::free_energy_order(
                        &tree,
                        &dsets,
                        &p,
                        task.count.unwrap_or(20),
                        task.d_cap.unwrap_or(1),
                        task.density.unwrap_or(0.5),
                    )?;
                    note(outcome, json!({ "tree": t, "beta": beta }), &mut records);
                }
            }
        }
        Op::Bijection => {
            for t in &trees {
                let tree = ops::ball(ctx, *t)?;
                note(
                    ops::bijection(&tree, &dsets, task.count.unwrap_or(100))?,
                    json!({ "tree": t }),
                    &mut records,
                );
            }
        }
        Op::Mc => {
            let n_sigma = task.n_sigma.unwrap_or(3.0);
            let (mut within, mut total, mut reproducible) = (0u64, 0u64, true);
            for t in &trees {
                let tree = ops::ball(ctx, *t)?;
                for recipe in &dsets {
                    let d = build(&tree, recipe)?;
                    for &beta in &betas {
                        let p = ops::params(beta, j, relative)?;
                        let sweeps = require(task.sweeps, "sweeps", op)?;
                        let mut config = McConfig::new(sweeps, task.seed.unwrap_or(0));
                        if let Some(b) = task.burn_in {
                            config.burn_in = b;
                        }
                        if let Some(dy) = task.dynamics {
                            config.dynamics = dy;
                        }
                        let outcome = ops::mc(&tree, &d, sign, &p, &config, Some(n_sigma))?;
                        within += outcome.body["interior_within"].as_u64().unwrap_or(0);
                        total += outcome.body["interior_total"].as_u64().unwrap_or(0);
                        let short = McConfig {
                            sweeps: (sweeps / 50).max(config.burn_in + 1),
                            ..config
                        };
                        reproducible &= ops::same_estimates(&sample(&tree, &d, sign, &p, &short)?, &sample(&tree, &d, sign, &p, &short)?);
                        note(outcome, json!({ "tree": t, "dset": recipe, "beta": beta }), &mut records);
                    }
                }
            }
            let fraction = if total > 0 { within as f64 / total as f64 } else { 0.0 };
            let required = task.fraction.unwrap_or(0.95);
            let ok = fraction >= required && reproducible;
            let summary = json!({
                "pooled_within": within,
                "pooled_total": total,
                "pooled_fraction": fraction,
                "required_fraction": required,
                "reruns_bit_identical": reproducible,
            });
            return Ok(TaskOutput {
                json: json!({ "records": records, "summary": summary, "rng": rng }),
                figures,
                passed: Some(ok),
            });
        }
        _ => {
            for t in &trees {
                let tree = ops::ball(ctx, *t)?;
                for recipe in &dsets {
                    let d = build(&tree, recipe)?;
                    let point = json!({ "tree": t, "dset": recipe });
                    match op {
                        Op::Gen => note(ops::gen(&tree, recipe)?, point, &mut records),
                        Op::Ground => note(ops::ground(&tree, &d, sign)?, point, &mut records),
                        Op::VerifyGs => note(ops::verify_gs(ctx, &tree, &d, j, task.m_max.unwrap_or(4))?, point, &mut records),
                        Op::Stability => {
                            let e_cap = require(task.e_cap, "e_cap", op)?;
                            note(
                                ops::stability(ctx, &tree, &d, j, e_cap, task.m_max.unwrap_or(3))?,
                                point,
                                &mut records,
                            )
                        }
                        Op::Peierls => {
                            let outcome = ops::peierls(
                                ctx,
                                &tree,
                                &d,
                                j,
                                task.m_max.unwrap_or(4),
                                task.count.unwrap_or(0) as usize,
                                task.seed.unwrap_or(0),
                            )?;
                            note(outcome, point, &mut records)
                        }
                        Op::Render => {
                            let sigma = build_sigma(&tree, &d, sign)?;
                            let highlight = task.highlight.map(|h| build(&tree, &h)).transpose()?;
                            let name = format!("k{}-r{}-{}-{}.dot", t.k, t.depth, recipe.kind, recipe.seed);
                            let dot = ops::render(&tree, &d, &sigma, highlight.as_ref());
                            let header = format!("// {} spec {spec_hash}\n", bethe_gibbs::TOOL_VERSION);
                            figures.push((name.clone(), header + &dot));
                            records.push(json!({ "point": point, "figure": name }));
                        }
                        Op::DepthScan => {
                            let depths = task.depths.clone().unwrap_or_else(|| spec.depths.clone());
                            for &beta in &betas {
                                let p = ops::params(beta, j, relative)?;
                                let outcome = ops::depth_scan(&tree, &d, sign, &p, &depths, task.tolerance)?;
                                note(outcome, json!({ "tree": t, "dset": recipe, "beta": beta }), &mut records);
                            }
                        }
                        Op::BetaScan => {
                            let outcome = ops::beta_scan(&tree, &d, sign, j, &betas, task.threshold.unwrap_or(0.9))?;
                            note(outcome, point, &mut records)
                        }
                        Op::ContourIdentity => {
                            let outcome = ops::contour_identity(ctx, &tree, &d, j, &betas, task.tolerance.unwrap_or(1e-10))?;
                            note(outcome, point, &mut records)
                        }
                        Op::EnumerationCheck => {
                            let outcome = ops::enumeration_check(&tree, &d, j, &betas, task.tolerance.unwrap_or(1e-10))?;
                            note(outcome, point, &mut records)
                        }
                        Op::Marginals | Op::Freeenergy | Op::FreeMarginals => {
                            for &beta in &betas {
                                let p = ops::params(beta, j, relative)?;
                                let point = json!({ "tree": t, "dset": recipe, "beta": beta });
                                let outcome = match op {
                                    Op::Marginals => ops::marginals(&tree, &d, sign, &p, task.threshold)?,
                                    Op::Freeenergy => ops::freeenergy(&tree, &d, sign, &p)?,
                                    _ => ops::free_marginals(&tree, &p)?,
                                };
                                note(outcome, point, &mut records);
                            }
                        }
                        Op::Census | Op::FreeEnergyOrder | Op::Bijection | Op::Mc => unreachable!("handled above"),
                    }
                }
            }
        }
    }
    Ok(TaskOutput {
        json: json!({ "records": records, "rng": rng }),
        figures,
        passed,
    })
}

fn file_name(index: usize, task: &Task) -> String {
    match &task.label {
        Some(label) => format!("{index:02}-{}-{label}", task.op.name()),
        None => format!("{index:02}-{}", task.op.name()),
    }
}

/// Runs every task of `spec` (tasks in parallel, manifest in task order)
/// and writes outputs plus `manifest.json` under `spec.output_dir`, resolved
/// against `base`.
pub fn run_experiment(ctx: &Context, spec: &ExperimentSpec, spec_text: &str, warnings: Vec<String>, base: &Path) -> CliResult<Manifest> {
    let spec_hash = sha256_hex(spec_text.as_bytes());
    let out_dir = base.join(&spec.output_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Task(format!("creating {}: {e}", out_dir.display())))?;

    let results: Vec<CliResult<TaskOutput>> = spec.tasks.par_iter().map(|task| run_task(ctx, spec, &spec_hash, task)).collect();

    let mut entries = Vec::with_capacity(results.len());
    for (index, (task, result)) in spec.tasks.iter().zip(results).enumerate() {
        let stem = file_name(index, task);
        let mut entry = ManifestEntry {
            index,
            op: task.op,
            label: task.label.clone(),
            status: Status::Ok,
            error: None,
            outputs: Vec::new(),
        };
        match result {
            Ok(output) => {
                entry.status = match output.passed {
                    Some(true) => Status::Passed,
                    Some(false) => Status::Failed,
                    None => Status::Ok,
                };
                let rng = output.json["rng"].as_str().map(|_| bethe_gibbs::rng::RNG_ALGORITHM);
                let provenance = Provenance {
                    tool: bethe_gibbs::TOOL_VERSION,
                    spec_hash: spec_hash.clone(),
                    operation: task.op.name(),
                    params: serde_json::to_value(task).expect("tasks serialize"),
                    rng,
                };
                let mut body = output.json;
                if let Value::Object(map) = &mut body {
                    map.remove("rng");
                    map.insert("passed".into(), json!(output.passed));
                }
                let text = to_json_text(&with_provenance(body, &provenance));
                let mut files = vec![(format!("{stem}.json"), text)];
                files.extend(output.figures.into_iter().map(|(name, dot)| (format!("{stem}-{name}"), dot)));
                for (name, text) in files {
                    write_text(&out_dir.join(&name), &text)?;
                    entry.outputs.push(OutputFile {
                        path: name,
                        sha256: sha256_hex(text.as_bytes()),
                    });
                }
            }
            Err(err) => {
                entry.status = Status::Error;
                entry.error = Some(err.to_string());
            }
        }
        entries.push(entry);
    }

    let manifest = Manifest {
        name: spec.name.clone(),
        tool: bethe_gibbs::TOOL_VERSION,
        spec_hash,
        warnings,
        tasks: entries,
    };
    let text = to_json_text(&serde_json::to_value(&manifest).expect("manifest serializes"));
    write_text(&out_dir.join("manifest.json"), &text)?;
    Ok(manifest)
}
