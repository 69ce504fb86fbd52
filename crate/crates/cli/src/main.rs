use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bethe_gibbs::dsets::DRecipe;
use bethe_gibbs::groundstate::Sign;
use bethe_gibbs::io::{EdgeSetFile, SpinConfigFile};
use bethe_gibbs::mc::{Dynamics, McConfig};
use bethe_gibbs::tree::TreeSpec;
use bethe_gibbs::CoverKind;
use bethe_gibbs_cli::experiment::load_spec;
use bethe_gibbs_cli::ops::{self, Outcome};
use bethe_gibbs_cli::{
    parse_json, read_text, run_experiment, sha256_hex, to_json_text, with_provenance, write_text, CliError, CliResult, Context, Provenance,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bethe-gibbs",
    version,
    about = "Frustrated ground states and Gibbs states of the Ising model on Cayley-tree balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DsetArg {
    /// Edge set file written by `gen`.
    #[arg(long)]
    dset: PathBuf,
}

#[derive(Args, Clone)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Physics {
    #[arg(long, default_value = "+", value_parser = parse_sign)]
    sign: Sign,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    /// Ball radius; defaults to the depth the edge set was generated on.
    #[arg(long)]
    depth: Option<u32>,
    /// Measure energies relative to the ground state.
    #[arg(long)]
    relative: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an edge set D.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: CoverKind,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        d_cap: Option<u32>,
        #[arg(long)]
        density: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Write the ground state configuration for D.
    Ground {
        #[command(flatten)]
        dset: DsetArg,
        #[arg(long, default_value = "+", value_parser = parse_sign)]
        sign: Sign,
        #[command(flatten)]
        out: Output,
    },
    /// Check every small connected excitation costs positive energy.
    VerifyGs {
        #[command(flatten)]
        dset: DsetArg,
        #[arg(long, default_value_t = 4)]
        mmax: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Count low-energy excitations through each deep vertex.
    Stability {
        #[command(flatten)]
        dset: DsetArg,
        #[arg(long)]
        ecap: f64,
        #[arg(long, default_value_t = 3)]
        mmax: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Check the linear contour energy bound.
    Peierls {
        #[command(flatten)]
        dset: DsetArg,
        #[arg(long, default_value_t = 4)]
        mmax: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        /// Random contours for the inductive-step check (0 to skip).
        #[arg(long, default_value_t = 200)]
        induction_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Count connected subgraphs through a vertex against (k+1)^(2n).
    Census {
        #[arg(long)]
        k: u32,
        /// Ball radius; must exceed `--n`. Defaults to `--n + 1`.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Decompose a configuration into contours.
    Contours {
        /// Spin configuration file.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        dset: DsetArg,
        #[arg(long, default_value = "+", value_parser = parse_sign)]
        sign: Sign,
        #[command(flatten)]
        out: Output,
    },
    /// Exact per-vertex magnetizations and agreement probabilities.
    Marginals {
        /// Free boundary instead of D (exploratory).
        #[arg(long)]
        free: bool,
        #[command(flatten)]
        dset: DsetArg,
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        out: Output,
    },
    /// Per-vertex free energy at matched depth.
    Freeenergy {
        #[command(flatten)]
        dset: DsetArg,
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        out: Output,
    },
    /// Depth scan of root agreement (diagnostic), beta scan, or a sweep file.
    Scan {
        /// Sweep config {k, depths, betas, dsets, seeds}.
        #[arg(long, conflicts_with_all = ["dset", "beta"])]
        config: Option<PathBuf>,
        #[arg(long)]
        dset: Option<PathBuf>,
        #[arg(long, default_value = "+", value_parser = parse_sign)]
        sign: Sign,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        /// Largest depth of the depth scan.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        relative: bool,
        /// Comma-separated betas for a minimum-agreement scan at fixed depth.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo estimates of the magnetizations.
    Mc {
        #[command(flatten)]
        dset: DsetArg,
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        sweeps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, default_value_t = 1)]
        thinning: u64,
        #[arg(long, value_parser = parse_dynamics, default_value = "glauber")]
        dynamics: Dynamics,
        /// Also compare against the exact values within this many standard errors.
        #[arg(long)]
        compare: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// DOT figure of a configuration with D in blue.
    Render {
        #[command(flatten)]
        dset: DsetArg,
        /// Configuration to draw; the ground state for `--sign` when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "+", value_parser = parse_sign)]
        sign: Sign,
        /// Second edge set drawn in green.
        #[arg(long)]
        highlight: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Run an experiment spec and write its manifest.
    Run {
        spec: PathBuf,
        /// Directory the spec's output_dir is resolved against (default: the spec's directory).
        #[arg(long)]
        base: Option<PathBuf>,
    },
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    s.parse().map_err(|e: bethe_gibbs::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<CoverKind, String> {
    s.parse().map_err(|e: bethe_gibbs::Error| e.to_string())
}

fn parse_dynamics(s: &str) -> Result<Dynamics, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown dynamics `{s}` (expected glauber or metropolis)"))
}

struct Loaded {
    file: EdgeSetFile,
    hash: String,
}

fn load_file(path: &Path) -> CliResult<Loaded> {
    let text = read_text(path)?;
    Ok(Loaded {
        file: parse_json(&text, &path.display().to_string())?,
        hash: sha256_hex(text.as_bytes()),
    })
}

fn emit(out: &Output, operation: &str, params: Value, outcome: Outcome) -> CliResult<()> {
    let provenance = Provenance::for_params(operation, params, outcome.rng);
    let mut body = outcome.body;
    if let (Some(passed), Value::Object(map)) = (outcome.passed, &mut body) {
        map.insert("passed".into(), json!(passed));
    }
    let text = to_json_text(&with_provenance(body, &provenance));
    write_out(out, &text)?;
    match outcome.passed {
        Some(false) => Err(CliError::Task(format!("{operation}: check did not hold"))),
        _ => Ok(()),
    }
}

fn write_out(out: &Output, text: &str) -> CliResult<()> {
    match &out.output {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn physics_params(p: &Physics, dset_hash: &str) -> Value {
    json!({
        "dset_sha256": dset_hash,
        "sign": p.sign,
        "beta": p.beta,
        "j": p.j,
        "depth": p.depth,
        "relative": p.relative,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Context::from_env()?;
    match cli.command {
        Command::Gen {
            kind,
            k,
            depth,
            seed,
            d_cap,
            density,
            out,
        } => {
            let recipe = DRecipe {
                kind,
                seed,
                d_cap,
                density,
            };
            let tree = ops::ball(&ctx, TreeSpec::new(k, depth))?;
            let params = json!({ "recipe": recipe, "k": k, "depth": depth });
            emit(&out, "dsets::generate", params, ops::gen(&tree, &recipe)?)
        }
        Command::Ground { dset, sign, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let params = json!({ "dset_sha256": loaded.hash, "sign": sign });
            emit(&out, "groundstate::build_sigma", params, ops::ground(&tree, &d, sign)?)
        }
        Command::VerifyGs { dset, mmax, j, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let params = json!({ "dset_sha256": loaded.hash, "m_max": mmax, "j": j });
            emit(
                &out,
                "groundstate::verify_ground_state",
                params,
                ops::verify_gs(&ctx, &tree, &d, j, mmax)?,
            )
        }
        Command::Stability { dset, ecap, mmax, j, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let params = json!({ "dset_sha256": loaded.hash, "e_cap": ecap, "m_max": mmax, "j": j });
            emit(
                &out,
                "groundstate::stability_uniformity",
                params,
                ops::stability(&ctx, &tree, &d, j, ecap, mmax)?,
            )
        }
        Command::Peierls {
            dset,
            mmax,
            j,
            induction_samples,
            seed,
            out,
        } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let params = json!({ "dset_sha256": loaded.hash, "m_max": mmax, "j": j, "induction_samples": induction_samples, "seed": seed });
            let outcome = ops::peierls(&ctx, &tree, &d, j, mmax, induction_samples, seed)?;
            emit(&out, "contour::verify_peierls", params, outcome)
        }
        Command::Census { k, depth, n, out } => {
            let params = json!({ "k": k, "depth": depth, "n": n });
            emit(
                &out,
                "contour::count_connected_subgraphs",
                params,
                ops::census(&ctx, k, n, 0, depth)?,
            )
        }
        Command::Contours { config, dset, sign, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let config_text = read_text(&config)?;
            let sigma_file: SpinConfigFile = parse_json(&config_text, &config.display().to_string())?;
            let sigma = sigma_file.to_config(&tree)?;
            let params = json!({ "dset_sha256": loaded.hash, "config_sha256": sha256_hex(config_text.as_bytes()), "sign": sign });
            emit(&out, "contour::extract_contours", params, ops::contours(&tree, &d, &sigma, sign)?)
        }
        Command::Marginals { free, dset, physics, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, physics.depth)?;
            let p = ops::params(physics.beta, physics.j, physics.relative)?;
            let mut params = physics_params(&physics, &loaded.hash);
            params["free"] = json!(free);
            if free {
                emit(&out, "gibbs::free_state_marginals", params, ops::free_marginals(&tree, &p)?)
            } else {
                emit(
                    &out,
                    "gibbs::exact_marginals",
                    params,
                    ops::marginals(&tree, &d, physics.sign, &p, None)?,
                )
            }
        }
        Command::Freeenergy { dset, physics, out } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, physics.depth)?;
            let p = ops::params(physics.beta, physics.j, physics.relative)?;
            let params = physics_params(&physics, &loaded.hash);
            emit(
                &out,
                "gibbs::free_energy_density",
                params,
                ops::freeenergy(&tree, &d, physics.sign, &p)?,
            )
        }
        Command::Scan {
            config,
            dset,
            sign,
            beta,
            j,
            depth,
            relative,
            betas,
            threshold,
            out,
        } => {
            if let Some(config) = config {
                return sweep(&ctx, &config, sign, j, relative, &out);
            }
            let path = dset.ok_or_else(|| CliError::Validation("scan needs --dset or --config".into()))?;
            let loaded = load_file(&path)?;
            if let Some(betas) = betas {
                let (tree, d) = ops::load_dset(&ctx, &loaded.file, depth)?;
                let params = json!({ "dset_sha256": loaded.hash, "sign": sign, "j": j, "betas": betas, "threshold": threshold });
                emit(
                    &out,
                    "gibbs::agreement_beta_scan",
                    params,
                    ops::beta_scan(&tree, &d, sign, j, &betas, threshold)?,
                )
            } else {
                let beta = beta.ok_or_else(|| CliError::Validation("scan needs --beta or --betas".into()))?;
                let (tree, d) = ops::load_dset(&ctx, &loaded.file, depth)?;
                let depths: Vec<u32> = (1..=tree.depth()).collect();
                let p = ops::params(beta, j, relative)?;
                let params =
                    json!({ "dset_sha256": loaded.hash, "sign": sign, "beta": beta, "j": j, "depths": depths, "relative": relative });
                emit(
                    &out,
                    "gibbs::depth_scan",
                    params,
                    ops::depth_scan(&tree, &d, sign, &p, &depths, None)?,
                )
            }
        }
        Command::Mc {
            dset,
            physics,
            sweeps,
            seed,
            burn_in,
            thinning,
            dynamics,
            compare,
            out,
        } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, physics.depth)?;
            let p = ops::params(physics.beta, physics.j, physics.relative)?;
            let mut config = McConfig::new(sweeps, seed);
            config.thinning = thinning;
            config.dynamics = dynamics;
            if let Some(b) = burn_in {
                config.burn_in = b;
            }
            let mut params = physics_params(&physics, &loaded.hash);
            params["mc"] = json!(config);
            params["compare"] = json!(compare);
            emit(&out, "mc::sample", params, ops::mc(&tree, &d, physics.sign, &p, &config, compare)?)
        }
        Command::Render {
            dset,
            config,
            sign,
            highlight,
            out,
        } => {
            let loaded = load_file(&dset.dset)?;
            let (tree, d) = ops::load_dset(&ctx, &loaded.file, None)?;
            let sigma = match &config {
                Some(path) => {
                    let file: SpinConfigFile = parse_json(&read_text(path)?, &path.display().to_string())?;
                    file.to_config(&tree)?
                }
                None => bethe_gibbs::groundstate::build_sigma(&tree, &d, sign)?,
            };
            let extra = match &highlight {
                Some(path) => Some(load_file(path)?),
                None => None,
            };
            let highlight_set = extra.as_ref().map(|h| h.file.to_set(&tree)).transpose()?;
            let params = json!({
                "dset_sha256": loaded.hash,
                "sign": sign,
                "config": config.is_some(),
                "highlight_sha256": extra.as_ref().map(|h| &h.hash),
            });
            let provenance = Provenance::for_params("render::render_config", params, None);
            let dot = ops::render(&tree, &d, &sigma, highlight_set.as_ref());
            write_out(&out, &format!("// {} spec {}\n{dot}", provenance.tool, provenance.spec_hash))
        }
        Command::Run { spec, base } => {
            let text = read_text(&spec)?;
            let (parsed, warnings) = load_spec(&text)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let base = base.unwrap_or_else(|| spec.parent().map(Path::to_path_buf).unwrap_or_default());
            let manifest = run_experiment(&ctx, &parsed, &text, warnings, &base)?;
            for entry in &manifest.tasks {
                let status = serde_json::to_value(&entry.status).unwrap();
                eprintln!(
                    "{:>3} {:<18} {:<8} {}",
                    entry.index,
                    serde_json::to_value(entry.op).unwrap().as_str().unwrap_or(""),
                    status.as_str().unwrap_or(""),
                    entry.error.as_deref().or(entry.label.as_deref()).unwrap_or("")
                );
            }
            if manifest.any_failed() {
                Err(CliError::Task(format!("experiment `{}` had failing tasks", manifest.name)))
            } else {
                Ok(())
            }
        }
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    k: u32,
    depths: Vec<u32>,
    betas: Vec<f64>,
    dsets: Vec<CoverKind>,
    #[serde(default)]
    seeds: Vec<u64>,
}

/// Free energy, root magnetization and minimum agreement for every point of
/// the sweep grid. Sets are built on the deepest ball and restricted.
fn sweep(ctx: &Context, path: &Path, sign: Sign, j: f64, relative: bool, out: &Output) -> CliResult<()> {
    let text = read_text(path)?;
    let config: SweepConfig = parse_json(&text, &path.display().to_string())?;
    let seeds = if config.seeds.is_empty() { vec![0] } else { config.seeds.clone() };
    let max_depth = *config
        .depths
        .iter()
        .max()
        .ok_or_else(|| CliError::Validation("field `depths`: empty".into()))?;
    let big = ops::ball(ctx, TreeSpec::new(config.k, max_depth))?;
    let mut records = Vec::new();
    for &kind in &config.dsets {
        for &seed in &seeds {
            let d_big = DRecipe::new(kind, seed).build(&big)?;
            for &depth in &config.depths {
                let tree = ops::ball(ctx, TreeSpec::new(config.k, depth))?;
                let d = d_big.restrict_to(&tree)?;
                for &beta in &config.betas {
                    let p = ops::params(beta, j, relative)?;
                    let agreement = bethe_gibbs::gibbs::agreement_profile(&tree, &d, sign, &p)?;
                    records.push(json!({
                        "kind": kind,
                        "seed": seed,
                        "depth": depth,
                        "beta": beta,
                        "free_energy_per_vertex": bethe_gibbs::gibbs::free_energy_density(&tree, &d, sign, &p)?,
                        "root_agreement": agreement[0],
                        "min_interior_agreement": bethe_gibbs::gibbs::min_interior_agreement(&tree, &agreement),
                    }));
                }
            }
        }
    }
    let params = json!({ "config_sha256": sha256_hex(text.as_bytes()), "sign": sign, "j": j, "relative": relative });
    emit(
        out,
        "gibbs::sweep",
        params,
        Outcome {
            body: json!({ "records": records }),
            passed: None,
            rng: None,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("bethe-gibbs: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
