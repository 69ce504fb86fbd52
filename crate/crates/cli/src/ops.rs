//! Operations shared by the subcommands and experiment tasks. Each returns
//! a JSON body and, for checks, whether the check held.

use bethe_gibbs::contour::{
    configuration_sum, contour_family_sum, count_connected_subgraphs, extract_contours, induction_step_check, subgraph_bound,
    verify_peierls,
};
use bethe_gibbs::dsets::{gen_random_sparse, validate_cover, DRecipe};
use bethe_gibbs::gibbs::{
    agreement_beta_scan, agreement_profile, depth_scan_set, enumerate_exact, exact_marginals, free_energy_density, free_state_marginals,
    log_partition, min_interior_agreement, GibbsParams,
};
use bethe_gibbs::groundstate::{build_sigma, recover_d, stability_uniformity, verify_ground_state, Coupling, Sign, SpinConfig};
use bethe_gibbs::io::{contour_addresses, vertex_addresses, EdgeSetFile, SpinConfigFile};
use bethe_gibbs::mc::{sample, within_error, McConfig, McEstimates};
use bethe_gibbs::render::render_config;
use bethe_gibbs::rng::RNG_ALGORITHM;
use bethe_gibbs::tree::{build_ball_with, Tree, TreeSpec};
use bethe_gibbs::{admissible, EdgeSet};
use serde_json::{json, Value};

use crate::{CliError, CliResult, Context};

/// Output of one operation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: Value,
    /// `Some` for operations that check a property.
    pub passed: Option<bool>,
    pub rng: Option<&'static str>,
}

impl Outcome {
    fn data(body: Value) -> Self {
        Self {
            body,
            passed: None,
            rng: None,
        }
    }

    fn check(body: Value, passed: bool) -> Self {
        Self {
            body,
            passed: Some(passed),
            rng: None,
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn ball(ctx: &Context, spec: TreeSpec) -> CliResult<Tree> {
    Ok(build_ball_with(spec, ctx.tree_limits)?)
}

/// Loads an edge set file, restricted to `depth` when one is given.
pub fn load_dset(ctx: &Context, file: &EdgeSetFile, depth: Option<u32>) -> CliResult<(Tree, EdgeSet)> {
    let full = ball(ctx, file.tree_spec())?;
    let d = file.to_set(&full)?;
    match depth {
        None => Ok((full, d)),
        Some(r) if r == full.depth() => Ok((full, d)),
        Some(r) if r < full.depth() => {
            let tree = ball(ctx, TreeSpec::new(file.k, r))?;
            let d = d.restrict_to(&tree)?;
            Ok((tree, d))
        }
        Some(r) => Err(CliError::Validation(format!(
            "--depth {r} exceeds the depth {} the edge set was generated on",
            full.depth()
        ))),
    }
}

pub fn params(beta: f64, j: f64, relative: bool) -> CliResult<GibbsParams> {
    Ok(GibbsParams::new(beta, Coupling::new(j)?, relative)?)
}

fn set_summary(tree: &Tree, d: &EdgeSet) -> Value {
    json!({
        "k": tree.k(),
        "depth": tree.depth(),
        "kind": d.kind(),
        "seed": d.seed(),
        "edges": d.len(),
        "d_max": d.d_max(),
        "admissible": admissible(d.d_max(), tree.k()),
    })
}

pub fn gen(tree: &Tree, recipe: &DRecipe) -> CliResult<Outcome> {
    let d = recipe.build(tree)?;
    let primary = recipe.primary(tree);
    let report = validate_cover(tree, &d, d.kind(), primary.as_ref());
    let mut body = to_value(&EdgeSetFile::from_set(tree, &d));
    let failed: Vec<&str> = report.predicates.iter().filter(|p| !p.passed).map(|p| p.name).collect();
    let extra = json!({
        "d_max": d.d_max(),
        "admissible": admissible(d.d_max(), tree.k()),
        "validation": { "passed": report.passed, "failed_predicates": failed },
    });
    merge(&mut body, extra);
    Ok(Outcome::data(body))
}

pub fn ground(tree: &Tree, d: &EdgeSet, sign: Sign) -> CliResult<Outcome> {
    let sigma = build_sigma(tree, d, sign)?;
    Ok(Outcome::data(to_value(&SpinConfigFile::from_config(&sigma))))
}

pub fn verify_gs(ctx: &Context, tree: &Tree, d: &EdgeSet, j: f64, m_max: usize) -> CliResult<Outcome> {
    let report = verify_ground_state(tree, d, Coupling::new(j)?, m_max, ctx.enumeration)?;
    let mut body = to_value(&report);
    body["argmin"] = to_value(&vertex_addresses(tree, &report.argmin));
    Ok(Outcome::check(body, report.all_positive))
}

pub fn stability(ctx: &Context, tree: &Tree, d: &EdgeSet, j: f64, e_cap: f64, m_max: usize) -> CliResult<Outcome> {
    let report = stability_uniformity(tree, d, Coupling::new(j)?, e_cap, m_max, ctx.enumeration)?;
    let uniform = report.uniform;
    Ok(Outcome::check(to_value(&report), uniform))
}

pub fn peierls(ctx: &Context, tree: &Tree, d: &EdgeSet, j: f64, m_max: usize, induction_samples: usize, seed: u64) -> CliResult<Outcome> {
    let report = verify_peierls(tree, d, Coupling::new(j)?, m_max, ctx.enumeration)?;
    let mut body = to_value(&report);
    body["tightest"] = to_value(&vertex_addresses(tree, &report.tightest));
    let mut passed = report.holds;
    if induction_samples > 0 {
        let induction = induction_step_check(tree, d, induction_samples, m_max.max(2), seed)?;
        passed &= induction.passed;
        body["induction"] = to_value(&induction);
    }
    Ok(Outcome {
        body,
        passed: Some(passed),
        rng: (induction_samples > 0).then_some(RNG_ALGORITHM),
    })
}

/// Connected-subgraph counts for `n = 0..=n_max`, at every vertex of the top
/// `base_generations` generations of a ball deep enough for all of them.
/// Subgraph counts through every base vertex of generation at most
/// `base_generations`. With `depth` set, the bases are every vertex at least
/// `n_max + 1` generations above the boundary.
pub fn census(ctx: &Context, k: u32, n_max: u32, base_generations: u32, depth: Option<u32>) -> CliResult<Outcome> {
    let (depth, base_generations) = match depth {
        Some(r) if r > n_max => (r, r - n_max - 1),
        Some(r) => {
            return Err(CliError::Validation(format!(
                "field `depth`: radius {r} cannot hold subgraphs with {n_max} edges; need at least {}",
                n_max + 1
            )))
        }
        None => (n_max + base_generations + 1, base_generations),
    };
    let tree = ball(ctx, TreeSpec::new(k, depth))?;
    let bases: Vec<_> = tree.vertices().filter(|&v| tree.generation(v) <= base_generations).collect();
    let mut rows = Vec::new();
    let mut passed = true;
    for n in 0..=n_max {
        let mut counts = Vec::with_capacity(bases.len());
        for &v in &bases {
            counts.push(count_connected_subgraphs(&tree, v, n, ctx.enumeration)?);
        }
        let base_independent = counts.windows(2).all(|w| w[0] == w[1]);
        let bound = subgraph_bound(k, n);
        let within = counts.iter().all(|&c| u128::from(c) <= bound);
        passed &= base_independent && within;
        rows.push(json!({
            "n": n,
            "count": counts[0],
            "bound": bound.to_string(),
            "within_bound": within,
            "base_independent": base_independent,
        }));
    }
    Ok(Outcome::check(
        json!({ "k": k, "depth": tree.depth(), "bases": bases.len(), "rows": rows }),
        passed,
    ))
}

pub fn contours(tree: &Tree, d: &EdgeSet, sigma: &SpinConfig, sign: Sign) -> CliResult<Outcome> {
    let reference = build_sigma(tree, d, sign)?;
    let found = extract_contours(tree, sigma, &reference)?;
    let excess: Vec<i64> = found.iter().map(|c| c.excess_units(tree, d)).collect();
    Ok(Outcome::data(json!({
        "k": tree.k(),
        "depth": tree.depth(),
        "sign": sign,
        "contours": contour_addresses(tree, &found),
        "excess_units": excess,
    })))
}

pub fn marginals(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, threshold: Option<f64>) -> CliResult<Outcome> {
    let m = exact_marginals(tree, d, sign, params)?;
    let agreement = agreement_profile(tree, d, sign, params)?;
    let min_agreement = min_interior_agreement(tree, &agreement);
    let vertices: Vec<Value> = tree
        .vertices()
        .map(|v| {
            json!({
                "address": tree.address(v),
                "interior": tree.is_interior(v),
                "magnetization": m[v.index()],
                "agreement": agreement[v.index()],
            })
        })
        .collect();
    let mut body = json!({
        "set": set_summary(tree, d),
        "sign": sign,
        "log_partition": log_partition(tree, d, sign, params)?,
        "min_interior_agreement": min_agreement,
        "vertices": vertices,
    });
    Ok(match threshold {
        Some(t) => {
            body["threshold"] = json!(t);
            Outcome::check(body, min_agreement >= t)
        }
        None => Outcome::data(body),
    })
}

/// Free-boundary marginals and root correlations, for exploring the free
/// state; nothing is asserted.
pub fn free_marginals(tree: &Tree, params: &GibbsParams) -> CliResult<Outcome> {
    let m = free_state_marginals(tree, params);
    let corr = bethe_gibbs::gibbs::root_correlations(tree, bethe_gibbs::gibbs::Boundary::Free, params);
    let vertices: Vec<Value> = tree
        .vertices()
        .map(|v| json!({ "address": tree.address(v), "magnetization": m[v.index()], "root_correlation": corr[v.index()] }))
        .collect();
    Ok(Outcome::data(json!({
        "boundary": "free",
        "note": "exploratory; no claim about the decomposition of the free state is tested",
        "k": tree.k(),
        "depth": tree.depth(),
        "vertices": vertices,
    })))
}

pub fn freeenergy(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> CliResult<Outcome> {
    let absolute = GibbsParams {
        relative_energy: false,
        ..*params
    };
    let relative = GibbsParams {
        relative_energy: true,
        ..*params
    };
    Ok(Outcome::data(json!({
        "set": set_summary(tree, d),
        "sign": sign,
        "definition": "-ln Z / (beta |V_r|), absolute energies, boundary generation clamped",
        "vertices": tree.vertex_count(),
        "free_energy_per_vertex": free_energy_density(tree, d, sign, params)?,
        "log_partition_absolute": log_partition(tree, d, sign, &absolute)?,
        "log_partition_relative": log_partition(tree, d, sign, &relative)?,
    })))
}

pub fn depth_scan(
    tree: &Tree,
    d: &EdgeSet,
    sign: Sign,
    params: &GibbsParams,
    depths: &[u32],
    tolerance: Option<f64>,
) -> CliResult<Outcome> {
    let scan = depth_scan_set(tree, d, sign, params, depths)?;
    let mut body = to_value(&scan);
    Ok(match tolerance {
        Some(tol) => {
            body["tolerance"] = json!(tol);
            let converged = scan.last_delta.is_some_and(|x| x.abs() < tol);
            body["converged"] = json!(converged);
            Outcome::check(body, converged)
        }
        None => Outcome::data(body),
    })
}

pub fn beta_scan(tree: &Tree, d: &EdgeSet, sign: Sign, j: f64, betas: &[f64], threshold: f64) -> CliResult<Outcome> {
    let scan = agreement_beta_scan(tree, d, sign, Coupling::new(j)?, betas, threshold)?;
    let mut body = to_value(&scan);
    body["set"] = set_summary(tree, d);
    body["note"] = json!("exploration of the low-temperature threshold; no value is asserted");
    Ok(Outcome::data(body))
}

fn estimates_bits(e: &McEstimates) -> Vec<u64> {
    e.magnetization.iter().chain(&e.std_error).map(|x| x.to_bits()).collect()
}

/// Monte Carlo estimates; with `compare`, also the exact values and how many
/// interior vertices fall within `n_sigma` standard errors.
pub fn mc(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, config: &McConfig, n_sigma: Option<f64>) -> CliResult<Outcome> {
    let est = sample(tree, d, sign, params, config)?;
    let mut body = json!({
        "set": set_summary(tree, d),
        "sign": sign,
        "config": config,
        "estimates": est,
    });
    if let Some(n_sigma) = n_sigma {
        let exact = exact_marginals(tree, d, sign, params)?;
        let interior: Vec<_> = tree.interior_vertices().collect();
        let within = interior
            .iter()
            .filter(|v| within_error(est.magnetization[v.index()], est.std_error[v.index()], exact[v.index()], n_sigma))
            .count();
        body["exact"] = json!(exact);
        body["n_sigma"] = json!(n_sigma);
        body["interior_within"] = json!(within);
        body["interior_total"] = json!(interior.len());
    }
    Ok(Outcome {
        body,
        passed: None,
        rng: Some(RNG_ALGORITHM),
    })
}

pub fn render(tree: &Tree, d: &EdgeSet, sigma: &SpinConfig, highlight: Option<&EdgeSet>) -> String {
    render_config(tree, sigma, d, highlight)
}

/// `recover_D(build_sigma(D, +)) == D` for `count` seeded sets cycling
/// through `recipes`.
pub fn bijection(tree: &Tree, recipes: &[DRecipe], count: u64) -> CliResult<Outcome> {
    if recipes.is_empty() {
        return Err(CliError::Validation("bijection needs at least one dset".into()));
    }
    let mut mismatches = Vec::new();
    for i in 0..count {
        let recipe = DRecipe {
            seed: i,
            ..recipes[i as usize % recipes.len()]
        };
        let d = recipe.build(tree)?;
        let back = recover_d(tree, &build_sigma(tree, &d, Sign::Plus)?)?;
        if back.edges().ne(d.edges()) {
            mismatches.push(to_value(&recipe));
        }
    }
    let passed = mismatches.is_empty();
    Ok(Outcome::check(
        json!({ "k": tree.k(), "depth": tree.depth(), "cases": count, "mismatches": mismatches }),
        passed,
    ))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn contour_identity(ctx: &Context, tree: &Tree, d: &EdgeSet, j: f64, betas: &[f64], tolerance: f64) -> CliResult<Outcome> {
    let coupling = Coupling::new(j)?;
    let mut rows = Vec::new();
    let mut passed = true;
    for &beta in betas {
        let direct = configuration_sum(tree, d, coupling, beta)?;
        let families = contour_family_sum(tree, d, coupling, beta, ctx.enumeration)?;
        let err = rel_err(direct, families);
        passed &= err <= tolerance;
        rows.push(json!({ "beta": beta, "configuration_sum": direct, "contour_family_sum": families, "relative_error": err }));
    }
    Ok(Outcome::check(
        json!({ "set": set_summary(tree, d), "interior": tree.interior_count(), "tolerance": tolerance, "rows": rows }),
        passed,
    ))
}

pub fn enumeration_check(tree: &Tree, d: &EdgeSet, j: f64, betas: &[f64], tolerance: f64) -> CliResult<Outcome> {
    let mut rows = Vec::new();
    let mut passed = true;
    for sign in [Sign::Plus, Sign::Minus] {
        for relative in [false, true] {
            for &beta in betas {
                let p = params(beta, j, relative)?;
                let brute = enumerate_exact(tree, d, sign, &p)?;
                let log_z = log_partition(tree, d, sign, &p)?;
                let m = exact_marginals(tree, d, sign, &p)?;
                let log_z_err = rel_err(log_z, brute.log_partition);
                let m_err = m.iter().zip(&brute.magnetization).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                passed &= log_z_err <= tolerance && m_err <= tolerance;
                rows.push(json!({
                    "sign": sign,
                    "relative": relative,
                    "beta": beta,
                    "log_partition": log_z,
                    "log_partition_enumerated": brute.log_partition,
                    "log_partition_relative_error": log_z_err,
                    "max_marginal_error": m_err,
                }));
            }
        }
    }
    Ok(Outcome::check(
        json!({ "set": set_summary(tree, d), "interior": tree.interior_count(), "tolerance": tolerance, "rows": rows }),
        passed,
    ))
}

/// Strict decreasing order of free energies along `chain`, and the weak
/// chain `f(first) >= f(random) >= f(last)` for seeded random sparse sets.
pub fn free_energy_order(
    tree: &Tree,
    chain: &[DRecipe],
    params: &GibbsParams,
    random_count: u64,
    d_cap: u32,
    density: f64,
) -> CliResult<Outcome> {
    if chain.len() < 2 {
        return Err(CliError::Validation("free-energy-order needs at least two dsets".into()));
    }
    let mut values = Vec::new();
    for recipe in chain {
        let d = recipe.build(tree)?;
        values.push((recipe, d.len(), free_energy_density(tree, &d, Sign::Plus, params)?));
    }
    let strict = values.windows(2).all(|w| w[0].2 > w[1].2);
    let (top, bottom) = (values[0].2, values[values.len() - 1].2);
    let mut random = Vec::new();
    let mut violations = 0;
    for seed in 0..random_count {
        let d = gen_random_sparse(tree, d_cap, density, seed)?;
        let f = free_energy_density(tree, &d, Sign::Plus, params)?;
        let holds = top >= f && f >= bottom;
        if !holds {
            violations += 1;
        }
        random.push(json!({ "seed": seed, "edges": d.len(), "free_energy": f, "weak_chain_holds": holds }));
    }
    let chain_rows: Vec<Value> = values
        .iter()
        .map(|(r, len, f)| json!({ "dset": r, "edges": len, "free_energy": f }))
        .collect();
    Ok(Outcome::check(
        json!({
            "k": tree.k(),
            "depth": tree.depth(),
            "beta": params.beta,
            "j": params.j.value(),
            "chain": chain_rows,
            "strict_chain_holds": strict,
            "random": { "d_cap": d_cap, "density": density, "sets": random, "weak_chain_violations": violations },
        }),
        strict && violations == 0,
    ))
}

fn merge(target: &mut Value, extra: Value) {
    if let (Value::Object(t), Value::Object(e)) = (target, extra) {
        t.extend(e);
    }
}

/// Whether two sets of estimates are bit-identical.
pub fn same_estimates(a: &McEstimates, b: &McEstimates) -> bool {
    estimates_bits(a) == estimates_bits(b)
}
