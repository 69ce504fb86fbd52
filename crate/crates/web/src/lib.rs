//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers and strings and returns either SVG text
//! or a JSON string, so the page needs no glue beyond `wasm-bindgen`.

use bethe_gibbs::gibbs::{agreement_beta_scan, depth_scan, GibbsParams};
use bethe_gibbs::groundstate::build_sigma;
use bethe_gibbs::render::render_svg;
use bethe_gibbs::tree::{build_ball_with, TreeLimits};
use bethe_gibbs::{Coupling, CoverKind, DRecipe, Sign, TreeSpec};
use wasm_bindgen::prelude::*;

/// Balls larger than this are refused; the page would stall drawing them.
pub const MAX_DEMO_VERTICES: u64 = 40_000;

fn recipe(kind: &str, seed: u32) -> Result<DRecipe, String> {
    let kind: CoverKind = kind.parse().map_err(|e: bethe_gibbs::Error| e.to_string())?;
    let mut recipe = DRecipe::new(kind, u64::from(seed));
    if kind == CoverKind::RandomSparse {
        recipe.d_cap = Some(1);
        recipe.density = Some(0.5);
    }
    Ok(recipe)
}

fn sign(text: &str) -> Result<Sign, String> {
    text.parse().map_err(|e: bethe_gibbs::Error| e.to_string())
}

fn limits() -> TreeLimits {
    TreeLimits {
        max_vertices: MAX_DEMO_VERTICES,
    }
}

/// SVG of the ground state `σ^{D±}` with D in blue. With `with_secondary`
/// the secondary covering built on top of a dimer covering is drawn green.
pub fn ground_state_svg(k: u32, depth: u32, kind: &str, seed: u32, sign_text: &str, with_secondary: bool) -> Result<String, String> {
    let tree = build_ball_with(TreeSpec::new(k, depth), limits()).map_err(|e| e.to_string())?;
    let d = recipe(kind, seed)?.build(&tree).map_err(|e| e.to_string())?;
    let sigma = build_sigma(&tree, &d, sign(sign_text)?).map_err(|e| e.to_string())?;
    let highlight = if with_secondary {
        if d.kind() != CoverKind::Dimer {
            return Err("the secondary covering is drawn over a dimer covering".into());
        }
        Some(
            DRecipe::new(CoverKind::SecondaryDimer, u64::from(seed))
                .build(&tree)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    Ok(render_svg(&tree, &sigma, &d, highlight.as_ref(), 640.0))
}

/// Minimum interior agreement over `steps` evenly spaced β in
/// `[beta_min, beta_max]`, as JSON `{threshold, points, crossing_beta}`.
pub fn beta_scan_json(k: u32, depth: u32, kind: &str, seed: u32, beta_min: f64, beta_max: f64, steps: u32) -> Result<String, String> {
    if !(beta_min > 0.0 && beta_max >= beta_min && (1..=200).contains(&steps)) {
        return Err("need 0 < beta_min <= beta_max and 1..=200 steps".into());
    }
    let tree = build_ball_with(TreeSpec::new(k, depth), limits()).map_err(|e| e.to_string())?;
    let d = recipe(kind, seed)?.build(&tree).map_err(|e| e.to_string())?;
    let betas: Vec<f64> = (0..steps)
        .map(|i| match steps {
            1 => beta_min,
            _ => beta_min + (beta_max - beta_min) * f64::from(i) / f64::from(steps - 1),
        })
        .collect();
    let j = Coupling::new(1.0).map_err(|e| e.to_string())?;
    let scan = agreement_beta_scan(&tree, &d, Sign::Plus, j, &betas, 0.9).map_err(|e| e.to_string())?;
    serde_json::to_string(&scan).map_err(|e| e.to_string())
}

/// Root agreement at depths `1..=max_depth` with the set built on the deepest
/// ball, as JSON.
pub fn depth_scan_json(k: u32, kind: &str, seed: u32, beta: f64, max_depth: u32) -> Result<String, String> {
    let spec = TreeSpec::new(k, max_depth);
    if spec.vertex_count().is_none_or(|n| n > u128::from(MAX_DEMO_VERTICES) * 10) {
        return Err(format!("k={k}, r={max_depth} is too large for the browser"));
    }
    let params = GibbsParams::new(beta, Coupling::new(1.0).map_err(|e| e.to_string())?, true).map_err(|e| e.to_string())?;
    let depths: Vec<u32> = (1..=max_depth).collect();
    let scan = depth_scan(k, &recipe(kind, seed)?, Sign::Plus, &params, &depths).map_err(|e| e.to_string())?;
    serde_json::to_string(&scan).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = groundStateSvg)]
pub fn ground_state_svg_js(k: u32, depth: u32, kind: &str, seed: u32, sign: &str, with_secondary: bool) -> Result<String, JsError> {
    ground_state_svg(k, depth, kind, seed, sign, with_secondary).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = betaScan)]
pub fn beta_scan_js(k: u32, depth: u32, kind: &str, seed: u32, beta_min: f64, beta_max: f64, steps: u32) -> Result<String, JsError> {
    beta_scan_json(k, depth, kind, seed, beta_min, beta_max, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = depthScan)]
pub fn depth_scan_js(k: u32, kind: &str, seed: u32, beta: f64, max_depth: u32) -> Result<String, JsError> {
    depth_scan_json(k, kind, seed, beta, max_depth).map_err(|e| JsError::new(&e))
}
