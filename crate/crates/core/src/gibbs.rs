//! Exact finite-volume Gibbs computations on a ball by leaf-to-root cavity
//! recursion.
//!
//! Spins on generations `0..r` are summed; the boundary generation `r` is
//! either clamped to `σ^{D,±}` or summed freely. All edges of the ball,
//! including the ones into the boundary generation, carry energy. Everything
//! is computed in log-domain with a summation order fixed by child address.

use serde::{Deserialize, Serialize};

use crate::dsets::{CoverKind, DRecipe, EdgeSet};
use crate::error::{Error, Result};
use crate::groundstate::{bond_sum, build_sigma, Coupling, Sign, SpinConfig};
use crate::numeric::{log_add_exp, log_sum_exp, spin_mean};
use crate::tree::{build_ball, Tree, TreeSpec, VertexId};

const NEG_INF: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    pub beta: f64,
    pub j: Coupling,
    /// Measure energies relative to `H(σ^D)`.
    pub relative_energy: bool,
}

impl GibbsParams {
    pub fn new(beta: f64, j: Coupling, relative_energy: bool) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("inverse temperature must be positive and finite, got {beta}"),
            });
        }
        Ok(Self { beta, j, relative_energy })
    }

    fn beta_j(&self) -> f64 {
        self.beta * self.j.value()
    }
}

/// How the boundary generation is treated.
#[derive(Debug, Clone, Copy)]
pub enum Boundary<'a> {
    /// Clamped to the spins of this configuration.
    Fixed(&'a SpinConfig),
    Free,
}

/// Per-vertex log conditional partition functions `ln Z_v(±)` of the subtree
/// below `v` given the spin at `v`. Index 0 is `+1`, index 1 is `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityTable {
    pub log_z: Vec<[f64; 2]>,
    /// `ln Σ_t exp(w(s, t)) Z_c(t)`: the message child `c` sends its parent.
    messages: Vec<[f64; 2]>,
    /// Per-edge log-weight offset (the reference bond product in relative mode).
    offsets: Vec<f64>,
    beta_j: f64,
}

const SPINS: [f64; 2] = [1.0, -1.0];

fn spin_index(s: i8) -> usize {
    usize::from(s < 0)
}

impl CavityTable {
    /// Runs the leaf-to-root pass. `reference` supplies per-edge offsets in
    /// relative mode.
    pub fn build(tree: &Tree, boundary: Boundary<'_>, reference: Option<&SpinConfig>, beta_j: f64) -> Self {
        let n = tree.vertex_count();
        let mut log_z = vec![[0.0; 2]; n];
        let mut messages = vec![[NEG_INF; 2]; n];
        let offsets: Vec<f64> = match reference {
            Some(r) => tree.edges().map(|e| f64::from(r.bond_product(tree, e))).collect(),
            None => vec![0.0; tree.edge_count()],
        };

        for v in tree.vertices().rev() {
            if tree.is_leaf(v) {
                log_z[v.index()] = match boundary {
                    Boundary::Fixed(sigma) => {
                        let mut z = [NEG_INF; 2];
                        z[spin_index(sigma.spin(v))] = 0.0;
                        z
                    }
                    Boundary::Free => [0.0, 0.0],
                };
            } else {
                let mut acc = [0.0; 2];
                for c in tree.children(v) {
                    let m = messages[c.index()];
                    acc[0] += m[0];
                    acc[1] += m[1];
                }
                log_z[v.index()] = acc;
            }
            if let Some(e) = tree.parent_edge(v) {
                let off = offsets[e.index()];
                let z = log_z[v.index()];
                let mut msg = [0.0; 2];
                for (si, s) in SPINS.iter().enumerate() {
                    msg[si] = log_add_exp(beta_j * (s * 1.0 - off) + z[0], beta_j * (s * -1.0 - off) + z[1]);
                }
                messages[v.index()] = msg;
            }
        }
        Self {
            log_z,
            messages,
            offsets,
            beta_j,
        }
    }

    pub fn log_partition(&self) -> f64 {
        log_sum_exp(&self.log_z[0])
    }

    /// Root-to-leaf pass. `root_clamp` conditions on the root spin. Returns
    /// `ln` of the unnormalized outside weights for each vertex.
    fn outside(&self, tree: &Tree, root_clamp: Option<Sign>) -> Vec<[f64; 2]> {
        let mut outside = vec![[NEG_INF; 2]; tree.vertex_count()];
        outside[0] = match root_clamp {
            None => [0.0, 0.0],
            Some(Sign::Plus) => [0.0, NEG_INF],
            Some(Sign::Minus) => [NEG_INF, 0.0],
        };
        for v in tree.vertices() {
            let kids: Vec<VertexId> = tree.children(v).collect();
            if kids.is_empty() {
                continue;
            }
            // Prefix and suffix sums of child messages give the product over
            // all siblings but one without subtraction.
            let mut prefix = vec![[0.0; 2]; kids.len() + 1];
            for (i, c) in kids.iter().enumerate() {
                let m = self.messages[c.index()];
                prefix[i + 1] = [prefix[i][0] + m[0], prefix[i][1] + m[1]];
            }
            let mut suffix = [0.0; 2];
            for (i, c) in kids.iter().enumerate().rev() {
                let others = [prefix[i][0] + suffix[0], prefix[i][1] + suffix[1]];
                let e = tree.parent_edge(*c).expect("child edge");
                let off = self.offsets[e.index()];
                let out_v = outside[v.index()];
                let mut out_c = [0.0; 2];
                for (ti, t) in SPINS.iter().enumerate() {
                    out_c[ti] = log_add_exp(
                        self.beta_j * (t * 1.0 - off) + out_v[0] + others[0],
                        self.beta_j * (t * -1.0 - off) + out_v[1] + others[1],
                    );
                }
                outside[c.index()] = out_c;
                let m = self.messages[c.index()];
                suffix = [suffix[0] + m[0], suffix[1] + m[1]];
            }
        }
        outside
    }

    /// `⟨σ_x⟩` for every vertex, optionally conditioned on the root spin.
    pub fn magnetizations(&self, tree: &Tree, root_clamp: Option<Sign>) -> Vec<f64> {
        let outside = self.outside(tree, root_clamp);
        self.log_z
            .iter()
            .zip(&outside)
            .map(|(z, o)| spin_mean(z[0] + o[0], z[1] + o[1]))
            .collect()
    }
}

fn fixed_table(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<(SpinConfig, CavityTable)> {
    let sigma = build_sigma(tree, d, sign)?;
    let reference = params.relative_energy.then_some(&sigma);
    let table = CavityTable::build(tree, Boundary::Fixed(&sigma), reference, params.beta_j());
    Ok((sigma, table))
}

/// Exact `⟨σ_x⟩` under boundary condition `σ^{D,sign}`; boundary vertices
/// report their clamped spin.
pub fn exact_marginals(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<Vec<f64>> {
    let (_, table) = fixed_table(tree, d, sign, params)?;
    Ok(table.magnetizations(tree, None))
}

/// `ln Σ_σ exp(-β H(σ))` over configurations clamped to `σ^{D,sign}` on the
/// boundary, with `H(σ) - H(σ^D)` in place of `H(σ)` in relative mode.
pub fn log_partition(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<f64> {
    let (_, table) = fixed_table(tree, d, sign, params)?;
    Ok(table.log_partition())
}

/// `β H(σ^D)`, the shift between absolute and relative log partition functions.
pub fn reference_shift(tree: &Tree, d: &EdgeSet, params: &GibbsParams) -> Result<f64> {
    let sigma = build_sigma(tree, d, Sign::Plus)?;
    Ok(-params.beta_j() * bond_sum(tree, &sigma) as f64)
}

/// Per-vertex free energy `-(1/β) ln Z / |V_r|` with absolute energies,
/// whatever `params.relative_energy` says.
pub fn free_energy_density(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<f64> {
    let absolute = GibbsParams {
        relative_energy: false,
        ..*params
    };
    let log_z = log_partition(tree, d, sign, &absolute)?;
    Ok(-log_z / params.beta / tree.vertex_count() as f64)
}

/// `P(σ_x = σ_x^{D,sign}) = (1 + σ_x^D ⟨σ_x⟩) / 2`.
pub fn agreement_profile(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<Vec<f64>> {
    let (sigma, table) = fixed_table(tree, d, sign, params)?;
    Ok(table
        .magnetizations(tree, None)
        .iter()
        .zip(sigma.spins())
        .map(|(m, &s)| (1.0 + f64::from(s) * m) / 2.0)
        .collect())
}

/// Smallest agreement probability over interior vertices.
pub fn min_interior_agreement(tree: &Tree, agreement: &[f64]) -> f64 {
    tree.interior_vertices().map(|v| agreement[v.index()]).fold(f64::INFINITY, f64::min)
}

/// Exact marginals with the boundary generation summed freely. The root
/// magnetization vanishes by symmetry.
pub fn free_state_marginals(tree: &Tree, params: &GibbsParams) -> Vec<f64> {
    CavityTable::build(tree, Boundary::Free, None, params.beta_j()).magnetizations(tree, None)
}

/// `⟨σ_0 σ_x⟩` for every vertex `x`.
pub fn root_correlations(tree: &Tree, boundary: Boundary<'_>, params: &GibbsParams) -> Vec<f64> {
    let table = CavityTable::build(tree, boundary, None, params.beta_j());
    let root = table.magnetizations(tree, None)[0];
    let p_plus = (1.0 + root) / 2.0;
    let given_plus = table.magnetizations(tree, Some(Sign::Plus));
    let given_minus = table.magnetizations(tree, Some(Sign::Minus));
    given_plus
        .iter()
        .zip(&given_minus)
        .map(|(mp, mm)| {
            let plus = if p_plus > 0.0 { p_plus * mp } else { 0.0 };
            let minus = if p_plus < 1.0 { (1.0 - p_plus) * mm } else { 0.0 };
            plus - minus
        })
        .collect()
}

/// Largest interior for [`enumerate_exact`].
pub const MAX_ENUMERATED_SPINS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumerated {
    pub log_partition: f64,
    pub magnetization: Vec<f64>,
}

/// `ln Z` and `⟨σ_x⟩` by summing all `2^N` interior configurations; an
/// independent check on the recursion for small balls.
pub fn enumerate_exact(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams) -> Result<Enumerated> {
    let reference = build_sigma(tree, d, sign)?;
    let n = tree.interior_count();
    if n > MAX_ENUMERATED_SPINS {
        return Err(Error::ResourceLimit {
            what: "enumerated interior spins",
            requested: n as u128,
            limit: MAX_ENUMERATED_SPINS as u128,
        });
    }
    let shift = if params.relative_energy { bond_sum(tree, &reference) } else { 0 };
    let mut spins = reference.clone();
    let mut exponents = Vec::with_capacity(1 << n);
    for mask in 0u64..(1 << n) {
        for i in 0..n {
            spins.spins_mut()[i] = if mask >> i & 1 == 1 { 1 } else { -1 };
        }
        exponents.push(params.beta_j() * (bond_sum(tree, &spins) - shift) as f64);
    }
    let log_z = log_sum_exp(&exponents);
    let mut magnetization: Vec<f64> = reference.spins().iter().map(|&s| f64::from(s)).collect();
    for (i, m) in magnetization.iter_mut().take(n).enumerate() {
        let mut plus = Vec::with_capacity(1 << (n - 1));
        let mut minus = Vec::with_capacity(1 << (n - 1));
        for (mask, &x) in exponents.iter().enumerate() {
            if mask >> i & 1 == 1 {
                plus.push(x);
            } else {
                minus.push(x);
            }
        }
        *m = spin_mean(log_sum_exp(&plus), log_sum_exp(&minus));
    }
    Ok(Enumerated {
        log_partition: log_z,
        magnetization,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub depth: u32,
    pub root_magnetization: f64,
    pub root_agreement: f64,
    pub min_interior_agreement: f64,
    /// Change in root agreement from the previous depth.
    pub delta: Option<f64>,
}

/// Root magnetization and agreement as the ball grows. This is a
/// finite-volume diagnostic of the extremality of `μ^{D±}`, not a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthScan {
    pub diagnostic: &'static str,
    pub k: u32,
    pub kind: CoverKind,
    pub seed: Option<u64>,
    pub sign: Sign,
    pub rows: Vec<DepthRow>,
    /// Every successive |delta| is no larger than the one before.
    pub monotone_decay: bool,
    pub last_delta: Option<f64>,
}

/// Evaluates one nested family of edge sets at each depth of `depths`. The
/// set is built once on the deepest ball and restricted, so every depth sees
/// the same `D`.
pub fn depth_scan(k: u32, recipe: &DRecipe, sign: Sign, params: &GibbsParams, depths: &[u32]) -> Result<DepthScan> {
    let max_depth = depths.iter().copied().max().ok_or(Error::InvalidParameter {
        name: "depths",
        reason: "need at least one depth".into(),
    })?;
    let big = build_ball(TreeSpec::new(k, max_depth))?;
    let d_big = recipe.build(&big)?;
    depth_scan_set(&big, &d_big, sign, params, depths)
}

/// [`depth_scan`] for a given set on `tree`; every depth must be at most
/// `tree.depth()`.
pub fn depth_scan_set(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, depths: &[u32]) -> Result<DepthScan> {
    d.check_tree(tree)?;
    let mut depths = depths.to_vec();
    depths.sort();
    depths.dedup();
    if depths.is_empty() {
        return Err(Error::InvalidParameter {
            name: "depths",
            reason: "need at least one depth".into(),
        });
    }
    if let Some(&r) = depths.iter().find(|&&r| r > tree.depth()) {
        return Err(Error::InvalidParameter {
            name: "depths",
            reason: format!("depth {r} exceeds the depth {} of the edge set's ball", tree.depth()),
        });
    }

    let mut rows: Vec<DepthRow> = Vec::with_capacity(depths.len());
    for &r in &depths {
        let ball = build_ball(TreeSpec::new(tree.k(), r))?;
        let d_r = d.restrict_to(&ball)?;
        let agreement = agreement_profile(&ball, &d_r, sign, params)?;
        let sigma_root = f64::from(sign.value());
        let root_agreement = agreement[0];
        let delta = rows.last().map(|prev| root_agreement - prev.root_agreement);
        rows.push(DepthRow {
            depth: r,
            root_magnetization: sigma_root * (2.0 * root_agreement - 1.0),
            root_agreement,
            min_interior_agreement: min_interior_agreement(&ball, &agreement),
            delta,
        });
    }
    let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta.map(f64::abs)).collect();
    let monotone_decay = deltas.windows(2).all(|w| w[1] <= w[0]);
    Ok(DepthScan {
        diagnostic: "finite-volume extremality proxy (diagnostic only)",
        k: tree.k(),
        kind: d.kind(),
        seed: d.seed(),
        sign,
        last_delta: rows.last().and_then(|r| r.delta),
        rows,
        monotone_decay,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaScan {
    pub threshold: f64,
    pub points: Vec<(f64, f64)>,
    /// Smallest scanned β at which the minimum interior agreement reaches the
    /// threshold (and stays there for all larger scanned β).
    pub crossing_beta: Option<f64>,
}

/// Minimum interior agreement as a function of β, for charting where the
/// low-temperature regime begins.
pub fn agreement_beta_scan(tree: &Tree, d: &EdgeSet, sign: Sign, j: Coupling, betas: &[f64], threshold: f64) -> Result<BetaScan> {
    let mut points = Vec::with_capacity(betas.len());
    for &beta in betas {
        let params = GibbsParams::new(beta, j, true)?;
        let agreement = agreement_profile(tree, d, sign, &params)?;
        points.push((beta, min_interior_agreement(tree, &agreement)));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut crossing = None;
    for &(beta, value) in points.iter().rev() {
        if value >= threshold {
            crossing = Some(beta);
        } else {
            break;
        }
    }
    Ok(BetaScan {
        threshold,
        points,
        crossing_beta: crossing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsets::{gen_dimer_cover, CoverKind};

    fn ball(k: u32, r: u32) -> Tree {
        build_ball(TreeSpec::new(k, r)).unwrap()
    }

    fn params(beta: f64, relative: bool) -> GibbsParams {
        GibbsParams::new(beta, Coupling::new(1.0).unwrap(), relative).unwrap()
    }

    #[test]
    fn low_and_high_temperature_limits() {
        let t = ball(3, 4);
        let empty = EdgeSet::empty(&t);
        let m = exact_marginals(&t, &empty, Sign::Plus, &params(20.0, true)).unwrap();
        assert!(m.iter().all(|x| (x - 1.0).abs() < 1e-6));
        let m = exact_marginals(&t, &empty, Sign::Plus, &params(1e-12, true)).unwrap();
        assert!(t.interior_vertices().all(|v| m[v.index()].abs() < 1e-6));

        let d = gen_dimer_cover(&t, 2);
        let agree = agreement_profile(&t, &d, Sign::Minus, &params(30.0, true)).unwrap();
        assert!(agree.iter().all(|p| (p - 1.0).abs() < 1e-9));
        let agree = agreement_profile(&t, &d, Sign::Minus, &params(1e-12, true)).unwrap();
        assert!(t.interior_vertices().all(|v| (agree[v.index()] - 0.5).abs() < 1e-9));
    }

    #[test]
    fn sign_flip_negates_marginals() {
        let t = ball(4, 3);
        let d = gen_dimer_cover(&t, 9);
        for relative in [true, false] {
            let p = params(0.8, relative);
            let plus = exact_marginals(&t, &d, Sign::Plus, &p).unwrap();
            let minus = exact_marginals(&t, &d, Sign::Minus, &p).unwrap();
            for (a, b) in plus.iter().zip(&minus) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn relative_and_absolute_differ_by_reference_energy() {
        let t = ball(4, 3);
        let d = gen_dimer_cover(&t, 1);
        let rel = log_partition(&t, &d, Sign::Plus, &params(1.3, true)).unwrap();
        let abs = log_partition(&t, &d, Sign::Plus, &params(1.3, false)).unwrap();
        let shift = reference_shift(&t, &d, &params(1.3, false)).unwrap();
        assert!(rel >= 0.0);
        assert!(((abs + shift) - rel).abs() < 1e-10 * rel.abs().max(1.0));
        let frozen = log_partition(&t, &d, Sign::Plus, &params(200.0, true)).unwrap();
        assert!(frozen.abs() < 1e-12);
    }

    #[test]
    fn subtrees_factorize_under_fixed_root() {
        // Clamping the root spin makes ln Z the sum of the child messages.
        let t = ball(2, 3);
        let sigma = SpinConfig::uniform(&t, Sign::Plus);
        let table = CavityTable::build(&t, Boundary::Fixed(&sigma), None, 0.9);
        let sum: f64 = t.children(VertexId::ROOT).map(|c| table.messages[c.index()][0]).sum();
        assert!((table.log_z[0][0] - sum).abs() < 1e-14);
    }

    #[test]
    fn free_state_symmetry_and_correlations() {
        let t = ball(3, 4);
        let p = params(0.6, false);
        let m = free_state_marginals(&t, &p);
        assert!(m.iter().all(|x| x.abs() < 1e-12));
        let corr = root_correlations(&t, Boundary::Free, &p);
        for v in t.vertices() {
            let dist = t.graph_distance(VertexId::ROOT, v).unwrap() as i32;
            let expect = (0.6f64).tanh().powi(dist);
            assert!((corr[v.index()] - expect).abs() < 1e-12, "{v}");
            assert!(corr[v.index()] > 0.0);
        }
        let plus = SpinConfig::uniform(&t, Sign::Plus);
        let fixed = root_correlations(&t, Boundary::Fixed(&plus), &p);
        // Plus boundary conditions only add positive correlation at the root.
        assert!(t.vertices().all(|v| fixed[v.index()] >= corr[v.index()] - 1e-12));
    }

    #[test]
    fn enumeration_agrees_with_recursion() {
        let t = ball(3, 2);
        let d = gen_dimer_cover(&t, 4);
        for relative in [false, true] {
            let p = params(1.7, relative);
            let brute = enumerate_exact(&t, &d, Sign::Minus, &p).unwrap();
            let lz = log_partition(&t, &d, Sign::Minus, &p).unwrap();
            assert!((brute.log_partition - lz).abs() < 1e-10 * lz.abs().max(1.0));
            let m = exact_marginals(&t, &d, Sign::Minus, &p).unwrap();
            for (a, b) in m.iter().zip(&brute.magnetization) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let big = ball(4, 3);
        assert!(matches!(
            enumerate_exact(&big, &EdgeSet::empty(&big), Sign::Plus, &params(1.0, true)),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn depth_scan_uniqueness_regime_decays() {
        // k tanh(βJ) < 1: the boundary is forgotten.
        let beta: f64 = 0.2;
        assert!(4.0 * beta.tanh() < 1.0);
        let scan = depth_scan(
            4,
            &DRecipe::new(CoverKind::Empty, 0),
            Sign::Plus,
            &params(beta, true),
            &[2, 4, 6, 8],
        )
        .unwrap();
        for row in &scan.rows {
            // Plus boundary on generation r, scalar cavity fields inward.
            let t = beta.tanh();
            let mut h = f64::INFINITY;
            for _ in 0..row.depth - 1 {
                h = 4.0 * (t * h.tanh()).atanh();
            }
            let root = 5.0 * (t * h.tanh()).atanh();
            assert!((row.root_magnetization - root.tanh()).abs() < 1e-12, "r={}", row.depth);
        }
        assert!(scan.rows.last().unwrap().root_magnetization < 0.25 * scan.rows[0].root_magnetization);
        assert!(scan.rows.windows(2).all(|w| w[1].root_magnetization < w[0].root_magnetization));
    }

    #[test]
    fn beta_scan_crossing() {
        let t = ball(4, 3);
        let d = gen_dimer_cover(&t, 0);
        let scan = agreement_beta_scan(
            &t,
            &d,
            Sign::Plus,
            Coupling::new(1.0).unwrap(),
            &[0.05, 0.2, 0.5, 1.0, 2.0, 4.0],
            0.9,
        )
        .unwrap();
        assert!(scan.points.windows(2).all(|w| w[1].1 >= w[0].1));
        let cross = scan.crossing_beta.unwrap();
        assert!(cross > 0.05 && cross <= 2.0);
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(GibbsParams::new(0.0, Coupling::new(1.0).unwrap(), true).is_err());
        assert!(GibbsParams::new(f64::INFINITY, Coupling::new(1.0).unwrap(), true).is_err());
    }
}
