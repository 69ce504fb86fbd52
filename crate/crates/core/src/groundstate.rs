//! The configurations `σ^{D±}`, Ising energies, connected excitations and the
//! exhaustive ground-state and stability checks.
//!
//! The Hamiltonian is `H = -J Σ σ_x σ_y` over the edges of the ball. Every
//! energy difference is an integer multiple of `J`; those integers are
//! computed exactly and only scaled by `J` at the end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::animals::{self, EnumerationLimits};
use crate::dsets::{admissible, CoverKind, EdgeSet};
use crate::error::{Error, Result};
use crate::tree::{EdgeId, Tree, TreeSpec, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == Sign::Plus { "+" } else { "-" })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "+1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            other => Err(Error::InvalidParameter {
                name: "sign",
                reason: format!("expected + or -, got `{other}`"),
            }),
        }
    }
}

/// Ferromagnetic coupling `J > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Coupling(f64);

impl Coupling {
    pub fn new(j: f64) -> Result<Self> {
        if j.is_finite() && j > 0.0 {
            Ok(Self(j))
        } else {
            Err(Error::InvalidParameter {
                name: "J",
                reason: format!("coupling must be positive and finite, got {j}"),
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Energy of `units` multiples of `J`.
    pub fn energy(self, units: i64) -> f64 {
        self.0 * units as f64
    }
}

/// A ±1 spin on every vertex of a ball.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spec: TreeSpec,
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(tree: &Tree, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != tree.vertex_count() {
            return Err(Error::InvalidParameter {
                name: "spins",
                reason: format!("expected {} spins, got {}", tree.vertex_count(), spins.len()),
            });
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter {
                name: "spins",
                reason: format!("spin values must be +1 or -1, got {bad}"),
            });
        }
        Ok(Self { spec: tree.spec(), spins })
    }

    pub fn uniform(tree: &Tree, sign: Sign) -> Self {
        Self {
            spec: tree.spec(),
            spins: vec![sign.value(); tree.vertex_count()],
        }
    }

    pub fn spec(&self) -> TreeSpec {
        self.spec
    }

    pub fn spin(&self, v: VertexId) -> i8 {
        self.spins[v.index()]
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    pub fn negated(&self) -> Self {
        Self {
            spec: self.spec,
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    pub fn check_tree(&self, tree: &Tree) -> Result<()> {
        let spec = tree.spec();
        if self.spec == spec {
            Ok(())
        } else {
            Err(Error::TreeMismatch {
                expected_k: spec.k,
                expected_depth: spec.depth,
                found_k: self.spec.k,
                found_depth: self.spec.depth,
            })
        }
    }

    /// `σ_x σ_y` on edge `e`.
    pub fn bond_product(&self, tree: &Tree, e: EdgeId) -> i8 {
        let (p, c) = tree.edge_endpoints(e);
        self.spin(p) * self.spin(c)
    }
}

/// `σ^{D,sign}`: root spin fixed, sign flipped across every edge of `D`.
pub fn build_sigma(tree: &Tree, d: &EdgeSet, root_sign: Sign) -> Result<SpinConfig> {
    d.check_tree(tree)?;
    let mut spins = vec![0i8; tree.vertex_count()];
    spins[0] = root_sign.value();
    for e in tree.edges() {
        let (p, c) = tree.edge_endpoints(e);
        let flip = if d.contains(e) { -1 } else { 1 };
        spins[c.index()] = spins[p.index()] * flip;
    }
    Ok(SpinConfig { spec: tree.spec(), spins })
}

/// The frustrated edges of `sigma`.
pub fn recover_d(tree: &Tree, sigma: &SpinConfig) -> Result<EdgeSet> {
    sigma.check_tree(tree)?;
    EdgeSet::from_edges(
        tree,
        CoverKind::FiniteSet,
        tree.edges().filter(|&e| sigma.bond_product(tree, e) < 0),
    )
}

/// `Σ σ_x σ_y` over all edges of the ball.
pub fn bond_sum(tree: &Tree, sigma: &SpinConfig) -> i64 {
    tree.edges().map(|e| i64::from(sigma.bond_product(tree, e))).sum()
}

/// `H(σ) = -J Σ σ_x σ_y`.
pub fn hamiltonian(tree: &Tree, sigma: &SpinConfig, j: Coupling) -> Result<f64> {
    sigma.check_tree(tree)?;
    Ok(j.energy(-bond_sum(tree, sigma)))
}

/// Negates the spins on a connected set `c`.
pub fn flip_connected(tree: &Tree, sigma: &SpinConfig, c: &[VertexId]) -> Result<SpinConfig> {
    sigma.check_tree(tree)?;
    if let Some(&v) = c.iter().find(|&&v| !tree.contains(v)) {
        return Err(Error::UnknownVertex(v));
    }
    if !animals::is_connected(tree, c) {
        return Err(Error::Disconnected);
    }
    let mut out = sigma.clone();
    let mut set = c.to_vec();
    set.sort();
    set.dedup();
    for v in set {
        out.spins[v.index()] = -out.spins[v.index()];
    }
    Ok(out)
}

/// `(H(σ) - H(ref)) / J`, exact. Both configurations must agree on the
/// boundary generation.
pub fn excess_units(tree: &Tree, sigma: &SpinConfig, reference: &SpinConfig) -> Result<i64> {
    sigma.check_tree(tree)?;
    reference.check_tree(tree)?;
    for v in tree.generation_range(tree.depth()) {
        if sigma.spin(v) != reference.spin(v) {
            return Err(Error::BoundaryTouch(v));
        }
    }
    Ok(tree
        .edges()
        .map(|e| i64::from(reference.bond_product(tree, e)) - i64::from(sigma.bond_product(tree, e)))
        .sum())
}

pub fn excess_energy(tree: &Tree, sigma: &SpinConfig, reference: &SpinConfig, j: Coupling) -> Result<f64> {
    Ok(j.energy(excess_units(tree, sigma, reference)?))
}

/// Excess energy, in units of `J`, of flipping the connected interior set `c`
/// of `σ^D`: every edge leaving `c` changes sign, costing `+2` when it was
/// satisfied (not in `D`) and `-2` when it was frustrated.
pub fn flip_excess_units(tree: &Tree, d: &EdgeSet, c: &[VertexId]) -> i64 {
    let mut units = 0i64;
    for &v in c {
        for w in tree.neighbors_iter(v) {
            if c.contains(&w) {
                continue;
            }
            let e = tree.edge_between(v, w).expect("neighbours share an edge");
            units += if d.contains(e) { -2 } else { 2 };
        }
    }
    units
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundStateReport {
    pub k: u32,
    pub depth: u32,
    pub d_max: u32,
    pub admissible: bool,
    pub m_max: usize,
    pub excitations_checked: u64,
    /// Every enumerated excitation had strictly positive excess energy.
    pub all_positive: bool,
    pub non_positive: u64,
    pub min_excess: f64,
    pub min_excess_units: i64,
    pub argmin: Vec<VertexId>,
    /// Minimum excess (units of `J`) per excitation size `1..=m_max`.
    pub min_units_by_size: Vec<i64>,
}

/// Exhaustive check that every connected excitation of `σ^{D+}` supported on
/// interior vertices with at most `m_max` sites costs positive energy.
pub fn verify_ground_state(tree: &Tree, d: &EdgeSet, j: Coupling, m_max: usize, limits: EnumerationLimits) -> Result<GroundStateReport> {
    d.check_tree(tree)?;
    if m_max == 0 {
        return Err(Error::InvalidParameter {
            name: "m_max",
            reason: "must be at least 1".into(),
        });
    }
    let mut min_units = i64::MAX;
    let mut argmin = Vec::new();
    let mut by_size = vec![i64::MAX; m_max];
    let mut non_positive = 0u64;
    let checked = animals::for_each_connected(
        tree,
        m_max,
        limits,
        |v| tree.is_interior(v),
        |c| {
            let units = flip_excess_units(tree, d, c);
            if units <= 0 {
                non_positive += 1;
            }
            let slot = &mut by_size[c.len() - 1];
            *slot = (*slot).min(units);
            if units < min_units {
                min_units = units;
                argmin = c.to_vec();
            }
        },
    )?;
    argmin.sort();
    let d_max = d.d_max();
    Ok(GroundStateReport {
        k: tree.k(),
        depth: tree.depth(),
        d_max,
        admissible: admissible(d_max, tree.k()),
        m_max,
        excitations_checked: checked,
        all_positive: checked > 0 && non_positive == 0,
        non_positive,
        min_excess: if checked > 0 { j.energy(min_units) } else { f64::NAN },
        min_excess_units: min_units,
        argmin,
        min_units_by_size: by_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCount {
    pub vertex: VertexId,
    pub count: u64,
    /// Counts per excitation size `1..=m_max`.
    pub by_size: Vec<u64>,
    /// Some excitation of the largest enumerated size is still below the cap,
    /// so larger sizes may contribute and `count` is only a lower bound.
    pub truncated: bool,
}

/// Number of connected excitations `C ∋ v`, `|C| <= m_max`, whose excess
/// energy is below `e_cap`.
pub fn stability_count(
    tree: &Tree,
    d: &EdgeSet,
    j: Coupling,
    v: VertexId,
    e_cap: f64,
    m_max: usize,
    limits: EnumerationLimits,
) -> Result<StabilityCount> {
    d.check_tree(tree)?;
    if !tree.contains(v) {
        return Err(Error::UnknownVertex(v));
    }
    if (tree.depth_to_boundary(v) as usize) < m_max.max(1) {
        return Err(Error::InvalidParameter {
            name: "vertex",
            reason: format!(
                "{:?} is {} generations from the boundary; excitations up to size {m_max} need at least {m_max}",
                tree.address(v),
                tree.depth_to_boundary(v)
            ),
        });
    }
    let mut by_size = vec![0u64; m_max];
    let mut truncated = false;
    animals::for_each_containing(
        tree,
        v,
        m_max,
        limits,
        |x| tree.is_interior(x),
        |c| {
            let excess = j.energy(flip_excess_units(tree, d, c));
            if excess < e_cap {
                by_size[c.len() - 1] += 1;
                if c.len() == m_max {
                    truncated = true;
                }
            }
        },
    )?;
    Ok(StabilityCount {
        vertex: v,
        count: by_size.iter().sum(),
        by_size,
        truncated,
    })
}

/// Canonical encoding of the `D`-labelled ball of `radius` around `v`,
/// ignoring which neighbour is the parent.
pub fn local_pattern(tree: &Tree, d: &EdgeSet, v: VertexId, radius: u32) -> String {
    fn encode(tree: &Tree, d: &EdgeSet, u: VertexId, from: Option<VertexId>, radius: u32) -> String {
        if radius == 0 {
            return String::from("()");
        }
        let mut parts: Vec<String> = tree
            .neighbors_iter(u)
            .filter(|&w| Some(w) != from)
            .map(|w| {
                let e = tree.edge_between(u, w).expect("adjacent");
                let label = if d.contains(e) { 'D' } else { 'o' };
                format!("{label}{}", encode(tree, d, w, Some(u), radius - 1))
            })
            .collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    encode(tree, d, v, None, radius)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternClass {
    pub pattern_index: usize,
    pub vertices: usize,
    /// Distinct excitation counts seen in the class; uniform classes have one.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub e_cap: f64,
    pub m_max: usize,
    pub deep_vertices: usize,
    pub classes: Vec<PatternClass>,
    /// Counts agree within every class of isomorphic local patterns.
    pub uniform: bool,
    pub max_count: u64,
    pub min_count: u64,
    pub any_truncated: bool,
}

/// Stability counts for every vertex more than `m_max` generations from the
/// boundary, grouped by local `D`-pattern of radius `m_max`.
pub fn stability_uniformity(
    tree: &Tree,
    d: &EdgeSet,
    j: Coupling,
    e_cap: f64,
    m_max: usize,
    limits: EnumerationLimits,
) -> Result<StabilityReport> {
    d.check_tree(tree)?;
    let mut groups: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut deep = 0;
    let mut any_truncated = false;
    let (mut max_count, mut min_count) = (0u64, u64::MAX);
    for v in tree.vertices().filter(|&v| tree.depth_to_boundary(v) as usize > m_max) {
        deep += 1;
        let sc = stability_count(tree, d, j, v, e_cap, m_max, limits)?;
        any_truncated |= sc.truncated;
        max_count = max_count.max(sc.count);
        min_count = min_count.min(sc.count);
        groups.entry(local_pattern(tree, d, v, m_max as u32)).or_default().push(sc.count);
    }
    let classes: Vec<PatternClass> = groups
        .into_values()
        .enumerate()
        .map(|(pattern_index, counts)| {
            let vertices = counts.len();
            let mut distinct = counts;
            distinct.sort();
            distinct.dedup();
            PatternClass {
                pattern_index,
                vertices,
                counts: distinct,
            }
        })
        .collect();
    Ok(StabilityReport {
        e_cap,
        m_max,
        deep_vertices: deep,
        uniform: classes.iter().all(|c| c.counts.len() == 1),
        classes,
        max_count,
        min_count: if deep == 0 { 0 } else { min_count },
        any_truncated,
    })
}
