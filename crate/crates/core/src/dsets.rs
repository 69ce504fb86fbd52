//! Edge sets `D` and the covering families used to build frustrated ground
//! states.
//!
//! Covering predicates are only enforced on interior vertices (generation at
//! most `r - 1`); the boundary generation of a finite ball can never satisfy
//! them exactly.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{EdgeId, Tree, TreeSpec, VertexId};

/// `d_max < (k - 1) / 2`, compared exactly as `2 d_max + 1 < k`.
pub fn admissible(d_max: u32, k: u32) -> bool {
    2 * u64::from(d_max) + 1 < u64::from(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverKind {
    Empty,
    SingleBond,
    FiniteSet,
    Dimer,
    #[serde(rename = "secondary")]
    SecondaryDimer,
    MonomerDimer,
    #[serde(rename = "path")]
    PathCover,
    #[serde(rename = "random")]
    RandomSparse,
}

impl CoverKind {
    pub const ALL: [CoverKind; 8] = [
        CoverKind::Empty,
        CoverKind::SingleBond,
        CoverKind::FiniteSet,
        CoverKind::Dimer,
        CoverKind::SecondaryDimer,
        CoverKind::MonomerDimer,
        CoverKind::PathCover,
        CoverKind::RandomSparse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoverKind::Empty => "empty",
            CoverKind::SingleBond => "single-bond",
            CoverKind::FiniteSet => "finite-set",
            CoverKind::Dimer => "dimer",
            CoverKind::SecondaryDimer => "secondary",
            CoverKind::MonomerDimer => "monomer-dimer",
            CoverKind::PathCover => "path",
            CoverKind::RandomSparse => "random",
        }
    }
}

impl fmt::Display for CoverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CoverKind::ALL
            .into_iter()
            .find(|kind| kind.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "kind",
                reason: format!("unknown cover kind `{s}`"),
            })
    }
}

/// A set of edges of one ball together with its degree profile `d_D(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    spec: TreeSpec,
    kind: CoverKind,
    seed: Option<u64>,
    member: Vec<bool>,
    degree: Vec<u32>,
    len: usize,
}

impl EdgeSet {
    pub fn empty(tree: &Tree) -> Self {
        Self {
            spec: tree.spec(),
            kind: CoverKind::Empty,
            seed: None,
            member: vec![false; tree.edge_count()],
            degree: vec![0; tree.vertex_count()],
            len: 0,
        }
    }

    /// Arbitrary finite collection. Duplicates are ignored.
    pub fn from_edges(tree: &Tree, kind: CoverKind, edges: impl IntoIterator<Item = EdgeId>) -> Result<Self> {
        let mut set = Self::empty(tree);
        set.kind = kind;
        for e in edges {
            if e.index() >= tree.edge_count() {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    reason: format!("edge index {} outside a ball with {} edges", e.index(), tree.edge_count()),
                });
            }
            set.insert(tree, e);
        }
        Ok(set)
    }

    pub fn single_bond(tree: &Tree, e: EdgeId) -> Result<Self> {
        Self::from_edges(tree, CoverKind::SingleBond, [e])
    }

    fn with_kind(tree: &Tree, kind: CoverKind, seed: u64) -> Self {
        let mut set = Self::empty(tree);
        set.kind = kind;
        set.seed = Some(seed);
        set
    }

    fn insert(&mut self, tree: &Tree, e: EdgeId) {
        if std::mem::replace(&mut self.member[e.index()], true) {
            return;
        }
        let (p, c) = tree.edge_endpoints(e);
        self.degree[p.index()] += 1;
        self.degree[c.index()] += 1;
        self.len += 1;
    }

    pub fn spec(&self) -> TreeSpec {
        self.spec
    }

    pub fn kind(&self) -> CoverKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn set_provenance(&mut self, kind: CoverKind, seed: Option<u64>) {
        self.kind = kind;
        self.seed = seed;
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.member[e.index()]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| EdgeId::new(i as u32))
    }

    /// `d_D(v)`.
    pub fn degree(&self, v: VertexId) -> u32 {
        self.degree[v.index()]
    }

    pub fn degree_profile(&self) -> &[u32] {
        &self.degree
    }

    /// `d_D = max_v d_D(v)`.
    pub fn d_max(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    pub fn d_max_interior(&self, tree: &Tree) -> u32 {
        tree.interior_vertices().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_admissible(&self) -> bool {
        admissible(self.d_max(), self.spec.k)
    }

    /// Errors unless this set was built on a ball with `tree`'s shape.
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

    /// Degree profile recomputed from the member edges.
    pub fn recompute_profile(&self, tree: &Tree) -> Vec<u32> {
        let mut deg = vec![0; tree.vertex_count()];
        for e in self.edges() {
            let (p, c) = tree.edge_endpoints(e);
            deg[p.index()] += 1;
            deg[c.index()] += 1;
        }
        deg
    }

    /// The same set seen on a smaller ball with the same branching number.
    /// Vertex and edge ids of a smaller ball are a prefix of the larger one.
    pub fn restrict_to(&self, tree: &Tree) -> Result<Self> {
        let spec = tree.spec();
        if spec.k != self.spec.k || spec.depth > self.spec.depth {
            return Err(Error::TreeMismatch {
                expected_k: spec.k,
                expected_depth: spec.depth,
                found_k: self.spec.k,
                found_depth: self.spec.depth,
            });
        }
        let mut set = Self::from_edges(tree, self.kind, self.edges().take_while(|e| e.index() < tree.edge_count()))?;
        set.seed = self.seed;
        Ok(set)
    }
}

/// Uniform choice of `count` distinct children of `v`, seeded per vertex.
fn choose_children(tree: &Tree, v: VertexId, seed: u64, salt: u64, count: usize) -> Vec<VertexId> {
    let mut kids: Vec<VertexId> = tree.children(v).collect();
    let mut rng = rng::stream(seed, (salt << 40) | u64::from(v.raw()));
    let (chosen, _) = kids.partial_shuffle(&mut rng, count);
    chosen.to_vec()
}

const SALT_DIMER: u64 = 1;
const SALT_SECONDARY: u64 = 2;
const SALT_MONOMER: u64 = 3;
const SALT_PATH: u64 = 4;

/// Dimer covering matching every interior vertex exactly once.
///
/// Vertices are visited breadth-first; an unmatched vertex is matched to a
/// seeded child. Children are always free at that point, so the construction
/// never fails, and choices are keyed by vertex id so the covering of a
/// ball is the restriction of the covering of any larger ball.
pub fn gen_dimer_cover(tree: &Tree, seed: u64) -> EdgeSet {
    let mut set = EdgeSet::with_kind(tree, CoverKind::Dimer, seed);
    let mut matched = vec![false; tree.vertex_count()];
    for v in tree.interior_vertices() {
        if matched[v.index()] {
            continue;
        }
        let c = choose_children(tree, v, seed, SALT_DIMER, 1)[0];
        matched[v.index()] = true;
        matched[c.index()] = true;
        set.insert(tree, tree.parent_edge(c).expect("child edge"));
    }
    set
}

/// Partner of every vertex under a matching, or an error naming the first
/// interior vertex that is not covered exactly once.
fn dimer_partners(tree: &Tree, primary: &EdgeSet) -> Result<Vec<Option<VertexId>>> {
    primary.check_tree(tree)?;
    let mut partner = vec![None; tree.vertex_count()];
    for v in tree.vertices() {
        let d = primary.degree(v);
        if d > 1 || (d == 0 && tree.is_interior(v)) {
            return Err(Error::NotADimerCover(format!(
                "vertex {:?} lies in {d} primary bonds",
                tree.address(v)
            )));
        }
    }
    for e in primary.edges() {
        let (p, c) = tree.edge_endpoints(e);
        partner[p.index()] = Some(c);
        partner[c.index()] = Some(p);
    }
    Ok(partner)
}

/// Secondary dimer covering of a primary dimer covering.
///
/// Primary dimers are visited top-down (by their upper endpoint). A dimer
/// not yet served picks, by seeded choice, a downward non-dimer edge to a
/// covered vertex; that edge serves both dimers. Dimers reaching into the
/// boundary generation may stay unserved.
pub fn gen_secondary_dimer(tree: &Tree, primary: &EdgeSet, seed: u64) -> Result<EdgeSet> {
    let partner = dimer_partners(tree, primary)?;
    let mut set = EdgeSet::with_kind(tree, CoverKind::SecondaryDimer, seed);
    let mut served = vec![false; tree.vertex_count()];

    for upper in tree.vertices() {
        let Some(lower) = partner[upper.index()] else { continue };
        if tree.parent(lower) != Some(upper) || served[upper.index()] {
            continue;
        }
        let mut candidates: Vec<(VertexId, VertexId)> = Vec::new();
        for x in [upper, lower] {
            for y in tree.children(x) {
                if y != lower && partner[y.index()].is_some() {
                    candidates.push((x, y));
                }
            }
        }
        if candidates.is_empty() {
            if tree.is_interior(lower) {
                return Err(Error::SecondaryDimerStuck(upper, lower));
            }
            continue;
        }
        let mut rng = rng::stream(seed, (SALT_SECONDARY << 40) | u64::from(upper.raw()));
        let (x, y) = candidates[rng.gen_range(0..candidates.len())];
        let y_mate = partner[y.index()].expect("candidate is covered");
        for v in [upper, lower, y, y_mate] {
            served[v.index()] = true;
        }
        set.insert(tree, tree.parent_edge(y).expect("child edge"));
        debug_assert_eq!(tree.parent(y), Some(x));
    }
    Ok(set)
}

/// Monomer-dimer covering: bonds at mutual distance at least 2 and every
/// interior vertex within distance 1 of some bond.
pub fn gen_monomer_dimer(tree: &Tree, seed: u64) -> EdgeSet {
    let mut set = EdgeSet::with_kind(tree, CoverKind::MonomerDimer, seed);
    let mut dominated = vec![false; tree.vertex_count()];
    for v in tree.interior_vertices() {
        if dominated[v.index()] {
            continue;
        }
        let c = choose_children(tree, v, seed, SALT_MONOMER, 1)[0];
        set.insert(tree, tree.parent_edge(c).expect("child edge"));
        for end in [v, c] {
            dominated[end.index()] = true;
            for w in tree.neighbors_iter(end) {
                dominated[w.index()] = true;
            }
        }
    }
    set
}

/// Path covering: every interior vertex lies in exactly two bonds.
///
/// Each interior vertex continues its parent's path through one seeded
/// child, or, when its parent edge is not a member, starts a new path
/// through two seeded children.
pub fn gen_path_cover(tree: &Tree, seed: u64) -> Result<EdgeSet> {
    if tree.k() < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "path coverings need k >= 2".into(),
        });
    }
    let mut set = EdgeSet::with_kind(tree, CoverKind::PathCover, seed);
    for v in tree.interior_vertices() {
        let need = 2 - set.degree(v) as usize;
        for c in choose_children(tree, v, seed, SALT_PATH, need) {
            set.insert(tree, tree.parent_edge(c).expect("child edge"));
        }
    }
    Ok(set)
}

/// Independent inclusion of each edge with probability `density`, skipping
/// edges that would push some `d_D(v)` above `d_cap`.
pub fn gen_random_sparse(tree: &Tree, d_cap: u32, density: f64, seed: u64) -> Result<EdgeSet> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter {
            name: "density",
            reason: format!("{density} is not in [0, 1]"),
        });
    }
    let mut set = EdgeSet::with_kind(tree, CoverKind::RandomSparse, seed);
    let mut rng = rng::stream(seed, 0);
    for e in tree.edges() {
        let draw: f64 = rng.gen();
        if draw >= density {
            continue;
        }
        let (p, c) = tree.edge_endpoints(e);
        if set.degree(p) < d_cap && set.degree(c) < d_cap {
            set.insert(tree, e);
        }
    }
    Ok(set)
}

/// A reproducible description of one edge set: family, seed and, for
/// random sparse sets, the degree cap and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DRecipe {
    pub kind: CoverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_cap: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl DRecipe {
    pub fn new(kind: CoverKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            d_cap: None,
            density: None,
        }
    }

    pub fn random(d_cap: u32, density: f64, seed: u64) -> Self {
        Self {
            kind: CoverKind::RandomSparse,
            seed,
            d_cap: Some(d_cap),
            density: Some(density),
        }
    }

    /// The primary dimer covering a secondary covering is built on.
    pub fn primary(&self, tree: &Tree) -> Option<EdgeSet> {
        (self.kind == CoverKind::SecondaryDimer).then(|| gen_dimer_cover(tree, self.seed))
    }

    pub fn build(&self, tree: &Tree) -> Result<EdgeSet> {
        match self.kind {
            CoverKind::Empty => Ok(EdgeSet::empty(tree)),
            CoverKind::SingleBond => {
                if tree.edge_count() == 0 {
                    return Err(Error::InvalidParameter {
                        name: "depth",
                        reason: "a single bond needs depth >= 1".into(),
                    });
                }
                let mut set = EdgeSet::single_bond(tree, EdgeId::new(0))?;
                set.seed = Some(self.seed);
                Ok(set)
            }
            CoverKind::FiniteSet => Err(Error::InvalidParameter {
                name: "kind",
                reason: "finite sets are read from files, not generated".into(),
            }),
            CoverKind::Dimer => Ok(gen_dimer_cover(tree, self.seed)),
            CoverKind::SecondaryDimer => {
                let primary = gen_dimer_cover(tree, self.seed);
                gen_secondary_dimer(tree, &primary, self.seed)
            }
            CoverKind::MonomerDimer => Ok(gen_monomer_dimer(tree, self.seed)),
            CoverKind::PathCover => gen_path_cover(tree, self.seed),
            CoverKind::RandomSparse => gen_random_sparse(tree, self.d_cap.unwrap_or(1), self.density.unwrap_or(0.5), self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredicateResult {
    pub name: &'static str,
    pub passed: bool,
    pub violating_vertices: Vec<VertexId>,
    pub violating_edges: Vec<EdgeId>,
}

impl PredicateResult {
    fn from_violations(name: &'static str, violating_vertices: Vec<VertexId>, violating_edges: Vec<EdgeId>) -> Self {
        Self {
            name,
            passed: violating_vertices.is_empty() && violating_edges.is_empty(),
            violating_vertices,
            violating_edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub kind: CoverKind,
    pub passed: bool,
    pub predicates: Vec<PredicateResult>,
}

impl ValidationReport {
    pub fn predicate(&self, name: &str) -> Option<&PredicateResult> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

fn vertices_where(tree: &Tree, interior_only: bool, pred: impl Fn(VertexId) -> bool) -> Vec<VertexId> {
    tree.vertices()
        .filter(|&v| (!interior_only || tree.is_interior(v)) && pred(v))
        .collect()
}

/// Checks `d` against the defining predicates of `kind`. Secondary dimer
/// coverings are checked against `primary`. Never fails; violations are data.
pub fn validate_cover(tree: &Tree, d: &EdgeSet, kind: CoverKind, primary: Option<&EdgeSet>) -> ValidationReport {
    let mut predicates = Vec::new();
    if d.check_tree(tree).is_err() {
        predicates.push(PredicateResult {
            name: "built on this tree",
            passed: false,
            violating_vertices: vec![],
            violating_edges: vec![],
        });
        return ValidationReport {
            kind,
            passed: false,
            predicates,
        };
    }

    let recomputed = d.recompute_profile(tree);
    predicates.push(PredicateResult::from_violations(
        "degree profile consistent",
        vertices_where(tree, false, |v| recomputed[v.index()] != d.degree(v)),
        vec![],
    ));

    match kind {
        CoverKind::Empty => {
            predicates.push(PredicateResult::from_violations("no member edges", vec![], d.edges().collect()));
        }
        CoverKind::SingleBond => {
            let edges: Vec<EdgeId> = d.edges().collect();
            predicates.push(PredicateResult {
                name: "exactly one member edge",
                passed: edges.len() == 1,
                violating_vertices: vec![],
                violating_edges: if edges.len() == 1 { vec![] } else { edges },
            });
        }
        CoverKind::FiniteSet | CoverKind::RandomSparse => {}
        CoverKind::Dimer => {
            predicates.push(dimer_cover_predicate(tree, d));
            predicates.push(PredicateResult::from_violations(
                "matching",
                vertices_where(tree, false, |v| d.degree(v) > 1),
                vec![],
            ));
        }
        CoverKind::SecondaryDimer => match primary {
            None => predicates.push(PredicateResult {
                name: "primary dimer covering supplied",
                passed: false,
                violating_vertices: vec![],
                violating_edges: vec![],
            }),
            Some(primary) => secondary_predicates(tree, d, primary, &mut predicates),
        },
        CoverKind::MonomerDimer => {
            let mut too_close: Vec<EdgeId> = tree
                .edges()
                .filter(|&e| {
                    let (p, c) = tree.edge_endpoints(e);
                    // A non-member edge joining two covered vertices links two
                    // distinct bonds at distance 1.
                    !d.contains(e) && d.degree(p) > 0 && d.degree(c) > 0
                })
                .collect();
            too_close.extend(d.edges().filter(|&e| {
                let (p, c) = tree.edge_endpoints(e);
                d.degree(p) > 1 || d.degree(c) > 1
            }));
            too_close.sort();
            too_close.dedup();
            predicates.push(PredicateResult::from_violations("bond distance at least 2", vec![], too_close));
            predicates.push(PredicateResult::from_violations(
                "interior vertices within distance 1",
                vertices_where(tree, true, |v| d.degree(v) == 0 && tree.neighbors_iter(v).all(|w| d.degree(w) == 0)),
                vec![],
            ));
        }
        CoverKind::PathCover => {
            predicates.push(PredicateResult::from_violations(
                "interior vertices in exactly two bonds",
                vertices_where(tree, true, |v| d.degree(v) != 2),
                vec![],
            ));
            predicates.push(PredicateResult::from_violations(
                "simple paths",
                vertices_where(tree, false, |v| d.degree(v) > 2),
                vec![],
            ));
        }
    }

    let passed = predicates.iter().all(|p| p.passed);
    ValidationReport { kind, passed, predicates }
}

fn dimer_cover_predicate(tree: &Tree, d: &EdgeSet) -> PredicateResult {
    PredicateResult::from_violations(
        "interior vertices covered exactly once",
        vertices_where(tree, true, |v| d.degree(v) != 1),
        vec![],
    )
}

fn secondary_predicates(tree: &Tree, d: &EdgeSet, primary: &EdgeSet, out: &mut Vec<PredicateResult>) {
    if primary.check_tree(tree).is_err() {
        out.push(PredicateResult {
            name: "primary dimer covering supplied",
            passed: false,
            violating_vertices: vec![],
            violating_edges: vec![],
        });
        return;
    }
    let mut primary_ok = dimer_cover_predicate(tree, primary);
    primary_ok.name = "primary is a dimer covering";
    out.push(primary_ok);

    out.push(PredicateResult::from_violations(
        "disjoint from primary",
        vec![],
        d.edges().filter(|&e| primary.contains(e)).collect(),
    ));

    // Primary bonds incident to an edge (sharing a vertex), the edge itself excluded.
    let touching_primary = |e: EdgeId| -> usize {
        let (p, c) = tree.edge_endpoints(e);
        let mut bonds: Vec<EdgeId> = tree
            .incident_edges(p)
            .chain(tree.incident_edges(c))
            .filter(|&b| b != e && primary.contains(b))
            .collect();
        bonds.sort();
        bonds.dedup();
        bonds.len()
    };
    out.push(PredicateResult::from_violations(
        "each bond touches exactly two primary bonds",
        vec![],
        d.edges()
            .filter(|&e| {
                let (p, c) = tree.edge_endpoints(e);
                tree.is_interior(p) && tree.is_interior(c) && touching_primary(e) != 2
            })
            .collect(),
    ));

    let touching_secondary = |b: EdgeId| -> usize {
        let (p, c) = tree.edge_endpoints(b);
        let mut bonds: Vec<EdgeId> = tree
            .incident_edges(p)
            .chain(tree.incident_edges(c))
            .filter(|&e| e != b && d.contains(e))
            .collect();
        bonds.sort();
        bonds.dedup();
        bonds.len()
    };
    out.push(PredicateResult::from_violations(
        "each primary bond touches exactly one bond",
        vec![],
        primary
            .edges()
            .filter(|&b| {
                let (p, c) = tree.edge_endpoints(b);
                tree.is_interior(p) && tree.is_interior(c) && touching_secondary(b) != 1
            })
            .collect(),
    ));
    out.push(PredicateResult::from_violations(
        "bonds pairwise vertex-disjoint",
        vertices_where(tree, false, |v| d.degree(v) > 1),
        vec![],
    ));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::build_ball;

    fn ball(k: u32, r: u32) -> Tree {
        build_ball(TreeSpec::new(k, r)).unwrap()
    }

    #[test]
    fn admissibility_thresholds() {
        assert!(admissible(1, 4));
        assert!(admissible(2, 6));
        assert!(!admissible(1, 3));
        assert!(!admissible(2, 5));
        assert!(admissible(0, 2));
        assert!(!admissible(0, 1));
        // Dimer-type sets (d = 1) need k >= 4, path covers (d = 2) need k >= 6.
        for k in 1..=10 {
            assert_eq!(admissible(1, k), k >= 4);
            assert_eq!(admissible(2, k), k >= 6);
        }
    }

    #[test]
    fn dimer_on_radius_one_picks_one_root_edge() {
        let t = ball(4, 1);
        let mut picked = std::collections::BTreeSet::new();
        for seed in 0..40 {
            let d = gen_dimer_cover(&t, seed);
            assert_eq!(d.len(), 1);
            assert_eq!(d.degree(VertexId::ROOT), 1);
            picked.insert(d.edges().next().unwrap());
        }
        assert!(picked.len() > 1, "seed should influence the choice");
    }

    #[test]
    fn dimer_covers_whole_interior() {
        let t = ball(4, 3);
        let d = gen_dimer_cover(&t, 7);
        let covered = t.interior_vertices().filter(|&v| d.degree(v) == 1).count();
        assert_eq!(covered, t.interior_count());
        assert_eq!(d.d_max(), 1);
        assert!(validate_cover(&t, &d, CoverKind::Dimer, None).passed);
    }

    #[test]
    fn dimer_is_nested_across_radii() {
        let big = ball(3, 6);
        let small = ball(3, 4);
        for seed in 0..5 {
            let d_big = gen_dimer_cover(&big, seed);
            let d_small = gen_dimer_cover(&small, seed);
            assert_eq!(
                d_big.restrict_to(&small).unwrap().edges().collect::<Vec<_>>(),
                d_small.edges().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn single_root_bond_is_not_a_dimer_cover() {
        let t = ball(4, 3);
        let d = EdgeSet::single_bond(&t, EdgeId::new(0)).unwrap();
        let report = validate_cover(&t, &d, CoverKind::Dimer, None);
        assert!(!report.passed);
        let uncovered = &report
            .predicate("interior vertices covered exactly once")
            .unwrap()
            .violating_vertices;
        assert_eq!(uncovered.len(), t.interior_count() - 2);
        assert!(validate_cover(&t, &d, CoverKind::SingleBond, None).passed);
    }

    #[test]
    fn empty_set_validates_as_empty() {
        let t = ball(3, 3);
        assert!(validate_cover(&t, &EdgeSet::empty(&t), CoverKind::Empty, None).passed);
        let d = gen_dimer_cover(&t, 0);
        assert!(!validate_cover(&t, &d, CoverKind::Empty, None).passed);
    }

    #[test]
    fn secondary_dimer_predicates_hold() {
        for k in [2, 3, 4, 5] {
            let t = ball(k, 5);
            for seed in 0..20 {
                let primary = gen_dimer_cover(&t, seed);
                let sec = gen_secondary_dimer(&t, &primary, seed + 100).unwrap();
                let report = validate_cover(&t, &sec, CoverKind::SecondaryDimer, Some(&primary));
                assert!(report.passed, "k={k} seed={seed}: {report:?}");
                assert_eq!(sec.d_max(), 1);
                assert!(sec.edges().all(|e| !primary.contains(e)));
            }
        }
    }

    #[test]
    fn secondary_needs_a_dimer_primary() {
        let t = ball(4, 3);
        let err = gen_secondary_dimer(&t, &EdgeSet::empty(&t), 0).unwrap_err();
        assert!(matches!(err, Error::NotADimerCover(_)));
        let report = validate_cover(&t, &EdgeSet::empty(&t), CoverKind::SecondaryDimer, None);
        assert!(!report.passed);
    }

    #[test]
    fn secondary_fails_on_a_chain() {
        // k = 1 has no spare edges to pair dimers with.
        let t = ball(1, 4);
        let primary = gen_dimer_cover(&t, 0);
        assert!(matches!(gen_secondary_dimer(&t, &primary, 0), Err(Error::SecondaryDimerStuck(..))));
    }

    #[test]
    fn monomer_dimer_distances_brute_force() {
        let t = ball(3, 4);
        for seed in 0..10 {
            let d = gen_monomer_dimer(&t, seed);
            let members: Vec<EdgeId> = d.edges().collect();
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    assert!(t.edge_distance(a, b) >= 2);
                }
            }
            for v in t.interior_vertices() {
                let dist = members
                    .iter()
                    .map(|&e| {
                        let (p, c) = t.edge_endpoints(e);
                        t.graph_distance(v, p).unwrap().min(t.graph_distance(v, c).unwrap())
                    })
                    .min()
                    .unwrap();
                assert!(dist <= 1);
            }
            assert_eq!(d.d_max(), 1);
            assert!(validate_cover(&t, &d, CoverKind::MonomerDimer, None).passed);
        }
    }

    #[test]
    fn monomer_validator_catches_adjacent_bonds() {
        let t = ball(3, 3);
        let a = t.vertex_at(&[0]).unwrap();
        let b = t.vertex_at(&[0, 0]).unwrap();
        let c = t.vertex_at(&[0, 0, 0]).unwrap();
        // Root–a and b–c are joined by the edge a–b.
        let d = EdgeSet::from_edges(&t, CoverKind::MonomerDimer, [t.parent_edge(a).unwrap(), t.parent_edge(c).unwrap()]).unwrap();
        let report = validate_cover(&t, &d, CoverKind::MonomerDimer, None);
        let p = report.predicate("bond distance at least 2").unwrap();
        assert_eq!(p.violating_edges, vec![t.parent_edge(b).unwrap()]);
    }

    #[test]
    fn path_cover_degrees() {
        for k in [2, 3, 6] {
            let t = ball(k, 4);
            for seed in 0..10 {
                let d = gen_path_cover(&t, seed).unwrap();
                assert!(t.interior_vertices().all(|v| d.degree(v) == 2));
                assert!(t.vertices().all(|v| d.degree(v) <= 2));
                assert_eq!(d.d_max(), 2);
                assert!(validate_cover(&t, &d, CoverKind::PathCover, None).passed);
            }
        }
        assert!(gen_path_cover(&ball(1, 3), 0).is_err());
    }

    #[test]
    fn random_sparse_limits() {
        let t = ball(4, 4);
        assert!(gen_random_sparse(&t, 3, 0.0, 1).unwrap().is_empty());
        assert!(gen_random_sparse(&t, 0, 1.0, 1).unwrap().is_empty());
        for cap in 1..=3 {
            let d = gen_random_sparse(&t, cap, 0.7, 9).unwrap();
            assert!(d.d_max() <= cap);
            assert!(!d.is_empty());
        }
        assert!(gen_random_sparse(&t, 1, 1.5, 0).is_err());
    }

    #[test]
    fn profiles_consistent_and_generators_deterministic() {
        let t = ball(4, 4);
        for seed in 0..50 {
            let primary = gen_dimer_cover(&t, seed);
            let sets = [
                primary.clone(),
                gen_secondary_dimer(&t, &primary, seed).unwrap(),
                gen_monomer_dimer(&t, seed),
                gen_path_cover(&t, seed).unwrap(),
                gen_random_sparse(&t, 2, 0.4, seed).unwrap(),
            ];
            for d in &sets {
                assert_eq!(d.recompute_profile(&t), d.degree_profile());
            }
            assert_eq!(gen_dimer_cover(&t, seed), sets[0]);
            assert_eq!(gen_secondary_dimer(&t, &primary, seed).unwrap(), sets[1]);
            assert_eq!(gen_monomer_dimer(&t, seed), sets[2]);
            assert_eq!(gen_path_cover(&t, seed).unwrap(), sets[3]);
            assert_eq!(gen_random_sparse(&t, 2, 0.4, seed).unwrap(), sets[4]);
            // Admissibility follows the thresholds of each family.
            assert!(sets[0].is_admissible() && sets[1].is_admissible() && sets[2].is_admissible());
            assert!(!sets[3].is_admissible());
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in CoverKind::ALL {
            assert_eq!(kind.name().parse::<CoverKind>().unwrap(), kind);
        }
        assert!("triangle".parse::<CoverKind>().is_err());
    }
}
