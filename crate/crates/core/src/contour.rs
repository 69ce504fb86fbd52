//! Contours of a configuration relative to a ground state `σ^D`, the
//! linear-in-volume energy bound for contours, and exact counts of connected
//! subgraphs through a vertex.
//!
//! A contour is a maximal connected component `I` of incorrect sites
//! together with its external boundary `∂I` and every tree edge inside
//! `I ∪ ∂I`.

use rand::Rng;
use serde::Serialize;

use crate::animals::{self, EnumerationLimits};
use crate::dsets::{admissible, EdgeSet};
use crate::error::{Error, Result};
use crate::groundstate::{self, build_sigma, flip_excess_units, Coupling, Sign, SpinConfig};
use crate::rng;
use crate::tree::{EdgeId, Tree, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contour {
    pub interior: Vec<VertexId>,
    pub external_boundary: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl Contour {
    /// Builds the contour with interior `interior`, which must be connected.
    pub fn from_interior(tree: &Tree, interior: &[VertexId]) -> Result<Self> {
        if !animals::is_connected(tree, interior) {
            return Err(Error::Disconnected);
        }
        let mut interior = interior.to_vec();
        interior.sort();
        interior.dedup();
        let mut boundary: Vec<VertexId> = interior
            .iter()
            .flat_map(|&v| tree.neighbors_iter(v))
            .filter(|w| interior.binary_search(w).is_err())
            .collect();
        boundary.sort();
        boundary.dedup();

        let mut vertices: Vec<VertexId> = interior.iter().chain(&boundary).copied().collect();
        vertices.sort();
        let mut edges: Vec<EdgeId> = vertices
            .iter()
            .flat_map(|&u| tree.children(u).filter(|c| vertices.binary_search(c).is_ok()))
            .map(|c| tree.parent_edge(c).expect("child has a parent edge"))
            .collect();
        edges.sort();
        Ok(Self {
            interior,
            external_boundary: boundary,
            edges,
        })
    }

    /// `|Int Γ|`.
    pub fn size(&self) -> usize {
        self.interior.len()
    }

    /// Vertices of `I ∪ ∂I`, sorted.
    pub fn vertices(&self) -> Vec<VertexId> {
        let mut v: Vec<VertexId> = self.interior.iter().chain(&self.external_boundary).copied().collect();
        v.sort();
        v
    }

    /// Excess energy of the single-contour configuration, in units of `J`.
    pub fn excess_units(&self, tree: &Tree, d: &EdgeSet) -> i64 {
        flip_excess_units(tree, d, &self.interior)
    }
}

/// Sites where `sigma` disagrees with `reference`.
pub fn incorrect_sites(tree: &Tree, sigma: &SpinConfig, reference: &SpinConfig) -> Result<Vec<VertexId>> {
    sigma.check_tree(tree)?;
    reference.check_tree(tree)?;
    Ok(tree.vertices().filter(|&v| sigma.spin(v) != reference.spin(v)).collect())
}

/// One contour per maximal connected component of incorrect sites, ordered
/// by smallest interior vertex.
pub fn extract_contours(tree: &Tree, sigma: &SpinConfig, reference: &SpinConfig) -> Result<Vec<Contour>> {
    let wrong = incorrect_sites(tree, sigma, reference)?;
    if let Some(&v) = wrong.iter().find(|&&v| !tree.is_interior(v)) {
        return Err(Error::BoundaryTouch(v));
    }
    let mut is_wrong = vec![false; tree.vertex_count()];
    for &v in &wrong {
        is_wrong[v.index()] = true;
    }
    let mut seen = vec![false; tree.vertex_count()];
    let mut contours = Vec::new();
    for &start in &wrong {
        if seen[start.index()] {
            continue;
        }
        seen[start.index()] = true;
        let mut component = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in tree.neighbors_iter(v) {
                if is_wrong[w.index()] && !seen[w.index()] {
                    seen[w.index()] = true;
                    component.push(w);
                    stack.push(w);
                }
            }
        }
        contours.push(Contour::from_interior(tree, &component)?);
    }
    Ok(contours)
}

/// Flips every contour interior of `contours` in `reference`.
pub fn reconstruct(tree: &Tree, reference: &SpinConfig, contours: &[Contour]) -> Result<SpinConfig> {
    contours
        .iter()
        .try_fold(reference.clone(), |sigma, c| groundstate::flip_connected(tree, &sigma, &c.interior))
}

/// Interiors pairwise disjoint and non-adjacent, i.e. the family is the
/// contour set of some configuration.
pub fn compatible(tree: &Tree, contours: &[Contour]) -> bool {
    contours.iter().enumerate().all(|(i, a)| {
        contours[i + 1..].iter().all(|b| {
            b.interior
                .iter()
                .all(|v| a.interior.binary_search(v).is_err() && a.external_boundary.binary_search(v).is_err())
        })
    }) && contours.iter().all(|c| animals::is_connected(tree, &c.interior))
}

/// `ρ(Γ) = exp(-β [H(σ_Γ) - H(σ^D)])`.
pub fn contour_weight(tree: &Tree, contour: &Contour, d: &EdgeSet, j: Coupling, beta: f64) -> f64 {
    (-beta * j.energy(contour.excess_units(tree, d))).exp()
}

/// `2 [(k + 1) - 2 (d + 1)]`, the per-site energy constant of the contour
/// bound in units of `J`.
pub fn peierls_constant_units(k: u32, d_max: u32) -> i64 {
    2 * ((i64::from(k) + 1) - 2 * (i64::from(d_max) + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeierlsReport {
    pub k: u32,
    pub d_max: u32,
    pub admissible: bool,
    pub m_max: usize,
    /// Per-site constant of the bound, in units of `J`.
    pub constant_units: i64,
    /// The constant is zero or negative, so the bound carries no information.
    pub degenerate: bool,
    pub contours_checked: u64,
    pub holds: bool,
    pub violations: u64,
    pub min_slack: f64,
    pub min_slack_units: i64,
    pub tightest: Vec<VertexId>,
    /// Minimum slack (units of `J`) per interior size `1..=m_max`.
    pub min_slack_units_by_size: Vec<i64>,
}

/// Checks `H(σ_Γ) - H(σ^D) >= 2J[(k+1) - 2(d_D+1)] |Int Γ|` for every
/// contour whose interior is a connected interior set of at most `m_max`
/// sites.
pub fn verify_peierls(tree: &Tree, d: &EdgeSet, j: Coupling, m_max: usize, limits: EnumerationLimits) -> Result<PeierlsReport> {
    d.check_tree(tree)?;
    if m_max == 0 {
        return Err(Error::InvalidParameter {
            name: "m_max",
            reason: "must be at least 1".into(),
        });
    }
    let d_max = d.d_max();
    let constant = peierls_constant_units(tree.k(), d_max);
    let mut min_slack = i64::MAX;
    let mut tightest = Vec::new();
    let mut by_size = vec![i64::MAX; m_max];
    let mut violations = 0u64;
    let checked = animals::for_each_connected(
        tree,
        m_max,
        limits,
        |v| tree.is_interior(v),
        |interior| {
            let slack = flip_excess_units(tree, d, interior) - constant * interior.len() as i64;
            if slack < 0 {
                violations += 1;
            }
            let slot = &mut by_size[interior.len() - 1];
            *slot = (*slot).min(slack);
            if slack < min_slack {
                min_slack = slack;
                tightest = interior.to_vec();
            }
        },
    )?;
    tightest.sort();
    Ok(PeierlsReport {
        k: tree.k(),
        d_max,
        admissible: admissible(d_max, tree.k()),
        m_max,
        constant_units: constant,
        degenerate: constant <= 0,
        contours_checked: checked,
        holds: violations == 0,
        violations,
        min_slack: if checked > 0 { j.energy(min_slack) } else { f64::NAN },
        min_slack_units: min_slack,
        tightest,
        min_slack_units_by_size: by_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InductionReport {
    pub contours_sampled: usize,
    pub steps_checked: u64,
    pub base_cases: u64,
    /// Removing a site did not leave exactly one contour with the expected interior.
    pub shape_failures: u64,
    /// The energy drop of a removal step was below the per-site constant.
    pub energy_failures: u64,
    /// Single-site contours cost less than `2J[(k+1) - 2 d_D]`.
    pub base_failures: u64,
    pub constant_units: i64,
    pub min_step_drop_units: i64,
    pub passed: bool,
}

/// Random connected interior set of `size` sites grown from `start`, never
/// leaving the vertices accepted by `allowed`.
fn random_connected<R: Rng>(tree: &Tree, start: VertexId, size: usize, allowed: impl Fn(VertexId) -> bool, rng: &mut R) -> Vec<VertexId> {
    let mut set = vec![start];
    while set.len() < size {
        let mut frontier: Vec<VertexId> = set
            .iter()
            .flat_map(|&v| tree.neighbors_iter(v))
            .filter(|w| allowed(*w) && !set.contains(w))
            .collect();
        frontier.sort();
        frontier.dedup();
        if frontier.is_empty() {
            break;
        }
        set.push(frontier[rng.gen_range(0..frontier.len())]);
    }
    set.sort();
    set
}

/// Replays the inductive step of the contour bound on random contours:
/// removing an interior site all of whose children lie outside the interior
/// leaves exactly one contour with that site removed, and lowers the energy
/// by at least `2J[(k+1) - 2(d_D+1)]`.
pub fn induction_step_check(tree: &Tree, d: &EdgeSet, samples: usize, max_size: usize, seed: u64) -> Result<InductionReport> {
    d.check_tree(tree)?;
    if max_size == 0 || tree.interior_count() == 0 {
        return Err(Error::InvalidParameter {
            name: "max_size",
            reason: "need at least one interior site and max_size >= 1".into(),
        });
    }
    let reference = build_sigma(tree, d, Sign::Plus)?;
    let d_max = d.d_max();
    let constant = peierls_constant_units(tree.k(), d_max);
    let base_bound = 2 * ((i64::from(tree.k()) + 1) - 2 * i64::from(d_max));
    let interior: Vec<VertexId> = tree.interior_vertices().collect();
    let mut rng = rng::stream(seed, 0);

    let mut report = InductionReport {
        contours_sampled: samples,
        steps_checked: 0,
        base_cases: 0,
        shape_failures: 0,
        energy_failures: 0,
        base_failures: 0,
        constant_units: constant,
        min_step_drop_units: i64::MAX,
        passed: false,
    };

    for _ in 0..samples {
        let start = interior[rng.gen_range(0..interior.len())];
        let size = rng.gen_range(1..=max_size);
        let set = random_connected(tree, start, size, |v| tree.is_interior(v), &mut rng);
        let sigma = groundstate::flip_connected(tree, &reference, &set)?;
        let excess = groundstate::excess_units(tree, &sigma, &reference)?;

        for &x in &set {
            if tree.children(x).any(|c| set.contains(&c)) {
                continue;
            }
            let removed = groundstate::flip_connected(tree, &sigma, &[x])?;
            let remaining: Vec<VertexId> = set.iter().copied().filter(|&v| v != x).collect();
            let drop = excess - groundstate::excess_units(tree, &removed, &reference)?;
            if set.len() == 1 {
                report.base_cases += 1;
                if removed != reference {
                    report.shape_failures += 1;
                }
                if drop < base_bound {
                    report.base_failures += 1;
                }
            } else {
                report.steps_checked += 1;
                let contours = extract_contours(tree, &removed, &reference)?;
                if contours.len() != 1 || contours[0].interior != remaining {
                    report.shape_failures += 1;
                }
            }
            report.min_step_drop_units = report.min_step_drop_units.min(drop);
            if drop < constant {
                report.energy_failures += 1;
            }
        }
    }
    report.passed = report.shape_failures == 0 && report.energy_failures == 0 && report.base_failures == 0;
    Ok(report)
}

/// `(k + 1)^(2n)`.
pub fn subgraph_bound(k: u32, n: u32) -> u128 {
    (u128::from(k) + 1).pow(2 * n)
}

/// Number of connected subgraphs with exactly `n` edges having `v` as a
/// vertex. On a tree such a subgraph is a subtree, i.e. a connected vertex
/// set of `n + 1` sites; for `n = 0` the count is 1.
pub fn count_connected_subgraphs(tree: &Tree, v: VertexId, n: u32, limits: EnumerationLimits) -> Result<u64> {
    if !tree.contains(v) {
        return Err(Error::UnknownVertex(v));
    }
    if tree.depth_to_boundary(v) <= n {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!(
                "{:?} is only {} generations from the boundary; counting {n}-edge subgraphs needs more",
                tree.address(v),
                tree.depth_to_boundary(v)
            ),
        });
    }
    let target = n as usize + 1;
    let mut count = 0u64;
    animals::for_each_containing(
        tree,
        v,
        target,
        limits,
        |_| true,
        |set| {
            if set.len() == target {
                count += 1;
            }
        },
    )?;
    Ok(count)
}

/// `Σ_σ exp(-β [H(σ) - H(σ^D)])` over all configurations equal to `σ^D` on
/// the boundary generation, summed configuration by configuration.
pub fn configuration_sum(tree: &Tree, d: &EdgeSet, j: Coupling, beta: f64) -> Result<f64> {
    let reference = build_sigma(tree, d, Sign::Plus)?;
    let n = tree.interior_count();
    if n > 24 {
        return Err(Error::ResourceLimit {
            what: "configurations",
            requested: 1u128 << n,
            limit: 1 << 24,
        });
    }
    let mut sigma = reference.clone();
    let mut total = 0.0;
    for mask in 0u64..(1 << n) {
        for i in 0..n {
            let base = reference.spins()[i];
            sigma.spins_mut()[i] = if mask >> i & 1 == 1 { -base } else { base };
        }
        let excess = groundstate::excess_units(tree, &sigma, &reference)?;
        total += (-beta * j.energy(excess)).exp();
    }
    Ok(total)
}

/// `Σ Π ρ(Γ_i)` over all compatible families of contours inside the ball.
pub fn contour_family_sum(tree: &Tree, d: &EdgeSet, j: Coupling, beta: f64, limits: EnumerationLimits) -> Result<f64> {
    d.check_tree(tree)?;
    let n = tree.interior_count();
    if n > 64 {
        return Err(Error::ResourceLimit {
            what: "interior sites for contour families",
            requested: n as u128,
            limit: 64,
        });
    }
    // Each contour: weight, interior mask, mask of I ∪ ∂I restricted to the interior.
    let mut contours: Vec<(f64, u64, u64)> = Vec::new();
    let mut failure = None;
    animals::for_each_connected(
        tree,
        n,
        limits,
        |v| tree.is_interior(v),
        |interior| match Contour::from_interior(tree, interior) {
            Ok(c) => {
                let mask = |vs: &[VertexId]| vs.iter().filter(|v| v.index() < n).fold(0u64, |m, v| m | 1 << v.index());
                let own = mask(&c.interior);
                let closure = own | mask(&c.external_boundary);
                contours.push((contour_weight(tree, &c, d, j, beta), own, closure));
            }
            Err(err) => failure = Some(err),
        },
    )?;
    if let Some(err) = failure {
        return Err(err);
    }

    // Families are enumerated in increasing contour index; a contour may be
    // added when its interior avoids every earlier contour's closure.
    fn families(contours: &[(f64, u64, u64)], from: usize, blocked: u64) -> f64 {
        let mut total = 1.0;
        for (i, &(weight, own, closure)) in contours.iter().enumerate().skip(from) {
            if own & blocked == 0 {
                total += weight * families(contours, i + 1, blocked | closure);
            }
        }
        total
    }
    Ok(families(&contours, 0, 0))
}
