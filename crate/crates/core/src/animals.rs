//! Enumeration of connected vertex sets ("lattice animals") of a ball.
//!
//! A connected set on a tree has a unique top vertex, which is also its
//! smallest breadth-first id. Growing sets from an anchor through an ordered
//! frontier, and never revisiting a frontier position that was skipped,
//! produces every connected set containing the anchor exactly once.

use crate::error::{Error, Result};
use crate::tree::{Tree, VertexId};

/// Default cap on the number of connected sets a single enumeration visits.
pub const DEFAULT_MAX_SETS: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_sets: u64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_sets: DEFAULT_MAX_SETS,
        }
    }
}

struct Walker<'a, A, F> {
    tree: &'a Tree,
    allowed: A,
    visit: F,
    max_size: usize,
    visited: u64,
    limit: u64,
}

impl<A, F> Walker<'_, A, F>
where
    A: Fn(VertexId) -> bool,
    F: FnMut(&[VertexId]),
{
    fn grow(&mut self, set: &mut Vec<VertexId>, frontier: &mut Vec<VertexId>, start: usize) -> Result<()> {
        self.visited += 1;
        if self.visited > self.limit {
            return Err(Error::ResourceLimit {
                what: "connected sets",
                requested: self.visited as u128,
                limit: self.limit as u128,
            });
        }
        (self.visit)(set);
        if set.len() == self.max_size {
            return Ok(());
        }
        for i in start..frontier.len() {
            let w = frontier[i];
            set.push(w);
            let mark = frontier.len();
            for x in self.tree.neighbors_iter(w) {
                if (self.allowed)(x) && !set.contains(&x) && !frontier.contains(&x) {
                    frontier.push(x);
                }
            }
            self.grow(set, frontier, i + 1)?;
            frontier.truncate(mark);
            set.pop();
        }
        Ok(())
    }
}

/// Calls `visit` once for every connected set that contains `anchor`, uses
/// only vertices accepted by `allowed`, and has at most `max_size` vertices.
/// Returns the number of sets visited.
pub fn for_each_containing(
    tree: &Tree,
    anchor: VertexId,
    max_size: usize,
    limits: EnumerationLimits,
    allowed: impl Fn(VertexId) -> bool,
    visit: impl FnMut(&[VertexId]),
) -> Result<u64> {
    if max_size == 0 || !allowed(anchor) {
        return Ok(0);
    }
    let mut walker = Walker {
        tree,
        allowed,
        visit,
        max_size,
        visited: 0,
        limit: limits.max_sets,
    };
    let mut set = vec![anchor];
    let mut frontier: Vec<VertexId> = tree.neighbors_iter(anchor).filter(|&x| (walker.allowed)(x)).collect();
    walker.grow(&mut set, &mut frontier, 0)?;
    Ok(walker.visited)
}

/// Every connected set of allowed vertices with at most `max_size` vertices,
/// each visited once (anchored at its smallest id).
pub fn for_each_connected(
    tree: &Tree,
    max_size: usize,
    limits: EnumerationLimits,
    allowed: impl Fn(VertexId) -> bool,
    mut visit: impl FnMut(&[VertexId]),
) -> Result<u64> {
    let mut total = 0u64;
    for anchor in tree.vertices() {
        if !allowed(anchor) {
            continue;
        }
        let remaining = EnumerationLimits {
            max_sets: limits.max_sets.saturating_sub(total),
        };
        total +=
            for_each_containing(tree, anchor, max_size, remaining, |x| x >= anchor && allowed(x), &mut visit).map_err(|err| match err {
                Error::ResourceLimit { what, .. } => Error::ResourceLimit {
                    what,
                    requested: total as u128 + remaining.max_sets as u128 + 1,
                    limit: limits.max_sets as u128,
                },
                other => other,
            })?;
    }
    Ok(total)
}

/// Whether `set` is non-empty and connected through nearest-neighbour steps.
pub fn is_connected(tree: &Tree, set: &[VertexId]) -> bool {
    let Some(&first) = set.first() else { return false };
    if set.iter().any(|&v| !tree.contains(v)) {
        return false;
    }
    let mut seen = vec![first];
    let mut stack = vec![first];
    while let Some(v) = stack.pop() {
        for w in tree.neighbors_iter(v) {
            if set.contains(&w) && !seen.contains(&w) {
                seen.push(w);
                stack.push(w);
            }
        }
    }
    let mut distinct = set.to_vec();
    distinct.sort();
    distinct.dedup();
    seen.len() == distinct.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_ball, TreeSpec};
    use std::collections::BTreeSet;

    /// Brute force over all vertex subsets of a small ball.
    fn subsets_brute(tree: &Tree, max_size: usize) -> BTreeSet<Vec<VertexId>> {
        let n = tree.vertex_count();
        assert!(n <= 20);
        let mut out = BTreeSet::new();
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > max_size {
                continue;
            }
            let set: Vec<VertexId> = (0..n as u32).filter(|i| mask >> i & 1 == 1).map(VertexId::new).collect();
            if is_connected(tree, &set) {
                out.insert(set);
            }
        }
        out
    }

    #[test]
    fn all_connected_sets_match_brute_force() {
        for (k, r) in [(2, 2), (3, 2), (1, 5)] {
            let t = build_ball(TreeSpec::new(k, r)).unwrap();
            for max in 1..=5 {
                let mut seen = BTreeSet::new();
                let count = for_each_connected(
                    &t,
                    max,
                    EnumerationLimits::default(),
                    |_| true,
                    |s| {
                        let mut s = s.to_vec();
                        s.sort();
                        assert!(seen.insert(s), "duplicate set");
                    },
                )
                .unwrap();
                assert_eq!(count as usize, seen.len());
                assert_eq!(seen, subsets_brute(&t, max), "k={k} r={r} max={max}");
            }
        }
    }

    #[test]
    fn sets_containing_anchor_match_brute_force() {
        let t = build_ball(TreeSpec::new(2, 3)).unwrap();
        let anchor = t.vertex_at(&[1, 0]).unwrap();
        let mut seen = BTreeSet::new();
        for_each_containing(
            &t,
            anchor,
            4,
            EnumerationLimits::default(),
            |v| t.is_interior(v),
            |s| {
                let mut s = s.to_vec();
                s.sort();
                assert!(seen.insert(s));
            },
        )
        .unwrap();
        let interior: Vec<VertexId> = t.interior_vertices().collect();
        let mut expected = BTreeSet::new();
        let n = interior.len();
        for mask in 1u32..(1 << n) {
            let set: Vec<VertexId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| interior[i]).collect();
            if set.len() <= 4 && set.contains(&anchor) && is_connected(&t, &set) {
                expected.insert(set);
            }
        }
        assert_eq!(seen, expected);
    }

    #[test]
    fn limit_is_enforced() {
        let t = build_ball(TreeSpec::new(4, 4)).unwrap();
        let err = for_each_connected(&t, 4, EnumerationLimits { max_sets: 50 }, |_| true, |_| {}).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn connectivity() {
        let t = build_ball(TreeSpec::new(2, 2)).unwrap();
        let a = t.vertex_at(&[0]).unwrap();
        let b = t.vertex_at(&[1]).unwrap();
        assert!(!is_connected(&t, &[]));
        assert!(is_connected(&t, &[a]));
        assert!(!is_connected(&t, &[a, b]));
        assert!(is_connected(&t, &[a, VertexId::ROOT, b]));
    }
}
