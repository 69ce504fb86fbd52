//! Serializable file forms. Vertices appear as child-index addresses from
//! the root; dense ids stay in memory.

use serde::{Deserialize, Serialize};

use crate::contour::Contour;
use crate::dsets::{CoverKind, EdgeSet};
use crate::error::{Error, Result};
use crate::groundstate::SpinConfig;
use crate::tree::{build_ball_with, EdgeId, Tree, TreeLimits, TreeSpec, VertexId};

pub type Address = Vec<u32>;

fn edge_addresses(tree: &Tree, edges: impl Iterator<Item = EdgeId>) -> Vec<(Address, Address)> {
    edges
        .map(|e| {
            let (p, c) = tree.edge_endpoints(e);
            (tree.address(p), tree.address(c))
        })
        .collect()
}

fn resolve_edges(tree: &Tree, edges: &[(Address, Address)]) -> Result<Vec<EdgeId>> {
    edges.iter().map(|(p, c)| tree.edge_from_addresses(p, c)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeFile {
    pub k: u32,
    pub depth: u32,
    pub edges: Vec<(Address, Address)>,
}

impl TreeFile {
    pub fn from_tree(tree: &Tree) -> Self {
        Self {
            k: tree.k(),
            depth: tree.depth(),
            edges: edge_addresses(tree, tree.edges()),
        }
    }

    /// Rebuilds the ball and checks the listed edges are exactly its edges.
    pub fn to_tree(&self, limits: TreeLimits) -> Result<Tree> {
        let tree = build_ball_with(TreeSpec::new(self.k, self.depth), limits)?;
        let listed = resolve_edges(&tree, &self.edges)?;
        let mut sorted = listed.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != tree.edge_count() || listed.len() != tree.edge_count() {
            return Err(Error::InvalidSpec(format!(
                "file lists {} edges, a ball with k={} depth={} has {}",
                listed.len(),
                self.k,
                self.depth,
                tree.edge_count()
            )));
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSetFile {
    pub kind: CoverKind,
    pub seed: Option<u64>,
    pub k: u32,
    pub depth: u32,
    pub edges: Vec<(Address, Address)>,
}

impl EdgeSetFile {
    pub fn from_set(tree: &Tree, d: &EdgeSet) -> Self {
        Self {
            kind: d.kind(),
            seed: d.seed(),
            k: tree.k(),
            depth: tree.depth(),
            edges: edge_addresses(tree, d.edges()),
        }
    }

    pub fn tree_spec(&self) -> TreeSpec {
        TreeSpec::new(self.k, self.depth)
    }

    pub fn to_set(&self, tree: &Tree) -> Result<EdgeSet> {
        let spec = tree.spec();
        if spec != self.tree_spec() {
            return Err(Error::TreeMismatch {
                expected_k: spec.k,
                expected_depth: spec.depth,
                found_k: self.k,
                found_depth: self.depth,
            });
        }
        let mut set = EdgeSet::from_edges(tree, self.kind, resolve_edges(tree, &self.edges)?)?;
        set.set_provenance(self.kind, self.seed);
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfigFile {
    #[serde(rename = "treeRef")]
    pub tree_ref: TreeSpec,
    pub spins: Vec<i8>,
}

impl SpinConfigFile {
    pub fn from_config(sigma: &SpinConfig) -> Self {
        Self {
            tree_ref: sigma.spec(),
            spins: sigma.spins().to_vec(),
        }
    }

    pub fn to_config(&self, tree: &Tree) -> Result<SpinConfig> {
        let spec = tree.spec();
        if spec != self.tree_ref {
            return Err(Error::TreeMismatch {
                expected_k: spec.k,
                expected_depth: spec.depth,
                found_k: self.tree_ref.k,
                found_depth: self.tree_ref.depth,
            });
        }
        SpinConfig::new(tree, self.spins.clone())
    }
}

/// Contours as arrays of interior addresses.
pub fn contour_addresses(tree: &Tree, contours: &[Contour]) -> Vec<Vec<Address>> {
    contours
        .iter()
        .map(|c| c.interior.iter().map(|&v| tree.address(v)).collect())
        .collect()
}

pub fn vertex_addresses(tree: &Tree, vertices: &[VertexId]) -> Vec<Address> {
    vertices.iter().map(|&v| tree.address(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsets::gen_dimer_cover;
    use crate::groundstate::{build_sigma, Sign};
    use crate::tree::build_ball;

    #[test]
    fn tree_file_rejects_tampering() {
        let t = build_ball(TreeSpec::new(2, 2)).unwrap();
        let mut file = TreeFile::from_tree(&t);
        assert_eq!(file.edges[0], (vec![], vec![0]));
        assert_eq!(file.to_tree(TreeLimits::default()).unwrap(), t);
        file.edges.pop();
        assert!(file.to_tree(TreeLimits::default()).is_err());
        file.edges.push((vec![0], vec![1, 0]));
        assert!(file.to_tree(TreeLimits::default()).is_err());
    }

    #[test]
    fn edge_set_and_spins_round_trip() {
        let t = build_ball(TreeSpec::new(4, 3)).unwrap();
        let d = gen_dimer_cover(&t, 12);
        let file = EdgeSetFile::from_set(&t, &d);
        assert_eq!(file.to_set(&t).unwrap(), d);
        let other = build_ball(TreeSpec::new(4, 2)).unwrap();
        assert!(file.to_set(&other).is_err());

        let sigma = build_sigma(&t, &d, Sign::Minus).unwrap();
        let file = SpinConfigFile::from_config(&sigma);
        assert_eq!(file.to_config(&t).unwrap(), sigma);
    }
}
