//! Finite balls of the rooted Cayley tree in which every vertex has `k + 1`
//! neighbours.
//!
//! Vertices are stored breadth-first, children in address order, so the
//! children of any vertex occupy a contiguous id range and the ball of
//! radius `r` is an id-prefix of the ball of radius `r + 1`. Edge `e` is the
//! edge joining vertex `e + 1` to its parent.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of vertices a ball may have.
pub const DEFAULT_MAX_VERTICES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeSpec {
    pub k: u32,
    pub depth: u32,
}

impl TreeSpec {
    pub fn new(k: u32, depth: u32) -> Self {
        Self { k, depth }
    }

    /// `1 + (k+1)(k^r - 1)/(k - 1)`, or `None` on overflow.
    pub fn vertex_count(&self) -> Option<u128> {
        let (k, r) = (self.k as u128, self.depth);
        if r == 0 {
            return Some(1);
        }
        let mut total: u128 = 1;
        let mut layer: u128 = k + 1;
        for _ in 0..r {
            total = total.checked_add(layer)?;
            layer = layer.checked_mul(k)?;
        }
        Some(total)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidSpec("branching number k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Guards against accidentally materializing enormous balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeLimits {
    pub max_vertices: u64,
}

impl Default for TreeLimits {
    fn default() -> Self {
        Self {
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }
}

/// Dense breadth-first vertex index; the root is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(u32);

impl VertexId {
    pub const ROOT: VertexId = VertexId(0);

    pub fn new(index: u32) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Edge index; edge `e` joins vertex `e + 1` to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(u32);

impl EdgeId {
    pub fn new(index: u32) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The lower endpoint of the edge.
    pub fn child(self) -> VertexId {
        VertexId(self.0 + 1)
    }
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    spec: TreeSpec,
    parent: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    sibling_index: Vec<u32>,
    generation: Vec<u32>,
    /// `generation_start[g]` is the first id of generation `g`; one extra
    /// trailing entry equal to the vertex count.
    generation_start: Vec<u32>,
}

/// Builds `V_r` with the default vertex cap.
pub fn build_ball(spec: TreeSpec) -> Result<Tree> {
    build_ball_with(spec, TreeLimits::default())
}

pub fn build_ball_with(spec: TreeSpec, limits: TreeLimits) -> Result<Tree> {
    spec.validate()?;
    let requested = spec.vertex_count().unwrap_or(u128::MAX);
    let cap = (limits.max_vertices as u128).min(u32::MAX as u128 - 1);
    if requested > cap {
        return Err(Error::ResourceLimit {
            what: "tree vertices",
            requested,
            limit: cap,
        });
    }
    let n = requested as usize;
    let k = spec.k;

    let mut parent = Vec::with_capacity(n);
    let mut first_child = vec![0u32; n];
    let mut child_count = vec![0u32; n];
    let mut sibling_index = Vec::with_capacity(n);
    let mut generation = Vec::with_capacity(n);
    let mut generation_start = vec![0u32];

    parent.push(NO_PARENT);
    sibling_index.push(0);
    generation.push(0);

    let mut layer = 0..1u32;
    for g in 1..=spec.depth {
        let start = parent.len() as u32;
        generation_start.push(start);
        for v in layer.clone() {
            let fanout = if v == 0 { k + 1 } else { k };
            first_child[v as usize] = parent.len() as u32;
            child_count[v as usize] = fanout;
            for i in 0..fanout {
                parent.push(v);
                sibling_index.push(i);
                generation.push(g);
            }
        }
        layer = start..parent.len() as u32;
    }
    generation_start.push(parent.len() as u32);
    debug_assert_eq!(parent.len(), n);

    // Leaves keep first_child pointing past the end with zero count.
    for v in layer {
        first_child[v as usize] = n as u32;
    }

    Ok(Tree {
        spec,
        parent,
        first_child,
        child_count,
        sibling_index,
        generation,
        generation_start,
    })
}

impl Tree {
    pub fn spec(&self) -> TreeSpec {
        self.spec
    }

    pub fn k(&self) -> u32 {
        self.spec.k
    }

    pub fn depth(&self) -> u32 {
        self.spec.depth
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.parent.len()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    pub fn vertices(&self) -> impl DoubleEndedIterator<Item = VertexId> + ExactSizeIterator + Clone {
        (0..self.parent.len() as u32).map(VertexId)
    }

    pub fn edges(&self) -> impl DoubleEndedIterator<Item = EdgeId> + ExactSizeIterator + Clone {
        (0..self.edge_count() as u32).map(EdgeId)
    }

    /// Vertices of generation `g`, or an empty iterator past the boundary.
    pub fn generation_range(&self, g: u32) -> impl Iterator<Item = VertexId> {
        let g = g as usize;
        let range = if g + 1 < self.generation_start.len() {
            self.generation_start[g]..self.generation_start[g + 1]
        } else {
            0..0
        };
        range.map(VertexId)
    }

    pub fn generation(&self, v: VertexId) -> u32 {
        self.generation[v.index()]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        match self.parent[v.index()] {
            NO_PARENT => None,
            p => Some(VertexId(p)),
        }
    }

    pub fn children(&self, v: VertexId) -> impl DoubleEndedIterator<Item = VertexId> + ExactSizeIterator + Clone {
        self.child_range(v).map(VertexId)
    }

    fn child_range(&self, v: VertexId) -> Range<u32> {
        let start = self.first_child[v.index()];
        start..start + self.child_count[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> u32 {
        self.child_count[v.index()] + u32::from(v.0 != 0)
    }

    /// Vertices on the boundary generation `r` have only their parent.
    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.generation(v) == self.spec.depth
    }

    /// Interior means generation at most `r - 1`, i.e. the whole
    /// neighbourhood is materialized.
    pub fn is_interior(&self, v: VertexId) -> bool {
        self.generation(v) < self.spec.depth
    }

    /// Generations left until the boundary.
    pub fn depth_to_boundary(&self, v: VertexId) -> u32 {
        self.spec.depth - self.generation(v)
    }

    pub fn interior_vertices(&self) -> impl DoubleEndedIterator<Item = VertexId> + ExactSizeIterator + Clone {
        let end = self.generation_start[self.spec.depth as usize];
        (0..end).map(VertexId)
    }

    pub fn interior_count(&self) -> usize {
        self.generation_start[self.spec.depth as usize] as usize
    }

    /// Parent first, then children in address order.
    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>> {
        self.check(v)?;
        Ok(self.neighbors_iter(v).collect())
    }

    pub(crate) fn neighbors_iter(&self, v: VertexId) -> impl Iterator<Item = VertexId> + Clone + '_ {
        self.parent(v).into_iter().chain(self.children(v))
    }

    /// The edge joining `v` to its parent.
    pub fn parent_edge(&self, v: VertexId) -> Option<EdgeId> {
        (v.0 != 0).then(|| EdgeId(v.0 - 1))
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let child = e.child();
        (VertexId(self.parent[child.index()]), child)
    }

    /// The edge between two adjacent vertices, if they are adjacent.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        if !self.contains(u) || !self.contains(v) {
            return None;
        }
        if self.parent[v.index()] == u.0 {
            self.parent_edge(v)
        } else if self.parent[u.index()] == v.0 {
            self.parent_edge(u)
        } else {
            None
        }
    }

    /// Edges incident to `v`: parent edge first, then child edges.
    pub fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.parent_edge(v).into_iter().chain(self.child_range(v).map(|c| EdgeId(c - 1)))
    }

    /// Child-index path from the root.
    pub fn address(&self, v: VertexId) -> Vec<u32> {
        let mut path = Vec::with_capacity(self.generation(v) as usize);
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(self.sibling_index[cur.index()]);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn vertex_at(&self, address: &[u32]) -> Result<VertexId> {
        let mut cur = VertexId::ROOT;
        for &i in address {
            let range = self.child_range(cur);
            if i >= range.end - range.start {
                return Err(Error::UnknownAddress(address.to_vec()));
            }
            cur = VertexId(range.start + i);
        }
        Ok(cur)
    }

    pub fn edge_from_addresses(&self, parent: &[u32], child: &[u32]) -> Result<EdgeId> {
        let not_edge = || Error::UnknownEdge {
            parent: parent.to_vec(),
            child: child.to_vec(),
        };
        let p = self.vertex_at(parent).map_err(|_| not_edge())?;
        let c = self.vertex_at(child).map_err(|_| not_edge())?;
        match self.parent(c) {
            Some(q) if q == p => Ok(self.parent_edge(c).expect("non-root child")),
            _ => Err(not_edge()),
        }
    }

    /// Length of the unique path between `u` and `v`.
    pub fn graph_distance(&self, u: VertexId, v: VertexId) -> Result<u32> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u, v);
        let mut dist = 0;
        while self.generation(a) > self.generation(b) {
            a = self.parent(a).expect("deeper vertex has a parent");
            dist += 1;
        }
        while self.generation(b) > self.generation(a) {
            b = self.parent(b).expect("deeper vertex has a parent");
            dist += 1;
        }
        while a != b {
            a = self.parent(a).expect("distinct vertices below the root");
            b = self.parent(b).expect("distinct vertices below the root");
            dist += 2;
        }
        Ok(dist)
    }

    /// Minimum distance between the endpoint sets of two edges.
    pub fn edge_distance(&self, a: EdgeId, b: EdgeId) -> u32 {
        let (a0, a1) = self.edge_endpoints(a);
        let (b0, b1) = self.edge_endpoints(b);
        [(a0, b0), (a0, b1), (a1, b0), (a1, b1)]
            .into_iter()
            .map(|(x, y)| self.graph_distance(x, y).expect("endpoints are in the tree"))
            .min()
            .expect("four pairs")
    }
}
