//! Frustrated ground states of the ferromagnetic Ising model on Cayley-tree
//! balls and the low-temperature Gibbs states they generate.
//!
//! A set of edges `D` fixes the configuration `σ^{D±}` that is frustrated
//! exactly on `D`. When every vertex touches fewer than `(k - 1)/2` edges of
//! `D`, these configurations are stable ground states. This crate builds the
//! edge sets, checks the ground-state and contour bounds by exhaustive
//! enumeration, and computes finite-volume Gibbs quantities exactly (cavity
//! recursion) and by Monte Carlo.

pub mod animals;
pub mod contour;
pub mod dsets;
pub mod error;
pub mod gibbs;
pub mod groundstate;
pub mod io;
pub mod mc;
pub mod numeric;
pub mod render;
pub mod rng;
pub mod tree;

pub use dsets::{admissible, CoverKind, DRecipe, EdgeSet};
pub use error::{Error, Result};
pub use groundstate::{Coupling, Sign, SpinConfig};
pub use tree::{build_ball, EdgeId, Tree, TreeSpec, VertexId};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!("bethe-gibbs ", env!("CARGO_PKG_VERSION"));
