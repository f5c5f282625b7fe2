//! Self-intersection counting for triangle meshes.

mod bvh;
mod triangle;

pub use bvh::{count_colliding_pairs_brute_force, Aabb, Node, NodeKind, TriangleBvh, BOX_SLACK, MAX_DEPTH, MAX_LEAF_SIZE};
pub use triangle::{triangle_area, triangles_intersect, Triangle, DEGENERATE_AREA, GEOM_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
}
