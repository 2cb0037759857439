//! 3D primitives, triangle meshes, the ray-query index and foliage chords.

mod bvh;
mod facet;
mod mesh;
mod vec3;
mod volume;

use thiserror::Error;

pub use bvh::{Primitive, SpatialIndex, RAY_EPSILON, SEGMENT_SHRINK};
pub use facet::{extract_facets, mirror_point, point_in_triangle, Facet, Plane};
pub use mesh::{intersect_triangle, FaceId, RayHit, TriMesh, MIN_TRIANGLE_AREA};
pub use vec3::{Aabb, Vec3};
pub use volume::{foliage_penetration, VolumeShape};

use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("object {object_id}: triangle {triangle} is degenerate (area {area:e} m²)")]
    DegenerateTriangle {
        object_id: u32,
        triangle: usize,
        area: f64,
    },
    #[error("object {object_id}: triangle {triangle} references a missing vertex")]
    IndexOutOfRange { object_id: u32, triangle: usize },
    #[error("object {object_id}: vertex {vertex} is not finite")]
    NonFiniteVertex { object_id: u32, vertex: usize },
}

/// Builds the acceleration index over the union of all mesh triangles.
pub fn build_index<T: Real>(meshes: &[TriMesh<T>]) -> Result<SpatialIndex<T>, GeometryError> {
    SpatialIndex::build(meshes)
}

pub fn nearest_hit<T: Real>(
    index: &SpatialIndex<T>,
    origin: Vec3<T>,
    dir: Vec3<T>,
    t_max: T,
) -> Option<RayHit<T>> {
    index.nearest_hit(origin, dir, t_max)
}

pub fn segment_blocked<T: Real>(index: &SpatialIndex<T>, a: Vec3<T>, b: Vec3<T>) -> bool {
    index.segment_blocked(a, b)
}
