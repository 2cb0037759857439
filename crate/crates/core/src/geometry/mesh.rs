use serde::{Deserialize, Serialize};

use super::{Aabb, GeometryError, Vec3};
use crate::num::Real;

/// Minimum triangle area accepted by [`TriMesh::validate`], in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

/// Indexed triangle mesh tagged with a material and a stable object id.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
    pub material_id: usize,
    pub object_id: u32,
}

/// Identifies one triangle of one scene object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaceId {
    pub object_id: u32,
    pub triangle: u32,
}

impl<T: Real> TriMesh<T> {
    pub fn new(
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[u32; 3]>,
        material_id: usize,
        object_id: u32,
    ) -> Self {
        TriMesh {
            vertices,
            triangles,
            material_id,
            object_id,
        }
    }

    #[inline]
    pub fn corners(&self, tri: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized normal (twice the area) following the winding order.
    #[inline]
    pub fn area_normal(&self, tri: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(tri);
        (b - a).cross(c - a)
    }

    pub fn area(&self, tri: usize) -> T {
        self.area_normal(tri).norm() * T::of(0.5)
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Checks index ranges, finiteness and triangle areas.
    pub fn validate(&self) -> Result<(), GeometryError> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeometryError::NonFiniteVertex {
                    object_id: self.object_id,
                    vertex: i,
                });
            }
        }
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(GeometryError::IndexOutOfRange {
                    object_id: self.object_id,
                    triangle: t,
                });
            }
            let area = self.area(t).to_f64_lossy();
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(GeometryError::DegenerateTriangle {
                    object_id: self.object_id,
                    triangle: t,
                    area,
                });
            }
        }
        Ok(())
    }

    /// Signed enclosed volume (divergence theorem). Positive for a closed
    /// mesh with outward-facing winding.
    pub fn signed_volume(&self) -> T {
        let mut vol = T::zero();
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            vol += a.dot(b.cross(c));
        }
        vol / T::of(6.0)
    }

    /// True when every undirected edge is used by exactly two triangles with
    /// opposite orientation.
    pub fn is_closed(&self) -> bool {
        use std::collections::HashMap;
        let mut count: HashMap<(u32, u32), i32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a, b)).or_default() += 1;
            }
        }
        count
            .iter()
            .all(|(&(a, b), &c)| c == 1 && count.get(&(b, a)) == Some(&1))
    }
}

/// Result of a ray query against the scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit<T> {
    /// Distance along the (unit) ray direction.
    pub t: T,
    pub face: FaceId,
    pub point: Vec3<T>,
    /// Unit geometric normal of the hit triangle, following its winding.
    pub normal: Vec3<T>,
    /// Position of the triangle in the index's primitive table.
    pub prim: usize,
}

/// Möller–Trumbore ray/triangle test. Returns the ray parameter of the
/// intersection, if any, without range filtering. Both faces are hit.
#[inline]
pub fn intersect_triangle<T: Real>(
    origin: Vec3<T>,
    dir: Vec3<T>,
    v0: Vec3<T>,
    e1: Vec3<T>,
    e2: Vec3<T>,
) -> Option<T> {
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < T::epsilon() * e1.norm() * e2.norm() {
        return None;
    }
    let inv = T::one() / det;
    let s = origin - v0;
    let u = s.dot(p) * inv;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    Some(e2.dot(q) * inv)
}
