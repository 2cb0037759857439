//! Planar reflector facets: maximal coplanar triangle groups of one mesh.

use super::{Aabb, TriMesh, Vec3};
use crate::num::Real;

/// Plane `n · p = d` with unit normal `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane<T> {
    pub normal: Vec3<T>,
    pub offset: T,
}

impl<T: Real> Plane<T> {
    #[inline]
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    #[inline]
    pub fn mirror(&self, p: Vec3<T>) -> Vec3<T> {
        mirror_point(p, self.normal, self.offset)
    }

    /// Parameter `s` where `a + s (b - a)` meets the plane.
    #[inline]
    pub fn segment_param(&self, a: Vec3<T>, b: Vec3<T>) -> Option<T> {
        let denom = self.normal.dot(b - a);
        if denom == T::zero() {
            return None;
        }
        Some((self.offset - self.normal.dot(a)) / denom)
    }
}

/// Reflects `p` across the plane `n · x = d`.
#[inline]
pub fn mirror_point<T: Real>(p: Vec3<T>, n: Vec3<T>, d: T) -> Vec3<T> {
    p - n * (T::of(2.0) * (n.dot(p) - d))
}

/// One planar reflecting surface made of coplanar triangles.
#[derive(Clone, Debug)]
pub struct Facet<T> {
    pub plane: Plane<T>,
    pub object_id: u32,
    pub material_id: usize,
    /// Triangle indices within the owning mesh.
    pub triangles: Vec<u32>,
    /// Triangle corners, parallel to `triangles`.
    pub corners: Vec<[Vec3<T>; 3]>,
    pub bounds: Aabb<T>,
}

impl<T: Real> Facet<T> {
    /// Lowest triangle index whose closure contains `p` (projected onto the
    /// facet plane), using a barycentric tolerance `tol`.
    pub fn locate(&self, p: Vec3<T>, tol: T) -> Option<u32> {
        let mut found: Option<u32> = None;
        for (tri, c) in self.triangles.iter().zip(&self.corners) {
            if found.is_some_and(|f| f < *tri) {
                continue;
            }
            if point_in_triangle(p, c, tol) {
                found = Some(*tri);
            }
        }
        found
    }
}

/// Barycentric containment test of `p` projected onto the triangle plane.
pub fn point_in_triangle<T: Real>(p: Vec3<T>, c: &[Vec3<T>; 3], tol: T) -> bool {
    let v0 = c[1] - c[0];
    let v1 = c[2] - c[0];
    let v2 = p - c[0];
    let d00 = v0.dot(v0);
    let d01 = v0.dot(v1);
    let d11 = v1.dot(v1);
    let d20 = v2.dot(v0);
    let d21 = v2.dot(v1);
    let denom = d00 * d11 - d01 * d01;
    if denom <= T::zero() {
        return false;
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    let u = T::one() - v - w;
    u >= -tol && v >= -tol && w >= -tol
}

/// Groups the triangles of `mesh` by supporting plane.
pub fn extract_facets<T: Real>(mesh: &TriMesh<T>) -> Vec<Facet<T>> {
    let normal_tol = T::of(1e-9);
    let offset_tol = T::of(1e-6);
    let mut facets: Vec<Facet<T>> = Vec::new();
    for t in 0..mesh.triangles.len() {
        let c = mesh.corners(t);
        let n = mesh.area_normal(t).normalized();
        let d = n.dot(c[0]);
        let existing = facets.iter_mut().find(|f| {
            (f.plane.normal - n).norm() < normal_tol && (f.plane.offset - d).abs() < offset_tol
        });
        match existing {
            Some(f) => {
                f.triangles.push(t as u32);
                f.corners.push(c);
                f.bounds = c.iter().fold(f.bounds, |b, &p| b.grow(p));
            }
            None => facets.push(Facet {
                plane: Plane {
                    normal: n,
                    offset: d,
                },
                object_id: mesh.object_id,
                material_id: mesh.material_id,
                triangles: vec![t as u32],
                corners: vec![c],
                bounds: Aabb::from_points(c),
            }),
        }
    }
    facets
}
