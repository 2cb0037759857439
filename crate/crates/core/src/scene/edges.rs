//! Diffracting wedge extraction from closed building meshes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{FaceId, TriMesh, Vec3};

/// Minimum exterior-angle excess over a flat surface for an edge to diffract.
pub const MIN_EXTERIOR_EXCESS: f64 = 0.1;
/// Minimum edge length in meters.
pub const MIN_EDGE_LENGTH: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    RooftopHorizontal,
    VerticalCorner,
}

/// Convex wedge shared by two faces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffractionEdge {
    pub a: Vec3<f64>,
    pub b: Vec3<f64>,
    /// Exterior (free-space) wedge angle `n·π`, in `(π, 2π]`.
    pub exterior_angle: f64,
    /// Outward normals of `faces[0]` and `faces[1]`.
    pub normals: [Vec3<f64>; 2],
    pub faces: [FaceId; 2],
    pub kind: EdgeKind,
}

impl DiffractionEdge {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Unit vector from `a` to `b`.
    pub fn direction(&self) -> Vec3<f64> {
        (self.b - self.a).normalized()
    }

    /// Wedge parameter `n` with exterior angle `n·π`.
    pub fn wedge_n(&self) -> f64 {
        self.exterior_angle / PI
    }

    pub fn point_at(&self, t: f64) -> Vec3<f64> {
        self.a + (self.b - self.a) * t
    }
}

type Key = [i64; 3];

fn quantize(p: Vec3<f64>) -> Key {
    [
        (p.x * 1e6).round() as i64,
        (p.y * 1e6).round() as i64,
        (p.z * 1e6).round() as i64,
    ]
}

struct Incidence {
    face: FaceId,
    normal: Vec3<f64>,
    opposite: Vec3<f64>,
    a: Vec3<f64>,
    b: Vec3<f64>,
}

/// Every mesh edge shared by exactly two triangles forming a convex wedge
/// whose exterior angle exceeds `π + 0.1`, keeping horizontal rooftop edges
/// and vertical corners. Edges on downward-facing (floor) faces are left out.
/// The result is sorted by endpoints and does not depend on mesh order.
pub fn extract_edges(meshes: &[TriMesh<f64>]) -> Vec<DiffractionEdge> {
    let mut shared: BTreeMap<(Key, Key), Vec<Incidence>> = BTreeMap::new();
    for mesh in meshes {
        for t in 0..mesh.triangles.len() {
            let n = mesh.area_normal(t);
            if n.norm() == 0.0 {
                continue;
            }
            let n = n.normalized();
            let c = mesh.corners(t);
            for k in 0..3 {
                let (p, q, o) = (c[k], c[(k + 1) % 3], c[(k + 2) % 3]);
                let (kp, kq) = (quantize(p), quantize(q));
                let (key, a, b) = if kp <= kq { ((kp, kq), p, q) } else { ((kq, kp), q, p) };
                shared.entry(key).or_default().push(Incidence {
                    face: FaceId {
                        object_id: mesh.object_id,
                        triangle: t as u32,
                    },
                    normal: n,
                    opposite: o,
                    a,
                    b,
                });
            }
        }
    }

    let mut edges = Vec::new();
    for (_, mut inc) in shared {
        if inc.len() != 2 {
            continue;
        }
        inc.sort_by_key(|i| i.face);
        let (f0, f1) = (&inc[0], &inc[1]);
        if f0.normal.z < -0.99 || f1.normal.z < -0.99 {
            continue;
        }
        let (a, b) = (f0.a, f0.b);
        if (b - a).norm() <= MIN_EDGE_LENGTH {
            continue;
        }
        // Convex when the far vertex of each face lies behind the other face.
        if f0.normal.dot(f1.opposite - a) >= -1e-9 || f1.normal.dot(f0.opposite - a) >= -1e-9 {
            continue;
        }
        let turn = f0.normal.dot(f1.normal).clamp(-1.0, 1.0).acos();
        if turn <= MIN_EXTERIOR_EXCESS {
            continue;
        }
        let dz = (b - a).normalized().z.abs();
        let kind = if dz < 0.05 {
            EdgeKind::RooftopHorizontal
        } else if dz > 0.95 {
            EdgeKind::VerticalCorner
        } else {
            continue;
        };
        edges.push(DiffractionEdge {
            a,
            b,
            exterior_angle: PI + turn,
            normals: [f0.normal, f1.normal],
            faces: [f0.face, f1.face],
            kind,
        });
    }
    edges
}
