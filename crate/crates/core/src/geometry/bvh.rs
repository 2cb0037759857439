//! Bounding volume hierarchy over scene triangles.

use super::mesh::intersect_triangle;
use super::{Aabb, FaceId, GeometryError, RayHit, TriMesh, Vec3};
use crate::num::Real;

/// Hits closer than this along a ray are ignored (self-intersection guard).
pub const RAY_EPSILON: f64 = 1e-6;
/// Shadow segments are shrunk by this much at both ends.
pub const SEGMENT_SHRINK: f64 = 1e-4;

const MAX_LEAF: usize = 4;
const SAH_BINS: usize = 12;

/// Precomputed triangle used by the index.
#[derive(Clone, Copy, Debug)]
pub struct Primitive<T> {
    pub v0: Vec3<T>,
    pub e1: Vec3<T>,
    pub e2: Vec3<T>,
    pub normal: Vec3<T>,
    pub face: FaceId,
    /// Position of the owning mesh in the list passed to [`SpatialIndex::build`].
    pub mesh: usize,
}

impl<T: Real> Primitive<T> {
    fn bounds(&self) -> Aabb<T> {
        Aabb::from_points([self.v0, self.v0 + self.e1, self.v0 + self.e2])
    }

    fn centroid(&self) -> Vec3<T> {
        self.v0 + (self.e1 + self.e2) / T::of(3.0)
    }

    #[inline]
    pub fn intersect(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<T> {
        intersect_triangle(origin, dir, self.v0, self.e1, self.e2)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first entry in `order`. Interior: index of the left child
    /// (right child follows at `first + 1`).
    first: u32,
    /// Zero for interior nodes.
    count: u32,
}

/// Immutable acceleration structure answering ray queries over all triangles
/// of a mesh set. Results match an exhaustive scan, including tie-breaking.
#[derive(Clone, Debug)]
pub struct SpatialIndex<T> {
    prims: Vec<Primitive<T>>,
    order: Vec<u32>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> SpatialIndex<T> {
    pub fn build(meshes: &[TriMesh<T>]) -> Result<Self, GeometryError> {
        let mut prims = Vec::new();
        for (mi, mesh) in meshes.iter().enumerate() {
            mesh.validate()?;
            for t in 0..mesh.triangles.len() {
                let [a, b, c] = mesh.corners(t);
                let e1 = b - a;
                let e2 = c - a;
                prims.push(Primitive {
                    v0: a,
                    e1,
                    e2,
                    normal: e1.cross(e2).normalized(),
                    face: FaceId {
                        object_id: mesh.object_id,
                        triangle: t as u32,
                    },
                    mesh: mi,
                });
            }
        }
        let mut index = SpatialIndex {
            order: (0..prims.len() as u32).collect(),
            prims,
            nodes: Vec::new(),
        };
        if !index.prims.is_empty() {
            let bounds: Vec<Aabb<T>> = index.prims.iter().map(|p| p.bounds()).collect();
            let centroids: Vec<Vec3<T>> = index.prims.iter().map(|p| p.centroid()).collect();
            index.nodes.push(Node {
                bounds: Aabb::empty(),
                first: 0,
                count: 0,
            });
            let n = index.prims.len();
            index.build_node(0, 0, n, &bounds, &centroids);
        }
        Ok(index)
    }

    fn build_node(
        &mut self,
        node: usize,
        start: usize,
        end: usize,
        bounds: &[Aabb<T>],
        centroids: &[Vec3<T>],
    ) {
        let node_bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |b, &i| b.union(bounds[i as usize]));
        self.nodes[node].bounds = pad(node_bounds);
        let count = end - start;
        if count <= MAX_LEAF {
            self.make_leaf(node, start, count);
            return;
        }
        let cb = Aabb::from_points(self.order[start..end].iter().map(|&i| centroids[i as usize]));
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let lo = cb.min[axis];
        let span = ext[axis];
        if span <= T::zero() {
            // All centroids coincide; split by position in the list.
            let mid = start + count / 2;
            self.split(node, start, mid, end, bounds, centroids);
            return;
        }

        // Binned surface-area heuristic along the widest centroid axis.
        let bin_of = |c: Vec3<T>| -> usize {
            let f = ((c[axis] - lo) / span * T::of(SAH_BINS as f64))
                .to_usize()
                .unwrap_or(0);
            f.min(SAH_BINS - 1)
        };
        let mut bin_bounds = [Aabb::<T>::empty(); SAH_BINS];
        let mut bin_count = [0usize; SAH_BINS];
        for &i in &self.order[start..end] {
            let b = bin_of(centroids[i as usize]);
            bin_bounds[b] = bin_bounds[b].union(bounds[i as usize]);
            bin_count[b] += 1;
        }
        let mut best_cost = T::infinity();
        let mut best_split = 0;
        for s in 1..SAH_BINS {
            let (mut lb, mut rb) = (Aabb::empty(), Aabb::empty());
            let (mut lc, mut rc) = (0usize, 0usize);
            for b in 0..s {
                lb = lb.union(bin_bounds[b]);
                lc += bin_count[b];
            }
            for b in s..SAH_BINS {
                rb = rb.union(bin_bounds[b]);
                rc += bin_count[b];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.surface_area() * T::of(lc as f64) + rb.surface_area() * T::of(rc as f64);
            if cost < best_cost {
                best_cost = cost;
                best_split = s;
            }
        }
        if best_split == 0 {
            let mid = start + count / 2;
            self.split(node, start, mid, end, bounds, centroids);
            return;
        }
        // Stable partition keeps the build deterministic.
        let (mut left, mut right): (Vec<u32>, Vec<u32>) = self.order[start..end]
            .iter()
            .partition(|&&i| bin_of(centroids[i as usize]) < best_split);
        let mid = start + left.len();
        left.append(&mut right);
        self.order[start..end].copy_from_slice(&left);
        self.split(node, start, mid, end, bounds, centroids);
    }

    fn make_leaf(&mut self, node: usize, start: usize, count: usize) {
        self.nodes[node].first = start as u32;
        self.nodes[node].count = count as u32;
    }

    fn split(
        &mut self,
        node: usize,
        start: usize,
        mid: usize,
        end: usize,
        bounds: &[Aabb<T>],
        centroids: &[Vec3<T>],
    ) {
        let left = self.nodes.len();
        let empty = Node {
            bounds: Aabb::empty(),
            first: 0,
            count: 0,
        };
        self.nodes.push(empty);
        self.nodes.push(empty);
        self.nodes[node].first = left as u32;
        self.nodes[node].count = 0;
        self.build_node(left, start, mid, bounds, centroids);
        self.build_node(left + 1, mid, end, bounds, centroids);
    }

    pub fn primitives(&self) -> &[Primitive<T>] {
        &self.prims
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes.first().map_or_else(Aabb::empty, |n| n.bounds)
    }

    /// Closest intersection with `t` in `(RAY_EPSILON, t_max)`. Equal `t`
    /// values are resolved towards the lowest `(object_id, triangle)`.
    pub fn nearest_hit(&self, origin: Vec3<T>, dir: Vec3<T>, t_max: T) -> Option<RayHit<T>> {
        debug_assert!(
            (dir.norm() - T::one()).abs() < T::of(1e-6),
            "nearest_hit requires a unit direction"
        );
        if self.nodes.is_empty() {
            return None;
        }
        let t_min = T::of(RAY_EPSILON);
        let inv = inv_dir(dir);
        let mut best: Option<(T, usize)> = None;
        let mut limit = t_max;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_interval(origin, inv, t_min, slack(limit)).is_none() {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for &pi in &self.order[first..first + node.count as usize] {
                    let prim = &self.prims[pi as usize];
                    let Some(t) = prim.intersect(origin, dir) else {
                        continue;
                    };
                    if !(t > t_min && t < t_max) {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bt, bi)) => {
                            t < bt || (t == bt && prim.face < self.prims[bi].face)
                        }
                    };
                    if better {
                        best = Some((t, pi as usize));
                        limit = t;
                    }
                }
            } else {
                let l = node.first;
                let r = l + 1;
                let el = self.nodes[l as usize]
                    .bounds
                    .ray_interval(origin, inv, t_min, slack(limit))
                    .map(|(a, _)| a);
                let er = self.nodes[r as usize]
                    .bounds
                    .ray_interval(origin, inv, t_min, slack(limit))
                    .map(|(a, _)| a);
                match (el, er) {
                    (Some(a), Some(b)) => {
                        // Visit the nearer child first.
                        if a <= b {
                            stack.push(r);
                            stack.push(l);
                        } else {
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best.map(|(t, pi)| {
            let prim = &self.prims[pi];
            RayHit {
                t,
                face: prim.face,
                point: origin + dir * t,
                normal: prim.normal,
                prim: pi,
            }
        })
    }

    /// True if any triangle is hit with `t` in `(t_min, t_max)`.
    pub fn any_hit(&self, origin: Vec3<T>, dir: Vec3<T>, t_min: T, t_max: T) -> bool {
        if self.nodes.is_empty() || !(t_max > t_min) {
            return false;
        }
        let inv = inv_dir(dir);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_interval(origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for &pi in &self.order[first..first + node.count as usize] {
                    if let Some(t) = self.prims[pi as usize].intersect(origin, dir) {
                        if t > t_min && t < t_max {
                            return true;
                        }
                    }
                }
            } else {
                stack.push(node.first);
                stack.push(node.first + 1);
            }
        }
        false
    }

    /// True iff the open segment `a`–`b` (shrunk by [`SEGMENT_SHRINK`] at
    /// each end) crosses any triangle. Symmetric in its arguments.
    pub fn segment_blocked(&self, a: Vec3<T>, b: Vec3<T>) -> bool {
        let (a, b) = if b.lex_less(a) { (b, a) } else { (a, b) };
        let d = b - a;
        let len = d.norm();
        let shrink = T::of(SEGMENT_SHRINK);
        if len <= shrink + shrink {
            return false;
        }
        let dir = d / len;
        let origin = a + dir * shrink;
        self.any_hit(origin, dir, T::zero(), len - shrink - shrink)
    }
}

/// Grows a box by a few ulps of its coordinate scale so rounding in the slab
/// test never rejects a triangle lying on the box boundary.
fn pad<T: Real>(b: Aabb<T>) -> Aabb<T> {
    let scale = b.min.x.abs().max(b.min.y.abs()).max(b.min.z.abs())
        .max(b.max.x.abs()).max(b.max.y.abs()).max(b.max.z.abs());
    let e = T::epsilon() * T::of(64.0) * (T::one() + scale);
    let d = Vec3::new(e, e, e);
    Aabb { min: b.min - d, max: b.max + d }
}

/// Pruning bound that still admits boxes whose entry equals the current best
/// hit up to rounding, so equal-t ties are resolved exactly as a full scan would.
#[inline]
fn slack<T: Real>(limit: T) -> T {
    limit + limit.abs() * T::epsilon() * T::of(64.0) + T::epsilon()
}

#[inline]
fn inv_dir<T: Real>(dir: Vec3<T>) -> Vec3<T> {
    Vec3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z)
}
