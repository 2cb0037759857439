//! Ray launching: receiver point index and capture records.

use crate::geometry::{Aabb, Vec3};

/// One ray passing close enough to a receiver to nominate its facet sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Capture {
    pub rx: usize,
    /// Launch direction index on the icosphere.
    pub ray: usize,
    /// Facets hit before the capturing segment.
    pub sequence: Vec<u32>,
    /// Ray polyline from the transmitter to the start of the capturing segment.
    pub vertices: Vec<Vec3<f64>>,
    /// Foot of the perpendicular from the receiver onto the ray.
    pub point: Vec3<f64>,
    /// Unfolded ray length at `point`.
    pub unfolded: f64,
    /// Capture radius at `point`.
    pub radius: f64,
}

const LEAF: usize = 8;

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb<f64>,
    first: u32,
    /// Zero for interior nodes, whose children sit at `first` and `first + 1`.
    count: u32,
}

/// Bounding-box tree over receiver positions.
#[derive(Clone, Debug)]
pub(super) struct PointIndex {
    nodes: Vec<Node>,
    order: Vec<u32>,
    bounds: Aabb<f64>,
}

impl PointIndex {
    pub fn build(points: &[Vec3<f64>]) -> PointIndex {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let bounds = Aabb::from_points(points.iter().copied());
        if !points.is_empty() {
            nodes.push(Node {
                bounds,
                first: 0,
                count: 0,
            });
            split(points, &mut order, &mut nodes, 0, 0, points.len());
        }
        PointIndex {
            nodes,
            order,
            bounds,
        }
    }

    pub fn bounds(&self) -> Aabb<f64> {
        self.bounds
    }

    /// Calls `visit` for every point whose distance to the ray segment
    /// `origin + t·dir`, `t ∈ [0, t_max]`, may be below `radius`.
    pub fn query(
        &self,
        origin: Vec3<f64>,
        dir: Vec3<f64>,
        t_max: f64,
        radius: f64,
        mut visit: impl FnMut(usize),
    ) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let pad = Vec3::new(radius, radius, radius);
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let grown = Aabb {
                min: node.bounds.min - pad,
                max: node.bounds.max + pad,
            };
            if grown.ray_interval(origin, inv, 0.0, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for &p in &self.order[first..first + node.count as usize] {
                    visit(p as usize);
                }
            } else {
                stack.push(node.first + 1);
                stack.push(node.first);
            }
        }
    }
}

fn split(
    points: &[Vec3<f64>],
    order: &mut [u32],
    nodes: &mut Vec<Node>,
    node: usize,
    lo: usize,
    hi: usize,
) {
    let bounds = Aabb::from_points(order[lo..hi].iter().map(|&i| points[i as usize]));
    nodes[node].bounds = bounds;
    if hi - lo <= LEAF {
        nodes[node].first = lo as u32;
        nodes[node].count = (hi - lo) as u32;
        return;
    }
    let ext = bounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (lo + hi) / 2;
    order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let left = nodes.len();
    let empty = Node {
        bounds,
        first: 0,
        count: 0,
    };
    nodes.push(empty);
    nodes.push(empty);
    nodes[node].first = left as u32;
    nodes[node].count = 0;
    split(points, order, nodes, left, lo, mid);
    split(points, order, nodes, left + 1, mid, hi);
}
