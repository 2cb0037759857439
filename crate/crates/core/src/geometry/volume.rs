//! Foliage volume shapes and segment chord lengths through them.

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::num::Real;

/// Attenuating volume shape: axis-aligned box or vertical cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolumeShape<T> {
    Box {
        min: [T; 3],
        max: [T; 3],
    },
    Cylinder {
        center: [T; 2],
        radius: T,
        z_min: T,
        z_max: T,
    },
}

impl<T: Real> VolumeShape<T> {
    pub fn has_positive_extent(&self) -> bool {
        match *self {
            VolumeShape::Box { min, max } => (0..3).all(|i| max[i] > min[i]),
            VolumeShape::Cylinder {
                radius,
                z_min,
                z_max,
                ..
            } => radius > T::zero() && z_max > z_min,
        }
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        match *self {
            VolumeShape::Box { min, max } => {
                let q = p.to_array();
                (0..3).all(|i| q[i] >= min[i] && q[i] <= max[i])
            }
            VolumeShape::Cylinder {
                center,
                radius,
                z_min,
                z_max,
            } => {
                let dx = p.x - center[0];
                let dy = p.y - center[1];
                p.z >= z_min && p.z <= z_max && dx * dx + dy * dy <= radius * radius
            }
        }
    }

    /// Parameter interval `[t0, t1] ⊆ [0, 1]` of `a + t (b - a)` inside the shape.
    pub fn clip(&self, a: Vec3<T>, b: Vec3<T>) -> Option<(T, T)> {
        let d = b - a;
        let (mut lo, mut hi) = (T::zero(), T::one());
        let slab = |o: T, dv: T, min: T, max: T, lo: &mut T, hi: &mut T| -> bool {
            if dv == T::zero() {
                return o >= min && o <= max;
            }
            let mut t0 = (min - o) / dv;
            let mut t1 = (max - o) / dv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            *lo = lo.max(t0);
            *hi = hi.min(t1);
            *lo <= *hi
        };
        match *self {
            VolumeShape::Box { min, max } => {
                let o = a.to_array();
                let dv = d.to_array();
                for i in 0..3 {
                    if !slab(o[i], dv[i], min[i], max[i], &mut lo, &mut hi) {
                        return None;
                    }
                }
            }
            VolumeShape::Cylinder {
                center,
                radius,
                z_min,
                z_max,
            } => {
                if !slab(a.z, d.z, z_min, z_max, &mut lo, &mut hi) {
                    return None;
                }
                let ox = a.x - center[0];
                let oy = a.y - center[1];
                let qa = d.x * d.x + d.y * d.y;
                let qb = ox * d.x + oy * d.y;
                let qc = ox * ox + oy * oy - radius * radius;
                if qa == T::zero() {
                    if qc > T::zero() {
                        return None;
                    }
                } else {
                    let disc = qb * qb - qa * qc;
                    if disc < T::zero() {
                        return None;
                    }
                    let sq = disc.sqrt();
                    let t0 = (-qb - sq) / qa;
                    let t1 = (-qb + sq) / qa;
                    lo = lo.max(t0);
                    hi = hi.min(t1);
                }
            }
        }
        (lo < hi).then_some((lo, hi))
    }

    /// Length of the segment `a`–`b` inside the shape, in meters.
    pub fn chord(&self, a: Vec3<T>, b: Vec3<T>) -> T {
        self.clip(a, b)
            .map_or(T::zero(), |(t0, t1)| (t1 - t0) * (b - a).norm())
    }
}

/// Per-volume chord lengths of the segment `a`–`b`. Volumes that are not
/// crossed are omitted; ids are positions in `volumes`.
pub fn foliage_penetration<'a, T: Real, I>(a: Vec3<T>, b: Vec3<T>, volumes: I) -> Vec<(usize, T)>
where
    I: IntoIterator<Item = &'a VolumeShape<T>>,
{
    volumes
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let len = v.chord(a, b);
            (len > T::zero()).then_some((i, len))
        })
        .collect()
}
