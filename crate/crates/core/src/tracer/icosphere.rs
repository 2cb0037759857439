//! Nested geodesic launch directions.

use std::collections::HashMap;

use crate::geometry::Vec3;

/// Unit launch directions of a subdivided icosahedron.
///
/// Level `s` holds `10·4^s + 2` vertices. Every level is a prefix of the
/// next, and each direction remembers the level that introduced it together
/// with that level's capture half-angle.
#[derive(Clone, Debug)]
pub struct Icosphere {
    pub directions: Vec<Vec3<f64>>,
    /// Level at which each direction first appears.
    pub birth_level: Vec<u8>,
    /// Capture half-angle per level: longest angular edge over `√3`.
    pub beta: Vec<f64>,
}

impl Icosphere {
    pub fn new(level: u32) -> Icosphere {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ];
        let mut directions: Vec<Vec3<f64>> = raw
            .iter()
            .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
            .collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let mut birth_level = vec![0u8; directions.len()];
        let mut beta = vec![max_edge_angle(&directions, &faces) / 3f64.sqrt()];

        for s in 1..=level {
            let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            for f in &faces {
                let mut mid = [0u32; 3];
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    let key = (a.min(b), a.max(b));
                    mid[k] = *midpoints.entry(key).or_insert_with(|| {
                        let m = (directions[a as usize] + directions[b as usize]).normalized();
                        directions.push(m);
                        birth_level.push(s as u8);
                        (directions.len() - 1) as u32
                    });
                }
                next.push([f[0], mid[0], mid[2]]);
                next.push([f[1], mid[1], mid[0]]);
                next.push([f[2], mid[2], mid[1]]);
                next.push(mid);
            }
            faces = next;
            beta.push(max_edge_angle(&directions, &faces) / 3f64.sqrt());
        }
        Icosphere {
            directions,
            birth_level,
            beta,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Capture half-angle of direction `i`.
    pub fn beta_of(&self, i: usize) -> f64 {
        self.beta[self.birth_level[i] as usize]
    }
}

fn max_edge_angle(dirs: &[Vec3<f64>], faces: &[[u32; 3]]) -> f64 {
    let mut m: f64 = 0.0;
    for f in faces {
        for k in 0..3 {
            let a = dirs[f[k] as usize];
            let b = dirs[f[(k + 1) % 3] as usize];
            m = m.max(a.dot(b).clamp(-1.0, 1.0).acos());
        }
    }
    m
}
