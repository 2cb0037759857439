//! Footprint extrusion into closed building prisms (block and gabled models).

use serde::{Deserialize, Serialize};

use super::terrain::TerrainGrid;
use super::SceneWarning;
use crate::geometry::{TriMesh, Vec3};

/// Height assumed per building level, in meters.
pub const LEVEL_HEIGHT_M: f64 = 3.0;
/// Height used when neither a height nor a level count is known.
pub const DEFAULT_HEIGHT_M: f64 = 9.0;
/// Ridge raise of gabled roofs as a fraction of wall height.
pub const GABLE_RAISE_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoofShape {
    #[default]
    Flat,
    Gabled,
}

/// Level of detail of the generated building geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lod {
    /// Block model: flat-roofed prisms.
    Lod1,
    /// Coarse exterior: gabled roofs where tagged.
    Lod2,
}

impl Lod {
    pub fn from_level(level: u8) -> Option<Lod> {
        match level {
            1 => Some(Lod::Lod1),
            2 => Some(Lod::Lod2),
            _ => None,
        }
    }
}

/// Building outline. The ring is stored open (closing vertex not repeated),
/// in degrees straight out of the map parser or in meters after projection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Footprint {
    pub ring: Vec<[f64; 2]>,
    pub height_m: Option<f64>,
    pub levels: Option<u32>,
    pub roof: RoofShape,
    /// Material name override (e.g. from `building:material`).
    pub material: Option<String>,
    /// Source identifier, used in warnings.
    pub source_id: Option<i64>,
}

impl Footprint {
    /// Tagged height, else levels times [`LEVEL_HEIGHT_M`], else [`DEFAULT_HEIGHT_M`].
    pub fn resolved_height(&self) -> f64 {
        self.height_m
            .or_else(|| self.levels.map(|l| l as f64 * LEVEL_HEIGHT_M))
            .unwrap_or(DEFAULT_HEIGHT_M)
    }

    fn label(&self, index: usize) -> String {
        match self.source_id {
            Some(id) => format!("footprint {index} (way {id})"),
            None => format!("footprint {index}"),
        }
    }
}

/// Footprint prepared for extrusion.
struct Outline {
    ring: Vec<[f64; 2]>,
    base: f64,
    height: f64,
}

/// Extrudes footprints into closed, outward-facing prisms. Invalid
/// footprints are skipped and reported in `warnings`. `material_for` maps a
/// footprint to its material id. Object ids are assigned from `first_object_id`.
pub fn extrude<F>(
    footprints: &[Footprint],
    terrain: Option<&TerrainGrid>,
    lod: Lod,
    first_object_id: u32,
    mut material_for: F,
    warnings: &mut Vec<SceneWarning>,
) -> Vec<TriMesh<f64>>
where
    F: FnMut(&Footprint) -> usize,
{
    let mut meshes = Vec::new();
    for (i, fp) in footprints.iter().enumerate() {
        let ring = match clean_ring(&fp.ring) {
            Ok(r) => r,
            Err(msg) => {
                warnings.push(SceneWarning::new(fp.label(i), msg));
                continue;
            }
        };
        let height = fp.resolved_height();
        if !(height > 0.0 && height.is_finite()) {
            warnings.push(SceneWarning::new(fp.label(i), format!("invalid height {height}")));
            continue;
        }
        let base = terrain.map_or(0.0, |t| min_height_under(t, &ring));
        let outline = Outline { ring, base, height };
        let object_id = first_object_id + meshes.len() as u32;
        let material = material_for(fp);
        let mesh = match (lod, fp.roof) {
            (Lod::Lod2, RoofShape::Gabled) if outline.ring.len() == 4 => {
                gabled_prism(&outline, material, object_id)
            }
            (Lod::Lod2, RoofShape::Gabled) => {
                warnings.push(SceneWarning::new(
                    fp.label(i),
                    format!(
                        "gabled roof needs a 4-vertex footprint, got {}; using a flat roof",
                        outline.ring.len()
                    ),
                ));
                flat_prism(&outline, material, object_id)
            }
            _ => flat_prism(&outline, material, object_id),
        };
        match mesh {
            Some(m) => meshes.push(m),
            None => warnings.push(SceneWarning::new(fp.label(i), "triangulation failed".into())),
        }
    }
    meshes
}

/// Removes the closing vertex, duplicates and collinear points, checks for
/// self-intersection and orients the ring counter-clockwise.
pub fn clean_ring(raw: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, String> {
    let mut ring: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
    for &p in raw {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err("non-finite coordinate".into());
        }
        if ring.last().map_or(true, |q| dist2(*q, p) > 1e-12) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && dist2(ring[0], ring[ring.len() - 1]) <= 1e-12 {
        ring.pop();
    }
    // Drop collinear vertices.
    let mut changed = true;
    while changed && ring.len() >= 3 {
        changed = false;
        for i in 0..ring.len() {
            let n = ring.len();
            let a = ring[(i + n - 1) % n];
            let b = ring[i];
            let c = ring[(i + 1) % n];
            let scale = dist2(a, b).max(dist2(b, c)).max(1e-12);
            if cross(a, b, c).abs() <= 1e-9 * scale {
                ring.remove(i);
                changed = true;
                break;
            }
        }
    }
    if ring.len() < 3 {
        return Err(format!("needs at least 3 distinct vertices, got {}", ring.len()));
    }
    if self_intersects(&ring) {
        return Err("self-intersecting polygon".into());
    }
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    Ok(ring)
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub fn signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True if any two non-adjacent ring edges touch.
pub fn self_intersects(ring: &[[f64; 2]]) -> bool {
    let n = ring.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

fn point_in_ring(p: [f64; 2], ring: &[[f64; 2]]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Minimum terrain height over the footprint: vertices, edge samples at half
/// the cell size, and grid samples inside the ring.
pub fn min_height_under(terrain: &TerrainGrid, ring: &[[f64; 2]]) -> f64 {
    let mut min = f64::INFINITY;
    let n = ring.len();
    let step = terrain.cell_size / 2.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let len = dist2(a, b).sqrt();
        let k = (len / step).ceil().max(1.0) as usize;
        for s in 0..k {
            let t = s as f64 / k as f64;
            let x = a[0] + (b[0] - a[0]) * t;
            let y = a[1] + (b[1] - a[1]) * t;
            min = min.min(terrain.sample_height(x, y));
        }
    }
    for r in 0..terrain.nrows {
        for c in 0..terrain.ncols {
            let x = terrain.origin[0] + c as f64 * terrain.cell_size;
            let y = terrain.origin[1] + r as f64 * terrain.cell_size;
            if point_in_ring([x, y], ring) {
                min = min.min(terrain.at(c, r));
            }
        }
    }
    min
}

/// Ear-clipping triangulation of a counter-clockwise simple ring.
pub fn ear_clip(ring: &[[f64; 2]]) -> Option<Vec<[u32; 3]>> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let ia = idx[(k + n - 1) % n];
            let ib = idx[k];
            let ic = idx[(k + 1) % n];
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = ring[j];
                cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
            });
            if blocked {
                continue;
            }
            tris.push([ia as u32, ib as u32, ic as u32]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return None;
        }
    }
    if idx.len() == 3 {
        tris.push([idx[0] as u32, idx[1] as u32, idx[2] as u32]);
    }
    Some(tris)
}

fn flat_prism(o: &Outline, material: usize, object_id: u32) -> Option<TriMesh<f64>> {
    let n = o.ring.len() as u32;
    let top = o.base + o.height;
    let mut vertices: Vec<Vec3<f64>> = o.ring.iter().map(|p| Vec3::new(p[0], p[1], o.base)).collect();
    vertices.extend(o.ring.iter().map(|p| Vec3::new(p[0], p[1], top)));
    let mut triangles = Vec::new();
    push_walls(&mut triangles, n);
    let cap = ear_clip(&o.ring)?;
    for &[a, b, c] in &cap {
        triangles.push([a + n, b + n, c + n]);
        triangles.push([a, c, b]);
    }
    Some(TriMesh::new(vertices, triangles, material, object_id))
}

/// Wall quads between bottom ring `0..n` and top ring `n..2n`, split
/// consistently along the bottom-left/top-right diagonal.
fn push_walls(triangles: &mut Vec<[u32; 3]>, n: u32) {
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, j + n]);
        triangles.push([i, j + n, i + n]);
    }
}

/// Gabled prism over a 4-vertex footprint. The ridge runs along the longer
/// pair of opposite sides, raised by [`GABLE_RAISE_FRACTION`] of the wall height.
fn gabled_prism(o: &Outline, material: usize, object_id: u32) -> Option<TriMesh<f64>> {
    let r = &o.ring;
    let side = |i: usize| dist2(r[i], r[(i + 1) % 4]).sqrt();
    // Long sides start at vertex `s` and `s + 2`.
    let s = if side(0) + side(2) >= side(1) + side(3) { 0 } else { 1 };
    let ring: Vec<[f64; 2]> = (0..4).map(|k| r[(k + s) % 4]).collect();
    let top = o.base + o.height;
    let ridge_z = top + GABLE_RAISE_FRACTION * o.height;
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let r0 = mid(ring[3], ring[0]);
    let r1 = mid(ring[1], ring[2]);

    let mut vertices: Vec<Vec3<f64>> = ring.iter().map(|p| Vec3::new(p[0], p[1], o.base)).collect();
    vertices.extend(ring.iter().map(|p| Vec3::new(p[0], p[1], top)));
    vertices.push(Vec3::new(r0[0], r0[1], ridge_z)); // 8
    vertices.push(Vec3::new(r1[0], r1[1], ridge_z)); // 9

    let mut triangles = Vec::new();
    push_walls(&mut triangles, 4);
    // Gable ends over the short sides 1→2 and 3→0.
    triangles.push([5, 6, 9]);
    triangles.push([7, 4, 8]);
    // Roof slopes over the long sides 0→1 and 2→3.
    triangles.push([4, 5, 9]);
    triangles.push([4, 9, 8]);
    triangles.push([6, 7, 8]);
    triangles.push([6, 8, 9]);
    // Floor.
    triangles.push([0, 2, 1]);
    triangles.push([0, 3, 2]);
    Some(TriMesh::new(vertices, triangles, material, object_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(size: f64, h: f64) -> Footprint {
        Footprint {
            ring: vec![[0.0, 0.0], [size, 0.0], [size, size], [0.0, size]],
            height_m: Some(h),
            ..Default::default()
        }
    }

    #[test]
    fn lod1_box_is_closed_prism() {
        let flat = TerrainGrid::flat([-50.0, -50.0], [50.0, 50.0], 10.0, 0.0).unwrap();
        let mut w = Vec::new();
        let m = extrude(&[square(10.0, 6.0)], Some(&flat), Lod::Lod1, 1, |_| 0, &mut w);
        assert!(w.is_empty());
        let m = &m[0];
        assert_eq!(m.vertices.len(), 8);
        let mut zs: Vec<(f64, f64, f64)> = m.vertices.iter().map(|v| (v.x, v.y, v.z)).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(x, y, z) in &zs {
            assert!(x == 0.0 || x == 10.0);
            assert!(y == 0.0 || y == 10.0);
            assert!(z == 0.0 || z == 6.0);
        }
        assert!(m.is_closed());
        assert!((m.signed_volume() - 600.0).abs() < 1e-9);
    }

    #[test]
    fn gabled_adds_two_ridge_vertices() {
        let mut fp = square(10.0, 6.0);
        fp.roof = RoofShape::Gabled;
        let mut w = Vec::new();
        let m = &extrude(&[fp.clone()], None, Lod::Lod2, 1, |_| 0, &mut w)[0];
        assert_eq!(m.vertices.len(), 10);
        let ridge: Vec<_> = m.vertices.iter().filter(|v| v.z == 7.5).collect();
        assert_eq!(ridge.len(), 2);
        assert!(m.is_closed());
        assert!(m.signed_volume() > 600.0);
        // Gabled tags are ignored at LOD1.
        let m1 = &extrude(&[fp], None, Lod::Lod1, 1, |_| 0, &mut w)[0];
        assert_eq!(m1.vertices.len(), 8);
    }

    #[test]
    fn ridge_follows_long_axis() {
        let fp = Footprint {
            ring: vec![[0.0, 0.0], [4.0, 0.0], [4.0, 20.0], [0.0, 20.0]],
            height_m: Some(8.0),
            roof: RoofShape::Gabled,
            ..Default::default()
        };
        let m = &extrude(&[fp], None, Lod::Lod2, 1, |_| 0, &mut Vec::new())[0];
        let ridge: Vec<_> = m.vertices.iter().filter(|v| v.z == 10.0).collect();
        assert_eq!(ridge.len(), 2);
        assert!(ridge.iter().all(|v| v.x == 2.0));
        assert!((ridge[0].y - ridge[1].y).abs() == 20.0);
    }

    #[test]
    fn base_sits_on_lowest_terrain() {
        // Step from 0 m (x < 10) to 5 m (x >= 10) across a footprint spanning x in [5, 15].
        let mut heights = Vec::new();
        for _r in 0..4 {
            for c in 0..4 {
                heights.push(if c < 2 { 0.0 } else { 5.0 });
            }
        }
        let t = TerrainGrid::new([1.25, 1.25], 5.0 / 2.0 * 2.0, 4, 4, heights).unwrap();
        let fp = Footprint {
            ring: vec![[5.0, 2.0], [15.0, 2.0], [15.0, 8.0], [5.0, 8.0]],
            height_m: Some(10.0),
            ..Default::default()
        };
        let m = &extrude(&[fp], Some(&t), Lod::Lod1, 1, |_| 0, &mut Vec::new())[0];
        let zmin = m.vertices.iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
        let zmax = m.vertices.iter().map(|v| v.z).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(zmin, 0.0);
        assert_eq!(zmax, 10.0);
    }

    #[test]
    fn self_intersecting_footprint_skipped() {
        let bowtie = Footprint {
            ring: vec![[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]],
            ..Default::default()
        };
        let mut w = Vec::new();
        let m = extrude(&[bowtie, square(5.0, 3.0)], None, Lod::Lod1, 1, |_| 0, &mut w);
        assert_eq!(m.len(), 1);
        assert_eq!(w.len(), 1);
        assert!(w[0].message.contains("self-intersecting"));
    }

    #[test]
    fn concave_footprint_closed_and_outward() {
        let l_shape = Footprint {
            // Clockwise on purpose; gets reoriented.
            ring: vec![
                [0.0, 0.0],
                [0.0, 20.0],
                [10.0, 20.0],
                [10.0, 10.0],
                [20.0, 10.0],
                [20.0, 0.0],
                [0.0, 0.0],
            ],
            height_m: Some(3.0),
            ..Default::default()
        };
        let m = &extrude(&[l_shape], None, Lod::Lod1, 1, |_| 0, &mut Vec::new())[0];
        m.validate().unwrap();
        assert!(m.is_closed());
        assert!((m.signed_volume() - 300.0 * 3.0).abs() < 1e-9);
    }

    #[test]
    fn height_resolution_rules() {
        let mut fp = Footprint::default();
        assert_eq!(fp.resolved_height(), 9.0);
        fp.levels = Some(5);
        assert_eq!(fp.resolved_height(), 15.0);
        fp.height_m = Some(18.0);
        assert_eq!(fp.resolved_height(), 18.0);
    }
}
