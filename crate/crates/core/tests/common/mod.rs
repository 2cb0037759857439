//! Scene builders shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sitewave::TriMesh;
use sitewave::scene::{builtin_materials, Footprint, Lod, Material, Scene, CONCRETE, MEDIUM_DRY_EARTH};
use sitewave::Vec3;

pub fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

pub fn material_id(name: &str) -> usize {
    builtin_materials().iter().position(|m| m.name == name).unwrap()
}

/// Planar quad `p0 p1 p2 p3` (counter-clockwise seen from its front side).
pub fn quad(p: [Vec3; 4], material: usize, object_id: u32) -> TriMesh {
    TriMesh::new(p.to_vec(), vec![[0, 1, 2], [0, 2, 3]], material, object_id)
}

pub fn ground_quad(half: f64, object_id: u32) -> TriMesh {
    quad(
        [v(-half, -half, 0.0), v(half, -half, 0.0), v(half, half, 0.0), v(-half, half, 0.0)],
        material_id(MEDIUM_DRY_EARTH),
        object_id,
    )
}

/// Vertical wall in the plane `y = y0` facing `+y` (or `−y` when `facing_up` is false).
pub fn wall_y(y0: f64, x0: f64, x1: f64, h: f64, facing_plus: bool, object_id: u32) -> TriMesh {
    let c = material_id(CONCRETE);
    if facing_plus {
        quad([v(x1, y0, 0.0), v(x0, y0, 0.0), v(x0, y0, h), v(x1, y0, h)], c, object_id)
    } else {
        quad([v(x0, y0, 0.0), v(x1, y0, 0.0), v(x1, y0, h), v(x0, y0, h)], c, object_id)
    }
}

/// Vertical wall in the plane `x = x0` facing `+x`.
pub fn wall_x_plus(x0: f64, y0: f64, y1: f64, h: f64, object_id: u32) -> TriMesh {
    let c = material_id(CONCRETE);
    quad([v(x0, y0, 0.0), v(x0, y1, 0.0), v(x0, y1, h), v(x0, y0, h)], c, object_id)
}

fn scene_of(meshes: Vec<TriMesh>) -> Scene {
    Scene::new(builtin_materials(), meshes, None, Vec::new(), None, None).unwrap()
}

pub fn ground_scene() -> Scene {
    scene_of(vec![ground_quad(1000.0, 1)])
}

/// Ground plus two facing walls at `y = ±10`.
pub fn canyon_scene() -> Scene {
    scene_of(vec![
        ground_quad(1000.0, 1),
        wall_y(-10.0, -200.0, 200.0, 30.0, true, 2),
        wall_y(10.0, -200.0, 200.0, 30.0, false, 3),
    ])
}

/// Ground plus three walls enclosing `x > −20`, `|y| < 15` on three sides.
pub fn courtyard_scene() -> Scene {
    scene_of(vec![
        ground_quad(1000.0, 1),
        wall_y(-15.0, -20.0, 60.0, 25.0, true, 2),
        wall_y(15.0, -20.0, 60.0, 25.0, false, 3),
        wall_x_plus(-20.0, -15.0, 15.0, 25.0, 4),
    ])
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64, h: f64) -> Footprint {
    Footprint {
        ring: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        height_m: Some(h),
        ..Default::default()
    }
}

/// Ten box buildings on a 3×4 lattice (two lattice slots left open) over a
/// ground plane, heights 12–30 m.
pub fn ten_building_footprints() -> Vec<Footprint> {
    let mut out = Vec::new();
    let mut k = 0;
    for row in 0..3 {
        for col in 0..4 {
            if (row, col) == (1, 1) || (row, col) == (2, 3) {
                continue;
            }
            let x0 = -100.0 + col as f64 * 55.0;
            let y0 = -80.0 + row as f64 * 60.0;
            let w = 25.0 + 5.0 * ((k * 7) % 3) as f64;
            let d = 20.0 + 5.0 * ((k * 5) % 3) as f64;
            let h = 12.0 + 2.0 * ((k * 11) % 10) as f64;
            out.push(rect(x0, y0, x0 + w, y0 + d, h));
            k += 1;
        }
    }
    out
}

pub fn ten_building_scene() -> Scene {
    let ground = ground_quad(400.0, 0);
    let buildings = sitewave::scene::extrude(
        &ten_building_footprints(),
        None,
        Lod::Lod1,
        1,
        |_| material_id(CONCRETE),
        &mut Vec::new(),
    );
    let mut meshes = vec![ground];
    meshes.extend(buildings);
    scene_of(meshes)
}

/// Random point outside every building of `scene`, above ground.
pub fn random_open_point(scene: &Scene, rng: &mut ChaCha8Rng, half: f64, z: (f64, f64)) -> Vec3 {
    loop {
        let p = v(
            rng.gen_range(-half..half),
            rng.gen_range(-half..half),
            rng.gen_range(z.0..z.1),
        );
        if !scene.inside_building(p) {
            return p;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pec() -> Material {
    Material::new("PEC", 1.0, 1e12, [0, 0, 0])
}

/// Height of the ring block carrying the transmitter, m.
pub const LOT_TX_ROOF_M: f64 = 18.5;
pub const LOT_TX_ABOVE_ROOF_M: f64 = 1.5;

/// Blocks ringing a flat 200 m × 200 m lot, with streets at the corners.
pub fn lot_ring() -> Vec<Footprint> {
    vec![
        rect(-100.0, 110.0, 100.0, 140.0, LOT_TX_ROOF_M),
        rect(-100.0, -140.0, 100.0, -110.0, 21.0),
        rect(-140.0, -100.0, -110.0, 100.0, 15.0),
        rect(110.0, -100.0, 140.0, 100.0, 24.0),
    ]
}

/// Buildings inserted into the lot; layout `k` (0–3) holds the first
/// 0, 1, 3 or 6 of them, so denser layouts contain the sparser ones.
pub fn lot_inserts(k: usize) -> Vec<Footprint> {
    let all = [
        rect(-15.0, -10.0, 15.0, 10.0, 15.0),
        rect(-70.0, 0.0, -40.0, 30.0, 12.0),
        rect(40.0, 0.0, 70.0, 30.0, 18.0),
        rect(-60.0, -65.0, -30.0, -45.0, 12.0),
        rect(20.0, -65.0, 50.0, -45.0, 15.0),
        rect(-10.0, 40.0, 20.0, 65.0, 14.0),
    ];
    let n = [0, 1, 3, 6][k];
    all[..n].to_vec()
}

pub fn lot_scene(k: usize) -> Scene {
    let mut fps = lot_ring();
    fps.extend(lot_inserts(k));
    let ground = sitewave::scene::TerrainGrid::flat([-200.0, -200.0], [200.0, 200.0], 20.0, 0.0).unwrap();
    Scene::from_footprints(&fps, Some(ground), Lod::Lod1, CONCRETE, Vec::new()).unwrap()
}

pub fn lot_tx() -> Vec3 {
    v(0.0, 125.0, LOT_TX_ROOF_M + LOT_TX_ABOVE_ROOF_M)
}

/// L-shaped route of 222 receivers at 1.6 m along the south and east of the lot.
pub fn lot_route(scene: &Scene) -> sitewave::coverage::RouteSpec {
    let pts = [[-90.0, -90.0], [90.0, -90.0], [90.0, 60.0]];
    sitewave::coverage::RouteSpec::along_polyline(scene, &pts, 330.0 / 221.0, 1.6).unwrap()
}
