//! Scene file: one compact JSON document with a fixed key order.

use serde::{Deserialize, Serialize};

use super::{
    builtin_material, DiffractionEdge, FoliageVolume, GeoOrigin, Material, Scene, SceneError,
    TerrainGrid,
};
use crate::geometry::{TriMesh, Vec3};

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<GeoOrigin>,
    #[serde(default)]
    materials: Vec<Material>,
    #[serde(default)]
    buildings: Vec<BuildingRecord>,
    #[serde(default)]
    terrain: Option<TerrainRecord>,
    #[serde(default)]
    foliage: Vec<FoliageVolume>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<DiffractionEdge>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingRecord {
    object_id: u32,
    material: String,
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainRecord {
    origin: [f64; 2],
    cell_size: f64,
    ncols: usize,
    nrows: usize,
    heights: Vec<f64>,
    material: String,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

/// Serializes a scene. Floats use the shortest representation that parses
/// back to the same value, so save → load → save is byte-identical.
pub fn save_scene(scene: &Scene) -> String {
    let materials = scene.materials().to_vec();
    let name = |id: usize| materials[id].name.clone();
    let buildings = scene
        .buildings()
        .iter()
        .map(|m| BuildingRecord {
            object_id: m.object_id,
            material: name(m.material_id),
            vertices: m.vertices.iter().map(|v| v.to_array()).collect(),
            triangles: m.triangles.clone(),
        })
        .collect();
    let terrain = scene.terrain().map(|t| TerrainRecord {
        origin: t.origin,
        cell_size: t.cell_size,
        ncols: t.ncols,
        nrows: t.nrows,
        heights: t.heights.clone(),
        material: name(scene.terrain_material().unwrap_or(0)),
    });
    let file = SceneFile {
        version: SCENE_FORMAT_VERSION,
        origin: scene.origin(),
        materials: materials.clone(),
        buildings,
        terrain,
        foliage: scene.foliage().to_vec(),
        edges: Some(scene.edges().to_vec()),
    };
    serde_json::to_string(&file).expect("scene serializes")
}

/// Parses a scene file. Material names missing from the file's table are
/// looked up among the built-in materials; edges are recomputed when absent.
pub fn load_scene(data: &[u8]) -> Result<Scene, SceneError> {
    let probe: VersionProbe =
        serde_json::from_slice(data).map_err(|e| SceneError::Format(e.to_string()))?;
    if probe.version != SCENE_FORMAT_VERSION {
        return Err(SceneError::Version {
            found: probe.version,
            expected: SCENE_FORMAT_VERSION,
        });
    }
    let file: SceneFile =
        serde_json::from_slice(data).map_err(|e| SceneError::Format(e.to_string()))?;
    let mut materials = file.materials;
    let mut resolve = |name: &str| -> Result<usize, SceneError> {
        if let Some(i) = materials.iter().position(|m| m.name == name) {
            return Ok(i);
        }
        let m = builtin_material(name).ok_or_else(|| SceneError::UnknownMaterial {
            name: name.to_string(),
        })?;
        materials.push(m);
        Ok(materials.len() - 1)
    };
    let mut buildings = Vec::with_capacity(file.buildings.len());
    for b in file.buildings {
        let material_id = resolve(&b.material)?;
        buildings.push(TriMesh::new(
            b.vertices.into_iter().map(Vec3::from_array).collect(),
            b.triangles,
            material_id,
            b.object_id,
        ));
    }
    let terrain = match file.terrain {
        Some(t) => {
            let id = resolve(&t.material)?;
            Some((TerrainGrid::new(t.origin, t.cell_size, t.ncols, t.nrows, t.heights)?, id))
        }
        None => None,
    };
    Scene::new(materials, buildings, terrain, file.foliage, file.edges, file.origin)
}
