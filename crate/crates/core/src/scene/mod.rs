//! Simulation world: materials, building and terrain meshes, foliage volumes
//! and diffraction edges, plus the ray index derived from them.

mod edges;
mod extrude;
mod io;
mod material;
mod osm;
mod project;
mod terrain;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edges::{extract_edges, DiffractionEdge, EdgeKind, MIN_EDGE_LENGTH, MIN_EXTERIOR_EXCESS};
pub use extrude::{
    clean_ring, ear_clip, extrude, min_height_under, self_intersects, signed_area, Footprint, Lod,
    RoofShape, DEFAULT_HEIGHT_M, GABLE_RAISE_FRACTION, LEVEL_HEIGHT_M,
};
pub use io::{load_scene, save_scene, SCENE_FORMAT_VERSION};
pub use material::{
    builtin_foliage, builtin_material, builtin_materials, FoliageModel, FoliagePreset, Material,
    BRICK, CONCRETE, DENSE_DECIDUOUS_FOREST, DENSE_FOLIAGE, MEDIUM_DRY_EARTH,
};
pub use osm::{parse_osm, OsmData, OsmError, OsmFoliage};
pub use project::{project_lonlat, unproject, GeoOrigin, EARTH_RADIUS_M};
pub use terrain::{load_terrain, TerrainError, TerrainGrid};

use crate::geometry::{
    extract_facets, Aabb, Facet, FaceId, GeometryError, SpatialIndex, TriMesh, Vec3, VolumeShape,
};

/// Object id of the terrain mesh; buildings are numbered from 1.
pub const TERRAIN_OBJECT_ID: u32 = 0;

/// Default foliage canopy band above local terrain for forest areas, meters.
pub const FOREST_CANOPY_M: (f64, f64) = (2.0, 12.0);
/// Default canopy band above local terrain for single trees, meters.
pub const TREE_CANOPY_M: (f64, f64) = (2.0, 10.0);
pub const TREE_RADIUS_M: f64 = 3.0;

/// Non-fatal input problem: the offending item was skipped or defaulted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneWarning {
    pub subject: String,
    pub message: String,
}

impl SceneWarning {
    pub fn new(subject: impl Into<String>, message: String) -> Self {
        SceneWarning {
            subject: subject.into(),
            message,
        }
    }
}

impl fmt::Display for SceneWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Osm(#[from] OsmError),
    #[error("material {name:?}: eps_r must be >= 1 and sigma >= 0")]
    InvalidMaterial { name: String },
    #[error("object {object_id}: material index {material_id} does not exist")]
    MaterialIndex { object_id: u32, material_id: usize },
    #[error("unresolved material reference {name:?}")]
    UnknownMaterial { name: String },
    #[error("foliage volume {index}: {reason}")]
    InvalidFoliage { index: usize, reason: String },
    #[error("edge {index} references a face that does not exist")]
    EdgeFace { index: usize },
    #[error("duplicate object id {object_id}")]
    DuplicateObject { object_id: u32 },
    #[error("scene file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("scene file: {0}")]
    Format(String),
}

/// Attenuating vegetation volume. Never reflects or blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliageVolume {
    pub shape: VolumeShape<f64>,
    /// dB/m, vertical polarization.
    pub alpha_v: f64,
    /// dB/m, horizontal polarization.
    pub alpha_h: f64,
    #[serde(default)]
    pub model: FoliageModel,
}

impl FoliageVolume {
    pub fn new(shape: VolumeShape<f64>, preset: FoliagePreset, model: FoliageModel) -> Self {
        FoliageVolume {
            shape,
            alpha_v: preset.alpha_v,
            alpha_h: preset.alpha_h,
            model,
        }
    }

    fn check(&self, index: usize) -> Result<(), SceneError> {
        let bad = |reason: &str| SceneError::InvalidFoliage {
            index,
            reason: reason.to_string(),
        };
        if !(self.alpha_v >= 0.0 && self.alpha_h >= 0.0) {
            return Err(bad("attenuation must be non-negative"));
        }
        if !self.shape.has_positive_extent() {
            return Err(bad("shape has no positive extent"));
        }
        Ok(())
    }
}

/// Options for building a scene from map data.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub lod: Lod,
    /// Material for buildings without a recognised `building:material`.
    pub building_material: String,
    pub terrain_material: String,
    pub foliage_model: FoliageModel,
    /// Projection origin; defaults to the center of the map data.
    pub origin: Option<GeoOrigin>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            lod: Lod::Lod1,
            building_material: CONCRETE.to_string(),
            terrain_material: MEDIUM_DRY_EARTH.to_string(),
            foliage_model: FoliageModel::Generic,
            origin: None,
        }
    }
}

/// Immutable world model with its derived ray index and reflecting facets.
#[derive(Clone, Debug)]
pub struct Scene {
    materials: Vec<Material>,
    /// Terrain mesh first (if any), then buildings.
    meshes: Vec<TriMesh<f64>>,
    has_terrain_mesh: bool,
    terrain: Option<TerrainGrid>,
    foliage: Vec<FoliageVolume>,
    edges: Vec<DiffractionEdge>,
    origin: Option<GeoOrigin>,
    warnings: Vec<SceneWarning>,
    index: SpatialIndex<f64>,
    facets: Vec<Facet<f64>>,
    /// Facet id per mesh triangle, `[mesh][triangle]`.
    tri_facet: Vec<Vec<u32>>,
}

impl Scene {
    /// Assembles a scene. `terrain` carries the grid and its material index;
    /// `edges` are extracted from the buildings when `None`.
    pub fn new(
        materials: Vec<Material>,
        buildings: Vec<TriMesh<f64>>,
        terrain: Option<(TerrainGrid, usize)>,
        foliage: Vec<FoliageVolume>,
        edges: Option<Vec<DiffractionEdge>>,
        origin: Option<GeoOrigin>,
    ) -> Result<Scene, SceneError> {
        for m in &materials {
            if !m.is_valid() {
                return Err(SceneError::InvalidMaterial { name: m.name.clone() });
            }
        }
        let mut meshes = Vec::with_capacity(buildings.len() + 1);
        let mut grid = None;
        if let Some((g, material_id)) = terrain {
            meshes.push(g.to_mesh(material_id, TERRAIN_OBJECT_ID));
            grid = Some(g);
        }
        let has_terrain_mesh = !meshes.is_empty();
        meshes.extend(buildings);

        let mut ids = std::collections::BTreeSet::new();
        for m in &meshes {
            if m.material_id >= materials.len() {
                return Err(SceneError::MaterialIndex {
                    object_id: m.object_id,
                    material_id: m.material_id,
                });
            }
            if !ids.insert(m.object_id) {
                return Err(SceneError::DuplicateObject { object_id: m.object_id });
            }
            m.validate()?;
        }
        for (i, f) in foliage.iter().enumerate() {
            f.check(i)?;
        }
        let building_meshes = &meshes[has_terrain_mesh as usize..];
        let edges = match edges {
            Some(e) => e,
            None => extract_edges(building_meshes),
        };
        for (i, e) in edges.iter().enumerate() {
            let ok = e.faces.iter().all(|f| {
                meshes
                    .iter()
                    .any(|m| m.object_id == f.object_id && (f.triangle as usize) < m.triangles.len())
            });
            if !ok {
                return Err(SceneError::EdgeFace { index: i });
            }
        }

        let index = SpatialIndex::build(&meshes)?;
        let mut facets = Vec::new();
        let mut tri_facet = Vec::with_capacity(meshes.len());
        for m in &meshes {
            let mut map = vec![0u32; m.triangles.len()];
            for f in extract_facets(m) {
                for &t in &f.triangles {
                    map[t as usize] = facets.len() as u32;
                }
                facets.push(f);
            }
            tri_facet.push(map);
        }

        Ok(Scene {
            materials,
            meshes,
            has_terrain_mesh,
            terrain: grid,
            foliage,
            edges,
            origin,
            warnings: Vec::new(),
            index,
            facets,
            tri_facet,
        })
    }

    /// Scene with no geometry at all (free space).
    pub fn empty() -> Scene {
        Scene::new(builtin_materials(), Vec::new(), None, Vec::new(), None, None)
            .expect("empty scene is valid")
    }

    /// Extrudes footprints given in scene meters onto optional terrain, using
    /// the built-in materials. Buildings get `building_material` unless the
    /// footprint names a built-in material.
    pub fn from_footprints(
        footprints: &[Footprint],
        terrain: Option<TerrainGrid>,
        lod: Lod,
        building_material: &str,
        foliage: Vec<FoliageVolume>,
    ) -> Result<Scene, SceneError> {
        Self::assemble(
            footprints,
            terrain,
            foliage,
            &BuildOptions {
                lod,
                building_material: building_material.to_string(),
                ..Default::default()
            },
            None,
            Vec::new(),
        )
    }

    /// Builds a scene from parsed map data and optional terrain (in meters
    /// relative to the projection origin).
    pub fn from_osm(
        osm: &OsmData,
        terrain: Option<TerrainGrid>,
        opts: &BuildOptions,
    ) -> Result<Scene, SceneError> {
        let origin = opts.origin.or_else(|| osm.center().map(|(lon, lat)| GeoOrigin { lon, lat }));
        let origin = origin.unwrap_or(GeoOrigin { lon: 0.0, lat: 0.0 });
        let project_ring = |ring: &[[f64; 2]]| -> Vec<[f64; 2]> {
            ring.iter()
                .map(|p| {
                    let (x, y) = project_lonlat(p[0], p[1], origin);
                    [x, y]
                })
                .collect()
        };
        let footprints: Vec<Footprint> = osm
            .footprints
            .iter()
            .map(|f| Footprint {
                ring: project_ring(&f.ring),
                ..f.clone()
            })
            .collect();
        let mut warnings = osm.warnings.clone();
        let ground = |x: f64, y: f64| terrain.as_ref().map_or(0.0, |t| t.sample_height(x, y));
        let mut foliage = Vec::new();
        for f in &osm.foliage {
            match f {
                OsmFoliage::Area { ring, way_id } => {
                    let ring = project_ring(ring);
                    let ring = match clean_ring(&ring) {
                        Ok(r) => r,
                        Err(msg) => {
                            warnings.push(SceneWarning::new(format!("way {way_id}"), msg));
                            continue;
                        }
                    };
                    let base = match &terrain {
                        Some(t) => min_height_under(t, &ring),
                        None => 0.0,
                    };
                    let mut lo = [f64::INFINITY; 2];
                    let mut hi = [f64::NEG_INFINITY; 2];
                    for p in &ring {
                        for k in 0..2 {
                            lo[k] = lo[k].min(p[k]);
                            hi[k] = hi[k].max(p[k]);
                        }
                    }
                    let shape = VolumeShape::Box {
                        min: [lo[0], lo[1], base + FOREST_CANOPY_M.0],
                        max: [hi[0], hi[1], base + FOREST_CANOPY_M.1],
                    };
                    foliage.push(FoliageVolume::new(shape, DENSE_DECIDUOUS_FOREST, opts.foliage_model));
                }
                OsmFoliage::Tree { lon, lat, .. } => {
                    let (x, y) = project_lonlat(*lon, *lat, origin);
                    let base = ground(x, y);
                    let shape = VolumeShape::Cylinder {
                        center: [x, y],
                        radius: TREE_RADIUS_M,
                        z_min: base + TREE_CANOPY_M.0,
                        z_max: base + TREE_CANOPY_M.1,
                    };
                    foliage.push(FoliageVolume::new(shape, DENSE_FOLIAGE, opts.foliage_model));
                }
            }
        }
        Self::assemble(&footprints, terrain, foliage, opts, Some(origin), warnings)
    }

    fn assemble(
        footprints: &[Footprint],
        terrain: Option<TerrainGrid>,
        foliage: Vec<FoliageVolume>,
        opts: &BuildOptions,
        origin: Option<GeoOrigin>,
        mut warnings: Vec<SceneWarning>,
    ) -> Result<Scene, SceneError> {
        let materials = builtin_materials();
        let find = |name: &str| materials.iter().position(|m| m.name == name);
        let default_id = find(&opts.building_material).ok_or_else(|| SceneError::UnknownMaterial {
            name: opts.building_material.clone(),
        })?;
        let mut material_warnings = Vec::new();
        let buildings = extrude(
            footprints,
            terrain.as_ref(),
            opts.lod,
            TERRAIN_OBJECT_ID + 1,
            |fp| match fp.material.as_deref() {
                None => default_id,
                Some(name) => find(name).unwrap_or_else(|| {
                    material_warnings.push(SceneWarning::new(
                        fp.source_id.map_or("footprint".to_string(), |id| format!("way {id}")),
                        format!("unknown material {name:?}; using {}", opts.building_material),
                    ));
                    default_id
                }),
            },
            &mut warnings,
        );
        warnings.extend(material_warnings);
        let terrain = match terrain {
            Some(t) => {
                let id = find(&opts.terrain_material).ok_or_else(|| SceneError::UnknownMaterial {
                    name: opts.terrain_material.clone(),
                })?;
                Some((t, id))
            }
            None => None,
        };
        let mut scene = Scene::new(materials, buildings, terrain, foliage, None, origin)?;
        scene.warnings = warnings;
        Ok(scene)
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn material(&self, id: usize) -> &Material {
        &self.materials[id]
    }

    /// All meshes in index order: terrain (if any) first, then buildings.
    pub fn meshes(&self) -> &[TriMesh<f64>] {
        &self.meshes
    }

    pub fn buildings(&self) -> &[TriMesh<f64>] {
        &self.meshes[self.has_terrain_mesh as usize..]
    }

    pub fn terrain(&self) -> Option<&TerrainGrid> {
        self.terrain.as_ref()
    }

    pub fn terrain_material(&self) -> Option<usize> {
        self.has_terrain_mesh.then(|| self.meshes[0].material_id)
    }

    pub fn foliage(&self) -> &[FoliageVolume] {
        &self.foliage
    }

    pub fn edges(&self) -> &[DiffractionEdge] {
        &self.edges
    }

    pub fn origin(&self) -> Option<GeoOrigin> {
        self.origin
    }

    pub fn warnings(&self) -> &[SceneWarning] {
        &self.warnings
    }

    pub fn index(&self) -> &SpatialIndex<f64> {
        &self.index
    }

    /// Planar reflecting surfaces, grouped per mesh.
    pub fn facets(&self) -> &[Facet<f64>] {
        &self.facets
    }

    /// Facet containing the triangle behind an index primitive.
    pub fn facet_of_prim(&self, prim: usize) -> u32 {
        let p = &self.index.primitives()[prim];
        self.tri_facet[p.mesh][p.face.triangle as usize]
    }

    pub fn facet_of_face(&self, face: FaceId) -> Option<u32> {
        let mesh = self.meshes.iter().position(|m| m.object_id == face.object_id)?;
        self.tri_facet[mesh].get(face.triangle as usize).copied()
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(|m| m.triangles.len()).sum()
    }

    pub fn bounds(&self) -> Aabb<f64> {
        let mut b = self.index.bounds();
        for f in &self.foliage {
            let (lo, hi) = match f.shape {
                VolumeShape::Box { min, max } => (min, max),
                VolumeShape::Cylinder {
                    center,
                    radius,
                    z_min,
                    z_max,
                } => (
                    [center[0] - radius, center[1] - radius, z_min],
                    [center[0] + radius, center[1] + radius, z_max],
                ),
            };
            b = b.grow(Vec3::from_array(lo)).grow(Vec3::from_array(hi));
        }
        b
    }

    /// Terrain height at `(x, y)`, or 0 without terrain.
    pub fn ground_height(&self, x: f64, y: f64) -> f64 {
        self.terrain.as_ref().map_or(0.0, |t| t.sample_height(x, y))
    }

    /// True if `p` lies inside a closed building mesh: the first surface
    /// straight above it is a building face seen from its inner side.
    pub fn inside_building(&self, p: Vec3<f64>) -> bool {
        match self.index.nearest_hit(p, Vec3::unit_z(), f64::INFINITY) {
            Some(hit) => {
                let terrain_hit = self.has_terrain_mesh && hit.face.object_id == TERRAIN_OBJECT_ID;
                !terrain_hit && hit.normal.z > 0.0
            }
            None => false,
        }
    }
}
