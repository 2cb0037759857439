//! TOML scenario files: schema, validation and resolution against the scene.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sitewave::antenna::{load_pattern, AntennaSpec, Orientation};
use sitewave::coverage::{CategoryThresholds, GridSpec, Link, RouteSpec, DEFAULT_RX_HEIGHT_M};
use sitewave::em::RadioConfig;
use sitewave::scene::{
    builtin_material, load_scene, load_terrain, parse_osm, project_lonlat, BuildOptions, FoliageModel, Lod,
    Scene, CONCRETE, MEDIUM_DRY_EARTH,
};
use sitewave::tracer::TraceConfig;
use sitewave::Vec3;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    /// Scenario label in summaries; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub scene: SceneSource,
    pub tx: TxConfig,
    #[serde(default)]
    pub rx: RxConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub route: Option<RouteConfig>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub thresholds: CategoryThresholds,
    #[serde(default)]
    pub outputs: OutputNames,
}

/// Either a saved scene file or map data (plus optional terrain) to extrude.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSource {
    pub file: Option<PathBuf>,
    pub osm: Option<PathBuf>,
    pub terrain: Option<PathBuf>,
    pub lod: Option<u8>,
    pub building_material: Option<String>,
    pub terrain_material: Option<String>,
    pub foliage_model: Option<FoliageModel>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightReference {
    #[default]
    Ground,
    Rooftop,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxConfig {
    /// Absolute scene coordinates, m.
    pub position: Option<[f64; 3]>,
    /// Horizontal scene coordinates, m.
    pub xy: Option<[f64; 2]>,
    /// Longitude and latitude, degrees; needs a georeferenced scene.
    pub lonlat: Option<[f64; 2]>,
    /// Height above `reference`, m.
    pub height: Option<f64>,
    #[serde(default)]
    pub reference: HeightReference,
    #[serde(default)]
    pub antenna: AntennaConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxConfig {
    #[serde(default)]
    pub antenna: AntennaConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKindName {
    #[default]
    Isotropic,
    Dipole,
    Trisector,
    Pattern,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaConfig {
    #[serde(default)]
    pub kind: AntennaKindName,
    /// Gain table (`theta_deg,phi_deg,gain_dbi`) for `kind = "pattern"`.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub orientation: Orientation,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    /// Explicit receiver positions in scene coordinates.
    pub points: Option<Vec<[f64; 3]>>,
    /// Horizontal polyline sampled every `spacing` meters.
    pub polyline: Option<Vec<[f64; 2]>>,
    pub spacing: Option<f64>,
    /// Receiver height above terrain along the polyline, m.
    pub height: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputNames {
    pub route_csv: String,
    pub grid_csv: String,
    pub grid_ppm: String,
    pub histogram_csv: String,
    pub summary_csv: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        OutputNames {
            route_csv: "route.csv".into(),
            grid_csv: "grid.csv".into(),
            grid_ppm: "grid.ppm".into(),
            histogram_csv: "histogram.csv".into(),
            summary_csv: "summary.csv".into(),
        }
    }
}

/// Reads and validates a scenario file. Paths inside it are made relative to
/// its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, Vec<CliError>> {
    let bytes = fs::read(path).map_err(|e| vec![CliError::io(path, e)])?;
    let text = String::from_utf8(bytes).map_err(|e| vec![CliError::input(path, e)])?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| vec![CliError::input(path, e.message())])?;
    let mut cfg: ScenarioConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        vec![CliError::config(key, e.into_inner().message())]
    })?;
    let errors = validate(&cfg);
    if !errors.is_empty() {
        return Err(errors);
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let rebase = |p: &mut Option<PathBuf>| {
        if let Some(p) = p {
            *p = base.join(&*p);
        }
    };
    rebase(&mut cfg.scene.file);
    rebase(&mut cfg.scene.osm);
    rebase(&mut cfg.scene.terrain);
    rebase(&mut cfg.tx.antenna.file);
    rebase(&mut cfg.rx.antenna.file);
    if cfg.name.is_none() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

/// Every schema violation, each naming its key.
pub fn validate(cfg: &ScenarioConfig) -> Vec<CliError> {
    let mut errs = Vec::new();
    if cfg.version != CONFIG_VERSION {
        errs.push(CliError::config("version", format!("unsupported version {}, expected {CONFIG_VERSION}", cfg.version)));
    }
    let s = &cfg.scene;
    match (&s.file, &s.osm) {
        (Some(_), Some(_)) => errs.push(CliError::config("scene", "give either file or osm, not both")),
        (None, None) => errs.push(CliError::config("scene", "one of file or osm is required")),
        (Some(_), None) => {
            for (key, set) in [
                ("terrain", s.terrain.is_some()),
                ("lod", s.lod.is_some()),
                ("building_material", s.building_material.is_some()),
                ("terrain_material", s.terrain_material.is_some()),
                ("foliage_model", s.foliage_model.is_some()),
            ] {
                if set {
                    errs.push(CliError::config(format!("scene.{key}"), "only valid with scene.osm"));
                }
            }
        }
        (None, Some(_)) => {}
    }
    if let Some(lod) = s.lod {
        if Lod::from_level(lod).is_none() {
            errs.push(CliError::config("scene.lod", format!("level {lod} is not 1 or 2")));
        }
    }
    for (key, name) in [("scene.building_material", &s.building_material), ("scene.terrain_material", &s.terrain_material)] {
        if let Some(name) = name {
            if builtin_material(name).is_none() {
                errs.push(CliError::config(key, format!("unknown material {name:?}")));
            }
        }
    }

    let tx = &cfg.tx;
    let horizontal = tx.xy.is_some() as u8 + tx.lonlat.is_some() as u8;
    match (tx.position, horizontal) {
        (Some(p), 0) => {
            if tx.height.is_some() {
                errs.push(CliError::config("tx.height", "not used with tx.position"));
            }
            if !p.iter().all(|v| v.is_finite()) {
                errs.push(CliError::config("tx.position", "must be finite"));
            }
        }
        (None, 1) => match tx.height {
            Some(h) if h.is_finite() && h >= 0.0 => {}
            Some(_) => errs.push(CliError::config("tx.height", "must be finite and non-negative")),
            None => errs.push(CliError::config("tx.height", "required with tx.xy or tx.lonlat")),
        },
        _ => errs.push(CliError::config("tx", "give exactly one of position, xy or lonlat")),
    }
    antenna_errors(&tx.antenna, "tx.antenna", &mut errs);
    antenna_errors(&cfg.rx.antenna, "rx.antenna", &mut errs);

    if let Err(e) = cfg.radio.validate() {
        errs.push(CliError::config("radio", e));
    }
    if let Err(e) = cfg.trace.validate() {
        errs.push(CliError::config("trace", e));
    }
    if cfg.route.is_none() && cfg.grid.is_none() {
        errs.push(CliError::config("route", "request a route, a grid, or both"));
    }
    if let Some(r) = &cfg.route {
        match (&r.points, &r.polyline) {
            (Some(p), None) => {
                if p.is_empty() {
                    errs.push(CliError::config("route.points", "at least one receiver is required"));
                }
                if r.spacing.is_some() || r.height.is_some() {
                    errs.push(CliError::config("route", "spacing and height apply to polyline routes only"));
                }
            }
            (None, Some(line)) => {
                if line.len() < 2 {
                    errs.push(CliError::config("route.polyline", "at least two vertices are required"));
                }
                match r.spacing {
                    Some(s) if s > 0.0 && s.is_finite() => {}
                    _ => errs.push(CliError::config("route.spacing", "positive spacing required with a polyline")),
                }
                if matches!(r.height, Some(h) if !(h >= 0.0 && h.is_finite())) {
                    errs.push(CliError::config("route.height", "must be finite and non-negative"));
                }
            }
            _ => errs.push(CliError::config("route", "give exactly one of points or polyline")),
        }
    }
    if let Some(g) = &cfg.grid {
        if let Err(e) = g.validate() {
            errs.push(CliError::config("grid", e));
        }
    }
    if let Err(e) = cfg.thresholds.validate() {
        errs.push(CliError::config("thresholds", e));
    }
    let o = &cfg.outputs;
    for (key, name) in [
        ("route_csv", &o.route_csv),
        ("grid_csv", &o.grid_csv),
        ("grid_ppm", &o.grid_ppm),
        ("histogram_csv", &o.histogram_csv),
        ("summary_csv", &o.summary_csv),
    ] {
        let p = Path::new(name);
        if name.is_empty() || p.is_absolute() || p.components().count() != 1 {
            errs.push(CliError::config(format!("outputs.{key}"), "must be a plain file name"));
        }
    }
    errs
}

fn antenna_errors(a: &AntennaConfig, key: &str, errs: &mut Vec<CliError>) {
    match (a.kind, &a.file) {
        (AntennaKindName::Pattern, None) => errs.push(CliError::config(format!("{key}.file"), "required for kind = \"pattern\"")),
        (AntennaKindName::Pattern, Some(_)) => {}
        (_, Some(_)) => errs.push(CliError::config(format!("{key}.file"), "only valid for kind = \"pattern\"")),
        _ => {}
    }
    if !a.orientation.is_finite() {
        errs.push(CliError::config(format!("{key}.orientation"), "must be finite"));
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn build_options(s: &SceneSource) -> BuildOptions {
    BuildOptions {
        lod: s.lod.and_then(Lod::from_level).unwrap_or(Lod::Lod1),
        building_material: s.building_material.clone().unwrap_or_else(|| CONCRETE.to_string()),
        terrain_material: s.terrain_material.clone().unwrap_or_else(|| MEDIUM_DRY_EARTH.to_string()),
        foliage_model: s.foliage_model.unwrap_or_default(),
        origin: None,
    }
}

/// Builds a scene from map data and optional terrain files.
pub fn scene_from_osm(osm: &Path, terrain: Option<&Path>, opts: &BuildOptions) -> Result<Scene, CliError> {
    let osm_bytes = read(osm)?;
    let terrain_bytes = terrain.map(|t| read(t).map(|b| (t, b))).transpose()?;
    let data = parse_osm(&osm_bytes).map_err(|e| CliError::input(osm, e))?;
    let grid = terrain_bytes
        .map(|(t, b)| load_terrain(&b).map_err(|e| CliError::input(t, e)))
        .transpose()?;
    Scene::from_osm(&data, grid, opts).map_err(|e| CliError::input(osm, e))
}

pub fn load_scene_source(s: &SceneSource) -> Result<Scene, CliError> {
    if let Some(file) = &s.file {
        let bytes = read(file)?;
        return load_scene(&bytes).map_err(|e| CliError::input(file, e));
    }
    let osm = s.osm.as_deref().expect("validated scene source");
    scene_from_osm(osm, s.terrain.as_deref(), &build_options(s))
}

fn antenna(a: &AntennaConfig) -> Result<AntennaSpec, CliError> {
    Ok(match a.kind {
        AntennaKindName::Isotropic => AntennaSpec::isotropic().with_orientation(a.orientation),
        AntennaKindName::Dipole => AntennaSpec::vertical_dipole().with_orientation(a.orientation),
        AntennaKindName::Trisector => AntennaSpec::trisector(a.orientation),
        AntennaKindName::Pattern => {
            let file = a.file.as_deref().expect("validated pattern file");
            let grid = load_pattern(&read(file)?).map_err(|e| CliError::input(file, e))?;
            AntennaSpec::pattern(grid, a.orientation)
        }
    })
}

/// Height of the first building roof straight below `(x, y)`, by a ray cast
/// from above the scene.
pub fn rooftop_height(scene: &Scene, x: f64, y: f64) -> Option<f64> {
    let top = scene.bounds().max.z + 10.0;
    let hit = scene.index().nearest_hit(Vec3::new(x, y, top), Vec3::new(0.0, 0.0, -1.0), f64::INFINITY)?;
    scene
        .buildings()
        .iter()
        .any(|b| b.object_id == hit.face.object_id)
        .then_some(hit.point.z)
}

/// Everything needed to evaluate one scenario.
pub struct Scenario {
    pub name: String,
    pub scene: Scene,
    pub link: Link,
    pub trace: TraceConfig,
    pub route: Option<RouteSpec>,
    pub grid: Option<GridSpec>,
    pub thresholds: CategoryThresholds,
    pub outputs: OutputNames,
}

/// Loads the scene and antenna files of a validated config and places the
/// transmitter and receivers.
pub fn resolve(cfg: &ScenarioConfig) -> Result<Scenario, CliError> {
    let scene = load_scene_source(&cfg.scene)?;
    let tx_antenna = antenna(&cfg.tx.antenna)?;
    let rx_antenna = antenna(&cfg.rx.antenna)?;
    let tx = tx_position(&scene, &cfg.tx)?;
    if scene.inside_building(tx) {
        log::warn!("transmitter at {tx:?} is inside a building");
    }
    let route = cfg.route.as_ref().map(|r| route_spec(&scene, r)).transpose()?;
    Ok(Scenario {
        name: cfg.name.clone().unwrap_or_else(|| "scenario".into()),
        link: Link {
            tx,
            tx_antenna,
            rx_antenna,
            radio: cfg.radio,
        },
        scene,
        trace: cfg.trace,
        route,
        grid: cfg.grid,
        thresholds: cfg.thresholds,
        outputs: cfg.outputs.clone(),
    })
}

fn tx_position(scene: &Scene, tx: &TxConfig) -> Result<Vec3, CliError> {
    if let Some(p) = tx.position {
        return Ok(Vec3::from_array(p));
    }
    let [x, y] = match (tx.xy, tx.lonlat) {
        (Some(xy), _) => xy,
        (None, Some([lon, lat])) => {
            let origin = scene
                .origin()
                .ok_or_else(|| CliError::config("tx.lonlat", "scene has no geographic origin"))?;
            let (x, y) = project_lonlat(lon, lat, origin);
            [x, y]
        }
        (None, None) => unreachable!("validated tx placement"),
    };
    let height = tx.height.expect("validated tx height");
    let base = match tx.reference {
        HeightReference::Ground => scene.ground_height(x, y),
        HeightReference::Rooftop => rooftop_height(scene, x, y)
            .ok_or_else(|| CliError::config("tx.reference", format!("no building roof below ({x}, {y})")))?,
    };
    Ok(Vec3::new(x, y, base + height))
}

fn route_spec(scene: &Scene, r: &RouteConfig) -> Result<RouteSpec, CliError> {
    let spec = match (&r.points, &r.polyline) {
        (Some(points), _) => RouteSpec::new(points.iter().map(|&p| Vec3::from_array(p)).collect()),
        (None, Some(line)) => RouteSpec::along_polyline(
            scene,
            line,
            r.spacing.expect("validated spacing"),
            r.height.unwrap_or(DEFAULT_RX_HEIGHT_M),
        ),
        (None, None) => unreachable!("validated route"),
    };
    spec.map_err(|e| CliError::config("route", e))
}
