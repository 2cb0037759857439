//! Receiver routes, coverage grids, statistics and category histograms.

mod export;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::AntennaSpec;
use crate::em::{combine, path_contribution, RadioConfig, RadioError};
use crate::geometry::Vec3;
use crate::scene::Scene;
use crate::tracer::{PropagationPath, TraceConfig, TraceError, Tracer};

pub use export::{grid_csv, grid_ppm, histogram_csv, ramp_color, route_csv, RAMP_MAX_DBM, RAMP_MIN_DBM, SENTINEL_GRAY};

/// RSS written for grid cells whose receiver point lies inside a building.
pub const IN_BUILDING_DBM: f64 = -300.0;
/// Default receiver height above terrain, m.
pub const DEFAULT_RX_HEIGHT_M: f64 = 1.6;
/// Default grid cell size, m.
pub const DEFAULT_CELL_SIZE_M: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("route has no receivers")]
    EmptyRoute,
    #[error("receiver {index} at z = {z} m is below terrain ({ground} m)")]
    BelowTerrain { index: usize, z: f64, ground: f64 },
    #[error("route polyline needs at least two vertices and a positive spacing")]
    Polyline,
    #[error("grid needs at least one cell and a positive cell size")]
    Grid,
    #[error("statistics of an empty set")]
    EmptyStats,
    #[error("category thresholds must be finite and strictly descending: {0} > {1} > {2}")]
    Thresholds(f64, f64, f64),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Radio(#[from] RadioError),
}

/// Transmitter, antennas and radio settings shared by all receivers.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub tx: Vec3<f64>,
    pub tx_antenna: AntennaSpec,
    pub rx_antenna: AntennaSpec,
    pub radio: RadioConfig,
}

impl Link {
    pub fn isotropic(tx: Vec3<f64>, radio: RadioConfig) -> Link {
        Link {
            tx,
            tx_antenna: AntennaSpec::isotropic(),
            rx_antenna: AntennaSpec::isotropic(),
            radio,
        }
    }

    /// Received power over `paths`, dBm.
    pub fn rss(&self, paths: &[PropagationPath]) -> f64 {
        let contribs: Vec<_> = paths
            .iter()
            .map(|p| path_contribution(p, &self.tx_antenna, &self.rx_antenna, &self.radio))
            .collect();
        combine(&contribs, self.radio.combine)
    }
}

/// Ordered receiver positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub receivers: Vec<Vec3<f64>>,
}

impl RouteSpec {
    pub fn new(receivers: Vec<Vec3<f64>>) -> Result<RouteSpec, CoverageError> {
        if receivers.is_empty() {
            return Err(CoverageError::EmptyRoute);
        }
        Ok(RouteSpec { receivers })
    }

    /// Receivers every `spacing` meters along a horizontal polyline, starting
    /// at its first vertex, each `height` above the local terrain.
    pub fn along_polyline(
        scene: &Scene,
        vertices: &[[f64; 2]],
        spacing: f64,
        height: f64,
    ) -> Result<RouteSpec, CoverageError> {
        if vertices.len() < 2 || !(spacing > 0.0) {
            return Err(CoverageError::Polyline);
        }
        let legs: Vec<f64> = vertices
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .collect();
        let total: f64 = legs.iter().sum();
        // Tolerate the rounding of a total that is an exact multiple of spacing.
        let n = (total / spacing + 1e-9).floor() as usize + 1;
        let mut receivers = Vec::with_capacity(n);
        let mut leg = 0;
        let mut leg_start = 0.0;
        for i in 0..n {
            let s = i as f64 * spacing;
            while leg + 1 < legs.len() && s > leg_start + legs[leg] {
                leg_start += legs[leg];
                leg += 1;
            }
            let t = if legs[leg] > 0.0 { ((s - leg_start) / legs[leg]).min(1.0) } else { 0.0 };
            let (a, b) = (vertices[leg], vertices[leg + 1]);
            let x = a[0] + (b[0] - a[0]) * t;
            let y = a[1] + (b[1] - a[1]) * t;
            receivers.push(Vec3::new(x, y, scene.ground_height(x, y) + height));
        }
        RouteSpec::new(receivers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RouteSample {
    pub position: Vec3<f64>,
    pub rss_dbm: f64,
    pub los: bool,
    pub n_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteResult {
    pub samples: Vec<RouteSample>,
}

impl RouteResult {
    pub fn rss(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rss_dbm).collect()
    }
}

/// Received power along `route`, one sample per receiver in route order.
pub fn eval_route(
    scene: &Scene,
    link: &Link,
    trace: &TraceConfig,
    route: &RouteSpec,
) -> Result<RouteResult, CoverageError> {
    link.radio.validate()?;
    if route.receivers.is_empty() {
        return Err(CoverageError::EmptyRoute);
    }
    for (index, p) in route.receivers.iter().enumerate() {
        let ground = scene.ground_height(p.x, p.y);
        if p.z < ground {
            return Err(CoverageError::BelowTerrain { index, z: p.z, ground });
        }
    }
    let tracer = Tracer::new(scene, *trace)?;
    let paths = tracer.trace_many(link.tx, &route.receivers);
    let samples = route
        .receivers
        .par_iter()
        .zip(paths.par_iter())
        .map(|(&position, paths)| RouteSample {
            position,
            rss_dbm: link.rss(paths),
            los: paths.iter().any(|p| p.is_los()),
            n_paths: paths.len(),
        })
        .collect();
    Ok(RouteResult { samples })
}

/// Regular grid of receivers at a fixed height above terrain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Corner of the first cell (minimum x and y), m.
    pub origin: [f64; 2],
    #[serde(default = "default_cell")]
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_rx_height")]
    pub rx_height: f64,
}

fn default_cell() -> f64 {
    DEFAULT_CELL_SIZE_M
}

fn default_rx_height() -> f64 {
    DEFAULT_RX_HEIGHT_M
}

impl GridSpec {
    /// Square grid of side `side` centered on `(cx, cy)` with default cell and height.
    pub fn square(cx: f64, cy: f64, side: f64) -> GridSpec {
        let n = (side / DEFAULT_CELL_SIZE_M).round().max(1.0) as usize;
        GridSpec {
            origin: [cx - side / 2.0, cy - side / 2.0],
            cell_size: DEFAULT_CELL_SIZE_M,
            nx: n,
            ny: n,
            rx_height: DEFAULT_RX_HEIGHT_M,
        }
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let finite = self.origin.iter().all(|v| v.is_finite()) && self.rx_height.is_finite();
        if self.nx == 0 || self.ny == 0 || !(self.cell_size > 0.0) || !finite {
            return Err(CoverageError::Grid);
        }
        Ok(())
    }

    /// Horizontal center of cell `(col, row)`; rows run along +y.
    pub fn center(&self, col: usize, row: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        ]
    }
}

/// RSS and LOS flags per cell, row-major with row 0 at the minimum y.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageGrid {
    pub spec: GridSpec,
    pub rss_dbm: Vec<f64>,
    pub los: Vec<bool>,
}

impl CoverageGrid {
    pub fn rss_at(&self, col: usize, row: usize) -> f64 {
        self.rss_dbm[row * self.spec.nx + col]
    }

    pub fn los_at(&self, col: usize, row: usize) -> bool {
        self.los[row * self.spec.nx + col]
    }

    /// Values of cells outside buildings.
    pub fn outdoor(&self) -> Vec<f64> {
        self.rss_dbm.iter().copied().filter(|&v| v != IN_BUILDING_DBM).collect()
    }
}

/// Received power at every cell center, `rx_height` above terrain. Cells
/// whose receiver point is inside a building carry [`IN_BUILDING_DBM`].
pub fn eval_grid(
    scene: &Scene,
    link: &Link,
    trace: &TraceConfig,
    spec: &GridSpec,
) -> Result<CoverageGrid, CoverageError> {
    link.radio.validate()?;
    spec.validate()?;
    let tracer = Tracer::new(scene, *trace)?;
    let cells: Vec<Vec3<f64>> = (0..spec.ny)
        .flat_map(|row| (0..spec.nx).map(move |col| (col, row)))
        .map(|(col, row)| {
            let [x, y] = spec.center(col, row);
            Vec3::new(x, y, scene.ground_height(x, y) + spec.rx_height)
        })
        .collect();
    let indoor: Vec<bool> = cells.par_iter().map(|&p| scene.inside_building(p)).collect();
    let outdoor: Vec<Vec3<f64>> = cells
        .iter()
        .zip(&indoor)
        .filter(|(_, &inside)| !inside)
        .map(|(&p, _)| p)
        .collect();
    let paths = tracer.trace_many(link.tx, &outdoor);
    let traced: Vec<(f64, bool)> = paths
        .par_iter()
        .map(|p| (link.rss(p), p.iter().any(|p| p.is_los())))
        .collect();
    let mut traced = traced.into_iter();
    let mut rss_dbm = Vec::with_capacity(cells.len());
    let mut los = Vec::with_capacity(cells.len());
    for inside in indoor {
        let (r, l) = if inside {
            (IN_BUILDING_DBM, false)
        } else {
            traced.next().expect("one result per outdoor cell")
        };
        rss_dbm.push(r);
        los.push(l);
    }
    Ok(CoverageGrid {
        spec: *spec,
        rss_dbm,
        los,
    })
}

/// Mean (dBm) and population standard deviation (dB), both in the dB domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
}

pub fn stats(values: &[f64]) -> Result<Stats, CoverageError> {
    if values.is_empty() {
        return Err(CoverageError::EmptyStats);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Stats { mean, sd: var.sqrt() })
}

/// Lower bounds of the excellent, good and fair bands, dBm; anything below
/// `fair` is poor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryThresholds {
    pub excellent: f64,
    pub good: f64,
    pub fair: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds {
            excellent: -75.0,
            good: -90.0,
            fair: -105.0,
        }
    }
}

impl CategoryThresholds {
    pub fn new(excellent: f64, good: f64, fair: f64) -> Result<Self, CoverageError> {
        let t = CategoryThresholds { excellent, good, fair };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let ok = [self.excellent, self.good, self.fair].iter().all(|v| v.is_finite())
            && self.excellent > self.good
            && self.good > self.fair;
        if ok {
            Ok(())
        } else {
            Err(CoverageError::Thresholds(self.excellent, self.good, self.fair))
        }
    }

    /// Band index: 0 excellent, 1 good, 2 fair, 3 poor. Values on a bound
    /// belong to the better band.
    pub fn category(&self, v: f64) -> usize {
        if v >= self.excellent {
            0
        } else if v >= self.good {
            1
        } else if v >= self.fair {
            2
        } else {
            3
        }
    }
}

pub const CATEGORY_NAMES: [&str; 4] = ["excellent", "good", "fair", "poor"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// Fractions of counted values per band; all zero when nothing was counted.
    pub fractions: [f64; 4],
    pub counts: [usize; 4],
    /// In-building cells left out of the fractions.
    pub excluded: usize,
}

/// Fractions of values per coverage band, excluding [`IN_BUILDING_DBM`].
pub fn histogram(values: &[f64], thresholds: &CategoryThresholds) -> Histogram {
    let mut counts = [0usize; 4];
    let mut excluded = 0;
    for &v in values {
        if v == IN_BUILDING_DBM {
            excluded += 1;
        } else {
            counts[thresholds.category(v)] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let mut fractions = [0.0; 4];
    if total > 0 {
        for i in 0..4 {
            fractions[i] = counts[i] as f64 / total as f64;
        }
    }
    Histogram {
        fractions,
        counts,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_two_values() {
        let s = stats(&[-70.0, -80.0]).unwrap();
        assert_eq!(s.mean, -75.0);
        assert_eq!(s.sd, 5.0);
        assert_eq!(stats(&[-93.5; 7]).unwrap().sd, 0.0);
        assert_eq!(stats(&[]), Err(CoverageError::EmptyStats));
    }

    #[test]
    fn band_boundaries_go_to_the_better_band() {
        let t = CategoryThresholds::default();
        assert_eq!(t.category(-75.0), 0);
        assert_eq!(t.category(-90.0), 1);
        assert_eq!(t.category(-90.000001), 2);
        assert_eq!(t.category(-105.0), 2);
        assert_eq!(t.category(NO_PATH), 3);
        assert!(CategoryThresholds::new(-75.0, -75.0, -90.0).is_err());
        assert!(CategoryThresholds::new(-90.0, -75.0, -105.0).is_err());
    }

    const NO_PATH: f64 = crate::em::NO_PATH_DBM;

    #[test]
    fn histogram_excludes_in_building_cells() {
        let h = histogram(&[-60.0, -50.0, IN_BUILDING_DBM], &CategoryThresholds::default());
        assert_eq!(h.fractions, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.excluded, 1);
        let none = histogram(&[IN_BUILDING_DBM], &CategoryThresholds::default());
        assert_eq!(none.fractions, [0.0; 4]);
    }

    #[test]
    fn ramp_ends_and_sentinels() {
        assert_eq!(ramp_color(-120.0), [0, 0, 255]);
        assert_eq!(ramp_color(-200.0), [0, 0, 255]);
        assert_eq!(ramp_color(-40.0), [255, 0, 0]);
        assert_eq!(ramp_color(-80.0), [0, 255, 0]);
        assert_eq!(ramp_color(IN_BUILDING_DBM), SENTINEL_GRAY);
        assert_eq!(ramp_color(NO_PATH), SENTINEL_GRAY);
    }

    #[test]
    fn polyline_route_spacing() {
        let scene = Scene::empty();
        let r = RouteSpec::along_polyline(&scene, &[[0.0, 0.0], [10.0, 0.0], [10.0, 5.0]], 1.0, 1.6).unwrap();
        assert_eq!(r.receivers.len(), 16);
        assert_eq!(r.receivers[10], Vec3::new(10.0, 0.0, 1.6));
        assert_eq!(r.receivers[15], Vec3::new(10.0, 5.0, 1.6));
        assert_eq!(
            RouteSpec::along_polyline(&scene, &[[0.0, 0.0]], 1.0, 1.6),
            Err(CoverageError::Polyline)
        );
    }
}
