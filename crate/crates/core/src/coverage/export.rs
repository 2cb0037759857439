//! CSV and PPM encodings of coverage artifacts.

use std::fmt::Write;

use super::{CategoryThresholds, CoverageGrid, Histogram, RouteResult, CATEGORY_NAMES, IN_BUILDING_DBM};
use crate::em::NO_PATH_DBM;

pub const RAMP_MIN_DBM: f64 = -120.0;
pub const RAMP_MAX_DBM: f64 = -40.0;
/// Pixel color of in-building and no-path cells.
pub const SENTINEL_GRAY: [u8; 3] = [128, 128, 128];

/// Blue, cyan, green, yellow, red at equal steps over the ramp.
const RAMP_STOPS: [[f64; 3]; 5] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 255.0],
    [0.0, 255.0, 0.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];

/// Heatmap color of an RSS value, clamped to the ramp; sentinels are gray.
pub fn ramp_color(rss_dbm: f64) -> [u8; 3] {
    if rss_dbm == IN_BUILDING_DBM || rss_dbm <= NO_PATH_DBM || rss_dbm.is_nan() {
        return SENTINEL_GRAY;
    }
    let t = ((rss_dbm - RAMP_MIN_DBM) / (RAMP_MAX_DBM - RAMP_MIN_DBM)).clamp(0.0, 1.0);
    let x = t * (RAMP_STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP_STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (RAMP_STOPS[i], RAMP_STOPS[i + 1]);
    [0, 1, 2].map(|c| (a[c] + (b[c] - a[c]) * f).round() as u8)
}

/// `index,x,y,z,rss_dbm,los,n_paths`, one row per receiver.
pub fn route_csv(route: &RouteResult) -> String {
    let mut out = String::from("index,x,y,z,rss_dbm,los,n_paths\n");
    for (i, s) in route.samples.iter().enumerate() {
        let p = s.position;
        writeln!(out, "{i},{},{},{},{},{},{}", p.x, p.y, p.z, s.rss_dbm, s.los as u8, s.n_paths).unwrap();
    }
    out
}

/// RSS matrix, one line per grid row starting at the minimum y.
pub fn grid_csv(grid: &CoverageGrid) -> String {
    let mut out = String::new();
    for row in grid.rss_dbm.chunks(grid.spec.nx) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Binary PPM heatmap with north (maximum y) at the top.
pub fn grid_ppm(grid: &CoverageGrid) -> Vec<u8> {
    let (nx, ny) = (grid.spec.nx, grid.spec.ny);
    let mut out = format!("P6 {nx} {ny} 255\n").into_bytes();
    out.reserve(nx * ny * 3);
    for row in (0..ny).rev() {
        for col in 0..nx {
            out.extend_from_slice(&ramp_color(grid.rss_at(col, row)));
        }
    }
    out
}

/// `category,lower_bound_dbm,count,fraction` per band, then the excluded cell count.
pub fn histogram_csv(h: &Histogram, thresholds: &CategoryThresholds) -> String {
    let bounds = [
        thresholds.excellent.to_string(),
        thresholds.good.to_string(),
        thresholds.fair.to_string(),
        String::new(),
    ];
    let mut out = String::from("category,lower_bound_dbm,count,fraction\n");
    for i in 0..4 {
        writeln!(out, "{},{},{},{}", CATEGORY_NAMES[i], bounds[i], h.counts[i], h.fractions[i]).unwrap();
    }
    writeln!(out, "in_building,,{},", h.excluded).unwrap();
    out
}
