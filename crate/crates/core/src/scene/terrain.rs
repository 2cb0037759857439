//! Terrain heightfields: Esri ASCII grid import and bilinear sampling.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::{TriMesh, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("terrain header: {0}")]
    Header(String),
    #[error("terrain data: expected {expected} values, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("terrain data: invalid number {token:?} at value {position}")]
    Number { token: String, position: usize },
    #[error("no valid cells")]
    NoValidCells,
    #[error("terrain grid: {0}")]
    Invalid(String),
}

/// Regular heightfield. Samples sit at cell centers; row 0 is the southern row.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainGrid {
    /// Position of the south-west sample (center of the south-west cell).
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub ncols: usize,
    pub nrows: usize,
    /// Row-major heights, `nrows * ncols` values.
    pub heights: Vec<f64>,
}

impl TerrainGrid {
    pub fn new(
        origin: [f64; 2],
        cell_size: f64,
        ncols: usize,
        nrows: usize,
        heights: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(TerrainError::Invalid(format!("cell size {cell_size}")));
        }
        if ncols == 0 || nrows == 0 {
            return Err(TerrainError::Invalid("empty grid".into()));
        }
        if heights.len() != ncols * nrows {
            return Err(TerrainError::Dimension {
                expected: ncols * nrows,
                found: heights.len(),
            });
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(TerrainError::Invalid("non-finite height".into()));
        }
        Ok(TerrainGrid {
            origin,
            cell_size,
            ncols,
            nrows,
            heights,
        })
    }

    /// Flat grid covering `[min, max]` in x and y.
    pub fn flat(min: [f64; 2], max: [f64; 2], cell_size: f64, height: f64) -> Result<Self, TerrainError> {
        let ncols = (((max[0] - min[0]) / cell_size).ceil() as usize).max(1);
        let nrows = (((max[1] - min[1]) / cell_size).ceil() as usize).max(1);
        let origin = [min[0] + cell_size / 2.0, min[1] + cell_size / 2.0];
        TerrainGrid::new(origin, cell_size, ncols, nrows, vec![height; ncols * nrows])
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.heights[row * self.ncols + col]
    }

    /// Outer extent of the cells: `([x_min, y_min], [x_max, y_max])`.
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let h = self.cell_size / 2.0;
        (
            [self.origin[0] - h, self.origin[1] - h],
            [
                self.origin[0] - h + self.ncols as f64 * self.cell_size,
                self.origin[1] - h + self.nrows as f64 * self.cell_size,
            ],
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lo, hi) = self.extent();
        x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1]
    }

    /// Bilinear interpolation between the four surrounding cell centers.
    /// Queries outside the sample lattice are clamped to it.
    pub fn sample_height(&self, x: f64, y: f64) -> f64 {
        if !self.contains(x, y) {
            log::warn!("terrain query ({x:.2}, {y:.2}) outside grid; clamped");
        }
        let fx = ((x - self.origin[0]) / self.cell_size).clamp(0.0, (self.ncols - 1) as f64);
        let fy = ((y - self.origin[1]) / self.cell_size).clamp(0.0, (self.nrows - 1) as f64);
        let c0 = (fx.floor() as usize).min(self.ncols.saturating_sub(2));
        let r0 = (fy.floor() as usize).min(self.nrows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.ncols - 1);
        let r1 = (r0 + 1).min(self.nrows - 1);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let h00 = self.at(c0, r0);
        let h10 = self.at(c1, r0);
        let h01 = self.at(c0, r1);
        let h11 = self.at(c1, r1);
        let south = h00 + (h10 - h00) * tx;
        let north = h01 + (h11 - h01) * tx;
        south + (north - south) * ty
    }

    /// Triangulated surface over the full cell extent. Vertices sit on cell
    /// corners with heights from [`TerrainGrid::sample_height`].
    pub fn to_mesh(&self, material_id: usize, object_id: u32) -> TriMesh<f64> {
        let (lo, _) = self.extent();
        let nx = self.ncols + 1;
        let ny = self.nrows + 1;
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = lo[0] + i as f64 * self.cell_size;
                let y = lo[1] + j as f64 * self.cell_size;
                let fx = x.clamp(self.origin[0], self.origin[0] + (self.ncols - 1) as f64 * self.cell_size);
                let fy = y.clamp(self.origin[1], self.origin[1] + (self.nrows - 1) as f64 * self.cell_size);
                vertices.push(Vec3::new(x, y, self.sample_height(fx, fy)));
            }
        }
        let mut triangles = Vec::with_capacity(2 * self.ncols * self.nrows);
        for j in 0..self.nrows {
            for i in 0..self.ncols {
                let a = (j * nx + i) as u32;
                let b = a + 1;
                let c = a + nx as u32 + 1;
                let d = a + nx as u32;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        TriMesh::new(vertices, triangles, material_id, object_id)
    }
}

/// Parses an Esri ASCII grid. NODATA cells take the value of the nearest
/// valid cell (breadth-first over 4-neighbours, ties to the first found).
pub fn load_terrain(data: &[u8]) -> Result<TerrainGrid, TerrainError> {
    let text = std::str::from_utf8(data).map_err(|e| TerrainError::Header(e.to_string()))?;
    let mut tokens = text.split_whitespace().peekable();

    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut center_registered = false;
    let mut cellsize = None;
    let mut nodata = None;
    while let Some(&tok) = tokens.peek() {
        if tok.parse::<f64>().is_ok() {
            break;
        }
        let key = tok.to_ascii_lowercase();
        tokens.next();
        let value = tokens
            .next()
            .ok_or_else(|| TerrainError::Header(format!("missing value for {key}")))?;
        let num: f64 = value
            .parse()
            .map_err(|_| TerrainError::Header(format!("invalid value {value:?} for {key}")))?;
        match key.as_str() {
            "ncols" => ncols = Some(num),
            "nrows" => nrows = Some(num),
            "xllcorner" => xll = Some(num),
            "yllcorner" => yll = Some(num),
            "xllcenter" => {
                xll = Some(num);
                center_registered = true;
            }
            "yllcenter" => {
                yll = Some(num);
                center_registered = true;
            }
            "cellsize" => cellsize = Some(num),
            "nodata_value" => nodata = Some(num),
            other => return Err(TerrainError::Header(format!("unknown key {other:?}"))),
        }
    }
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| TerrainError::Header(format!("missing {k}")));
    let ncols_f = need(ncols, "ncols")?;
    let nrows_f = need(nrows, "nrows")?;
    let xll = need(xll, "xllcorner")?;
    let yll = need(yll, "yllcorner")?;
    let cellsize = need(cellsize, "cellsize")?;
    if ncols_f < 1.0 || nrows_f < 1.0 || ncols_f.fract() != 0.0 || nrows_f.fract() != 0.0 {
        return Err(TerrainError::Header(format!(
            "invalid dimensions {ncols_f} x {nrows_f}"
        )));
    }
    if !(cellsize > 0.0) {
        return Err(TerrainError::Header(format!("invalid cellsize {cellsize}")));
    }
    let (ncols, nrows) = (ncols_f as usize, nrows_f as usize);

    let mut values = Vec::with_capacity(ncols * nrows);
    for (i, tok) in tokens.enumerate() {
        let v: f64 = tok.parse().map_err(|_| TerrainError::Number {
            token: tok.to_string(),
            position: i,
        })?;
        values.push(v);
    }
    if values.len() != ncols * nrows {
        return Err(TerrainError::Dimension {
            expected: ncols * nrows,
            found: values.len(),
        });
    }

    // File rows run north to south; storage runs south to north.
    let mut heights = vec![0.0; ncols * nrows];
    let mut valid = vec![false; ncols * nrows];
    for file_row in 0..nrows {
        let row = nrows - 1 - file_row;
        for col in 0..ncols {
            let v = values[file_row * ncols + col];
            let ok = nodata.map_or(true, |nd| v != nd) && v.is_finite();
            heights[row * ncols + col] = v;
            valid[row * ncols + col] = ok;
        }
    }
    fill_nodata(&mut heights, &mut valid, ncols, nrows)?;

    let half = if center_registered { 0.0 } else { cellsize / 2.0 };
    TerrainGrid::new([xll + half, yll + half], cellsize, ncols, nrows, heights)
}

fn fill_nodata(
    heights: &mut [f64],
    valid: &mut [bool],
    ncols: usize,
    nrows: usize,
) -> Result<(), TerrainError> {
    let mut queue: VecDeque<usize> = (0..heights.len()).filter(|&i| valid[i]).collect();
    if queue.is_empty() {
        return Err(TerrainError::NoValidCells);
    }
    while let Some(i) = queue.pop_front() {
        let (c, r) = (i % ncols, i / ncols);
        let mut neighbours = [None; 4];
        if c > 0 {
            neighbours[0] = Some(i - 1);
        }
        if c + 1 < ncols {
            neighbours[1] = Some(i + 1);
        }
        if r > 0 {
            neighbours[2] = Some(i - ncols);
        }
        if r + 1 < nrows {
            neighbours[3] = Some(i + ncols);
        }
        for j in neighbours.into_iter().flatten() {
            if !valid[j] {
                valid[j] = true;
                heights[j] = heights[i];
                queue.push_back(j);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -9999\n0 0\n0 4\n";

    #[test]
    fn cell_centers_return_stored_values() {
        let g = load_terrain(SMALL.as_bytes()).unwrap();
        // Row 0 (south) is the last file row.
        assert_eq!(g.sample_height(5.0, 5.0), 0.0);
        assert_eq!(g.sample_height(15.0, 5.0), 4.0);
        assert_eq!(g.sample_height(5.0, 15.0), 0.0);
        assert_eq!(g.sample_height(15.0, 15.0), 0.0);
    }

    #[test]
    fn patch_center_is_corner_average() {
        let g = load_terrain(SMALL.as_bytes()).unwrap();
        assert_eq!(g.sample_height(10.0, 10.0), 1.0);
    }

    #[test]
    fn all_nodata_is_rejected() {
        let txt = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 -9999\n";
        let err = load_terrain(txt.as_bytes()).unwrap_err();
        assert_eq!(err, TerrainError::NoValidCells);
        assert_eq!(err.to_string(), "no valid cells");
    }

    #[test]
    fn nodata_filled_from_nearest_valid() {
        let txt = "ncols 3\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 -9999 7\n";
        let g = load_terrain(txt.as_bytes()).unwrap();
        assert_eq!(g.heights, vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let txt = "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n4 5\n";
        assert!(matches!(
            load_terrain(txt.as_bytes()),
            Err(TerrainError::Dimension { expected: 6, found: 5 })
        ));
        assert!(matches!(
            load_terrain(b"ncols 2\nxllcorner 0\n1 2"),
            Err(TerrainError::Header(_))
        ));
    }

    #[test]
    fn constant_and_ramp_grids() {
        let flat = TerrainGrid::new([0.0, 0.0], 5.0, 4, 3, vec![12.5; 12]).unwrap();
        for &(x, y) in &[(0.0, 0.0), (3.3, 7.1), (14.9, 9.99), (8.0, 2.0)] {
            assert_eq!(flat.sample_height(x, y), 12.5);
        }
        // h = 2 + 0.5 x - 0.25 y + 0.01 x y is bilinear, so it is reproduced exactly.
        let f = |x: f64, y: f64| 2.0 + 0.5 * x - 0.25 * y + 0.01 * x * y;
        let mut heights = Vec::new();
        for r in 0..5 {
            for c in 0..6 {
                heights.push(f(c as f64 * 3.0, r as f64 * 3.0));
            }
        }
        let ramp = TerrainGrid::new([0.0, 0.0], 3.0, 6, 5, heights).unwrap();
        for &(x, y) in &[(0.0, 0.0), (1.3, 2.9), (7.7, 11.2), (14.99, 0.01), (4.5, 6.0)] {
            assert!((ramp.sample_height(x, y) - f(x, y)).abs() < 1e-9);
        }
    }

    #[test]
    fn mesh_covers_extent() {
        let g = load_terrain(SMALL.as_bytes()).unwrap();
        let m = g.to_mesh(0, 0);
        m.validate().unwrap();
        let b = m.bounds();
        assert_eq!((b.min.x, b.min.y, b.max.x, b.max.y), (0.0, 0.0, 20.0, 20.0));
        assert_eq!(m.triangles.len(), 8);
    }
}
