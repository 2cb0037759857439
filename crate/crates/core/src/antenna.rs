//! Antenna gain: isotropic and half-wave dipole elements, gridded patterns
//! loaded from CSV, and the synthesized tri-sector base-station pattern.
//!
//! Antenna frame: boresight along +x, +z up. `θ` is measured from +z and
//! `φ` from +x towards +y. An [`Orientation`] rotates the antenna frame into
//! the scene frame as `R = Rz(yaw)·Ry(pitch)·Rx(roll)`; positive pitch tilts
//! the boresight downwards.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

/// Gain returned along the dipole axis and behind patch elements, dBi.
pub const GAIN_FLOOR_DBI: f64 = -60.0;
/// Peak directivity of a half-wave dipole (linear).
pub const DIPOLE_DIRECTIVITY: f64 = 1.643;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternPolarization {
    V,
    H,
    #[default]
    Total,
}

/// Gain sampled on a regular full-sphere grid, dBi.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternGrid {
    pub theta_step: f64,
    pub phi_step: f64,
    /// Number of θ samples, covering 0..=180°.
    pub n_theta: usize,
    /// Number of φ samples, covering 0..360°.
    pub n_phi: usize,
    /// Row-major, θ then φ.
    pub gain_dbi: Vec<f64>,
    pub polarization: PatternPolarization,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("pattern line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("pattern line {line}: non-numeric {column} {value:?}")]
    NotNumeric {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("pattern grid is irregular: {0}")]
    Irregular(String),
    #[error("pattern has duplicate cell (theta={theta}, phi={phi})")]
    Duplicate { theta: f64, phi: f64 },
    #[error("pattern is missing cell (theta={theta}, phi={phi})")]
    Missing { theta: f64, phi: f64 },
}

impl PatternGrid {
    /// Builds a grid from samples; `gain_dbi` holds `n_theta * n_phi` finite values.
    pub fn new(
        theta_step: f64,
        phi_step: f64,
        gain_dbi: Vec<f64>,
        polarization: PatternPolarization,
    ) -> Result<PatternGrid, PatternError> {
        let n_theta = steps_in(180.0, theta_step)
            .ok_or_else(|| PatternError::Irregular(format!("theta step {theta_step} does not divide 180")))?
            + 1;
        let n_phi = steps_in(360.0, phi_step)
            .ok_or_else(|| PatternError::Irregular(format!("phi step {phi_step} does not divide 360")))?;
        if gain_dbi.len() != n_theta * n_phi {
            return Err(PatternError::Irregular(format!(
                "expected {} samples, got {}",
                n_theta * n_phi,
                gain_dbi.len()
            )));
        }
        if gain_dbi.iter().any(|g| !g.is_finite()) {
            return Err(PatternError::Irregular("non-finite gain".into()));
        }
        Ok(PatternGrid {
            theta_step,
            phi_step,
            n_theta,
            n_phi,
            gain_dbi,
            polarization,
        })
    }

    #[inline]
    pub fn at(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.gain_dbi[i_theta * self.n_phi + i_phi]
    }

    /// Bilinear interpolation in (θ, φ) on dB values, with φ wrap-around.
    pub fn gain(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let ft = (theta_deg.clamp(0.0, 180.0) / self.theta_step).min((self.n_theta - 1) as f64);
        let fp = phi_deg.rem_euclid(360.0) / self.phi_step;
        let i0 = (ft.floor() as usize).min(self.n_theta.saturating_sub(2));
        let i1 = (i0 + 1).min(self.n_theta - 1);
        let j0 = (fp.floor() as usize) % self.n_phi;
        let j1 = (j0 + 1) % self.n_phi;
        let tt = ft - i0 as f64;
        let tp = fp - fp.floor();
        let g00 = self.at(i0, j0);
        let g01 = self.at(i0, j1);
        let g10 = self.at(i1, j0);
        let g11 = self.at(i1, j1);
        let lo = g00 + (g01 - g00) * tp;
        let hi = g10 + (g11 - g10) * tp;
        lo + (hi - lo) * tt
    }

    pub fn max_gain(&self) -> f64 {
        self.gain_dbi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∮ G dΩ` by trapezoidal quadrature over the grid nodes (4π for a
    /// lossless antenna).
    pub fn sphere_integral(&self) -> f64 {
        sphere_integral(self.n_theta, self.n_phi, self.theta_step, self.phi_step, |i, j| {
            10f64.powf(self.at(i, j) / 10.0)
        })
    }

    /// Writes the grid in the CSV layout accepted by [`load_pattern`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_deg,phi_deg,gain_dbi\n");
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                s.push_str(&format!(
                    "{},{},{}\n",
                    i as f64 * self.theta_step,
                    j as f64 * self.phi_step,
                    self.at(i, j)
                ));
            }
        }
        s
    }
}

fn steps_in(range: f64, step: f64) -> Option<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return None;
    }
    let n = (range / step).round();
    ((n * step - range).abs() <= 1e-9 * range && n >= 1.0).then_some(n as usize)
}

fn sphere_integral(
    n_theta: usize,
    n_phi: usize,
    theta_step: f64,
    phi_step: f64,
    linear: impl Fn(usize, usize) -> f64,
) -> f64 {
    let dt = theta_step.to_radians();
    let dp = phi_step.to_radians();
    let mut total = 0.0;
    for i in 0..n_theta {
        let w = if i == 0 || i == n_theta - 1 { 0.5 } else { 1.0 };
        let s = (i as f64 * dt).sin();
        let row: f64 = (0..n_phi).map(|j| linear(i, j)).sum();
        total += w * s * row;
    }
    total * dt * dp
}

/// Parses a pattern CSV: header `theta_deg,phi_deg,gain_dbi`, then one row per
/// cell of a regular grid spanning θ in [0, 180] and φ in [0, 360).
pub fn load_pattern(data: &[u8]) -> Result<PatternGrid, PatternError> {
    let text = std::str::from_utf8(data).map_err(|e| PatternError::Syntax {
        line: 1,
        message: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "theta_deg,phi_deg,gain_dbi" => {}
        Some((i, _)) => {
            return Err(PatternError::Syntax {
                line: i + 1,
                message: "expected header theta_deg,phi_deg,gain_dbi".into(),
            })
        }
        None => {
            return Err(PatternError::Syntax {
                line: 1,
                message: "empty pattern file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(PatternError::Syntax {
                line: i + 1,
                message: format!("expected 3 columns, found {}", cols.len()),
            });
        }
        let num = |k: usize, column: &'static str| {
            cols[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PatternError::NotNumeric {
                    line: i + 1,
                    column,
                    value: cols[k].to_string(),
                })
        };
        rows.push((num(0, "theta_deg")?, num(1, "phi_deg")?, num(2, "gain_dbi")?));
    }

    let step_of = |vals: &mut Vec<f64>| -> Option<f64> {
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.dedup();
        vals.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    };
    let mut thetas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut phis: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let theta_step = step_of(&mut thetas).ok_or_else(|| PatternError::Irregular("fewer than 2 theta values".into()))?;
    let phi_step = match step_of(&mut phis) {
        Some(s) => s,
        None => return Err(PatternError::Irregular("fewer than 2 phi values".into())),
    };
    let n_theta = steps_in(180.0, theta_step)
        .ok_or_else(|| PatternError::Irregular(format!("theta step {theta_step} does not divide 180")))?
        + 1;
    let n_phi = steps_in(360.0, phi_step)
        .ok_or_else(|| PatternError::Irregular(format!("phi step {phi_step} does not divide 360")))?;

    let mut cells: Vec<Option<f64>> = vec![None; n_theta * n_phi];
    for &(t, p, g) in &rows {
        let it = lattice_index(t, theta_step, n_theta)
            .ok_or_else(|| PatternError::Irregular(format!("theta {t} is off the {theta_step} degree lattice")))?;
        let ip = lattice_index(p, phi_step, n_phi)
            .ok_or_else(|| PatternError::Irregular(format!("phi {p} is off the {phi_step} degree lattice")))?;
        let cell = &mut cells[it * n_phi + ip];
        if cell.is_some() {
            return Err(PatternError::Duplicate { theta: t, phi: p });
        }
        *cell = Some(g);
    }
    let mut gains = Vec::with_capacity(cells.len());
    for (k, c) in cells.iter().enumerate() {
        match c {
            Some(g) => gains.push(*g),
            None => {
                return Err(PatternError::Missing {
                    theta: (k / n_phi) as f64 * theta_step,
                    phi: (k % n_phi) as f64 * phi_step,
                })
            }
        }
    }
    PatternGrid::new(theta_step, phi_step, gains, PatternPolarization::Total)
}

fn lattice_index(v: f64, step: f64, n: usize) -> Option<usize> {
    let k = (v / step).round();
    ((k * step - v).abs() <= 1e-6 * step && k >= 0.0 && (k as usize) < n).then_some(k as usize)
}

/// Yaw, pitch (downtilt) and roll in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orientation {
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub roll: f64,
}

impl Orientation {
    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }

    /// Rotation matrix (rows) taking antenna-frame vectors to the scene frame.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        let (sp, cp) = self.pitch.to_radians().sin_cos();
        let (sr, cr) = self.roll.to_radians().sin_cos();
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    }

    /// Expresses a scene-frame vector in the antenna frame.
    pub fn to_antenna(&self, v: Vec3<f64>) -> Vec3<f64> {
        let m = self.matrix();
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn to_scene(&self, v: Vec3<f64>) -> Vec3<f64> {
        let m = self.matrix();
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AntennaKind {
    Isotropic,
    /// Half-wave dipole along the antenna-frame z axis.
    HalfWaveDipole,
    Pattern(Arc<PatternGrid>),
    /// Synthesized tri-sector array.
    TriSector(Arc<PatternGrid>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntennaSpec {
    pub kind: AntennaKind,
    pub orientation: Orientation,
}

impl AntennaSpec {
    pub fn isotropic() -> Self {
        AntennaSpec {
            kind: AntennaKind::Isotropic,
            orientation: Orientation::default(),
        }
    }

    pub fn vertical_dipole() -> Self {
        AntennaSpec {
            kind: AntennaKind::HalfWaveDipole,
            orientation: Orientation::default(),
        }
    }

    pub fn pattern(grid: PatternGrid, orientation: Orientation) -> Self {
        AntennaSpec {
            kind: AntennaKind::Pattern(Arc::new(grid)),
            orientation,
        }
    }

    /// Tri-sector array with the default synthesis parameters.
    pub fn trisector(orientation: Orientation) -> Self {
        AntennaSpec {
            kind: AntennaKind::TriSector(Arc::new(synth_trisector(&TriSectorParams::default()))),
            orientation,
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.kind, AntennaKind::Isotropic)
    }

    /// Gain towards `dir` (unit vector in the scene frame), dBi.
    pub fn gain_dbi(&self, dir: Vec3<f64>) -> f64 {
        debug_assert!((dir.norm() - 1.0).abs() < 1e-6, "gain_dbi requires a unit direction");
        if let AntennaKind::Isotropic = self.kind {
            return 0.0;
        }
        let (theta, phi) = angles_deg(self.orientation.to_antenna(dir));
        match &self.kind {
            AntennaKind::Isotropic => 0.0,
            AntennaKind::HalfWaveDipole => dipole_gain_dbi(theta.to_radians()),
            AntennaKind::Pattern(g) | AntennaKind::TriSector(g) => g.gain(theta, phi),
        }
    }

    pub fn gain_linear(&self, dir: Vec3<f64>) -> f64 {
        10f64.powf(self.gain_dbi(dir) / 10.0)
    }
}

impl fmt::Display for AntennaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            AntennaKind::Isotropic => "isotropic",
            AntennaKind::HalfWaveDipole => "half-wave dipole",
            AntennaKind::Pattern(_) => "pattern",
            AntennaKind::TriSector(_) => "tri-sector",
        };
        let o = self.orientation;
        write!(f, "{name} (yaw {}°, pitch {}°, roll {}°)", o.yaw, o.pitch, o.roll)
    }
}

/// Polar and azimuth angles of a direction, degrees. φ is in `[0, 360)`.
pub fn angles_deg(d: Vec3<f64>) -> (f64, f64) {
    let theta = d.z.clamp(-1.0, 1.0).acos().to_degrees();
    let phi = d.y.atan2(d.x).to_degrees().rem_euclid(360.0);
    (theta, phi)
}

/// `10·log10(1.643·[cos(π/2·cosθ)/sinθ]²)`, floored at [`GAIN_FLOOR_DBI`].
pub fn dipole_gain_dbi(theta: f64) -> f64 {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return GAIN_FLOOR_DBI;
    }
    let f = (PI / 2.0 * theta.cos()).cos() / s;
    let g = DIPOLE_DIRECTIVITY * f * f;
    if g <= 0.0 {
        return GAIN_FLOOR_DBI;
    }
    (10.0 * g.log10()).max(GAIN_FLOOR_DBI)
}

/// Tri-sector synthesis parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriSectorParams {
    /// Elements per vertical panel.
    pub n: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub sectors: usize,
    /// Exponent of the element field pattern `cos(el)^q · cos(az)^q`.
    pub element_exponent: f64,
    /// Grid resolution in degrees.
    pub step_deg: f64,
}

impl Default for TriSectorParams {
    fn default() -> Self {
        TriSectorParams {
            n: 4,
            spacing: 0.5,
            sectors: 3,
            element_exponent: 1.2,
            step_deg: 1.0,
        }
    }
}

/// Element field amplitude for elevation `el` and azimuth `az` relative to the
/// panel boresight (radians); zero behind the panel.
fn element_field(el: f64, az: f64, q: f64) -> f64 {
    if az.abs() >= PI / 2.0 {
        return 0.0;
    }
    el.cos().max(0.0).powf(q) * az.cos().powf(q)
}

/// Normalized vertical array factor `|Σ e^{j2π·s·k·cosθ}| / n`.
pub fn array_factor(n: usize, spacing: f64, theta: f64) -> f64 {
    let psi = 2.0 * PI * spacing * theta.cos();
    let sum: Complex64 = (0..n).map(|k| Complex64::from_polar(1.0, psi * k as f64)).sum();
    sum.norm() / n as f64
}

/// Synthesizes the sectorized base-station pattern: per panel, element power
/// times array-factor power (element power floored 60 dB below its peak
/// behind the panel), panels power-summed at azimuths `k·360°/sectors`, and
/// the result scaled to unit average gain over the sphere.
pub fn synth_trisector(p: &TriSectorParams) -> PatternGrid {
    assert!(p.n >= 1 && p.spacing > 0.0 && p.sectors >= 1, "invalid synthesis parameters");
    let step = p.step_deg;
    let n_theta = steps_in(180.0, step).expect("step divides 180") + 1;
    let n_phi = steps_in(360.0, step).expect("step divides 360");
    let floor = 10f64.powf(GAIN_FLOOR_DBI / 10.0);
    let mut linear = vec![0.0; n_theta * n_phi];
    let mut panel = Vec::with_capacity(p.sectors);
    for i in 0..n_theta {
        let theta = (i as f64 * step).to_radians();
        let el = PI / 2.0 - theta;
        let af = array_factor(p.n, p.spacing, theta);
        for j in 0..n_phi {
            let phi = j as f64 * step;
            panel.clear();
            for s in 0..p.sectors {
                let center = s as f64 * 360.0 / p.sectors as f64;
                let rel = (phi - center + 180.0).rem_euclid(360.0) - 180.0;
                let e = element_field(el, rel.to_radians(), p.element_exponent);
                panel.push((e * e).max(floor) * af * af);
            }
            panel.sort_by(|a, b| a.total_cmp(b));
            linear[i * n_phi + j] = panel.iter().sum();
        }
    }
    let integral = sphere_integral(n_theta, n_phi, step, step, |i, j| linear[i * n_phi + j]);
    let scale = 4.0 * PI / integral;
    let gains = linear
        .iter()
        .map(|&g| (10.0 * (g * scale).log10()).max(GAIN_FLOOR_DBI))
        .collect();
    PatternGrid::new(step, step, gains, PatternPolarization::V).expect("synthesized grid is regular")
}

/// Azimuth-cut ripple at θ = 90°: peak minus minimum gain, dB.
pub fn azimuth_ripple_db(grid: &PatternGrid) -> f64 {
    let i = ((90.0 / grid.theta_step).round() as usize).min(grid.n_theta - 1);
    let row = &grid.gain_dbi[i * grid.n_phi..(i + 1) * grid.n_phi];
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = row.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}
