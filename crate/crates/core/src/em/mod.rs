//! Field computation: reflection and diffraction coefficients, vegetation
//! loss, and conversion of geometric paths into received power.

mod diffraction;
mod foliage;
mod reflection;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diffraction::{
    fresnel_integrals, fresnel_kirchhoff_v, knife_edge_loss, transition_function, utd_diffraction,
    UtdCoefficients, WedgeGeometry,
};
pub use foliage::{foliage_loss, WEISSBERGER_MAX_DEPTH};
pub use reflection::{brewster_angle, complex_permittivity, fresnel, EPSILON_0};

use crate::antenna::AntennaSpec;
use crate::geometry::Vec3;
use crate::scene::DiffractionEdge;
use crate::tracer::{InteractionKind, PathSignature, PropagationPath};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Received power reported when no path reaches a receiver, dBm.
pub const NO_PATH_DBM: f64 = -250.0;

pub const MIN_FREQUENCY_HZ: f64 = 100e6;
pub const MAX_FREQUENCY_HZ: f64 = 30e9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    #[default]
    V,
    H,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Coherent,
    #[default]
    PowerSum,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("frequency {0} Hz outside [100 MHz, 30 GHz]")]
    Frequency(f64),
    #[error("tx power {0} dBm is not finite")]
    TxPower(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub combine: CombineMode,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            frequency_hz: 3.5e9,
            tx_power_dbm: 30.0,
            polarization: Polarization::V,
            combine: CombineMode::PowerSum,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.frequency_hz >= MIN_FREQUENCY_HZ && self.frequency_hz <= MAX_FREQUENCY_HZ) {
            return Err(RadioError::Frequency(self.frequency_hz));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(RadioError::TxPower(self.tx_power_dbm));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }
}

/// Per-mechanism decomposition of `power − tx_power`, all in dB.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Breakdown {
    /// Free-space spreading including the `λ/4π` aperture term.
    pub spreading_db: f64,
    pub reflection_db: f64,
    pub diffraction_db: f64,
    pub foliage_db: f64,
    /// Transmit plus receive antenna gain.
    pub antenna_db: f64,
    /// Projection of the arriving field on the receive polarization.
    pub polarization_db: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.spreading_db
            + self.reflection_db
            + self.diffraction_db
            + self.foliage_db
            + self.antenna_db
            + self.polarization_db
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathContribution {
    pub signature: PathSignature,
    /// Complex voltage amplitude with `|a|²` in mW.
    pub amplitude: Complex64,
    pub power_dbm: f64,
    pub breakdown: Breakdown,
}

/// Complex 3-vector for the field polarization state.
#[derive(Clone, Copy, Debug)]
struct Field {
    x: Complex64,
    y: Complex64,
    z: Complex64,
}

impl Field {
    fn real(v: Vec3<f64>) -> Field {
        Field {
            x: v.x.into(),
            y: v.y.into(),
            z: v.z.into(),
        }
    }

    fn dot(&self, v: Vec3<f64>) -> Complex64 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    fn norm(&self) -> f64 {
        (self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()).sqrt()
    }

    /// `a·u + b·v`
    fn combine(a: Complex64, u: Vec3<f64>, b: Complex64, v: Vec3<f64>) -> Field {
        Field {
            x: a * u.x + b * v.x,
            y: a * u.y + b * v.y,
            z: a * u.z + b * v.z,
        }
    }
}

fn any_perpendicular(k: Vec3<f64>) -> Vec3<f64> {
    let helper = if k.x.abs() < 0.9 { Vec3::unit_x() } else { Vec3::unit_y() };
    k.cross(helper).normalized()
}

/// Unit polarization vector transverse to propagation direction `k`: the
/// vertical axis projected off `k`, or the horizontal axis `ẑ × k`.
pub fn polarization_axis(k: Vec3<f64>, pol: Polarization) -> Vec3<f64> {
    let z = Vec3::unit_z();
    match pol {
        Polarization::V => {
            let v = z - k * z.dot(k);
            if v.norm() < 1e-12 {
                let x = Vec3::unit_x();
                (x - k * x.dot(k)).normalized()
            } else {
                v.normalized()
            }
        }
        Polarization::H => {
            let h = z.cross(k);
            if h.norm() < 1e-12 {
                let y = Vec3::unit_y();
                (y - k * y.dot(k)).normalized()
            } else {
                h.normalized()
            }
        }
    }
}

/// Edge-fixed frame of a wedge: edge direction `e`, the 0-face tangent `t0`
/// pointing away from the edge along the 0-face, and the 0-face normal.
#[derive(Clone, Copy, Debug)]
pub struct WedgeFrame {
    pub e: Vec3<f64>,
    pub t0: Vec3<f64>,
    pub n0: Vec3<f64>,
    /// Wedge parameter, exterior angle `n·π`.
    pub n: f64,
}

impl WedgeFrame {
    pub fn new(edge: &DiffractionEdge) -> WedgeFrame {
        let e = edge.direction();
        let n0 = edge.normals[0];
        let mut t0 = e.cross(n0).normalized();
        if t0.dot(edge.normals[1]) > 0.0 {
            t0 = -t0;
        }
        WedgeFrame {
            e,
            t0,
            n0,
            n: edge.wedge_n(),
        }
    }

    /// Angle of direction `v` around the edge, measured from the 0-face into
    /// free space, clamped to `[0, nπ]`.
    pub fn angle(&self, v: Vec3<f64>) -> f64 {
        let mut a = v.dot(self.n0).atan2(v.dot(self.t0));
        if a < 0.0 {
            a += 2.0 * PI;
        }
        let limit = self.n * PI;
        if a > limit {
            // Inside the wedge: snap to the nearer face.
            if a - limit < 2.0 * PI - a {
                limit
            } else {
                0.0
            }
        } else {
            a
        }
    }
}

fn db20(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// Gain of one interaction step; a field that has already vanished loses nothing more.
fn step_db(after: f64, before: f64) -> f64 {
    if before > 0.0 {
        db20(after / before)
    } else {
        0.0
    }
}

/// Complex amplitude and power of one path, including antenna gains at
/// departure and arrival, Fresnel reflection per bounce (s/p split in each
/// plane of incidence), UTD diffraction, vegetation loss, spreading and the
/// `e^{−jkL}` propagation phase.
pub fn path_contribution(
    path: &PropagationPath,
    tx_ant: &AntennaSpec,
    rx_ant: &AntennaSpec,
    cfg: &RadioConfig,
) -> PathContribution {
    let f = cfg.frequency_hz;
    let lambda = cfg.wavelength();
    let k = cfg.wavenumber();
    let segs = &path.segments;
    let d0 = segs[0].direction();
    let dn = segs[segs.len() - 1].direction();
    let antenna_db = tx_ant.gain_dbi(d0) + rx_ant.gain_dbi(-dn);

    let mut field = Field::real(polarization_axis(d0, cfg.polarization));
    let mut reflection_db = 0.0;
    let mut diffraction_db = 0.0;
    // Unfolded lengths between diffraction points.
    let mut legs = Vec::with_capacity(3);
    let mut leg = 0.0;
    let mut travelled = 0.0;

    for (i, inter) in path.interactions.iter().enumerate() {
        let k_in = segs[i].direction();
        let k_out = segs[i + 1].direction();
        leg += segs[i].length;
        travelled += segs[i].length;
        let before = field.norm();
        match &inter.kind {
            InteractionKind::Reflection {
                normal, eps_r, sigma, ..
            } => {
                let cos_i = k_in.dot(*normal).abs().min(1.0);
                let eps_c = complex_permittivity(*eps_r, *sigma, f);
                let (gs, gp) = fresnel(eps_c, cos_i.acos());
                let s = k_in.cross(*normal);
                let s = if s.norm() < 1e-12 {
                    any_perpendicular(k_in)
                } else {
                    s.normalized()
                };
                let p_in = s.cross(k_in);
                let p_out = s.cross(k_out);
                field = Field::combine(gs * field.dot(s), s, gp * field.dot(p_in), p_out);
                reflection_db += step_db(field.norm(), before);
            }
            InteractionKind::Diffraction { edge, .. } => {
                let frame = WedgeFrame::new(edge);
                let e = frame.e;
                let geom = WedgeGeometry {
                    n: frame.n,
                    phi: frame.angle(k_out),
                    phi_prime: frame.angle(-k_in),
                    beta0: k_in.dot(e).clamp(-1.0, 1.0).acos(),
                    s_in: travelled,
                    s_out: path.length - travelled,
                };
                let d = utd_diffraction(&geom, k);
                let phi_in = -(e.cross(k_in)).normalized();
                let beta_in = k_in.cross(phi_in);
                let phi_out = e.cross(k_out).normalized();
                let beta_out = k_out.cross(phi_out);
                field = Field::combine(
                    -d.soft * field.dot(beta_in),
                    beta_out,
                    -d.hard * field.dot(phi_in),
                    phi_out,
                );
                diffraction_db += step_db(field.norm(), before);
                legs.push(leg);
                leg = 0.0;
            }
        }
    }
    leg += segs[segs.len() - 1].length;
    legs.push(leg);
    let spreading = if legs.len() == 1 {
        1.0 / path.length
    } else {
        let prod: f64 = legs.iter().product();
        1.0 / (prod * legs.iter().sum::<f64>()).sqrt()
    };
    let spreading_db = db20(lambda / (4.0 * PI) * spreading);

    let rx_axis = polarization_axis(dn, cfg.polarization);
    let projected = field.dot(rx_axis);
    let polarization_db = step_db(projected.norm(), field.norm());

    let pol_alpha = |c: &crate::tracer::FoliageCrossing| match cfg.polarization {
        Polarization::V => c.alpha_v,
        Polarization::H => c.alpha_h,
    };
    let foliage_loss_db: f64 = segs
        .iter()
        .flat_map(|s| s.foliage.iter())
        .map(|c| foliage_loss(c.model, f, c.length, pol_alpha(c)))
        .sum();

    let p_mw = 10f64.powf(cfg.tx_power_dbm / 10.0);
    let gain = 10f64.powf(antenna_db / 20.0);
    let scalar = p_mw.sqrt() * gain * lambda / (4.0 * PI) * spreading * 10f64.powf(-foliage_loss_db / 20.0);
    let phase = Complex64::from_polar(1.0, -k * path.length);
    let amplitude = projected * phase * scalar;
    PathContribution {
        signature: path.signature.clone(),
        amplitude,
        power_dbm: 10.0 * amplitude.norm_sqr().log10(),
        breakdown: Breakdown {
            spreading_db,
            reflection_db,
            diffraction_db,
            foliage_db: -foliage_loss_db,
            antenna_db,
            polarization_db,
        },
    }
}

/// Received signal strength from a set of path contributions, dBm.
/// Returns [`NO_PATH_DBM`] when nothing arrives.
pub fn combine(contribs: &[PathContribution], mode: CombineMode) -> f64 {
    let power = match mode {
        CombineMode::PowerSum => contribs.iter().map(|c| c.amplitude.norm_sqr()).sum::<f64>(),
        CombineMode::Coherent => contribs.iter().map(|c| c.amplitude).sum::<Complex64>().norm_sqr(),
    };
    if contribs.is_empty() || !(power > 0.0) {
        return NO_PATH_DBM;
    }
    (10.0 * power.log10()).max(NO_PATH_DBM)
}
