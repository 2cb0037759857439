//! Built-in electrical constants for building, ground and foliage materials.

use serde::{Deserialize, Serialize};

/// Surface material of reflecting geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Real relative permittivity.
    pub eps_r: f64,
    /// Conductivity in S/m.
    pub sigma: f64,
    /// Display color.
    pub color: [u8; 3],
}

impl Material {
    pub fn new(name: &str, eps_r: f64, sigma: f64, color: [u8; 3]) -> Self {
        Material {
            name: name.to_string(),
            eps_r,
            sigma,
            color,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.eps_r.is_finite() && self.eps_r >= 1.0 && self.sigma.is_finite() && self.sigma >= 0.0
    }
}

pub const BRICK: &str = "Brick";
pub const CONCRETE: &str = "Concrete";
pub const MEDIUM_DRY_EARTH: &str = "ITU Medium Dry Earth";

/// Building and ground materials available by name.
pub fn builtin_materials() -> Vec<Material> {
    vec![
        Material::new(BRICK, 4.44, 0.001, [200, 40, 30]),
        Material::new(CONCRETE, 7.0, 0.015, [255, 255, 255]),
        Material::new(MEDIUM_DRY_EARTH, 13.23, 0.27, [128, 128, 128]),
    ]
}

pub fn builtin_material(name: &str) -> Option<Material> {
    builtin_materials().into_iter().find(|m| m.name == name)
}

/// Vegetation attenuation law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoliageModel {
    /// Constant specific attenuation in dB/m.
    #[default]
    Generic,
    /// Weissberger's two-regime empirical law.
    Weissberger,
}

/// Named vegetation attenuation constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoliagePreset {
    pub name: &'static str,
    /// dB/m for vertical polarization.
    pub alpha_v: f64,
    /// dB/m for horizontal polarization.
    pub alpha_h: f64,
    pub color: [u8; 3],
}

pub const DENSE_FOLIAGE: FoliagePreset = FoliagePreset {
    name: "Dense Foliage",
    alpha_v: 1.0,
    alpha_h: 1.0,
    color: [144, 238, 144],
};

pub const DENSE_DECIDUOUS_FOREST: FoliagePreset = FoliagePreset {
    name: "Dense Deciduous Forest in leaf",
    alpha_v: 1.11,
    alpha_h: 1.64,
    color: [0, 100, 0],
};

pub fn builtin_foliage() -> [FoliagePreset; 2] {
    [DENSE_FOLIAGE, DENSE_DECIDUOUS_FOREST]
}
