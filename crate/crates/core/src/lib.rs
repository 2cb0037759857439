//! Site-specific outdoor radio propagation.
//!
//! The crate builds urban scenes from map data, finds reflected and diffracted
//! propagation paths between a transmitter and receivers, converts them into
//! received power, and evaluates receiver routes and coverage grids.
//!
//! Geometry and electromagnetic kernels are generic over [`num::Real`]
//! (`f32` or `f64`); the scene, tracer and coverage pipeline run in `f64`
//! and are exposed through the aliases below.

pub mod antenna;
pub mod coverage;
pub mod em;
pub mod geometry;
pub mod num;
pub mod scene;
pub mod tracer;

pub use num::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Vec3f = geometry::Vec3<f32>;
pub type TriMesh = geometry::TriMesh<f64>;
pub type SpatialIndex = geometry::SpatialIndex<f64>;
pub type RayHit = geometry::RayHit<f64>;
pub type VolumeShape = geometry::VolumeShape<f64>;
