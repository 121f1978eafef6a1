//! Deterministic terahertz coverage simulation for indoor scenes with
//! reconfigurable intelligent surface (RIS) relays.
//!
//! The crate is organised bottom-up:
//!
//! * [`scene`] holds the facet geometry, materials and evaluation regions.
//! * [`antenna`] provides omni and cosine-power directional patterns.
//! * [`raytracer`] enumerates LOS, specular (order <= 2) and first-order
//!   diffuse scattering paths.
//! * [`ris`] models an antenna-array RIS: quantized phase profile, array
//!   gain and effective aperture.
//! * [`linkbudget`] turns paths and RIS chains into received power.
//! * [`coverage`] sweeps a receiver grid and evaluates region averages.
//! * [`deploy`] parses deployment configuration files.

pub mod antenna;
pub mod coverage;
pub mod deploy;
pub mod geom;
pub mod linkbudget;
pub mod raytracer;
pub mod ris;
pub mod scene;

mod bvh;

pub use geom::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
