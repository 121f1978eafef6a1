//! Received-power models: free-space, specular and diffuse environment
//! paths, and the single/dual-hop RIS link equations.
//!
//! Everything here works with linear powers (watts) and linear gains; dB
//! conversions happen only at I/O boundaries.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{try_normalize, Vec3};
use crate::raytracer::{PathKind, PropagationPath, ScatterTile};
use crate::ris::SteeredPanel;
use crate::scene::{Material, Scene};
use crate::SPEED_OF_LIGHT;

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub frequency_hz: f64,
    pub tx_power_w: f64,
    pub speed_of_light: f64,
}

impl RadioConfig {
    pub fn new(frequency_hz: f64, tx_power_w: f64) -> Self {
        Self {
            frequency_hz,
            tx_power_w,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }

    pub fn from_dbm(frequency_hz: f64, tx_power_dbm: f64) -> Self {
        Self::new(frequency_hz, dbm_to_watts(tx_power_dbm))
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.frequency_hz
    }
}

/// Which mechanism produced a power contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    Los,
    Reflect1,
    Reflect2,
    Scatter1,
    /// Tx -> RIS1 -> Rx
    Ris1,
    /// Tx -> RIS1 -> RIS2 -> Rx
    Ris2,
}

impl Mechanism {
    pub const ALL: [Mechanism; 6] = [
        Mechanism::Los,
        Mechanism::Reflect1,
        Mechanism::Reflect2,
        Mechanism::Scatter1,
        Mechanism::Ris1,
        Mechanism::Ris2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Mechanism::Los => "LOS",
            Mechanism::Reflect1 => "R1",
            Mechanism::Reflect2 => "R2",
            Mechanism::Scatter1 => "S1",
            Mechanism::Ris1 => "RIS1",
            Mechanism::Ris2 => "RIS2",
        }
    }
}

impl From<PathKind> for Mechanism {
    fn from(k: PathKind) -> Self {
        match k {
            PathKind::Los => Mechanism::Los,
            PathKind::Reflect1 => Mechanism::Reflect1,
            PathKind::Reflect2 => Mechanism::Reflect2,
            PathKind::Scatter1 => Mechanism::Scatter1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPower {
    pub mechanism: Mechanism,
    pub watts: f64,
}

impl PathPower {
    pub fn dbm(&self) -> Option<f64> {
        (self.watts > 0.0).then(|| watts_to_dbm(self.watts))
    }
}

/// Free-space (Friis) power over distance `d`.
pub fn los_power(cfg: &RadioConfig, g_tx: f64, g_rx: f64, d: f64) -> f64 {
    assert!(d > 0.0, "distance must be positive");
    let a = cfg.wavelength() / (4.0 * PI * d);
    cfg.tx_power_w * g_tx * g_rx * a * a
}

/// Unpolarized Fresnel reflection magnitude `sqrt((|G_TE|^2 + |G_TM|^2) / 2)`
/// for a half-space of complex permittivity `eps' - j eps''`.
pub fn reflection_coefficient(material: &Material, theta_i: f64, _frequency: f64) -> f64 {
    let eps = Complex64::new(material.eps_r_real, -material.eps_r_imag);
    let theta = theta_i.clamp(0.0, PI / 2.0);
    let (s, c) = theta.sin_cos();
    let root = (eps - s * s).sqrt();
    let te = (c - root) / (c + root);
    let tm = (eps * c - root) / (eps * c + root);
    ((te.norm_sqr() + tm.norm_sqr()) / 2.0).sqrt()
}

/// Power of a specular path: Friis over the unfolded length times the
/// product of per-bounce power reflection coefficients.
pub fn reflected_path_power(cfg: &RadioConfig, g_tx: f64, g_rx: f64, path: &PropagationPath, scene: &Scene) -> f64 {
    debug_assert!(matches!(path.kind, PathKind::Reflect1 | PathKind::Reflect2));
    let mut p = los_power(cfg, g_tx, g_rx, path.total_length);
    for (&facet, angles) in path.facets.iter().zip(&path.angles) {
        let gamma = reflection_coefficient(scene.material_of(facet), angles.incidence, cfg.frequency_hz);
        p *= gamma * gamma;
    }
    p
}

/// Lambertian tile scattering:
/// `P_t G_tx G_rx lambda^2 / ((4 pi)^3 d1^2 d2^2) * S^2 * dA * cos(theta_s)`.
pub fn scattered_path_power(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    path: &PropagationPath,
    tile: &ScatterTile,
    material: &Material,
) -> f64 {
    debug_assert_eq!(path.kind, PathKind::Scatter1);
    let mut legs = path.segment_lengths();
    let (d1, d2) = (legs.next().unwrap(), legs.next().unwrap());
    scatter_power_raw(
        cfg,
        g_tx,
        g_rx,
        d1,
        d2,
        material.scattering_coefficient,
        tile.area,
        path.angles[0].departure.cos(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn scatter_power_raw(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    d1: f64,
    d2: f64,
    scattering: f64,
    area: f64,
    cos_departure: f64,
) -> f64 {
    let lam = cfg.wavelength();
    let four_pi = 4.0 * PI;
    cfg.tx_power_w * g_tx * g_rx * lam * lam / (four_pi.powi(3) * d1 * d1 * d2 * d2)
        * scattering
        * scattering
        * area
        * cos_departure.max(0.0)
}

/// Why a RIS chain contributes nothing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HopBlocked {
    #[error("{0} is behind the RIS panel")]
    BackSide(&'static str),
    #[error("leg {0} is occluded")]
    Occluded(&'static str),
}

/// Factors of the single-hop RIS equation, kept separate for reporting and
/// verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleHopFactors {
    pub tx_power: f64,
    pub g_tx: f64,
    pub l1: f64,
    pub cos_theta1: f64,
    pub area1: f64,
    pub gain1: f64,
    pub l2: f64,
    pub g_rx: f64,
    pub wavelength: f64,
}

impl SingleHopFactors {
    pub fn power(&self) -> f64 {
        let fp = 4.0 * PI;
        self.tx_power * self.g_tx * (1.0 / (fp * self.l1 * self.l1)) * self.cos_theta1 * self.area1 * self.gain1
            * (1.0 / (fp * self.l2 * self.l2))
            * (self.g_rx * self.wavelength * self.wavelength / fp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualHopFactors {
    pub tx_power: f64,
    pub g_tx: f64,
    pub l1: f64,
    pub cos_theta1: f64,
    pub area1: f64,
    pub gain1: f64,
    pub l2: f64,
    pub cos_theta2: f64,
    pub area2: f64,
    pub gain2: f64,
    pub l3: f64,
    pub g_rx: f64,
    pub wavelength: f64,
}

impl DualHopFactors {
    pub fn power(&self) -> f64 {
        let fp = 4.0 * PI;
        self.tx_power * self.g_tx * (1.0 / (fp * self.l1 * self.l1))
            * (self.cos_theta1 * self.area1 * self.gain1 / (fp * self.l2 * self.l2))
            * (self.cos_theta2 * self.area2 * self.gain2 / (fp * self.l3 * self.l3))
            * (self.g_rx * self.wavelength * self.wavelength / fp)
    }
}

fn leg(from: &Vec3, to: &Vec3) -> (f64, Vec3) {
    let d = to - from;
    let n = d.norm();
    (n, try_normalize(&d).unwrap_or_else(Vec3::zeros))
}

fn check_leg(scene: Option<&Scene>, a: &Vec3, b: &Vec3, name: &'static str) -> Result<(), HopBlocked> {
    match scene {
        Some(s) if s.is_occluded(a, b) => Err(HopBlocked::Occluded(name)),
        _ => Ok(()),
    }
}

/// Geometry and gain factors of Tx -> RIS -> Rx. `scene`, when given, is
/// used to reject occluded legs.
pub fn single_hop_factors(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    ris: &SteeredPanel,
    tx: &Vec3,
    rx: &Vec3,
    scene: Option<&Scene>,
) -> Result<SingleHopFactors, HopBlocked> {
    let o = ris.panel.center;
    let n = ris.panel.normal;
    let (l1, inc) = leg(tx, &o);
    let (l2, out) = leg(&o, rx);
    if inc.dot(&n) >= 0.0 {
        return Err(HopBlocked::BackSide("Tx"));
    }
    if out.dot(&n) <= 0.0 {
        return Err(HopBlocked::BackSide("Rx"));
    }
    check_leg(scene, tx, &o, "Tx-RIS1")?;
    check_leg(scene, &o, rx, "RIS1-Rx")?;
    Ok(SingleHopFactors {
        tx_power: cfg.tx_power_w,
        g_tx,
        l1,
        cos_theta1: -inc.dot(&n),
        area1: ris.panel.area(),
        gain1: ris.gain(&out),
        l2,
        g_rx,
        wavelength: cfg.wavelength(),
    })
}

pub fn single_hop_ris_power(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    ris: &SteeredPanel,
    tx: &Vec3,
    rx: &Vec3,
    scene: Option<&Scene>,
) -> Result<f64, HopBlocked> {
    single_hop_factors(cfg, g_tx, g_rx, ris, tx, rx, scene).map(|f| f.power())
}

#[allow(clippy::too_many_arguments)]
pub fn dual_hop_factors(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    ris1: &SteeredPanel,
    ris2: &SteeredPanel,
    tx: &Vec3,
    rx: &Vec3,
    scene: Option<&Scene>,
) -> Result<DualHopFactors, HopBlocked> {
    let (o1, n1) = (ris1.panel.center, ris1.panel.normal);
    let (o2, n2) = (ris2.panel.center, ris2.panel.normal);
    let (l1, inc1) = leg(tx, &o1);
    let (l2, hop) = leg(&o1, &o2);
    let (l3, out) = leg(&o2, rx);
    if inc1.dot(&n1) >= 0.0 {
        return Err(HopBlocked::BackSide("Tx"));
    }
    if hop.dot(&n1) <= 0.0 {
        return Err(HopBlocked::BackSide("RIS2 (seen from RIS1)"));
    }
    if hop.dot(&n2) >= 0.0 {
        return Err(HopBlocked::BackSide("RIS1 (seen from RIS2)"));
    }
    if out.dot(&n2) <= 0.0 {
        return Err(HopBlocked::BackSide("Rx"));
    }
    check_leg(scene, tx, &o1, "Tx-RIS1")?;
    check_leg(scene, &o1, &o2, "RIS1-RIS2")?;
    check_leg(scene, &o2, rx, "RIS2-Rx")?;
    Ok(DualHopFactors {
        tx_power: cfg.tx_power_w,
        g_tx,
        l1,
        cos_theta1: -inc1.dot(&n1),
        area1: ris1.panel.area(),
        gain1: ris1.gain(&hop),
        l2,
        cos_theta2: -hop.dot(&n2),
        area2: ris2.panel.area(),
        gain2: ris2.gain(&out),
        l3,
        g_rx,
        wavelength: cfg.wavelength(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn dual_hop_ris_power(
    cfg: &RadioConfig,
    g_tx: f64,
    g_rx: f64,
    ris1: &SteeredPanel,
    ris2: &SteeredPanel,
    tx: &Vec3,
    rx: &Vec3,
    scene: Option<&Scene>,
) -> Result<f64, HopBlocked> {
    dual_hop_factors(cfg, g_tx, g_rx, ris1, ris2, tx, rx, scene).map(|f| f.power())
}

/// Incoherent sum of contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPower {
    pub watts: f64,
    /// `None` marks "no coverage": no contribution carried power.
    pub dbm: Option<f64>,
}

pub fn total_power(contributions: &[PathPower]) -> ReceivedPower {
    let watts: f64 = contributions.iter().map(|c| c.watts).sum();
    ReceivedPower {
        watts,
        dbm: (watts > 0.0).then(|| watts_to_dbm(watts)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RadioConfig {
        RadioConfig::from_dbm(332e9, 0.0)
    }

    #[test]
    fn friis_at_one_meter() {
        let p = los_power(&cfg(), 1.0, 1.0, 1.0);
        assert!((watts_to_dbm(p) - (-82.87)).abs() < 0.01, "{}", watts_to_dbm(p));
        assert!((los_power(&cfg(), 1.0, 1.0, 2.0) * 4.0 - p).abs() <= 1e-12 * p);
        assert!((los_power(&cfg(), 10.0, 1.0, 1.0) - 10.0 * p).abs() <= 1e-12 * p);
    }

    #[test]
    fn fresnel_limits() {
        let pec = Material::new("pec", 1e9, 0.0, 0.0);
        assert!((reflection_coefficient(&pec, 0.3, 332e9) - 1.0).abs() < 1e-3);
        let m = Material::new("m", 5.0, 0.5, 0.0);
        let g = reflection_coefficient(&m, std::f64::consts::FRAC_PI_2 - 1e-6, 332e9);
        assert!((g - 1.0).abs() < 1e-3, "{g}");
        // normal incidence: both polarizations equal (1 - sqrt(eps)) / (1 + sqrt(eps))
        let g0 = reflection_coefficient(&Material::new("d", 4.0, 0.0, 0.0), 0.0, 332e9);
        assert!((g0 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn total_power_cases() {
        let mw = PathPower {
            mechanism: Mechanism::Los,
            watts: 1e-3,
        };
        assert_eq!(total_power(&[mw]).dbm, Some(0.0));
        assert!((total_power(&[mw, mw]).dbm.unwrap() - 3.0103).abs() < 1e-4);
        assert_eq!(total_power(&[]).dbm, None);
    }

    #[test]
    fn scatter_scales() {
        let c = cfg();
        assert_eq!(scatter_power_raw(&c, 1.0, 1.0, 5.0, 5.0, 0.0, 0.25, 1.0), 0.0);
        let a = scatter_power_raw(&c, 1.0, 1.0, 5.0, 5.0, 0.4, 0.25, 1.0);
        let b = scatter_power_raw(&c, 1.0, 1.0, 5.0, 5.0, 0.4, 0.5, 1.0);
        assert!((b - 2.0 * a).abs() <= 1e-15 * b);
    }
}
