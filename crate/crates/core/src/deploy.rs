//! Deployment configuration files: radio parameters, transmitter, RIS
//! panels, propagation policy, receiver grid and the regions to report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::AntennaPattern;
use crate::coverage::{DeploymentScheme, GridSpec, PanelDeployment};
use crate::geom::Vec3;
use crate::linkbudget::RadioConfig;
use crate::raytracer::PathPolicy;
use crate::ris::RisPanel;
use crate::scene::{Region, Scene};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error)]
pub enum DeployError {
    #[error("cannot read deployment file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse deployment file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{entity}: {reason}")]
    Invalid { entity: String, reason: String },
}

fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> DeployError {
    DeployError::Invalid {
        entity: entity.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxSection {
    pub position: [f64; 3],
    #[serde(default)]
    pub antenna: AntennaPattern,
    /// Boresight target for a directional antenna. Defaults to the first
    /// RIS centre when panels are configured.
    #[serde(default)]
    pub aim_at: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxSection {
    #[serde(default)]
    pub antenna: AntennaPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Meters(f64),
    Keyword(SpacingKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingKeyword {
    HalfWavelength,
}

impl Spacing {
    pub fn meters(&self, frequency_hz: f64) -> f64 {
        match *self {
            Spacing::Meters(m) => m,
            Spacing::Keyword(SpacingKeyword::HalfWavelength) => SPEED_OF_LIGHT / frequency_hz / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSection {
    pub name: String,
    pub center: [f64; 3],
    pub normal: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    pub spacing: Spacing,
    pub quantization_bits: u32,
    #[serde(default = "default_element_exponent")]
    pub element_exponent: f64,
    /// Main-lobe target. For the first of two panels this must be (and
    /// defaults to) the second panel's centre.
    #[serde(default)]
    pub steer_target: Option<[f64; 3]>,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_element_exponent() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_cell")]
    pub cell_m: f64,
    #[serde(default = "default_z")]
    pub z_m: f64,
    /// Grid extents; default to the scene bounding box.
    #[serde(default)]
    pub x: Option<[f64; 2]>,
    #[serde(default)]
    pub y: Option<[f64; 2]>,
}

fn default_cell() -> f64 {
    0.5
}

fn default_z() -> f64 {
    1.5
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            cell_m: default_cell(),
            z_m: default_z(),
            x: None,
            y: None,
        }
    }
}

/// Parsed deployment document. See `docs/formats.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    #[serde(default)]
    pub name: String,
    pub radio: RadioSection,
    pub tx: TxSection,
    #[serde(default)]
    pub rx: RxSection,
    #[serde(default)]
    pub ris: Vec<RisSection>,
    #[serde(default)]
    pub propagation: PathPolicy,
    #[serde(default)]
    pub grid: GridSection,
    /// Report label -> scene region name.
    #[serde(default)]
    pub regions: BTreeMap<String, String>,
}

/// Which configured panels take part in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RisSelection {
    None,
    First,
    Both,
}

impl RisSelection {
    /// Parses the CLI list syntax: `""`/`none`, `1`, `1,2`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut ids: Vec<u32> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty() && *p != "none") {
            ids.push(part.parse().map_err(|_| format!("bad RIS index '{part}'"))?);
        }
        ids.sort_unstable();
        ids.dedup();
        match ids.as_slice() {
            [] => Ok(RisSelection::None),
            [1] => Ok(RisSelection::First),
            [1, 2] => Ok(RisSelection::Both),
            _ => Err(format!("unsupported RIS selection '{s}' (use 1 or 1,2; RIS2 is only fed by RIS1)")),
        }
    }

    pub fn panel_count(self) -> usize {
        match self {
            RisSelection::None => 0,
            RisSelection::First => 1,
            RisSelection::Both => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RisSelection::None => "Without RIS",
            RisSelection::First => "RIS1 deployed only",
            RisSelection::Both => "Both RIS1 and RIS2 deployed",
        }
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn load_deployment(path: impl AsRef<Path>) -> Result<DeploymentConfig, DeployError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DeployError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| DeployError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl DeploymentConfig {
    pub fn radio_config(&self) -> RadioConfig {
        RadioConfig::from_dbm(self.radio.frequency_hz, self.radio.tx_power_dbm)
    }

    fn build_panel(&self, r: &RisSection) -> Result<RisPanel, DeployError> {
        let entity = format!("RIS '{}'", r.name);
        let spacing = r.spacing.meters(self.radio.frequency_hz);
        RisPanel::new(
            v3(r.center),
            v3(r.normal),
            v3(r.up),
            r.rows,
            r.cols,
            spacing,
            r.quantization_bits,
            r.element_exponent,
        )
        .map_err(|e| invalid(entity, e.to_string()))
    }

    /// Steering target of panel `i` after applying the chain defaults.
    fn steer_target(&self, i: usize) -> Option<[f64; 3]> {
        let r = &self.ris[i];
        match (r.steer_target, self.ris.get(i + 1)) {
            (Some(t), _) => Some(t),
            (None, Some(next)) => Some(next.center),
            (None, None) => None,
        }
    }

    /// Full validation against the scene. Reports the first problem found.
    pub fn validate(&self, scene: &Scene) -> Result<(), DeployError> {
        let f = self.radio.frequency_hz;
        if !(f > 0.0) || !f.is_finite() {
            return Err(invalid("radio", "frequency_hz must be > 0"));
        }
        if !self.radio.tx_power_dbm.is_finite() {
            return Err(invalid("radio", "tx_power_dbm must be finite"));
        }
        self.tx.antenna.validate().map_err(|e| invalid("tx.antenna", e))?;
        self.rx.antenna.validate().map_err(|e| invalid("rx.antenna", e))?;
        self.propagation.validate().map_err(|e| invalid("propagation", e))?;
        if self.ris.len() > 2 {
            return Err(invalid("ris", "at most two panels (first hop, second hop) are supported"));
        }
        let bounds = scene.bounds();
        let tx = v3(self.tx.position);
        if !bounds.is_empty() && !bounds.contains(&tx, 1e-9) {
            return Err(invalid("tx", "position lies outside the scene"));
        }
        if let Some(t) = self.tx.aim_at {
            if (v3(t) - tx).norm() < 1e-9 {
                return Err(invalid("tx", "aim_at coincides with the transmitter"));
            }
        }
        for (i, r) in self.ris.iter().enumerate() {
            let entity = format!("RIS '{}'", r.name);
            self.build_panel(r)?;
            if r.quantization_bits < 1 {
                return Err(invalid(&entity, "quantization_bits must be >= 1"));
            }
            if !bounds.is_empty() && !bounds.contains(&v3(r.center), 1e-9) {
                return Err(invalid(&entity, "centre lies outside the scene"));
            }
            let target = self
                .steer_target(i)
                .ok_or_else(|| invalid(&entity, "steer_target is required for the last panel"))?;
            if (v3(target) - v3(r.center)).norm() < 1e-9 {
                return Err(invalid(&entity, "steer_target coincides with the panel centre"));
            }
            if let Some(next) = self.ris.get(i + 1) {
                if (v3(target) - v3(next.center)).norm() > 1e-9 {
                    return Err(invalid(&entity, format!("first-hop panel must be steered at '{}'", next.name)));
                }
            }
        }
        let g = &self.grid;
        if !(g.cell_m > 0.0) || !g.cell_m.is_finite() {
            return Err(invalid("grid", "cell_m must be > 0"));
        }
        self.grid_spec(scene)?;
        for (label, region) in &self.regions {
            if scene.region(region).is_none() {
                return Err(invalid(format!("region '{label}'"), format!("scene has no region named '{region}'")));
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self, scene: &Scene) -> Result<GridSpec, DeployError> {
        let b = scene.bounds();
        let pick = |given: Option<[f64; 2]>, axis: usize| -> Result<[f64; 2], DeployError> {
            match given {
                Some(r) => Ok(r),
                None if !b.is_empty() => Ok([b.min[axis], b.max[axis]]),
                None => Err(invalid("grid", "extents are required for an empty scene")),
            }
        };
        let spec = GridSpec {
            x: pick(self.grid.x, 0)?,
            y: pick(self.grid.y, 1)?,
            cell: self.grid.cell_m,
            z: self.grid.z_m,
        };
        spec.validate().map_err(|e| invalid("grid", e))?;
        if !b.is_empty() {
            let inside = b.contains(&Vec3::new(spec.x[0], spec.y[0], spec.z), 1e-9)
                && b.contains(&Vec3::new(spec.x[1], spec.y[1], spec.z), 1e-9);
            if !inside {
                return Err(invalid("grid", "extents lie outside the scene bounding box"));
            }
        }
        Ok(spec)
    }

    /// Report label and scene region for every configured region.
    pub fn resolved_regions(&self, scene: &Scene) -> Vec<(String, Region)> {
        self.regions
            .iter()
            .filter_map(|(label, name)| scene.region(name).map(|r| (label.clone(), r.clone())))
            .collect()
    }

    /// Builds the scheme for a panel selection. Panels beyond the selection
    /// are dropped; the transmitter keeps its configured orientation.
    pub fn scheme(&self, selection: RisSelection) -> Result<DeploymentScheme, DeployError> {
        if selection.panel_count() > self.ris.len() {
            return Err(invalid(
                "ris",
                format!("selection needs {} panel(s) but {} configured", selection.panel_count(), self.ris.len()),
            ));
        }
        let tx = v3(self.tx.position);
        let aim = self.tx.aim_at.or_else(|| self.ris.first().map(|r| r.center));
        let tx_antenna = match aim {
            Some(t) => self.tx.antenna.aim_at(&tx, &v3(t)),
            None => self.tx.antenna,
        };
        let mut panels = Vec::new();
        for i in 0..selection.panel_count() {
            let r = &self.ris[i];
            let target = self
                .steer_target(i)
                .ok_or_else(|| invalid(format!("RIS '{}'", r.name), "steer_target missing"))?;
            panels.push(PanelDeployment {
                name: r.name.clone(),
                panel: self.build_panel(r)?,
                steer_target: v3(target),
            });
        }
        Ok(DeploymentScheme {
            name: self.name.clone(),
            radio: self.radio_config(),
            tx_position: tx,
            tx_antenna,
            rx_antenna: self.rx.antenna,
            panels,
            policy: self.propagation,
        })
    }
}
