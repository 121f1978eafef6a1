//! Receiver-grid sweeps, region averages, heatmap export and scheme
//! comparison.
//!
//! A sweep is split in two stages. The environment stage traces LOS,
//! specular and scattered paths for every cell; it depends only on the
//! scene, the transmitter and the propagation policy. The RIS stage adds
//! the single-hop (RIS1) and dual-hop (RIS1 -> RIS2) contributions on top.
//! RIS output is never traced back into the environment, and RIS1 is only
//! illuminated by the direct Tx wave (RIS2 only by RIS1).

use std::fmt;
use std::io::Write;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::AntennaPattern;
use crate::geom::{try_normalize, Vec3};
use crate::linkbudget::{
    dual_hop_ris_power, los_power, reflected_path_power, scattered_path_power, single_hop_ris_power, watts_to_dbm,
    Mechanism, RadioConfig,
};
use crate::raytracer::{PathKind, PathPolicy, Tracer};
use crate::ris::{phase_profile, RisPanel, SteeredPanel};
use crate::scene::{Region, Scene};

const MECHANISMS: usize = 6;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("grid specifications differ: {0}")]
    GridMismatch(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDeployment {
    pub name: String,
    pub panel: RisPanel,
    pub steer_target: Vec3,
}

/// Everything needed to evaluate one coverage condition. Panel 0 is the
/// first hop, panel 1 (if present) the second.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentScheme {
    pub name: String,
    pub radio: RadioConfig,
    pub tx_position: Vec3,
    pub tx_antenna: AntennaPattern,
    pub rx_antenna: AntennaPattern,
    pub panels: Vec<PanelDeployment>,
    pub policy: PathPolicy,
}

impl DeploymentScheme {
    /// Omni transmitter/receiver scheme without panels.
    pub fn plain(radio: RadioConfig, tx_position: Vec3, policy: PathPolicy) -> Self {
        Self {
            name: String::new(),
            radio,
            tx_position,
            tx_antenna: AntennaPattern::omni(0.0),
            rx_antenna: AntennaPattern::omni(0.0),
            panels: Vec::new(),
            policy,
        }
    }

    pub fn without_panels(&self) -> Self {
        Self {
            panels: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub cell: f64,
    /// Receiver height.
    pub z: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cell > 0.0) || !self.cell.is_finite() {
            return Err("cell size must be > 0".into());
        }
        if !(self.x[0] < self.x[1]) || !(self.y[0] < self.y[1]) {
            return Err("grid extents must be increasing".into());
        }
        if self.nx() == 0 || self.ny() == 0 {
            return Err("grid extents are smaller than one cell".into());
        }
        Ok(())
    }

    fn count(span: f64, cell: f64) -> usize {
        ((span / cell) + 1e-9).floor().max(0.0) as usize
    }

    pub fn nx(&self) -> usize {
        Self::count(self.x[1] - self.x[0], self.cell)
    }

    pub fn ny(&self) -> usize {
        Self::count(self.y[1] - self.y[0], self.cell)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre of cell `(i, j)`; `i` runs along x.
    pub fn cell_center(&self, i: usize, j: usize) -> Vec3 {
        Vec3::new(
            self.x[0] + (i as f64 + 0.5) * self.cell,
            self.y[0] + (j as f64 + 0.5) * self.cell,
            self.z,
        )
    }

    /// Cell centres in storage order (row `j` major, `i` minor).
    pub fn centers(&self) -> Vec<Vec3> {
        let (nx, ny) = (self.nx(), self.ny());
        (0..ny).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| self.cell_center(i, j)).collect()
    }
}

/// Per-cell power split by mechanism plus the number of contributing paths.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellPower {
    pub watts: [f64; MECHANISMS],
    pub paths: [u32; MECHANISMS],
}

impl CellPower {
    fn add(&mut self, m: Mechanism, w: f64) {
        self.watts[m.index()] += w;
        self.paths[m.index()] += 1;
    }

    pub fn mechanism(&self, m: Mechanism) -> f64 {
        self.watts[m.index()]
    }

    pub fn total(&self) -> f64 {
        self.watts.iter().sum()
    }

    pub fn is_covered(&self) -> bool {
        self.total() > 0.0
    }

    /// Total power in dBm; `None` is the no-coverage marker.
    pub fn dbm(&self) -> Option<f64> {
        let t = self.total();
        (t > 0.0).then(|| watts_to_dbm(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub spec: GridSpec,
    pub cells: Vec<CellPower>,
    /// One-off notes such as blocked RIS legs.
    pub diagnostics: Vec<String>,
}

impl CoverageGrid {
    pub fn nx(&self) -> usize {
        self.spec.nx()
    }

    pub fn ny(&self) -> usize {
        self.spec.ny()
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellPower {
        &self.cells[j * self.nx() + i]
    }

    pub fn path_counts(&self) -> [u64; MECHANISMS] {
        let mut out = [0u64; MECHANISMS];
        for c in &self.cells {
            for (o, &n) in out.iter_mut().zip(&c.paths) {
                *o += u64::from(n);
            }
        }
        out
    }

    pub fn covered_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_covered()).count()
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CoverageError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| CoverageError::Pool(e.to_string()))
}

/// Traces the environment (no RIS) for every cell.
pub fn sweep_environment(
    scene: &Scene,
    scheme: &DeploymentScheme,
    spec: &GridSpec,
    workers: Option<usize>,
) -> Result<CoverageGrid, CoverageError> {
    let tracer = Tracer::new(scene, scheme.policy);
    let tx = scheme.tx_position;
    let mut view = tracer.from_source(tx);
    let tiles = tracer.tiles();
    // tiles that cannot carry power are skipped up front
    view.retain_tiles(|t| {
        scene.material_of(t.facet).scattering_coefficient > 0.0
            && try_normalize(&(t.center - tx)).is_some_and(|d| scheme.tx_antenna.gain(&d) > 0.0)
    });
    let cfg = scheme.radio;
    let centers = spec.centers();
    let cells = pool(workers)?.install(|| {
        centers
            .par_iter()
            .map(|&rx| {
                let mut cell = CellPower::default();
                view.visit(rx, |path| {
                    let g_tx = scheme.tx_antenna.gain(&path.departure_dir());
                    let g_rx = scheme.rx_antenna.gain(&path.arrival_dir());
                    let w = match path.kind {
                        PathKind::Los => los_power(&cfg, g_tx, g_rx, path.total_length),
                        PathKind::Reflect1 | PathKind::Reflect2 => reflected_path_power(&cfg, g_tx, g_rx, path, scene),
                        PathKind::Scatter1 => {
                            let tile = &tiles[path.tile.expect("scatter path carries its tile")];
                            scattered_path_power(&cfg, g_tx, g_rx, path, tile, scene.material_of(tile.facet))
                        }
                    };
                    if w > 0.0 {
                        cell.add(path.kind.into(), w);
                    }
                });
                cell
            })
            .collect()
    });
    Ok(CoverageGrid {
        spec: *spec,
        cells,
        diagnostics: Vec::new(),
    })
}

/// Steered panels for a scheme, or a diagnostic explaining why the chain
/// is inactive.
struct RisChain {
    first: Option<SteeredPanel>,
    second: Option<SteeredPanel>,
}

fn steer(scheme: &DeploymentScheme, scene: &Scene, diagnostics: &mut Vec<String>) -> RisChain {
    let mut chain = RisChain {
        first: None,
        second: None,
    };
    let f = scheme.radio.frequency_hz;
    let Some(p1) = scheme.panels.first() else {
        return chain;
    };
    let tx = scheme.tx_position;
    let mut note = |msg: String| {
        warn!("{msg}");
        diagnostics.push(msg);
    };
    let inc1 = try_normalize(&(p1.panel.center - tx));
    let beam1 = try_normalize(&(p1.steer_target - p1.panel.center));
    match (inc1, beam1) {
        (Some(i), Some(b)) => match phase_profile(&p1.panel, i, b, f) {
            Ok(state) => {
                if scene.is_occluded(&tx, &p1.panel.center) {
                    note(format!("{}: Tx-{} leg is occluded; RIS contributions are zero", p1.name, p1.name));
                }
                chain.first = Some(SteeredPanel::new(p1.panel.clone(), state, f));
            }
            Err(e) => note(format!("{}: {e}; RIS contributions are zero", p1.name)),
        },
        _ => note(format!("{}: degenerate geometry; RIS contributions are zero", p1.name)),
    }
    if let (Some(p2), Some(_)) = (scheme.panels.get(1), chain.first.as_ref()) {
        let inc2 = try_normalize(&(p2.panel.center - p1.panel.center));
        let beam2 = try_normalize(&(p2.steer_target - p2.panel.center));
        match (inc2, beam2) {
            (Some(i), Some(b)) => match phase_profile(&p2.panel, i, b, f) {
                Ok(state) => {
                    if scene.is_occluded(&p1.panel.center, &p2.panel.center) {
                        note(format!("{}: {}-{} leg is occluded; dual-hop power is zero", p2.name, p1.name, p2.name));
                    }
                    chain.second = Some(SteeredPanel::new(p2.panel.clone(), state, f));
                }
                Err(e) => note(format!("{}: {e}; dual-hop power is zero", p2.name)),
            },
            _ => note(format!("{}: degenerate geometry; dual-hop power is zero", p2.name)),
        }
    }
    chain
}

/// Adds the scheme's RIS contributions to a copy of an environment grid.
pub fn add_ris_contributions(
    scene: &Scene,
    scheme: &DeploymentScheme,
    environment: &CoverageGrid,
    workers: Option<usize>,
) -> Result<CoverageGrid, CoverageError> {
    let mut diagnostics = environment.diagnostics.clone();
    let chain = steer(scheme, scene, &mut diagnostics);
    let Some(ris1) = chain.first.as_ref() else {
        return Ok(CoverageGrid {
            diagnostics,
            ..environment.clone()
        });
    };
    let cfg = scheme.radio;
    let tx = scheme.tx_position;
    let g_tx = try_normalize(&(ris1.panel.center - tx)).map_or(0.0, |d| scheme.tx_antenna.gain(&d));
    let centers = environment.spec.centers();
    let cells = pool(workers)?.install(|| {
        centers
            .par_iter()
            .zip(environment.cells.par_iter())
            .map(|(rx, env)| {
                let mut cell = *env;
                let last = chain.second.as_ref().unwrap_or(ris1);
                let g_rx = try_normalize(&(last.panel.center - rx)).map_or(0.0, |d| scheme.rx_antenna.gain(&d));
                let g_rx1 = try_normalize(&(ris1.panel.center - rx)).map_or(0.0, |d| scheme.rx_antenna.gain(&d));
                if let Ok(w) = single_hop_ris_power(&cfg, g_tx, g_rx1, ris1, &tx, rx, Some(scene)) {
                    if w > 0.0 {
                        cell.add(Mechanism::Ris1, w);
                    }
                }
                if let Some(ris2) = chain.second.as_ref() {
                    if let Ok(w) = dual_hop_ris_power(&cfg, g_tx, g_rx, ris1, ris2, &tx, rx, Some(scene)) {
                        if w > 0.0 {
                            cell.add(Mechanism::Ris2, w);
                        }
                    }
                }
                cell
            })
            .collect()
    });
    Ok(CoverageGrid {
        spec: environment.spec,
        cells,
        diagnostics,
    })
}

/// Full sweep: environment paths plus the scheme's RIS chain.
pub fn sweep(
    scene: &Scene,
    scheme: &DeploymentScheme,
    spec: &GridSpec,
    workers: Option<usize>,
) -> Result<CoverageGrid, CoverageError> {
    let env = sweep_environment(scene, scheme, spec, workers)?;
    if scheme.panels.is_empty() {
        Ok(env)
    } else {
        add_ris_contributions(scene, scheme, &env, workers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AvgDomain {
    /// Mean of linear power, then converted to dBm.
    #[default]
    Linear,
    /// Mean of per-cell dBm values.
    Db,
}

impl AvgDomain {
    pub fn label(self) -> &'static str {
        match self {
            AvgDomain::Linear => "linear",
            AvgDomain::Db => "db",
        }
    }
}

impl std::str::FromStr for AvgDomain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(AvgDomain::Linear),
            "db" | "dB" => Ok(AvgDomain::Db),
            _ => Err(format!("unknown averaging domain '{s}' (linear|db)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAverage {
    /// `None` when no covered cell lies in the region.
    pub dbm: Option<f64>,
    pub cells: usize,
    pub covered: usize,
}

/// Average over the grid cells whose centres fall inside `region`.
pub fn region_average(grid: &CoverageGrid, region: &Region, domain: AvgDomain) -> RegionAverage {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut cells = 0;
    let mut covered = 0;
    let mut acc = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.spec.cell_center(i, j);
            if !region.contains_xy(c.x, c.y) {
                continue;
            }
            cells += 1;
            let cell = grid.cell(i, j);
            if let Some(dbm) = cell.dbm() {
                covered += 1;
                acc += match domain {
                    AvgDomain::Linear => cell.total(),
                    AvgDomain::Db => dbm,
                };
            }
        }
    }
    if cells == 0 {
        warn!("region '{}' contains no grid cell centres", region.name);
    }
    let dbm = (covered > 0).then(|| {
        let mean = acc / covered as f64;
        match domain {
            AvgDomain::Linear => watts_to_dbm(mean),
            AvgDomain::Db => mean,
        }
    });
    RegionAverage { dbm, cells, covered }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    Csv,
    /// Binary portable pixmap (P6).
    Ppm,
}

/// Colour range of the image export, dBm.
pub const PPM_RANGE_DBM: (f64, f64) = (-180.0, -60.0);
/// Pixel colour for cells without coverage.
pub const PPM_NO_COVERAGE: [u8; 3] = [255, 255, 255];

/// Jet-style ramp: dark blue at the low end through cyan, yellow, to dark
/// red at the high end. Values are clamped to [`PPM_RANGE_DBM`].
pub fn ramp_color(dbm: f64) -> [u8; 3] {
    let (lo, hi) = PPM_RANGE_DBM;
    let t = ((dbm - lo) / (hi - lo)).clamp(0.0, 1.0);
    let ch = |offset: f64| {
        let v = (1.5 - (4.0 * t - offset).abs()).clamp(0.0, 1.0);
        (v * 255.0).round() as u8
    };
    [ch(3.0), ch(2.0), ch(1.0)]
}

pub fn heatmap_csv(grid: &CoverageGrid) -> String {
    let mut out = String::from("x,y,total_dbm\n");
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.spec.cell_center(i, j);
            match grid.cell(i, j).dbm() {
                Some(p) => out.push_str(&format!("{:.3},{:.3},{:.6}\n", c.x, c.y, p)),
                None => out.push_str(&format!("{:.3},{:.3},\n", c.x, c.y)),
            }
        }
    }
    out
}

pub fn heatmap_ppm(grid: &CoverageGrid) -> Vec<u8> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    // top row of the image is the largest y
    for j in (0..ny).rev() {
        for i in 0..nx {
            let px = grid.cell(i, j).dbm().map_or(PPM_NO_COVERAGE, ramp_color);
            out.extend_from_slice(&px);
        }
    }
    out
}

pub fn export_heatmap(grid: &CoverageGrid, path: &Path, format: HeatmapFormat) -> Result<(), CoverageError> {
    let bytes = match format {
        HeatmapFormat::Csv => heatmap_csv(grid).into_bytes(),
        HeatmapFormat::Ppm => heatmap_ppm(grid),
    };
    let io = |source| CoverageError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)
}

/// Gain of one variant over the baseline in one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionComparison {
    pub region: String,
    pub baseline: Option<f64>,
    pub variant: Option<f64>,
    pub gain: Gain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Db(f64),
    BaselineUncovered,
    VariantUncovered,
    Undefined,
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Db(g) => write!(f, "{g:.2}"),
            Gain::BaselineUncovered => f.write_str("n/a (baseline uncovered)"),
            Gain::VariantUncovered => f.write_str("n/a (variant uncovered)"),
            Gain::Undefined => f.write_str("n/a"),
        }
    }
}

pub fn compare_schemes(
    baseline: &CoverageGrid,
    variant: &CoverageGrid,
    regions: &[(String, Region)],
    domain: AvgDomain,
) -> Result<Vec<RegionComparison>, CoverageError> {
    if baseline.spec != variant.spec {
        return Err(CoverageError::GridMismatch(format!("{:?} vs {:?}", baseline.spec, variant.spec)));
    }
    Ok(regions
        .iter()
        .map(|(label, region)| {
            let b = region_average(baseline, region, domain).dbm;
            let v = region_average(variant, region, domain).dbm;
            let gain = match (b, v) {
                (Some(b), Some(v)) => Gain::Db(v - b),
                (None, Some(_)) => Gain::BaselineUncovered,
                (Some(_), None) => Gain::VariantUncovered,
                (None, None) => Gain::Undefined,
            };
            RegionComparison {
                region: label.clone(),
                baseline: b,
                variant: v,
                gain,
            }
        })
        .collect())
}
