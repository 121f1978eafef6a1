//! Antenna-array RIS model.
//!
//! A panel is a `rows x cols` grid of patch elements on a plane. Steering
//! assigns each element a quantized phase that compensates the oblique
//! incident wavefront and adds a linear gradient toward the commanded beam
//! direction. The re-radiation gain in any direction is the coherent array
//! sum normalised by the element count, times a `cos^q` element pattern.

use num_complex::Complex64;
use thiserror::Error;

use crate::geom::{is_unit, Vec3};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum RisError {
    #[error("invalid RIS panel: {0}")]
    InvalidPanel(String),
    #[error("{0} must be a unit vector")]
    NotUnit(&'static str),
    #[error("{0} lies behind the panel")]
    BackSide(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub center: Vec3,
    pub normal: Vec3,
    /// In-plane axis along which columns advance.
    pub u: Vec3,
    /// In-plane axis along which rows advance; `u x v = normal`.
    pub v: Vec3,
    pub rows: usize,
    pub cols: usize,
    /// Element pitch in meters.
    pub spacing: f64,
    pub quantization_bits: u32,
    pub element_exponent: f64,
}

impl RisPanel {
    /// Builds a panel from its centre, front normal and an "up" hint that
    /// fixes the in-plane orientation (`v` is `up` projected into the plane).
    pub fn new(
        center: Vec3,
        normal: Vec3,
        up: Vec3,
        rows: usize,
        cols: usize,
        spacing: f64,
        quantization_bits: u32,
        element_exponent: f64,
    ) -> Result<Self, RisError> {
        let n = crate::geom::try_normalize(&normal).ok_or_else(|| RisError::InvalidPanel("normal is zero".into()))?;
        let v = crate::geom::try_normalize(&(up - n * up.dot(&n)))
            .ok_or_else(|| RisError::InvalidPanel("up vector is parallel to the normal".into()))?;
        let u = v.cross(&n);
        let panel = Self {
            center,
            normal: n,
            u,
            v,
            rows,
            cols,
            spacing,
            quantization_bits,
            element_exponent,
        };
        panel.validate()?;
        Ok(panel)
    }

    pub fn validate(&self) -> Result<(), RisError> {
        let bad = |m: &str| Err(RisError::InvalidPanel(m.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be >= 1");
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return bad("element spacing must be > 0");
        }
        if self.quantization_bits < 1 {
            return bad("quantization_bits must be >= 1");
        }
        if self.quantization_bits > 52 {
            return bad("quantization_bits must be <= 52");
        }
        if !(self.element_exponent >= 0.0) {
            return bad("element_exponent must be >= 0");
        }
        let ortho = self.u.dot(&self.v).abs().max(self.u.dot(&self.normal).abs()).max(self.v.dot(&self.normal).abs());
        let unit = [self.u, self.v, self.normal].iter().map(|a| (a.norm() - 1.0).abs()).fold(0.0, f64::max);
        if ortho > 1e-12 || unit > 1e-12 {
            return bad("axes u, v, normal must be orthonormal");
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Physical aperture area `rows * cols * spacing^2`.
    pub fn area(&self) -> f64 {
        self.element_count() as f64 * self.spacing * self.spacing
    }

    fn col_offset(&self, c: usize) -> f64 {
        (c as f64 - (self.cols as f64 - 1.0) / 2.0) * self.spacing
    }

    fn row_offset(&self, r: usize) -> f64 {
        (r as f64 - (self.rows as f64 - 1.0) / 2.0) * self.spacing
    }

    /// Vector from the panel centre to element `(row, col)`.
    pub fn element_offset(&self, row: usize, col: usize) -> Vec3 {
        self.u * self.col_offset(col) + self.v * self.row_offset(row)
    }

    pub fn element_position(&self, row: usize, col: usize) -> Vec3 {
        self.center + self.element_offset(row, col)
    }

    /// `cos^q` patch pattern; zero behind the panel.
    pub fn element_gain(&self, direction: &Vec3) -> f64 {
        let c = direction.dot(&self.normal).min(1.0);
        if c < 0.0 {
            0.0
        } else {
            c.powf(self.element_exponent)
        }
    }
}

/// Per-element phases for one incident/beam direction pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringState {
    /// Unit propagation direction of the incident wave (source -> panel).
    pub incident: Vec3,
    /// Unit main-lobe direction (panel -> target).
    pub beam: Vec3,
    /// Row-major `rows x cols` phases in `[0, 2pi)`.
    pub phases: Vec<f64>,
}

impl SteeringState {
    /// Uniform (all-zero) phase state; used for broadside reference gains.
    pub fn uniform(panel: &RisPanel, incident: Vec3) -> Self {
        Self {
            incident,
            beam: panel.normal,
            phases: vec![0.0; panel.element_count()],
        }
    }

    pub fn phase(&self, panel: &RisPanel, row: usize, col: usize) -> f64 {
        self.phases[row * panel.cols + col]
    }
}

fn check_directions(panel: &RisPanel, incident: &Vec3, beam: &Vec3) -> Result<(), RisError> {
    if !is_unit(incident) {
        return Err(RisError::NotUnit("incident direction"));
    }
    if !is_unit(beam) {
        return Err(RisError::NotUnit("beam direction"));
    }
    if incident.dot(&panel.normal) >= 0.0 {
        return Err(RisError::BackSide("incident source"));
    }
    if beam.dot(&panel.normal) <= 0.0 {
        return Err(RisError::BackSide("beam direction"));
    }
    Ok(())
}

/// Fractional phase (in cycles, `[0, 1)`) required at element offset `op`.
fn required_cycles(op: &Vec3, incident: &Vec3, beam: &Vec3, frequency: f64) -> f64 {
    let x = -(frequency / SPEED_OF_LIGHT) * (-beam.dot(op) + incident.dot(op));
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Quantized steering phases for every element.
///
/// Each element gets `2pi * round(frac(x) * 2^N) / 2^N` with
/// `x = -(f/c) * (-beam . OP + incident . OP)`, `frac` mapped into `[0, 1)`,
/// round-half-up, and the top level `2^N` folded back to zero.
pub fn phase_profile(panel: &RisPanel, incident: Vec3, beam: Vec3, frequency: f64) -> Result<SteeringState, RisError> {
    check_directions(panel, &incident, &beam)?;
    let levels = (1u64 << panel.quantization_bits) as f64;
    let step = std::f64::consts::TAU / levels;
    let mut phases = Vec::with_capacity(panel.element_count());
    for r in 0..panel.rows {
        for c in 0..panel.cols {
            let cycles = required_cycles(&panel.element_offset(r, c), &incident, &beam, frequency);
            let level = (cycles * levels + 0.5).floor() % levels;
            phases.push(level * step);
        }
    }
    Ok(SteeringState { incident, beam, phases })
}

/// Unquantized counterpart of [`phase_profile`] (phases `2pi * frac(x)`).
pub fn continuous_phase_profile(
    panel: &RisPanel,
    incident: Vec3,
    beam: Vec3,
    frequency: f64,
) -> Result<SteeringState, RisError> {
    check_directions(panel, &incident, &beam)?;
    let mut phases = Vec::with_capacity(panel.element_count());
    for r in 0..panel.rows {
        for c in 0..panel.cols {
            let cycles = required_cycles(&panel.element_offset(r, c), &incident, &beam, frequency);
            phases.push(std::f64::consts::TAU * cycles);
        }
    }
    Ok(SteeringState { incident, beam, phases })
}

/// Precomputed element phasors for repeated gain evaluations.
#[derive(Debug, Clone)]
pub struct SteeredPanel {
    pub panel: RisPanel,
    pub state: SteeringState,
    frequency: f64,
    phasors: Vec<Complex64>,
}

impl SteeredPanel {
    pub fn new(panel: RisPanel, state: SteeringState, frequency: f64) -> Self {
        assert_eq!(state.phases.len(), panel.element_count(), "phase count must match element count");
        let phasors = state.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        Self {
            panel,
            state,
            frequency,
            phasors,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Re-radiation gain `F` toward unit `direction`:
    /// `g_e(d) * |sum_P exp(j(phi_P - k (d - r_i) . OP))|^2 / (rows * cols)`.
    ///
    /// The `r_i` term is the incident wave's phase at each element, so a
    /// panel steered with [`phase_profile`] peaks at its beam direction.
    pub fn gain(&self, direction: &Vec3) -> f64 {
        let p = &self.panel;
        let ge = p.element_gain(direction);
        if ge == 0.0 {
            return 0.0;
        }
        let k = std::f64::consts::TAU * self.frequency / SPEED_OF_LIGHT;
        let w = direction - self.state.incident;
        let (wu, wv) = (w.dot(&p.u), w.dot(&p.v));
        let col: Vec<Complex64> = (0..p.cols)
            .map(|c| Complex64::from_polar(1.0, -k * wu * p.col_offset(c)))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for r in 0..p.rows {
            let row = &self.phasors[r * p.cols..(r + 1) * p.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(&col) {
                acc += a * b;
            }
            total += acc * Complex64::from_polar(1.0, -k * wv * p.row_offset(r));
        }
        ge * total.norm_sqr() / p.element_count() as f64
    }
}

pub fn radiation_gain(panel: &RisPanel, state: &SteeringState, direction: &Vec3, frequency: f64) -> f64 {
    SteeredPanel::new(panel.clone(), state.clone(), frequency).gain(direction)
}

/// Capture geometry of a panel for an incident direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureGeometry {
    /// Physical area in m^2.
    pub area: f64,
    /// Angle between the reversed incident direction and the normal.
    pub theta: f64,
    pub cos_theta: f64,
}

impl ApertureGeometry {
    /// `cos(theta) * S`
    pub fn effective_area(&self) -> f64 {
        self.cos_theta * self.area
    }
}

pub fn effective_aperture(panel: &RisPanel, incident: &Vec3) -> Result<ApertureGeometry, RisError> {
    if !is_unit(incident) {
        return Err(RisError::NotUnit("incident direction"));
    }
    let cos_theta = -incident.dot(&panel.normal);
    if cos_theta <= 0.0 {
        return Err(RisError::BackSide("incident source"));
    }
    let cos_theta = cos_theta.min(1.0);
    Ok(ApertureGeometry {
        area: panel.area(),
        theta: cos_theta.acos(),
        cos_theta,
    })
}
