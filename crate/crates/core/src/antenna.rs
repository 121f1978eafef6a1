//! Transmit and receive antenna gain patterns.

use serde::{Deserialize, Serialize};

use crate::geom::{try_normalize, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AntennaPattern {
    Omni {
        #[serde(default)]
        peak_gain_dbi: f64,
    },
    /// `peak * max(0, cos(angle from boresight))^exponent`
    Directional {
        peak_gain_dbi: f64,
        exponent: f64,
        #[serde(default = "default_boresight")]
        boresight: [f64; 3],
    },
}

fn default_boresight() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl Default for AntennaPattern {
    fn default() -> Self {
        AntennaPattern::Omni { peak_gain_dbi: 0.0 }
    }
}

impl AntennaPattern {
    pub fn omni(peak_gain_dbi: f64) -> Self {
        AntennaPattern::Omni { peak_gain_dbi }
    }

    pub fn directional(peak_gain_dbi: f64, exponent: f64, boresight: Vec3) -> Self {
        let b = try_normalize(&boresight).unwrap_or_else(Vec3::x);
        AntennaPattern::Directional {
            peak_gain_dbi,
            exponent,
            boresight: [b.x, b.y, b.z],
        }
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        match *self {
            AntennaPattern::Omni { peak_gain_dbi } | AntennaPattern::Directional { peak_gain_dbi, .. } => {
                peak_gain_dbi
            }
        }
    }

    pub fn boresight(&self) -> Option<Vec3> {
        match *self {
            AntennaPattern::Omni { .. } => None,
            AntennaPattern::Directional { boresight, .. } => Some(Vec3::from(boresight)),
        }
    }

    /// Linear gain toward the unit vector `direction`.
    pub fn gain(&self, direction: &Vec3) -> f64 {
        debug_assert!(crate::geom::is_unit(direction));
        let peak = 10f64.powf(self.peak_gain_dbi() / 10.0);
        match *self {
            AntennaPattern::Omni { .. } => peak,
            AntennaPattern::Directional { exponent, boresight, .. } => {
                let c = Vec3::from(boresight).dot(direction).min(1.0);
                if c <= 0.0 {
                    0.0
                } else {
                    peak * c.powf(exponent)
                }
            }
        }
    }

    /// Points the boresight from `from` toward `target`. Omni patterns are
    /// returned unchanged.
    pub fn aim_at(&self, from: &Vec3, target: &Vec3) -> Self {
        match *self {
            AntennaPattern::Omni { .. } => *self,
            AntennaPattern::Directional { peak_gain_dbi, exponent, .. } => {
                let b = try_normalize(&(target - from)).expect("aim_at requires from != target");
                AntennaPattern::Directional {
                    peak_gain_dbi,
                    exponent,
                    boresight: [b.x, b.y, b.z],
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            AntennaPattern::Omni { peak_gain_dbi } if !peak_gain_dbi.is_finite() => {
                Err("peak_gain_dbi must be finite".into())
            }
            AntennaPattern::Directional { peak_gain_dbi, exponent, boresight } => {
                if !peak_gain_dbi.is_finite() {
                    return Err("peak_gain_dbi must be finite".into());
                }
                if !(exponent >= 0.0) {
                    return Err("exponent must be >= 0".into());
                }
                if !crate::geom::is_unit(&Vec3::from(boresight)) {
                    return Err("boresight must be a unit vector".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    #[test]
    fn omni_is_flat() {
        let a = AntennaPattern::omni(0.0);
        assert_eq!(a.gain(&Vec3::x()), 1.0);
        assert_eq!(a.gain(&-Vec3::z()), 1.0);
        let a = AntennaPattern::omni(3.0);
        assert!((a.gain(&Vec3::y()) - 10f64.powf(0.3)).abs() < 1e-15);
    }

    #[test]
    fn directional_cos_power() {
        let a = AntennaPattern::directional(10.0, 2.0, Vec3::x());
        assert!((a.gain(&Vec3::x()) - 10.0).abs() < 1e-12);
        let d = Vec3::new(60f64.to_radians().cos(), 60f64.to_radians().sin(), 0.0);
        assert!((a.gain(&d) - 2.5).abs() < 1e-12);
        assert_eq!(a.gain(&-Vec3::x()), 0.0);
        assert_eq!(a.gain(&Vec3::y()), 0.0);
    }

    #[test]
    fn aiming() {
        let a = AntennaPattern::directional(20.0, 10.0, Vec3::x());
        let b = a.aim_at(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 5.0));
        assert_eq!(b.boresight().unwrap(), Vec3::z());

        let omni = AntennaPattern::omni(2.0);
        assert_eq!(omni.aim_at(&Vec3::zeros(), &Vec3::x()), omni);

        let tx = Vec3::new(5.0, 28.0, 1.5);
        let ris1 = Vec3::new(2.5, 2.5, 1.5);
        let b = a.aim_at(&tx, &ris1).boresight().unwrap();
        let expect = Vec3::new(-2.5, -25.5, 0.0).normalize();
        assert!((b - expect).norm() < 1e-15);
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter_map("non-degenerate", |(x, y, z)| try_normalize(&Vec3::new(x, y, z)))
    }

    proptest! {
        #[test]
        fn rotation_equivariant(b in unit(), d in unit(), axis in unit(), angle in 0.0f64..6.28, q in 0.0f64..20.0) {
            let a = AntennaPattern::directional(7.0, q, b);
            let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
            let ar = AntennaPattern::directional(7.0, q, rot * b);
            let g0 = a.gain(&d);
            let g1 = ar.gain(&(rot * d));
            prop_assert!((g0 - g1).abs() <= 1e-12 * g0.max(1.0) + 1e-12);
        }

        #[test]
        fn monotone_in_offset(q in 0.0f64..30.0, t0 in 0.0f64..180.0, dt in 0.0f64..90.0) {
            let a = AntennaPattern::directional(5.0, q, Vec3::x());
            let dir = |deg: f64| Vec3::new(deg.to_radians().cos(), deg.to_radians().sin(), 0.0);
            let t1 = (t0 + dt).min(180.0);
            prop_assert!(a.gain(&dir(t1)) <= a.gain(&dir(t0)) + 1e-12);
            if t1 > 90.0 {
                prop_assert_eq!(a.gain(&dir(t1)), 0.0);
            }
        }
    }
}
