//! Small geometric helpers shared by the scene, tracer and RIS modules.

use nalgebra::Vector3;

/// Points and directions are both plain 3-vectors in meters.
pub type Vec3 = Vector3<f64>;

/// Tolerance used when checking that a direction is a unit vector.
pub const UNIT_TOL: f64 = 1e-9;

pub fn is_unit(v: &Vec3) -> bool {
    (v.norm() - 1.0).abs() <= UNIT_TOL
}

/// Returns `None` for (near) zero-length input.
pub fn try_normalize(v: &Vec3) -> Option<Vec3> {
    let n = v.norm();
    if n > 1e-300 && n.is_finite() {
        Some(v / n)
    } else {
        None
    }
}

/// Mirror `p` across the plane through `origin` with unit normal `normal`.
pub fn mirror_point(p: &Vec3, origin: &Vec3, normal: &Vec3) -> Vec3 {
    let d = (p - origin).dot(normal);
    p - normal * (2.0 * d)
}

/// Mirror a direction vector across a plane with unit normal `normal`.
pub fn mirror_dir(v: &Vec3, normal: &Vec3) -> Vec3 {
    v - normal * (2.0 * v.dot(normal))
}

/// Angle in radians between two vectors, clamped for numerical safety.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    /// Slab test. Returns true if the parametric ray `origin + t * dir`
    /// overlaps the box for some `t` in `[t_min, t_max]`.
    pub fn hit_by(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> bool {
        let mut lo = t_min;
        let mut hi = t_max;
        for i in 0..3 {
            let t0 = (self.min[i] - origin[i]) * inv_dir[i];
            let t1 = (self.max[i] - origin[i]) * inv_dir[i];
            // NaN appears when the ray lies exactly on a slab plane; treat as overlapping.
            let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            if a.is_nan() || b.is_nan() {
                continue;
            }
            lo = lo.max(a);
            hi = hi.min(b);
            if lo > hi {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_across_plane() {
        let p = Vec3::new(1.0, 2.0, 1.0);
        let m = mirror_point(&p, &Vec3::zeros(), &Vec3::x());
        assert_eq!(m, Vec3::new(-1.0, 2.0, 1.0));
        assert_eq!(mirror_dir(&Vec3::new(1.0, 1.0, 0.0), &Vec3::x()), Vec3::new(-1.0, 1.0, 0.0));
    }

    #[test]
    fn aabb_slab_test() {
        let mut b = Aabb::empty();
        assert!(b.is_empty());
        b.grow(&Vec3::new(0.0, 0.0, 0.0));
        b.grow(&Vec3::new(1.0, 1.0, 1.0));
        let o = Vec3::new(-1.0, 0.5, 0.5);
        let d = Vec3::x();
        let inv = d.map(|c| 1.0 / c);
        assert!(b.hit_by(&o, &inv, 0.0, 10.0));
        assert!(!b.hit_by(&o, &inv, 0.0, 0.5));
        // ray lying in the face plane x = 0 still counts as touching
        let o = Vec3::new(0.0, -1.0, 0.5);
        let inv = Vec3::y().map(|c| 1.0 / c);
        assert!(b.hit_by(&o, &inv, 0.0, 10.0));
    }
}
