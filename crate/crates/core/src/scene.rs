//! Indoor scene geometry: convex planar facets with electromagnetic
//! materials, plus named rectangular evaluation regions.
//!
//! Scenes are immutable once built and all queries take `&self`, so a
//! single [`Scene`] can be shared between worker threads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::geom::{Aabb, Vec3};

/// Maximum distance of any vertex from the facet plane.
pub const PLANARITY_TOL: f64 = 1e-9;
/// Hits closer than this to a ray origin (or segment end) are ignored.
pub const SELF_HIT_EPS: f64 = 1e-6;
/// Inclusive slack for point-in-polygon tests, in meters.
pub const EDGE_TOL: f64 = 1e-9;
/// Two hits closer than this are a tie, resolved by lowest facet id.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scene file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{entity}: {reason}")]
    Invalid { entity: String, reason: String },
}

impl SceneError {
    fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        SceneError::Invalid {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

/// Electromagnetic surface parameters at the simulation frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub eps_r_real: f64,
    pub eps_r_imag: f64,
    pub scattering_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetSpec {
    pub vertices: Vec<[f64; 3]>,
    pub material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: f64,
}

/// On-disk scene document. See `docs/formats.md` for the schema.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub materials: BTreeMap<String, MaterialSpec>,
    pub facets: Vec<FacetSpec>,
    #[serde(default)]
    pub regions: BTreeMap<String, RegionSpec>,
}

impl SceneDescription {
    pub fn add_material(&mut self, name: &str, eps_r_real: f64, eps_r_imag: f64, scattering: f64) {
        self.materials.insert(
            name.to_string(),
            MaterialSpec {
                eps_r_real,
                eps_r_imag,
                scattering_coefficient: scattering,
            },
        );
    }

    pub fn add_facet(&mut self, vertices: &[[f64; 3]], material: &str) {
        self.facets.push(FacetSpec {
            vertices: vertices.to_vec(),
            material: material.to_string(),
            name: None,
        });
    }

    /// Adds the six inward-facing faces of an axis-aligned room.
    pub fn add_room(&mut self, min: [f64; 3], max: [f64; 3], material: &str) {
        let [x0, y0, z0] = min;
        let [x1, y1, z1] = max;
        // floor (normal +z), ceiling (-z), walls facing inwards
        self.add_facet(&[[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0]], material);
        self.add_facet(&[[x0, y0, z1], [x0, y1, z1], [x1, y1, z1], [x1, y0, z1]], material);
        self.add_facet(&[[x0, y0, z0], [x0, y1, z0], [x0, y1, z1], [x0, y0, z1]], material);
        self.add_facet(&[[x1, y0, z0], [x1, y0, z1], [x1, y1, z1], [x1, y1, z0]], material);
        self.add_facet(&[[x0, y0, z0], [x0, y0, z1], [x1, y0, z1], [x1, y0, z0]], material);
        self.add_facet(&[[x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1]], material);
    }

    /// Adds the four outward-facing vertical sides of an axis-aligned block
    /// (a wall segment or pillar standing on the floor).
    pub fn add_block(&mut self, min: [f64; 3], max: [f64; 3], material: &str) {
        let [x0, y0, z0] = min;
        let [x1, y1, z1] = max;
        self.add_facet(&[[x0, y0, z0], [x0, y0, z1], [x0, y1, z1], [x0, y1, z0]], material);
        self.add_facet(&[[x1, y0, z0], [x1, y1, z0], [x1, y1, z1], [x1, y0, z1]], material);
        self.add_facet(&[[x0, y0, z0], [x1, y0, z0], [x1, y0, z1], [x0, y0, z1]], material);
        self.add_facet(&[[x0, y1, z0], [x0, y1, z1], [x1, y1, z1], [x1, y1, z0]], material);
    }

    pub fn add_region(&mut self, name: &str, x: [f64; 2], y: [f64; 2], z: f64) {
        self.regions.insert(name.to_string(), RegionSpec { x, y, z });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub eps_r_real: f64,
    pub eps_r_imag: f64,
    pub scattering_coefficient: f64,
}

impl Material {
    pub fn new(name: &str, eps_r_real: f64, eps_r_imag: f64, scattering_coefficient: f64) -> Self {
        Self {
            name: name.to_string(),
            eps_r_real,
            eps_r_imag,
            scattering_coefficient,
        }
    }

    fn validate(&self) -> Result<(), SceneError> {
        let entity = format!("material '{}'", self.name);
        if !(self.eps_r_real >= 1.0) {
            return Err(SceneError::invalid(entity, "eps_r_real must be >= 1"));
        }
        if !(self.eps_r_imag >= 0.0) {
            return Err(SceneError::invalid(entity, "eps_r_imag must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.scattering_coefficient) {
            return Err(SceneError::invalid(entity, "scattering_coefficient must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Convex planar polygon. Vertices are counter-clockwise seen from the
/// side the normal points to.
#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: Vec<Vec3>,
    pub normal: Vec3,
    pub material: usize,
    pub name: Option<String>,
    plane_offset: f64,
    // inward-pointing in-plane unit normals, one per edge
    edge_normals: Vec<Vec3>,
    bounds: Aabb,
}

impl Facet {
    fn build(vertices: Vec<Vec3>, material: usize, name: Option<String>, label: &str) -> Result<Self, SceneError> {
        if vertices.len() < 3 {
            return Err(SceneError::invalid(label, "needs at least 3 vertices"));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(SceneError::invalid(label, "non-finite vertex coordinate"));
        }
        // Newell's method: robust for any planar polygon
        let mut n = Vec3::zeros();
        for (i, a) in vertices.iter().enumerate() {
            let b = &vertices[(i + 1) % vertices.len()];
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        let len = n.norm();
        if len < 1e-12 {
            return Err(SceneError::invalid(label, "degenerate polygon (zero area)"));
        }
        let normal = n / len;
        let centroid = vertices.iter().sum::<Vec3>() / vertices.len() as f64;
        let plane_offset = normal.dot(&centroid);
        // planarity is judged against the plane of the leading vertices so
        // the first stray vertex is the one reported
        let reference = (2..vertices.len())
            .map(|k| (vertices[1] - vertices[0]).cross(&(vertices[k] - vertices[0])))
            .find(|c| c.norm() > 1e-9)
            .map_or(normal, |c| c.normalize());
        for (i, v) in vertices.iter().enumerate() {
            let dev = reference.dot(&(v - vertices[0])).abs();
            if dev > PLANARITY_TOL {
                return Err(SceneError::invalid(
                    label,
                    format!("vertex {i} is {dev:.3e} m off the facet plane"),
                ));
            }
        }
        let mut edge_normals = Vec::with_capacity(vertices.len());
        for i in 0..vertices.len() {
            let a = &vertices[i];
            let b = &vertices[(i + 1) % vertices.len()];
            let e = b - a;
            if e.norm() < 1e-12 {
                return Err(SceneError::invalid(label, format!("edge {i} has zero length")));
            }
            edge_normals.push(normal.cross(&e).normalize());
        }
        // convexity: every vertex must be on the inner side of every edge
        for (i, m) in edge_normals.iter().enumerate() {
            for v in &vertices {
                if (v - vertices[i]).dot(m) < -PLANARITY_TOL {
                    return Err(SceneError::invalid(label, "polygon is not convex"));
                }
            }
        }
        let mut bounds = Aabb::empty();
        for v in &vertices {
            bounds.grow(v);
        }
        Ok(Self {
            vertices,
            normal,
            material,
            name,
            plane_offset,
            edge_normals,
            bounds,
        })
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// Signed distance of `p` from the facet plane (positive on the front side).
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.plane_offset
    }

    /// Inclusive test for a point already lying in the facet plane.
    pub fn contains_planar(&self, p: &Vec3) -> bool {
        self.edge_normals
            .iter()
            .zip(&self.vertices)
            .all(|(m, v)| (p - v).dot(m) >= -EDGE_TOL)
    }

    /// Ray parameter of the plane crossing, if the ray is not parallel.
    pub fn plane_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-15 {
            return None;
        }
        Some((self.plane_offset - self.normal.dot(origin)) / denom)
    }

    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let t = self.plane_hit(origin, dir)?;
        if t <= t_min || t >= t_max {
            return None;
        }
        let p = origin + dir * t;
        self.contains_planar(&p).then_some(t)
    }

    pub fn area(&self) -> f64 {
        let v0 = &self.vertices[0];
        let mut a = 0.0;
        for i in 1..self.vertices.len() - 1 {
            a += (self.vertices[i] - v0).cross(&(self.vertices[i + 1] - v0)).dot(&self.normal);
        }
        0.5 * a
    }

    pub fn label(&self, id: usize) -> String {
        match &self.name {
            Some(n) => format!("facet {id} ('{n}')"),
            None => format!("facet {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Receiver plane height.
    pub z: f64,
}

impl Region {
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub facet: usize,
    pub point: Vec3,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    facets: Vec<Facet>,
    materials: Vec<Material>,
    regions: BTreeMap<String, Region>,
    bounds: Aabb,
    bvh: Bvh,
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let desc: SceneDescription = serde_json::from_str(&text).map_err(|source| SceneError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Scene::from_description(&desc)
}

impl Scene {
    pub fn from_description(desc: &SceneDescription) -> Result<Self, SceneError> {
        let mut materials = Vec::with_capacity(desc.materials.len());
        let mut material_ids = BTreeMap::new();
        for (name, m) in &desc.materials {
            let mat = Material::new(name, m.eps_r_real, m.eps_r_imag, m.scattering_coefficient);
            mat.validate()?;
            material_ids.insert(name.as_str(), materials.len());
            materials.push(mat);
        }

        let mut facets = Vec::with_capacity(desc.facets.len());
        let mut bounds = Aabb::empty();
        for (id, f) in desc.facets.iter().enumerate() {
            let label = match &f.name {
                Some(n) => format!("facet {id} ('{n}')"),
                None => format!("facet {id}"),
            };
            let material = *material_ids.get(f.material.as_str()).ok_or_else(|| {
                SceneError::invalid(&label, format!("unknown material '{}'", f.material))
            })?;
            let verts = f.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
            let facet = Facet::build(verts, material, f.name.clone(), &label)?;
            bounds = bounds.union(facet.bounds());
            facets.push(facet);
        }

        let mut regions = BTreeMap::new();
        for (name, r) in &desc.regions {
            let entity = format!("region '{name}'");
            if !(r.x[0] < r.x[1]) || !(r.y[0] < r.y[1]) {
                return Err(SceneError::invalid(entity, "requires x_min < x_max and y_min < y_max"));
            }
            let corners = [
                Vec3::new(r.x[0], r.y[0], r.z),
                Vec3::new(r.x[1], r.y[1], r.z),
            ];
            if corners.iter().any(|c| !bounds.contains(c, 1e-9)) {
                return Err(SceneError::invalid(entity, "lies outside the scene bounding box"));
            }
            regions.insert(
                name.clone(),
                Region {
                    name: name.clone(),
                    x_min: r.x[0],
                    x_max: r.x[1],
                    y_min: r.y[0],
                    y_max: r.y[1],
                    z: r.z,
                },
            );
        }

        let boxes: Vec<Aabb> = facets
            .iter()
            .map(|f| {
                let b = f.bounds();
                Aabb {
                    min: b.min - Vec3::repeat(1e-7),
                    max: b.max + Vec3::repeat(1e-7),
                }
            })
            .collect();
        let bvh = Bvh::build(&boxes);
        Ok(Self {
            facets,
            materials,
            regions,
            bounds,
            bvh,
        })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, id: usize) -> &Facet {
        &self.facets[id]
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn material_of(&self, facet: usize) -> &Material {
        &self.materials[self.facets[facet].material]
    }

    pub fn regions(&self) -> &BTreeMap<String, Region> {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.get(name)
    }

    /// Bounding box of all facets; empty for a scene without facets.
    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// Nearest facet hit at distance in `(SELF_HIT_EPS, t_max)`.
    ///
    /// Hits within [`TIE_TOL`] of each other are resolved in favour of the
    /// lower facet id, so the answer does not depend on traversal order.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<RayHit> {
        debug_assert!(crate::geom::is_unit(dir), "ray direction must be unit length");
        let mut best: Option<(f64, usize)> = None;
        self.bvh.traverse(origin, dir, SELF_HIT_EPS, t_max, |id| {
            if let Some(t) = self.facets[id].intersect(origin, dir, SELF_HIT_EPS, t_max) {
                best = match best {
                    None => Some((t, id)),
                    Some((bt, bid)) => {
                        if (t - bt).abs() <= TIE_TOL {
                            Some(if id < bid { (t.min(bt), id) } else { (bt.min(t), bid) })
                        } else if t < bt {
                            Some((t, id))
                        } else {
                            Some((bt, bid))
                        }
                    }
                };
            }
            best.map_or(t_max, |(bt, _)| bt + 2.0 * TIE_TOL)
        });
        best.map(|(_, facet)| {
            let t = self.facets[facet]
                .intersect(origin, dir, SELF_HIT_EPS, t_max)
                .expect("facet was hit during traversal");
            RayHit {
                facet,
                point: origin + dir * t,
                distance: t,
            }
        })
    }

    /// True iff some facet crosses the open segment `(a, b)`, ignoring
    /// contacts within [`SELF_HIT_EPS`] of either end.
    pub fn is_occluded(&self, a: &Vec3, b: &Vec3) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * SELF_HIT_EPS {
            return false;
        }
        let dir = d / len;
        let t_max = len - SELF_HIT_EPS;
        let mut hit = false;
        self.bvh.traverse(a, &dir, SELF_HIT_EPS, t_max, |id| {
            if self.facets[id].intersect(a, &dir, SELF_HIT_EPS, t_max).is_some() {
                hit = true;
                -1.0
            } else {
                t_max
            }
        });
        hit
    }

    /// True when the polyline `prev -> p -> next` passes through a facet
    /// other than `own` exactly at `p`. Segment occlusion tests ignore
    /// contacts at their end points, so a bounce placed on a convex edge
    /// would otherwise let a path slip through the neighbouring face.
    pub fn crosses_at(&self, p: &Vec3, prev: &Vec3, next: &Vec3, own: usize) -> bool {
        let d = p - prev;
        let len = d.norm();
        if len <= SELF_HIT_EPS {
            return false;
        }
        let dir = d / len;
        let (lo, hi) = (len - SELF_HIT_EPS, len + SELF_HIT_EPS);
        let mut crossed = false;
        self.bvh.traverse(prev, &dir, lo, hi, |id| {
            if id != own && self.facets[id].intersect(prev, &dir, lo, hi).is_some() {
                let f = &self.facets[id];
                let (a, b) = (f.signed_distance(prev), f.signed_distance(next));
                if a.abs() > SELF_HIT_EPS && b.abs() > SELF_HIT_EPS && a * b < 0.0 {
                    crossed = true;
                    return -1.0;
                }
            }
            hi
        });
        crossed
    }

    /// Returns a copy of the scene shifted by `offset` (test helper for
    /// translation invariance and scene composition).
    pub fn translated(&self, offset: &Vec3) -> Scene {
        let desc = self.to_description();
        let mut moved = desc.clone();
        for f in &mut moved.facets {
            for v in &mut f.vertices {
                v[0] += offset.x;
                v[1] += offset.y;
                v[2] += offset.z;
            }
        }
        for r in moved.regions.values_mut() {
            r.x = [r.x[0] + offset.x, r.x[1] + offset.x];
            r.y = [r.y[0] + offset.y, r.y[1] + offset.y];
            r.z += offset.z;
        }
        Scene::from_description(&moved).expect("translation preserves validity")
    }

    pub fn to_description(&self) -> SceneDescription {
        SceneDescription {
            materials: self
                .materials
                .iter()
                .map(|m| {
                    (
                        m.name.clone(),
                        MaterialSpec {
                            eps_r_real: m.eps_r_real,
                            eps_r_imag: m.eps_r_imag,
                            scattering_coefficient: m.scattering_coefficient,
                        },
                    )
                })
                .collect(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetSpec {
                    vertices: f.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
                    material: self.materials[f.material].name.clone(),
                    name: f.name.clone(),
                })
                .collect(),
            regions: self
                .regions
                .values()
                .map(|r| {
                    (
                        r.name.clone(),
                        RegionSpec {
                            x: [r.x_min, r.x_max],
                            y: [r.y_min, r.y_max],
                            z: r.z,
                        },
                    )
                })
                .collect(),
        }
    }
}
