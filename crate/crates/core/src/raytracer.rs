//! Deterministic path enumeration between two points.
//!
//! Specular paths are found with the image method (order 1 and 2), and
//! diffuse scattering is realised by tiling every facet and routing one
//! candidate path through each tile centre visible from both ends. RIS
//! panels are not part of the scene, so nothing here ever interacts with
//! them.

use std::cmp::Ordering;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::geom::{mirror_point, Vec3};
use crate::scene::Scene;

/// Points closer than this to a facet plane count as lying on it.
const SIDE_EPS: f64 = 1e-9;
/// Vertex tolerance for duplicate path detection.
const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    Reflect1,
    Reflect2,
    Scatter1,
}

impl PathKind {
    pub const ALL: [PathKind; 4] = [PathKind::Los, PathKind::Reflect1, PathKind::Reflect2, PathKind::Scatter1];

    pub fn label(self) -> &'static str {
        match self {
            PathKind::Los => "LOS",
            PathKind::Reflect1 => "R1",
            PathKind::Reflect2 => "R2",
            PathKind::Scatter1 => "S1",
        }
    }
}

/// Incidence/departure angles (radians from the surface normal) at one
/// interaction vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionAngles {
    pub incidence: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPath {
    pub kind: PathKind,
    /// Source, interaction points, sink.
    pub vertices: ArrayVec<Vec3, 4>,
    /// Facet ids at the interaction vertices, in path order.
    pub facets: ArrayVec<usize, 2>,
    pub angles: ArrayVec<InteractionAngles, 2>,
    /// Index into the tracer's tile list for scattered paths.
    pub tile: Option<usize>,
    pub total_length: f64,
}

impl PropagationPath {
    fn new(kind: PathKind, vertices: ArrayVec<Vec3, 4>, facets: ArrayVec<usize, 2>, scene: &Scene) -> Self {
        let total_length = vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let mut angles = ArrayVec::new();
        for (i, &f) in facets.iter().enumerate() {
            let n = scene.facet(f).normal;
            let p = vertices[i + 1];
            let to_prev = (vertices[i] - p).normalize();
            let to_next = (vertices[i + 2] - p).normalize();
            angles.push(InteractionAngles {
                incidence: to_prev.dot(&n).abs().min(1.0).acos(),
                departure: to_next.dot(&n).abs().min(1.0).acos(),
            });
        }
        Self {
            kind,
            vertices,
            facets,
            angles,
            tile: None,
            total_length,
        }
    }

    pub fn segment_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm())
    }

    /// Unit direction leaving the source.
    pub fn departure_dir(&self) -> Vec3 {
        (self.vertices[1] - self.vertices[0]).normalize()
    }

    /// Unit direction pointing from the sink back along the final segment,
    /// i.e. the direction the receiving antenna looks into.
    pub fn arrival_dir(&self) -> Vec3 {
        let n = self.vertices.len();
        (self.vertices[n - 2] - self.vertices[n - 1]).normalize()
    }

    fn same_as(&self, other: &PropagationPath) -> bool {
        self.kind == other.kind
            && self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| (a - b).norm() <= DEDUP_TOL)
    }
}

/// Deterministic ordering: kind, then length, then facet ids.
pub fn path_order(a: &PropagationPath, b: &PropagationPath) -> Ordering {
    a.kind
        .cmp(&b.kind)
        .then(a.total_length.total_cmp(&b.total_length))
        .then_with(|| a.facets.as_slice().cmp(b.facets.as_slice()))
        .then(a.tile.cmp(&b.tile))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathPolicy {
    #[serde(default = "default_reflections")]
    pub max_reflections: u8,
    #[serde(default = "default_true", rename = "scattering")]
    pub enable_scattering: bool,
    #[serde(default = "default_tile_edge", rename = "tile_edge_m")]
    pub tile_edge: f64,
}

fn default_reflections() -> u8 {
    2
}
fn default_true() -> bool {
    true
}
fn default_tile_edge() -> f64 {
    0.5
}

impl Default for PathPolicy {
    fn default() -> Self {
        Self {
            max_reflections: 2,
            enable_scattering: true,
            tile_edge: 0.5,
        }
    }
}

impl PathPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_reflections > 2 {
            return Err("max_reflections must be 0, 1 or 2".into());
        }
        if !(self.tile_edge > 0.0) || !self.tile_edge.is_finite() {
            return Err("tile_edge_m must be > 0".into());
        }
        Ok(())
    }
}

/// Surface patch used as a candidate first-order scattering point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterTile {
    pub facet: usize,
    pub center: Vec3,
    pub area: f64,
    pub normal: Vec3,
}

/// Splits every facet into tiles whose in-plane extent is at most
/// `tile_edge` along both local axes. Tiles are the exact intersection of
/// the facet with a regular cell lattice, so their areas sum to the facet
/// area.
pub fn tile_facets(scene: &Scene, tile_edge: f64) -> Vec<ScatterTile> {
    assert!(tile_edge > 0.0, "tile_edge must be positive");
    let mut tiles = Vec::new();
    for (id, facet) in scene.facets().iter().enumerate() {
        let origin = facet.vertices[0];
        let e1 = (facet.vertices[1] - origin).normalize();
        let e2 = facet.normal.cross(&e1);
        let poly: Vec<[f64; 2]> = facet
            .vertices
            .iter()
            .map(|v| {
                let d = v - origin;
                [d.dot(&e1), d.dot(&e2)]
            })
            .collect();
        let (mut s0, mut s1, mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &poly {
            s0 = s0.min(p[0]);
            s1 = s1.max(p[0]);
            t0 = t0.min(p[1]);
            t1 = t1.max(p[1]);
        }
        let ns = (((s1 - s0) / tile_edge) - 1e-9).ceil().max(1.0) as usize;
        let nt = (((t1 - t0) / tile_edge) - 1e-9).ceil().max(1.0) as usize;
        let ds = (s1 - s0) / ns as f64;
        let dt = (t1 - t0) / nt as f64;
        for j in 0..nt {
            for i in 0..ns {
                let lo = [s0 + i as f64 * ds, t0 + j as f64 * dt];
                let hi = [
                    if i + 1 == ns { s1 } else { s0 + (i + 1) as f64 * ds },
                    if j + 1 == nt { t1 } else { t0 + (j + 1) as f64 * dt },
                ];
                let cell = clip_to_rect(&poly, lo, hi);
                let Some((area, c)) = polygon_area_centroid(&cell) else {
                    continue;
                };
                if area <= 1e-12 * ds * dt {
                    continue;
                }
                tiles.push(ScatterTile {
                    facet: id,
                    center: origin + e1 * c[0] + e2 * c[1],
                    area,
                    normal: facet.normal,
                });
            }
        }
    }
    tiles
}

fn clip_to_rect(poly: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = poly.to_vec();
    // (axis, bound, keep values >= bound?)
    let planes = [(0, lo[0], true), (0, hi[0], false), (1, lo[1], true), (1, hi[1], false)];
    for (axis, bound, keep_above) in planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| if keep_above { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

fn polygon_area_centroid(poly: &[[f64; 2]]) -> Option<(f64, [f64; 2])> {
    if poly.len() < 3 {
        return None;
    }
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    let o = poly[0];
    for k in 1..poly.len() - 1 {
        let p = [poly[k][0] - o[0], poly[k][1] - o[1]];
        let q = [poly[k + 1][0] - o[0], poly[k + 1][1] - o[1]];
        let cross = p[0] * q[1] - p[1] * q[0];
        a += cross;
        cx += cross * (p[0] + q[0]);
        cy += cross * (p[1] + q[1]);
    }
    if a.abs() < 1e-300 {
        return None;
    }
    Some((0.5 * a.abs(), [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]))
}

/// Path enumerator bound to one scene and policy. Tiles are computed once
/// and shared by every query.
#[derive(Debug, Clone)]
pub struct Tracer<'s> {
    scene: &'s Scene,
    policy: PathPolicy,
    tiles: Vec<ScatterTile>,
}

impl<'s> Tracer<'s> {
    pub fn new(scene: &'s Scene, policy: PathPolicy) -> Self {
        let tiles = if policy.enable_scattering {
            tile_facets(scene, policy.tile_edge)
        } else {
            Vec::new()
        };
        Self { scene, policy, tiles }
    }

    pub fn scene(&self) -> &'s Scene {
        self.scene
    }

    pub fn policy(&self) -> &PathPolicy {
        &self.policy
    }

    pub fn tiles(&self) -> &[ScatterTile] {
        &self.tiles
    }

    /// Precomputes everything that depends only on the source point.
    pub fn from_source(&self, src: Vec3) -> SourceView<'_, 's> {
        let scene = self.scene;
        let facets = scene.facets();
        let order = self.policy.max_reflections;

        let mut images1 = Vec::new();
        if order >= 1 {
            for (a, f) in facets.iter().enumerate() {
                let side = f.signed_distance(&src);
                if side.abs() > SIDE_EPS {
                    images1.push(Image1 {
                        facet: a,
                        side: side.signum(),
                        image: mirror_point(&src, &f.vertices[0], &f.normal),
                    });
                }
            }
        }
        let mut images2 = Vec::new();
        if order >= 2 {
            for i1 in &images1 {
                for (b, fb) in facets.iter().enumerate() {
                    if b == i1.facet {
                        continue;
                    }
                    let side = fb.signed_distance(&i1.image);
                    if side.abs() > SIDE_EPS {
                        images2.push(Image2 {
                            first: i1.facet,
                            second: b,
                            first_image: i1.image,
                            side: side.signum(),
                            image: mirror_point(&i1.image, &fb.vertices[0], &fb.normal),
                        });
                    }
                }
            }
        }

        let mut visible_tiles = Vec::new();
        for (k, tile) in self.tiles.iter().enumerate() {
            let side = facets[tile.facet].signed_distance(&src);
            if side.abs() > SIDE_EPS && !scene.is_occluded(&src, &tile.center) {
                visible_tiles.push((k, side.signum()));
            }
        }

        SourceView {
            tracer: self,
            src,
            images1,
            images2,
            visible_tiles,
        }
    }

    pub fn find_paths(&self, src: Vec3, dst: Vec3) -> Vec<PropagationPath> {
        self.from_source(src).paths(dst)
    }
}

#[derive(Debug, Clone)]
struct Image1 {
    facet: usize,
    side: f64,
    image: Vec3,
}

#[derive(Debug, Clone)]
struct Image2 {
    first: usize,
    second: usize,
    first_image: Vec3,
    // side of plane `second` on which `first_image` lies
    side: f64,
    image: Vec3,
}

/// Source-side precomputation: first/second order images and the set of
/// scatter tiles the source can see.
#[derive(Debug, Clone)]
pub struct SourceView<'t, 's> {
    tracer: &'t Tracer<'s>,
    src: Vec3,
    images1: Vec<Image1>,
    images2: Vec<Image2>,
    visible_tiles: Vec<(usize, f64)>,
}

/// Crossing of segment `from -> to` with a facet plane, strictly inside the
/// segment, returned only if it lies within the facet polygon.
fn crossing(scene: &Scene, facet: usize, from: &Vec3, to: &Vec3) -> Option<Vec3> {
    let f = scene.facet(facet);
    let d0 = f.signed_distance(from);
    let d1 = f.signed_distance(to);
    if d0 * d1 >= 0.0 {
        return None;
    }
    let t = d0 / (d0 - d1);
    if t <= 1e-12 || t >= 1.0 - 1e-12 {
        return None;
    }
    let mut p = from + (to - from) * t;
    // project back onto the plane to remove rounding drift
    p -= f.normal * f.signed_distance(&p);
    f.contains_planar(&p).then_some(p)
}

impl<'t, 's> SourceView<'t, 's> {
    pub fn src(&self) -> Vec3 {
        self.src
    }

    /// Drops candidate scatter tiles for which `keep` returns false.
    /// Callers use this to skip tiles that cannot carry power (for example
    /// tiles behind a directional transmitter).
    pub fn retain_tiles<F: FnMut(&ScatterTile) -> bool>(&mut self, mut keep: F) {
        let tiles = &self.tracer.tiles;
        self.visible_tiles.retain(|&(k, _)| keep(&tiles[k]));
    }

    pub fn visible_tile_count(&self) -> usize {
        self.visible_tiles.len()
    }

    /// Visits every valid path to `dst` in deterministic order
    /// (LOS, first-order, second-order, scattered; each group in
    /// enumeration order).
    pub fn visit<F: FnMut(&PropagationPath)>(&self, dst: Vec3, mut f: F) {
        let scene = self.tracer.scene;
        let src = self.src;
        if (dst - src).norm() <= 1e-9 {
            return;
        }

        if !scene.is_occluded(&src, &dst) {
            let mut v = ArrayVec::new();
            v.push(src);
            v.push(dst);
            f(&PropagationPath::new(PathKind::Los, v, ArrayVec::new(), scene));
        }

        let mut specular: Vec<PropagationPath> = Vec::new();
        for im in &self.images1 {
            let facet = scene.facet(im.facet);
            if facet.signed_distance(&dst) * im.side <= SIDE_EPS {
                continue;
            }
            let Some(p) = crossing(scene, im.facet, &im.image, &dst) else {
                continue;
            };
            if scene.is_occluded(&src, &p) || scene.is_occluded(&p, &dst) || scene.crosses_at(&p, &src, &dst, im.facet) {
                continue;
            }
            let path = PropagationPath::new(
                PathKind::Reflect1,
                [src, p, dst].into_iter().collect(),
                [im.facet].into_iter().collect(),
                scene,
            );
            push_unique(&mut specular, path);
        }
        for path in specular.drain(..) {
            f(&path);
        }

        for im in &self.images2 {
            let fb = scene.facet(im.second);
            // dst must be on the same side of the second plane as the first image
            if fb.signed_distance(&dst) * im.side <= SIDE_EPS {
                continue;
            }
            let Some(pb) = crossing(scene, im.second, &im.image, &dst) else {
                continue;
            };
            let fa = scene.facet(im.first);
            let Some(pa) = crossing(scene, im.first, &im.first_image, &pb) else {
                continue;
            };
            if fa.signed_distance(&pb) * fa.signed_distance(&src) <= 0.0 {
                continue;
            }
            if scene.is_occluded(&src, &pa)
                || scene.is_occluded(&pa, &pb)
                || scene.is_occluded(&pb, &dst)
                || scene.crosses_at(&pa, &src, &pb, im.first)
                || scene.crosses_at(&pb, &pa, &dst, im.second)
            {
                continue;
            }
            let path = PropagationPath::new(
                PathKind::Reflect2,
                [src, pa, pb, dst].into_iter().collect(),
                [im.first, im.second].into_iter().collect(),
                scene,
            );
            push_unique(&mut specular, path);
        }
        for path in specular.drain(..) {
            f(&path);
        }

        let tiles = &self.tracer.tiles;
        for &(k, side) in &self.visible_tiles {
            let tile = &tiles[k];
            let facet = scene.facet(tile.facet);
            if facet.signed_distance(&dst) * side <= SIDE_EPS {
                continue;
            }
            if scene.is_occluded(&tile.center, &dst) {
                continue;
            }
            let mut path = PropagationPath::new(
                PathKind::Scatter1,
                [src, tile.center, dst].into_iter().collect(),
                [tile.facet].into_iter().collect(),
                scene,
            );
            path.tile = Some(k);
            f(&path);
        }
    }

    /// All paths to `dst`, sorted by kind, length and facet ids.
    pub fn paths(&self, dst: Vec3) -> Vec<PropagationPath> {
        let mut out = Vec::new();
        self.visit(dst, |p| out.push(p.clone()));
        out.sort_by(path_order);
        out
    }
}

fn push_unique(list: &mut Vec<PropagationPath>, path: PropagationPath) {
    if !list.iter().any(|p| p.same_as(&path)) {
        list.push(path);
    }
}

/// Convenience wrapper building a one-off [`Tracer`].
pub fn find_paths(scene: &Scene, src: Vec3, dst: Vec3, policy: PathPolicy) -> Vec<PropagationPath> {
    Tracer::new(scene, policy).find_paths(src, dst)
}
