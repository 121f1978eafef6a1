//! Deliberately naive reference computations on plain arrays.
//!
//! Nothing here shares code with `riscov-core`; each routine is written
//! the obvious, slow way so the fast paths can be checked against it.

use std::f64::consts::PI;

pub type P3 = [f64; 3];

pub const C0: f64 = 299_792_458.0;

pub fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(a: P3) -> P3 {
    scale(a, 1.0 / norm(a))
}

pub fn dist(a: P3, b: P3) -> f64 {
    norm(sub(a, b))
}

/// Unit normal from the first three vertices (right-hand winding).
pub fn polygon_normal(poly: &[P3]) -> P3 {
    unit(cross(sub(poly[1], poly[0]), sub(poly[2], poly[0])))
}

/// Möller–Trumbore on each fan triangle. Edges count as hits (within a
/// small barycentric slack).
pub fn ray_polygon(origin: P3, dir: P3, poly: &[P3]) -> Option<f64> {
    const SLACK: f64 = 1e-9;
    for k in 1..poly.len() - 1 {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let e1 = sub(b, a);
        let e2 = sub(c, a);
        let p = cross(dir, e2);
        let det = dot(e1, p);
        if det.abs() < 1e-15 {
            continue;
        }
        let inv = 1.0 / det;
        let s = sub(origin, a);
        let u = dot(s, p) * inv;
        if u < -SLACK || u > 1.0 + SLACK {
            continue;
        }
        let q = cross(s, e1);
        let v = dot(dir, q) * inv;
        if v < -SLACK || u + v > 1.0 + SLACK {
            continue;
        }
        return Some(dot(e2, q) * inv);
    }
    None
}

/// Nearest hit in `(t_min, t_max]`; hits within 1e-9 of each other go to
/// the lowest polygon index.
pub fn first_hit(origin: P3, dir: P3, polys: &[Vec<P3>], t_min: f64, t_max: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, poly) in polys.iter().enumerate() {
        if let Some(t) = ray_polygon(origin, dir, poly) {
            if t <= t_min || t > t_max {
                continue;
            }
            best = match best {
                Some((_, bt)) if t < bt - 1e-9 => Some((i, t)),
                Some(b) => Some(b),
                None => Some((i, t)),
            };
        }
    }
    best
}

/// True when some polygon crosses the open segment `a -> b`, ignoring
/// touches within `eps` of either end.
pub fn segment_occluded(a: P3, b: P3, polys: &[Vec<P3>], eps: f64) -> bool {
    let d = dist(a, b);
    if d <= 2.0 * eps {
        return false;
    }
    let dir = scale(sub(b, a), 1.0 / d);
    polys
        .iter()
        .filter_map(|p| ray_polygon(a, dir, p))
        .any(|t| t > eps && t < d - eps)
}

pub fn mirror(p: P3, plane_point: P3, normal: P3) -> P3 {
    let s = dot(sub(p, plane_point), normal);
    sub(p, scale(normal, 2.0 * s))
}

/// One specular path found by exhaustive image enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePath {
    pub facets: Vec<usize>,
    pub points: Vec<P3>,
    pub length: f64,
}

fn inside_polygon(p: P3, poly: &[P3], n: P3) -> bool {
    let m = poly.len();
    (0..m).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        dot(cross(sub(b, a), sub(p, a)), n) >= -1e-9
    })
}

fn valid_bounce(poly: &[P3], n: P3, from: P3, to: P3, hit: P3) -> bool {
    let sa = dot(sub(from, poly[0]), n);
    let sb = dot(sub(to, poly[0]), n);
    sa * sb > 0.0 && sa.abs() > 1e-9 && sb.abs() > 1e-9 && inside_polygon(hit, poly, n)
}

fn unfold(polys: &[Vec<P3>], seq: &[usize], src: P3, dst: P3) -> Option<Vec<P3>> {
    // images of the source through the sequence
    let mut images = vec![src];
    for &f in seq {
        let n = polygon_normal(&polys[f]);
        let last = *images.last().unwrap();
        images.push(mirror(last, polys[f][0], n));
    }
    // back-trace from the destination
    let mut points = vec![P3::default(); seq.len()];
    let mut target = dst;
    for k in (0..seq.len()).rev() {
        let f = seq[k];
        let poly = &polys[f];
        let n = polygon_normal(poly);
        let img = images[k + 1];
        let d = sub(target, img);
        let denom = dot(d, n);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = dot(sub(poly[0], img), n) / denom;
        if !(t > 0.0 && t < 1.0) {
            return None;
        }
        points[k] = add(img, scale(d, t));
        target = points[k];
    }
    let mut chain = vec![src];
    chain.extend(points);
    chain.push(dst);
    for (k, &f) in seq.iter().enumerate() {
        let n = polygon_normal(&polys[f]);
        if !valid_bounce(&polys[f], n, chain[k], chain[k + 2], chain[k + 1]) {
            return None;
        }
    }
    Some(chain)
}

/// A bounce point lying on another polygon whose plane separates the
/// incoming and outgoing legs means the path goes through that polygon.
fn passes_through(polys: &[Vec<P3>], own: usize, prev: P3, p: P3, next: P3) -> bool {
    polys.iter().enumerate().any(|(i, poly)| {
        if i == own {
            return false;
        }
        let n = polygon_normal(poly);
        let on_plane = dot(sub(p, poly[0]), n).abs() < 1e-6;
        let sa = dot(sub(prev, poly[0]), n);
        let sb = dot(sub(next, poly[0]), n);
        on_plane && inside_polygon(p, poly, n) && sa.abs() > 1e-6 && sb.abs() > 1e-6 && sa * sb < 0.0
    })
}

/// All specular paths of order 1..=`max_order` (consecutive repeats of a
/// facet excluded), with every leg checked for occlusion. Paths whose
/// lengths and points agree within 1e-6 are reported once.
pub fn image_paths(polys: &[Vec<P3>], src: P3, dst: P3, max_order: usize) -> Vec<ImagePath> {
    let mut out: Vec<ImagePath> = Vec::new();
    let mut seqs: Vec<Vec<usize>> = (0..polys.len()).map(|i| vec![i]).collect();
    for order in 1..=max_order {
        if order > 1 {
            seqs = seqs
                .iter()
                .flat_map(|s| {
                    (0..polys.len()).filter(move |&f| f != *s.last().unwrap()).map(move |f| {
                        let mut n = s.clone();
                        n.push(f);
                        n
                    })
                })
                .collect();
        }
        for seq in &seqs {
            let Some(chain) = unfold(polys, seq, src, dst) else {
                continue;
            };
            if chain.windows(2).any(|w| segment_occluded(w[0], w[1], polys, 1e-6)) {
                continue;
            }
            if (0..seq.len()).any(|k| passes_through(polys, seq[k], chain[k], chain[k + 1], chain[k + 2])) {
                continue;
            }
            let length: f64 = chain.windows(2).map(|w| dist(w[0], w[1])).sum();
            let dup = out.iter().any(|p| {
                p.facets.len() == seq.len()
                    && (p.length - length).abs() < 1e-6
                    && p.points[1..].iter().zip(&chain[1..]).all(|(a, b)| dist(*a, *b) < 1e-6)
            });
            if !dup {
                out.push(ImagePath {
                    facets: seq.clone(),
                    points: chain,
                    length,
                });
            }
        }
    }
    out
}

/// Quantized steering phase of one element, written straight from the
/// definition: `x = -(f/c)(-r_beam . OP + r_i . OP)`, fractional part in
/// `[0, 1)`, rounded half up to `2^bits` levels, top level folded to 0.
pub fn steering_phase(op: P3, r_i: P3, r_beam: P3, f: f64, bits: u32) -> f64 {
    let x = -(f / C0) * (-dot(r_beam, op) + dot(r_i, op));
    let mut frac = x.rem_euclid(1.0);
    if frac >= 1.0 {
        frac = 0.0;
    }
    let levels = 2f64.powi(bits as i32);
    let mut level = (frac * levels + 0.5).floor();
    if level >= levels {
        level -= levels;
    }
    2.0 * PI * level / levels
}

/// `g_e(d) |sum exp(j(phi - k (d - r_i) . OP))|^2 / N` summed term by term
/// with real trigonometry.
pub fn array_gain(offsets: &[P3], phases: &[f64], normal: P3, q: f64, r_i: P3, d: P3, f: f64) -> f64 {
    let c = dot(d, normal);
    if c < 0.0 {
        return 0.0;
    }
    let k = 2.0 * PI * f / C0;
    let w = sub(d, r_i);
    let (mut re, mut im) = (0.0, 0.0);
    for (op, phi) in offsets.iter().zip(phases) {
        let a = phi - k * dot(w, *op);
        re += a.cos();
        im += a.sin();
    }
    c.min(1.0).powf(q) * (re * re + im * im) / offsets.len() as f64
}

/// Unpolarized Fresnel power coefficient `(|r_s|^2 + |r_p|^2) / 2` for a
/// half-space with `eps = eps_re - j eps_im`, using explicit complex
/// arithmetic on pairs.
pub fn fresnel_power(eps_re: f64, eps_im: f64, theta: f64) -> f64 {
    type C = (f64, f64);
    fn div(a: C, b: C) -> C {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    }
    fn csqrt(a: C) -> C {
        let r = (a.0 * a.0 + a.1 * a.1).sqrt();
        let re = ((r + a.0) / 2.0).sqrt();
        let im = ((r - a.0) / 2.0).sqrt();
        (re, if a.1 < 0.0 { -im } else { im })
    }
    fn abs2(a: C) -> f64 {
        a.0 * a.0 + a.1 * a.1
    }
    let eps: C = (eps_re, -eps_im);
    let (s, c) = theta.sin_cos();
    let root = csqrt((eps.0 - s * s, eps.1));
    let rs = div((c - root.0, -root.1), (c + root.0, root.1));
    let ec = (eps.0 * c, eps.1 * c);
    let rp = div((ec.0 - root.0, ec.1 - root.1), (ec.0 + root.0, ec.1 + root.1));
    (abs2(rs) + abs2(rp)) / 2.0
}

/// Friis received power in dBm.
pub fn friis_dbm(pt_dbm: f64, gt_dbi: f64, gr_dbi: f64, f: f64, d: f64) -> f64 {
    let lambda = C0 / f;
    pt_dbm + gt_dbi + gr_dbi + 20.0 * (lambda / (4.0 * PI * d)).log10()
}

/// Lambertian tile power in watts.
#[allow(clippy::too_many_arguments)]
pub fn scatter_watts(pt: f64, gt: f64, gr: f64, f: f64, d1: f64, d2: f64, s: f64, area: f64, cos_s: f64) -> f64 {
    let lambda = C0 / f;
    pt * gt * gr * lambda * lambda / ((4.0 * PI).powi(3) * d1 * d1 * d2 * d2) * s * s * area * cos_s
}

/// Single-hop RIS link power in watts, one factor per line.
#[allow(clippy::too_many_arguments)]
pub fn single_hop_watts(pt: f64, gt: f64, l1: f64, cos1: f64, s1: f64, f1: f64, l2: f64, gr: f64, f: f64) -> f64 {
    let lambda = C0 / f;
    let spread1 = 1.0 / (4.0 * PI * l1 * l1);
    let spread2 = 1.0 / (4.0 * PI * l2 * l2);
    let capture = gr * lambda * lambda / (4.0 * PI);
    pt * gt * spread1 * cos1 * s1 * f1 * spread2 * capture
}

/// Dual-hop RIS link power in watts.
#[allow(clippy::too_many_arguments)]
pub fn dual_hop_watts(
    pt: f64,
    gt: f64,
    l1: f64,
    cos1: f64,
    s1: f64,
    f1: f64,
    l2: f64,
    cos2: f64,
    s2: f64,
    f2: f64,
    l3: f64,
    gr: f64,
    f: f64,
) -> f64 {
    let lambda = C0 / f;
    let hop1 = pt * gt / (4.0 * PI * l1 * l1);
    let hop2 = cos1 * s1 * f1 / (4.0 * PI * l2 * l2);
    let hop3 = cos2 * s2 * f2 / (4.0 * PI * l3 * l3);
    hop1 * hop2 * hop3 * gr * lambda * lambda / (4.0 * PI)
}
