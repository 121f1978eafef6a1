//! Built-in oracle suites run by `riscov selfcheck`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riscov_core::linkbudget::{los_power, reflection_coefficient, watts_to_dbm, RadioConfig};
use riscov_core::raytracer::{find_paths, PathKind, PathPolicy};
use riscov_core::ris::{phase_profile, RisPanel};
use riscov_core::scene::{Material, Scene, SceneDescription};
use riscov_core::{Vec3, SPEED_OF_LIGHT};
use riscov_oracle as oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Knobs for exercising the checks themselves.
#[derive(Debug, Clone, Copy)]
pub struct SelfcheckOptions {
    /// Speed of light used by the link-budget side of the Friis suite.
    pub speed_of_light: f64,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

pub fn run_all(opts: &SelfcheckOptions) -> Vec<SuiteResult> {
    vec![phase_suite(), friis_suite(opts), image_suite(), fresnel_suite()]
}

fn result(name: &'static str, failures: Vec<String>, checked: usize) -> SuiteResult {
    match failures.first() {
        None => SuiteResult {
            name,
            passed: true,
            detail: format!("{checked} checks"),
        },
        Some(first) => SuiteResult {
            name,
            passed: false,
            detail: format!("{} of {checked} checks failed; first: {first}", failures.len()),
        },
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

/// Random unit vector with `sign * dot(v, n) > 0.05`.
pub fn random_half_space(rng: &mut impl Rng, n: &Vec3, sign: f64) -> Vec3 {
    loop {
        let v = random_unit(rng);
        if sign * v.dot(n) > 0.05 {
            return v;
        }
    }
}

fn phase_suite() -> SuiteResult {
    let f = 332e9;
    let lambda = SPEED_OF_LIGHT / f;
    let mut failures = Vec::new();
    let mut checked = 0;

    // broadside identity
    let p = RisPanel::new(Vec3::zeros(), Vec3::z(), Vec3::y(), 4, 4, lambda / 2.0, 8, 1.0).expect("valid panel");
    let s = phase_profile(&p, -Vec3::z(), Vec3::z(), f).expect("valid steering");
    checked += 1;
    if s.phases.iter().any(|&x| x != 0.0) {
        failures.push("broadside phases are not all zero".to_string());
    }

    // quarter-cycle element at 30 degrees
    let p = RisPanel::new(Vec3::zeros(), Vec3::z(), Vec3::y(), 1, 3, lambda / 2.0, 8, 1.0).expect("valid panel");
    let beam = Vec3::z() * (PI / 6.0).cos() + p.u * (PI / 6.0).sin();
    let s = phase_profile(&p, -Vec3::z(), beam, f).expect("valid steering");
    checked += 1;
    if s.phase(&p, 0, 2) != PI / 2.0 {
        failures.push(format!("30 degree case gives {} instead of pi/2", s.phase(&p, 0, 2)));
    }

    // random geometry against the direct evaluation; N = 1 phases must be {0, pi}
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for case in 0..200 {
        let n = random_unit(&mut rng);
        let up = random_unit(&mut rng);
        let bits = [1u32, 2, 4, 8][case % 4];
        let spacing = lambda * rng.gen_range(0.25..1.0);
        let Ok(panel) = RisPanel::new(Vec3::zeros(), n, up, rng.gen_range(1..6), rng.gen_range(1..6), spacing, bits, 1.0)
        else {
            continue;
        };
        let ri = random_half_space(&mut rng, &n, -1.0);
        let rb = random_half_space(&mut rng, &n, 1.0);
        let s = phase_profile(&panel, ri, rb, f).expect("valid steering");
        for r in 0..panel.rows {
            for c in 0..panel.cols {
                checked += 1;
                let want = oracle::steering_phase(arr(&panel.element_offset(r, c)), arr(&ri), arr(&rb), f, bits);
                let got = s.phase(&panel, r, c);
                if (got - want).abs() > 1e-12 {
                    failures.push(format!("case {case} element ({r},{c}): {got} vs {want}"));
                }
                if bits == 1 && got != 0.0 && got != PI {
                    failures.push(format!("case {case}: 1-bit phase {got}"));
                }
            }
        }
    }
    result("phase", failures, checked)
}

fn friis_suite(opts: &SelfcheckOptions) -> SuiteResult {
    let mut cfg = RadioConfig::from_dbm(332e9, 0.0);
    cfg.speed_of_light = opts.speed_of_light;
    let mut failures = Vec::new();
    let got = watts_to_dbm(los_power(&cfg, 1.0, 1.0, 1.0));
    if (got - -82.87).abs() > 0.01 {
        failures.push(format!("1 m at 332 GHz gives {got:.4} dBm, expected -82.87"));
    }
    let mut checked = 1;
    for d in [0.5, 3.0, 17.0, 60.0] {
        checked += 1;
        let got = watts_to_dbm(los_power(&cfg, 10.0, 2.0, d));
        let want = oracle::friis_dbm(0.0, 10.0, 10.0 * 2f64.log10(), 332e9, d);
        if (got - want).abs() > 1e-9 {
            failures.push(format!("d = {d} m: {got} vs {want}"));
        }
    }
    result("friis", failures, checked)
}

/// Closed 5 x 4 x 3 m room used by the image-method suite.
pub fn shoebox() -> SceneDescription {
    let mut d = SceneDescription::default();
    d.add_material("wall", 5.0, 0.3, 0.0);
    d.add_room([0.0, 0.0, 0.0], [5.0, 4.0, 3.0], "wall");
    d
}

pub fn polygons(desc: &SceneDescription) -> Vec<Vec<[f64; 3]>> {
    desc.facets.iter().map(|f| f.vertices.clone()).collect()
}

fn image_suite() -> SuiteResult {
    let desc = shoebox();
    let scene = Scene::from_description(&desc).expect("valid shoebox");
    let polys = polygons(&desc);
    let policy = PathPolicy {
        max_reflections: 2,
        enable_scattering: false,
        tile_edge: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut failures = Vec::new();
    let pairs = 20;
    for case in 0..pairs {
        let mut pt = || {
            Vec3::new(
                rng.gen_range(0.2..4.8),
                rng.gen_range(0.2..3.8),
                rng.gen_range(0.2..2.8),
            )
        };
        let (a, b) = (pt(), pt());
        let mut got: Vec<f64> = find_paths(&scene, a, b, policy)
            .iter()
            .filter(|p| p.kind != PathKind::Los)
            .map(|p| p.total_length)
            .collect();
        let mut want: Vec<f64> = oracle::image_paths(&polys, arr(&a), arr(&b), 2).iter().map(|p| p.length).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        if got.len() != want.len() {
            failures.push(format!("pair {case}: {} paths vs {}", got.len(), want.len()));
        } else if let Some((g, w)) = got.iter().zip(&want).find(|(g, w)| (*g - *w).abs() > 1e-9) {
            failures.push(format!("pair {case}: length {g} vs {w}"));
        }
    }
    result("image", failures, pairs)
}

fn fresnel_suite() -> SuiteResult {
    let f = 332e9;
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut check = |what: String, got: f64, want: f64, tol: f64| {
        checked += 1;
        if (got - want).abs() > tol {
            failures.push(format!("{what}: {got} vs {want}"));
        }
    };
    let conductor = Material::new("conductor", 1e9, 0.0, 0.0);
    check("conductor limit".into(), reflection_coefficient(&conductor, 0.4, f), 1.0, 1e-3);
    let m = Material::new("m", 5.0, 0.5, 0.0);
    check("grazing limit".into(), reflection_coefficient(&m, PI / 2.0 - 1e-7, f), 1.0, 1e-5);
    let lossless = Material::new("d", 4.0, 0.0, 0.0);
    check("normal incidence".into(), reflection_coefficient(&lossless, 0.0, f), 1.0 / 3.0, 1e-15);
    for (re, im) in [(5.0, 0.5), (5.24, 0.235), (1.48, 0.031), (7.0, 0.2)] {
        let mat = Material::new("x", re, im, 0.0);
        for deg in [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 89.0] {
            let th = deg * PI / 180.0;
            let g = reflection_coefficient(&mat, th, f);
            check(format!("eps {re}-j{im} at {deg} deg"), g * g, oracle::fresnel_power(re, im, th), 1e-12);
        }
    }
    result("fresnel", failures, checked)
}
