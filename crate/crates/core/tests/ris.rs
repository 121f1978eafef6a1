use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riscov_core::ris::{continuous_phase_profile, phase_profile, RisPanel, SteeredPanel, SteeringState};
use riscov_core::{Vec3, SPEED_OF_LIGHT};
use riscov_oracle as oracle;

const F: f64 = 332e9;

fn lambda() -> f64 {
    SPEED_OF_LIGHT / F
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

fn toward(rng: &mut ChaCha8Rng, n: &Vec3, sign: f64) -> Vec3 {
    loop {
        let v = unit(rng);
        if sign * v.dot(n) > 0.05 {
            return v;
        }
    }
}

/// Beam in the panel's (normal, u) plane at `deg` off broadside.
fn in_plane(p: &RisPanel, deg: f64) -> Vec3 {
    let t = deg.to_radians();
    p.normal * t.cos() + p.u * t.sin()
}

#[test]
fn phases_match_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..1000 {
        let n = unit(&mut rng);
        let bits = [1, 2, 4, 8][case % 4];
        let Ok(p) = RisPanel::new(
            Vec3::zeros(),
            n,
            unit(&mut rng),
            rng.gen_range(1..9),
            rng.gen_range(1..9),
            lambda() * rng.gen_range(0.2..1.5),
            bits,
            1.0,
        ) else {
            continue;
        };
        let ri = toward(&mut rng, &n, -1.0);
        let rb = toward(&mut rng, &n, 1.0);
        let s = phase_profile(&p, ri, rb, F).unwrap();
        for r in 0..p.rows {
            for c in 0..p.cols {
                let want = oracle::steering_phase(arr(&p.element_offset(r, c)), arr(&ri), arr(&rb), F, bits);
                assert!((s.phase(&p, r, c) - want).abs() <= 1e-12, "case {case} ({r},{c})");
            }
        }
    }
}

#[test]
fn gain_matches_term_by_term_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..200 {
        let n = unit(&mut rng);
        let Ok(p) = RisPanel::new(
            Vec3::new(1.0, 2.0, 3.0),
            n,
            unit(&mut rng),
            rng.gen_range(1..12),
            rng.gen_range(1..12),
            lambda() / 2.0,
            rng.gen_range(1..9),
            rng.gen_range(0.0..3.0),
        ) else {
            continue;
        };
        let ri = toward(&mut rng, &n, -1.0);
        let s = phase_profile(&p, ri, toward(&mut rng, &n, 1.0), F).unwrap();
        let sp = SteeredPanel::new(p.clone(), s.clone(), F);
        let offsets: Vec<_> = (0..p.rows)
            .flat_map(|r| (0..p.cols).map(move |c| (r, c)))
            .map(|(r, c)| arr(&p.element_offset(r, c)))
            .collect();
        for _ in 0..5 {
            let d = unit(&mut rng);
            let want = oracle::array_gain(&offsets, &s.phases, arr(&n), p.element_exponent, arr(&ri), arr(&d), F);
            let got = sp.gain(&d);
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn beam_points_where_commanded() {
    let p = RisPanel::new(Vec3::zeros(), Vec3::x(), Vec3::z(), 100, 100, lambda() / 2.0, 8, 0.0).unwrap();
    let incident = -Vec3::x();
    for commanded in [-45.0, -10.0, 0.0, 20.0, 30.0, 60.0] {
        let s = phase_profile(&p, incident, in_plane(&p, commanded), F).unwrap();
        let sp = SteeredPanel::new(p.clone(), s, F);
        let (best, _) = (-900..=900)
            .map(|k| k as f64 * 0.1)
            .map(|deg| (deg, sp.gain(&in_plane(&p, deg))))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best - commanded).abs() <= 0.5, "commanded {commanded}, peak at {best}");
    }
}

#[test]
fn broadside_gain_is_element_count() {
    let p = RisPanel::new(Vec3::zeros(), Vec3::x(), Vec3::z(), 100, 100, lambda() / 2.0, 8, 0.0).unwrap();
    let sp = SteeredPanel::new(p.clone(), SteeringState::uniform(&p, -Vec3::x()), F);
    let g = sp.gain(&Vec3::x());
    assert!((g - 1e4).abs() <= 1e-9 * 1e4, "{g}");
}

#[test]
fn gain_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let base = RisPanel::new(Vec3::zeros(), Vec3::x(), Vec3::z(), 16, 12, lambda() / 2.0, 4, 1.0).unwrap();
    let ri = Vec3::new(-0.8, 0.3, -0.2).normalize();
    let rb = Vec3::new(0.6, -0.5, 0.3).normalize();
    let probe: Vec<Vec3> = (0..20).map(|_| toward(&mut rng, &Vec3::x(), 1.0)).collect();
    let s = phase_profile(&base, ri, rb, F).unwrap();
    let reference = SteeredPanel::new(base.clone(), s, F);
    for _ in 0..5 {
        let axis = nalgebra::Unit::new_normalize(unit(&mut rng));
        let rot = nalgebra::Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..2.0 * PI));
        let p = RisPanel::new(Vec3::new(4.0, -2.0, 1.0), rot * base.normal, rot * base.v, 16, 12, base.spacing, 4, 1.0)
            .unwrap();
        let s = phase_profile(&p, rot * ri, rot * rb, F).unwrap();
        let sp = SteeredPanel::new(p, s, F);
        for d in &probe {
            let (a, b) = (reference.gain(d), sp.gain(&(rot * d)));
            assert!((a - b).abs() <= 1e-7 * a.max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn finer_quantization_approaches_continuous_peak() {
    let p = RisPanel::new(Vec3::zeros(), Vec3::x(), Vec3::z(), 20, 20, lambda() / 2.0, 1, 1.0).unwrap();
    let ri = -Vec3::x();
    let rb = in_plane(&p, 25.0);
    let ideal = SteeredPanel::new(p.clone(), continuous_phase_profile(&p, ri, rb, F).unwrap(), F).gain(&rb);
    let mut last = 0.0;
    for bits in [1, 2, 3, 4, 6, 8, 12] {
        let q = RisPanel {
            quantization_bits: bits,
            ..p.clone()
        };
        let g = SteeredPanel::new(q.clone(), phase_profile(&q, ri, rb, F).unwrap(), F).gain(&rb);
        assert!(g <= ideal * (1.0 + 1e-12));
        if bits >= 2 {
            assert!(g > last * 0.98, "{bits} bits: {g} after {last}");
        }
        last = g;
    }
    assert!((ideal - last) / ideal < 1e-4);
}
