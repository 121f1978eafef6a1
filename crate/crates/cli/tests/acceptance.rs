//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riscov_cli::selfcheck::{polygons, random_half_space, random_unit, shoebox};
use riscov_core::coverage::{
    add_ris_contributions, compare_schemes, region_average, sweep_environment, AvgDomain, CoverageGrid, Gain,
};
use riscov_core::deploy::{load_deployment, DeploymentConfig, RisSelection};
use riscov_core::linkbudget::{dual_hop_factors, dual_hop_ris_power, los_power, watts_to_dbm, RadioConfig};
use riscov_core::raytracer::{find_paths, PathKind, PathPolicy};
use riscov_core::ris::{phase_profile, RisPanel, SteeredPanel, SteeringState};
use riscov_core::scene::{load_scene, Scene};
use riscov_core::{Vec3, SPEED_OF_LIGHT};
use riscov_oracle as oracle;

const F: f64 = 332e9;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn lambda() -> f64 {
    SPEED_OF_LIGHT / F
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn steering_phases() -> Verdict {
    let started = Instant::now();
    let mut failures = Vec::new();

    let p = RisPanel::new(Vec3::zeros(), Vec3::z(), Vec3::y(), 6, 6, lambda() / 2.0, 8, 1.0).unwrap();
    let s = phase_profile(&p, -Vec3::z(), Vec3::z(), F).unwrap();
    if s.phases.iter().any(|&x| x != 0.0) {
        failures.push("broadside phases not all zero".to_string());
    }
    let p = RisPanel::new(Vec3::zeros(), Vec3::z(), Vec3::y(), 1, 3, lambda() / 2.0, 8, 1.0).unwrap();
    let beam = Vec3::z() * (PI / 6.0).cos() + p.u * (PI / 6.0).sin();
    let s = phase_profile(&p, -Vec3::z(), beam, F).unwrap();
    if s.phase(&p, 0, 2) != PI / 2.0 {
        failures.push(format!("30 degree element phase {}", s.phase(&p, 0, 2)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut cases = 0;
    let mut elements = 0;
    while cases < 1000 {
        let n = random_unit(&mut rng);
        let bits = [1u32, 2, 4, 8][cases % 4];
        let Ok(panel) = RisPanel::new(
            Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.0..3.0)),
            n,
            random_unit(&mut rng),
            rng.gen_range(1..10),
            rng.gen_range(1..10),
            lambda() * rng.gen_range(0.2..1.5),
            bits,
            1.0,
        ) else {
            continue;
        };
        let ri = random_half_space(&mut rng, &n, -1.0);
        let rb = random_half_space(&mut rng, &n, 1.0);
        let s = phase_profile(&panel, ri, rb, F).unwrap();
        for r in 0..panel.rows {
            for c in 0..panel.cols {
                elements += 1;
                let got = s.phase(&panel, r, c);
                let want = oracle::steering_phase(arr(&panel.element_offset(r, c)), arr(&ri), arr(&rb), F, bits);
                if (got - want).abs() > 1e-12 {
                    failures.push(format!("case {cases} ({r},{c}): {got} vs {want}"));
                }
                if bits == 1 && got != 0.0 && got != PI {
                    failures.push(format!("case {cases}: 1-bit phase {got}"));
                }
            }
        }
        cases += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 10.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    verdict(
        failures.is_empty(),
        format!("{cases} random cases, {elements} elements, 3 hand cases, {} mismatches, {secs:.3} s", failures.len()),
    )
}

fn friis() -> Verdict {
    let got = watts_to_dbm(los_power(&RadioConfig::from_dbm(F, 0.0), 1.0, 1.0, 1.0));
    verdict((got - -82.87).abs() <= 0.01, format!("{got:.4} dBm at 1 m (expected -82.87 +/- 0.01)"))
}

fn image_method() -> Verdict {
    let started = Instant::now();
    let desc = shoebox();
    let scene = Scene::from_description(&desc).unwrap();
    let polys = polygons(&desc);
    let policy = PathPolicy {
        max_reflections: 2,
        enable_scattering: false,
        tile_edge: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut bad = 0;
    let mut paths = 0;
    for _ in 0..100 {
        let mut pt = || Vec3::new(rng.gen_range(0.05..4.95), rng.gen_range(0.05..3.95), rng.gen_range(0.05..2.95));
        let (a, b) = (pt(), pt());
        let mut got: Vec<f64> = find_paths(&scene, a, b, policy)
            .iter()
            .filter(|p| p.kind != PathKind::Los)
            .map(|p| p.total_length)
            .collect();
        let mut want: Vec<f64> = oracle::image_paths(&polys, arr(&a), arr(&b), 2).iter().map(|p| p.length).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        paths += want.len();
        if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| (g - w).abs() > 1e-9) {
            bad += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        bad == 0 && secs < 30.0,
        format!("100 pairs, {paths} oracle paths, {bad} mismatched pairs, {secs:.3} s"),
    )
}

fn beam_steering() -> Verdict {
    let p = RisPanel::new(Vec3::zeros(), Vec3::x(), Vec3::z(), 100, 100, lambda() / 2.0, 8, 0.0).unwrap();
    let dir = |deg: f64| p.normal * deg.to_radians().cos() + p.u * deg.to_radians().sin();
    let s = phase_profile(&p, -Vec3::x(), dir(30.0), F).unwrap();
    let sp = SteeredPanel::new(p.clone(), s, F);
    let (peak, _) = (-900..=900)
        .map(|k| k as f64 * 0.1)
        .map(|deg| (deg, sp.gain(&dir(deg))))
        .fold((f64::NAN, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let uniform = SteeredPanel::new(p.clone(), SteeringState::uniform(&p, -Vec3::x()), F).gain(&Vec3::x());
    let err = rel(uniform, 1e4);
    verdict(
        (peak - 30.0).abs() <= 0.5 && err <= 1e-9,
        format!("peak at {peak:.1} deg for 30 deg command; broadside gain {uniform:.9} (rel err {err:.1e})"),
    )
}

fn dual_hop() -> Verdict {
    let cfg = RadioConfig::from_dbm(F, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let cone = |rng: &mut ChaCha8Rng, o: &Vec3, axis: &Vec3, range: std::ops::Range<f64>| {
        let d = rng.gen_range(range);
        loop {
            let v = random_unit(rng);
            if v.dot(axis) > 0.35 {
                return o + v * d;
            }
        }
    };
    let panel = |rng: &mut ChaCha8Rng, c: Vec3, n: Vec3, from: &Vec3, to: &Vec3| {
        let size = rng.gen_range(4..24);
        let p = RisPanel::new(c, n, random_unit(rng), size, size, lambda() / 2.0, [1, 2, 4, 8][size % 4], 1.0);
        let p = p.ok()?;
        let s = phase_profile(&p, (c - from).normalize(), (to - c).normalize(), F).ok()?;
        Some(SteeredPanel::new(p, s, F))
    };
    let offsets = |p: &RisPanel| -> Vec<[f64; 3]> {
        (0..p.rows)
            .flat_map(|r| (0..p.cols).map(move |c| (r, c)))
            .map(|(r, c)| arr(&p.element_offset(r, c)))
            .collect()
    };
    while done < 100 {
        let o1 = Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(0.0..3.0));
        let n1 = random_unit(&mut rng);
        let tx = cone(&mut rng, &o1, &n1, 2.0..25.0);
        let o2 = cone(&mut rng, &o1, &n1, 3.0..40.0);
        let n2 = ((o1 - o2).normalize() + random_unit(&mut rng) * 0.5).normalize();
        if (o1 - o2).normalize().dot(&n2) < 0.2 {
            continue;
        }
        let target = cone(&mut rng, &o2, &n2, 5.0..15.0);
        // receiver near the second panel's main lobe
        let rx = o2 + ((target - o2).normalize() + random_unit(&mut rng) * 0.05).normalize() * rng.gen_range(1.0..30.0);
        let (Some(r1), Some(r2)) = (panel(&mut rng, o1, n1, &tx, &o2), panel(&mut rng, o2, n2, &o1, &target)) else {
            continue;
        };
        let (gt, gr) = (rng.gen_range(1.0..2000.0), rng.gen_range(0.5..10.0));
        let Ok(got) = dual_hop_ris_power(&cfg, gt, gr, &r1, &r2, &tx, &rx, None) else {
            continue;
        };
        let f = dual_hop_factors(&cfg, gt, gr, &r1, &r2, &tx, &rx, None).unwrap();
        // factors recomputed from scratch: distances, projections, array sums
        let hop = (o2 - o1).normalize();
        let out = (rx - o2).normalize();
        let f1 = oracle::array_gain(&offsets(&r1.panel), &r1.state.phases, arr(&n1), 1.0, arr(&r1.state.incident), arr(&hop), F);
        let f2 = oracle::array_gain(&offsets(&r2.panel), &r2.state.phases, arr(&n2), 1.0, arr(&r2.state.incident), arr(&out), F);
        let want = oracle::dual_hop_watts(
            1e-3,
            gt,
            (o1 - tx).norm(),
            (o1 - tx).normalize().dot(&-n1),
            r1.panel.area(),
            f1,
            (o2 - o1).norm(),
            hop.dot(&-n2),
            r2.panel.area(),
            f2,
            (rx - o2).norm(),
            gr,
            F,
        );
        worst = worst.max(rel(got, want)).max(rel(f.power(), want));
        done += 1;
    }
    verdict(worst <= 1e-12, format!("100 random geometries, worst relative error {worst:.2e}"))
}

struct SchemeRun {
    base: CoverageGrid,
    ris1: CoverageGrid,
    both: CoverageGrid,
    regions: Vec<(String, riscov_core::scene::Region)>,
    secs: f64,
}

fn run_scheme(scene: &Scene, cfg: &DeploymentConfig) -> SchemeRun {
    let started = Instant::now();
    let spec = cfg.grid_spec(scene).unwrap();
    let base = sweep_environment(scene, &cfg.scheme(RisSelection::None).unwrap(), &spec, None).unwrap();
    let ris1 = add_ris_contributions(scene, &cfg.scheme(RisSelection::First).unwrap(), &base, None).unwrap();
    let both = add_ris_contributions(scene, &cfg.scheme(RisSelection::Both).unwrap(), &base, None).unwrap();
    SchemeRun {
        base,
        ris1,
        both,
        regions: cfg.resolved_regions(scene),
        secs: started.elapsed().as_secs_f64(),
    }
}

fn region<'a>(run: &'a SchemeRun, label: &str) -> &'a riscov_core::scene::Region {
    &run.regions.iter().find(|(l, _)| l == label).expect("region configured").1
}

fn gain_of(run: &SchemeRun, variant: &CoverageGrid, label: &str) -> Gain {
    compare_schemes(&run.base, variant, &run.regions, AvgDomain::Linear)
        .unwrap()
        .into_iter()
        .find(|c| c.region == label)
        .unwrap()
        .gain
}

fn scheme1(run: &SchemeRun) -> Verdict {
    let g1 = gain_of(run, &run.ris1, "Region 1");
    let r2 = region(run, "Region 2");
    let base2 = region_average(&run.base, r2, AvgDomain::Linear);
    let dual2 = region_average(&run.both, r2, AvgDomain::Linear);
    let ok = matches!(g1, Gain::Db(g) if g >= 10.0)
        && base2.covered < base2.cells
        && dual2.dbm.is_some()
        && run.secs < 600.0;
    let dual = dual2.dbm.map_or("undefined".into(), |d| format!("{d:.2} dBm"));
    verdict(
        ok,
        format!(
            "Region 1 gain {g1} dB; Region 2 baseline {}/{} cells uncovered, dual-hop average {dual}; {:.1} s",
            base2.cells - base2.covered,
            base2.cells,
            run.secs
        ),
    )
}

fn scheme2(run: &SchemeRun) -> Verdict {
    let g1 = gain_of(run, &run.ris1, "Region 1");
    let g3 = gain_of(run, &run.ris1, "Region 3");
    let positive = |g: Gain| matches!(g, Gain::Db(x) if x > 0.0);
    verdict(positive(g1) && positive(g3), format!("RIS1 gains: Region 1 {g1} dB, Region 3 {g3} dB"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = std::process::Command::new(env!("CARGO_BIN_EXE_riscov"))
            .args(["sweep", "--scene", &data("hall.scene.json"), "--deploy", &data("scheme1.deploy.json")])
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .output()
            .expect("binary runs");
        if !o.status.success() {
            return verdict(false, format!("sweep with --workers {workers} exited {:?}", o.status.code()));
        }
        outputs.push(out);
    }
    let read = |p: &Path, name: &str| std::fs::read(p.join(name)).unwrap();
    let same = ["heatmap.csv", "regions.csv"].iter().all(|n| read(&outputs[0], n) == read(&outputs[1], n));
    let cells = String::from_utf8(read(&outputs[0], "heatmap.csv")).unwrap().lines().count() - 1;
    verdict(same, format!("scheme-1 sweep with --workers 1 and 4: {cells} cells, CSVs byte-identical: {same}"))
}

fn monotonicity(run: &SchemeRun) -> Verdict {
    let mut violations = 0;
    for ((b, one), two) in run.base.cells.iter().zip(&run.ris1.cells).zip(&run.both.cells) {
        violations += (one.total() < b.total()) as usize + (two.total() < one.total()) as usize;
    }
    verdict(
        violations == 0,
        format!("{} cells x 2 panel additions, {violations} decreases", run.base.cells.len()),
    )
}

fn main() {
    let hall = load_scene(data("hall.scene.json")).expect("hall scene");
    let mut verdicts = vec![
        ("steering phase oracle", steering_phases()),
        ("free-space power at 1 m", friis()),
        ("image-method oracle", image_method()),
        ("beam steering", beam_steering()),
        ("dual-hop factorization", dual_hop()),
    ];
    let s1 = run_scheme(&hall, &load_deployment(data("scheme1.deploy.json")).unwrap());
    verdicts.push(("scheme 1 coverage", scheme1(&s1)));
    let s2 = run_scheme(&hall, &load_deployment(data("scheme2.deploy.json")).unwrap());
    verdicts.push(("scheme 2 coverage", scheme2(&s2)));
    verdicts.push(("determinism across workers", determinism()));
    verdicts.push(("monotonicity", monotonicity(&s1)));

    let mut failed = 0;
    for (i, (name, v)) in verdicts.iter().enumerate() {
        println!("criterion {} {}: {} ({})", i + 1, name, if v.passed { "PASS" } else { "FAIL" }, v.detail);
        failed += (!v.passed) as usize;
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
