use riscov_core::coverage::{
    add_ris_contributions, heatmap_csv, region_average, sweep, sweep_environment, AvgDomain, DeploymentScheme,
    GridSpec, PanelDeployment,
};
use riscov_core::linkbudget::{los_power, Mechanism, RadioConfig};
use riscov_core::raytracer::PathPolicy;
use riscov_core::ris::RisPanel;
use riscov_core::scene::{Region, Scene, SceneDescription};
use riscov_core::{Vec3, SPEED_OF_LIGHT};

const F: f64 = 332e9;

fn radio() -> RadioConfig {
    RadioConfig::from_dbm(F, 0.0)
}

/// 12 x 10 x 3 m room with a partition that hides the north-east corner
/// from the transmitter.
fn room() -> Scene {
    let mut d = SceneDescription::default();
    d.add_material("concrete", 5.24, 0.235, 0.1);
    d.add_material("floor", 7.0, 0.2, 0.1);
    d.add_room([0.0, 0.0, 0.0], [12.0, 10.0, 3.0], "concrete");
    d.facets[0].material = "floor".into();
    d.add_block([6.0, 5.0, 0.0], [6.2, 10.0, 3.0], "concrete");
    d.add_region("hidden", [8.0, 11.0], [7.0, 9.5], 1.5);
    Scene::from_description(&d).unwrap()
}

fn panel(center: Vec3, normal: Vec3, size: usize) -> RisPanel {
    RisPanel::new(center, normal, Vec3::z(), size, size, SPEED_OF_LIGHT / F / 2.0, 8, 1.0).unwrap()
}

fn scheme(panels: usize) -> DeploymentScheme {
    let mut s = DeploymentScheme::plain(radio(), Vec3::new(1.0, 8.0, 1.5), PathPolicy::default());
    let all = [
        PanelDeployment {
            name: "RIS1".into(),
            panel: panel(Vec3::new(3.0, 0.05, 1.5), Vec3::y(), 32),
            steer_target: Vec3::new(11.9, 4.0, 1.5),
        },
        PanelDeployment {
            name: "RIS2".into(),
            panel: panel(Vec3::new(11.95, 4.0, 1.5), -Vec3::x(), 32),
            steer_target: Vec3::new(9.5, 8.5, 1.5),
        },
    ];
    s.panels = all[..panels].to_vec();
    s
}

fn grid(cell: f64) -> GridSpec {
    GridSpec {
        x: [0.0, 12.0],
        y: [0.0, 10.0],
        cell,
        z: 1.5,
    }
}

#[test]
fn empty_scene_gives_free_space() {
    let scene = Scene::from_description(&SceneDescription::default()).unwrap();
    let tx = Vec3::new(0.3, 0.2, 2.0);
    let s = DeploymentScheme::plain(radio(), tx, PathPolicy::default());
    let spec = grid(1.0);
    let g = sweep(&scene, &s, &spec, Some(1)).unwrap();
    for j in 0..spec.ny() {
        for i in 0..spec.nx() {
            let c = g.cell(i, j);
            let d = (spec.cell_center(i, j) - tx).norm();
            assert_eq!(c.total(), c.mechanism(Mechanism::Los));
            assert!((c.total() - los_power(&radio(), 1.0, 1.0, d)).abs() <= 1e-15 * c.total());
        }
    }
}

#[test]
fn cells_are_independent() {
    let scene = room();
    let s = scheme(2);
    let full = sweep(&scene, &s, &grid(1.0), Some(1)).unwrap();
    for (i, j) in [(2, 3), (9, 8), (11, 0)] {
        let c = grid(1.0).cell_center(i, j);
        let one = GridSpec {
            x: [c.x - 0.5, c.x + 0.5],
            y: [c.y - 0.5, c.y + 0.5],
            cell: 1.0,
            z: 1.5,
        };
        let alone = sweep(&scene, &s, &one, Some(1)).unwrap();
        assert_eq!(alone.cells.len(), 1);
        assert_eq!(alone.cells[0], *full.cell(i, j));
    }
}

#[test]
fn panels_never_remove_power() {
    let scene = room();
    let spec = grid(0.5);
    let env = sweep_environment(&scene, &scheme(0), &spec, Some(1)).unwrap();
    let one = add_ris_contributions(&scene, &scheme(1), &env, Some(1)).unwrap();
    let two = add_ris_contributions(&scene, &scheme(2), &env, Some(1)).unwrap();
    let mut raised = 0;
    for ((a, b), c) in env.cells.iter().zip(&one.cells).zip(&two.cells) {
        assert!(b.total() >= a.total() && c.total() >= b.total());
        raised += (c.total() > a.total()) as usize;
    }
    assert!(raised > 0);

    // the partition hides part of the corner; the second panel reaches it
    let hidden = scene.region("hidden").unwrap();
    let base = region_average(&env, hidden, AvgDomain::Linear);
    let dual = region_average(&two, hidden, AvgDomain::Linear);
    assert!(dual.covered >= base.covered);
    assert!(dual.dbm.unwrap() > base.dbm.unwrap_or(f64::NEG_INFINITY));
}

#[test]
fn worker_count_does_not_change_results() {
    let scene = room();
    let s = scheme(2);
    let a = sweep(&scene, &s, &grid(0.5), Some(1)).unwrap();
    let b = sweep(&scene, &s, &grid(0.5), Some(3)).unwrap();
    let c = sweep(&scene, &s, &grid(0.5), None).unwrap();
    assert_eq!(a.cells, b.cells);
    assert_eq!(a.cells, c.cells);
    assert_eq!(heatmap_csv(&a), heatmap_csv(&b));
}

#[test]
fn enclosed_cells_are_uncovered() {
    // the transmitter sits in a closed box; nothing outside it is reached
    let mut d = SceneDescription::default();
    d.add_material("m", 5.0, 0.1, 0.2);
    d.add_room([0.0, 0.0, 0.0], [10.0, 10.0, 3.0], "m");
    d.add_block([1.0, 1.0, 0.0], [3.0, 3.0, 3.0], "m");
    d.add_facet(&[[1.0, 1.0, 2.9], [1.0, 3.0, 2.9], [3.0, 3.0, 2.9], [3.0, 1.0, 2.9]], "m");
    let scene = Scene::from_description(&d).unwrap();
    let s = DeploymentScheme::plain(radio(), Vec3::new(2.0, 2.0, 1.5), PathPolicy::default());
    let g = sweep(&scene, &s, &grid(1.0), Some(1)).unwrap();
    let outside = Region {
        name: "outside".into(),
        x_min: 4.0,
        x_max: 10.0,
        y_min: 0.0,
        y_max: 10.0,
        z: 1.5,
    };
    let avg = region_average(&g, &outside, AvgDomain::Linear);
    assert_eq!(avg.covered, 0);
    assert_eq!(avg.dbm, None);
    assert!(g.cell(2, 2).is_covered());
    assert!(heatmap_csv(&g).lines().any(|l| l.ends_with(',')));
}

