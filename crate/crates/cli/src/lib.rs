//! `riscov` command-line front end.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 runtime
//! error (including failed self-checks).

pub mod selfcheck;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use riscov_core::coverage::{
    add_ris_contributions, compare_schemes, export_heatmap, region_average, sweep, sweep_environment, AvgDomain,
    CoverageGrid, Gain, GridSpec, HeatmapFormat,
};
use riscov_core::deploy::{load_deployment, DeployError, DeploymentConfig, RisSelection};
use riscov_core::linkbudget::Mechanism;
use riscov_core::scene::{load_scene, Region, Scene, SceneError};
use serde_json::json;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "riscov", version, about = "Ray-traced THz coverage with single- and dual-hop RIS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scene and deployment pair and report problems.
    Validate(ConfigArgs),
    /// Sweep the receiver grid for one RIS selection.
    Sweep(SweepArgs),
    /// Sweep baseline, RIS1-only and RIS1+RIS2 and tabulate region averages.
    Compare(RunArgs),
    /// Run the built-in oracle suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub deploy: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the grid cell size in meters.
    #[arg(long)]
    pub cell: Option<f64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Region averaging domain.
    #[arg(long, default_value = "linear")]
    pub avg_domain: AvgDomain,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Environment paths only.
    #[arg(long, conflicts_with = "ris")]
    pub no_ris: bool,
    /// Panels to deploy: `1` or `1,2` (default: all configured).
    #[arg(long)]
    pub ris: Option<String>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Scale factor applied to the speed of light in the link-budget side
    /// of the Friis suite.
    #[arg(long, hide = true)]
    pub perturb_c: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Invalid { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Parse(e.to_string()),
        }
    }
}

impl From<DeployError> for Failure {
    fn from(e: DeployError) -> Self {
        match e {
            DeployError::Invalid { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Parse(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Selfcheck(a) => cmd_selfcheck(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

struct Inputs {
    scene: Scene,
    deploy: DeploymentConfig,
    scene_sha256: String,
    deploy_sha256: String,
}

fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn load_inputs(a: &ConfigArgs) -> Result<Inputs, Failure> {
    let scene_sha256 = sha256_file(&a.scene)?;
    let deploy_sha256 = sha256_file(&a.deploy)?;
    let scene = load_scene(&a.scene)?;
    let deploy = load_deployment(&a.deploy)?;
    deploy.validate(&scene)?;
    Ok(Inputs {
        scene,
        deploy,
        scene_sha256,
        deploy_sha256,
    })
}

pub fn cmd_validate(a: &ConfigArgs) -> Result<(), Failure> {
    let inp = load_inputs(a)?;
    let spec = inp.deploy.grid_spec(&inp.scene)?;
    println!(
        "scene: {} facets, {} materials, {} regions",
        inp.scene.facets().len(),
        inp.scene.materials().len(),
        inp.scene.regions().len()
    );
    println!(
        "deployment '{}': {} RIS panel(s), grid {} x {} cells of {} m at z = {} m",
        inp.deploy.name,
        inp.deploy.ris.len(),
        spec.nx(),
        spec.ny(),
        spec.cell,
        spec.z
    );
    println!("OK");
    Ok(())
}

fn grid_for(inp: &Inputs, cell: Option<f64>) -> Result<GridSpec, Failure> {
    let mut spec = inp.deploy.grid_spec(&inp.scene)?;
    if let Some(c) = cell {
        spec.cell = c;
        spec.validate().map_err(|e| Failure::Validation(format!("--cell: {e}")))?;
    }
    Ok(spec)
}

fn resolved_workers(w: Option<usize>) -> Result<usize, Failure> {
    match w {
        Some(0) => Err(Failure::Validation("--workers must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn selection_arg(name: RisSelection) -> &'static str {
    match name {
        RisSelection::None => "none",
        RisSelection::First => "1",
        RisSelection::Both => "1,2",
    }
}

fn file_stem(sel: RisSelection) -> &'static str {
    match sel {
        RisSelection::None => "baseline",
        RisSelection::First => "ris1",
        RisSelection::Both => "ris1_ris2",
    }
}

fn path_counts(grid: &CoverageGrid) -> serde_json::Value {
    let counts = grid.path_counts();
    let mut m = serde_json::Map::new();
    for mech in Mechanism::ALL {
        m.insert(mech.label().to_string(), json!(counts[mech.index()]));
    }
    serde_json::Value::Object(m)
}

fn condition_entry(sel: RisSelection, grid: &CoverageGrid) -> serde_json::Value {
    json!({
        "condition": sel.label(),
        "ris": selection_arg(sel),
        "cells": grid.cells.len(),
        "covered_cells": grid.covered_cells(),
        "path_counts": path_counts(grid),
        "diagnostics": grid.diagnostics,
    })
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_heatmaps(grid: &CoverageGrid, dir: &Path, stem: &str) -> Result<(), Failure> {
    export_heatmap(grid, &dir.join(format!("{stem}.csv")), HeatmapFormat::Csv).map_err(runtime)?;
    export_heatmap(grid, &dir.join(format!("{stem}.ppm")), HeatmapFormat::Ppm).map_err(runtime)
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    dir: &Path,
    command: &str,
    a: &RunArgs,
    inp: &Inputs,
    spec: &GridSpec,
    workers: usize,
    conditions: Vec<serde_json::Value>,
    started: Instant,
) -> Result<(), Failure> {
    let manifest = json!({
        "tool": "riscov",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": {
            "scene": { "path": a.config.scene.display().to_string(), "sha256": inp.scene_sha256 },
            "deploy": { "path": a.config.deploy.display().to_string(), "sha256": inp.deploy_sha256 },
        },
        "grid": {
            "x": spec.x, "y": spec.y, "cell_m": spec.cell, "z_m": spec.z,
            "nx": spec.nx(), "ny": spec.ny(), "cells": spec.len(),
        },
        "avg_domain": a.avg_domain.label(),
        "workers": workers,
        "conditions": conditions,
        "duration_s": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n";
    write_text(&dir.join("manifest.json"), &text)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_dbm(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

fn region_rows(grid: &CoverageGrid, regions: &[(String, Region)], domain: AvgDomain) -> String {
    let mut out = String::from("region,scene_region,avg_dbm,cells,covered_cells\n");
    for (label, r) in regions {
        let avg = region_average(grid, r, domain);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(label),
            csv_field(&r.name),
            fmt_dbm(avg.dbm),
            avg.cells,
            avg.covered
        );
    }
    out
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let run = &a.run;
    let inp = load_inputs(&run.config)?;
    let selection = if a.no_ris {
        RisSelection::None
    } else if let Some(list) = &a.ris {
        RisSelection::parse(list).map_err(|e| Failure::Validation(format!("--ris: {e}")))?
    } else {
        match inp.deploy.ris.len() {
            0 => RisSelection::None,
            1 => RisSelection::First,
            _ => RisSelection::Both,
        }
    };
    let spec = grid_for(&inp, run.cell)?;
    let workers = resolved_workers(run.workers)?;
    let scheme = inp.deploy.scheme(selection)?;
    let grid = sweep(&inp.scene, &scheme, &spec, Some(workers)).map_err(runtime)?;

    create_out(&run.out)?;
    write_heatmaps(&grid, &run.out, "heatmap")?;
    let regions = inp.deploy.resolved_regions(&inp.scene);
    let table = region_rows(&grid, &regions, run.avg_domain);
    write_text(&run.out.join("regions.csv"), &table)?;
    write_manifest(
        &run.out,
        "sweep",
        run,
        &inp,
        &spec,
        workers,
        vec![condition_entry(selection, &grid)],
        started,
    )?;

    println!("{}: {} of {} cells covered", selection.label(), grid.covered_cells(), grid.cells.len());
    for d in &grid.diagnostics {
        println!("note: {d}");
    }
    print!("{table}");
    Ok(())
}

pub fn cmd_compare(a: &RunArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let inp = load_inputs(&a.config)?;
    let selections: &[RisSelection] = match inp.deploy.ris.len() {
        0 => return Err(Failure::Validation("compare needs at least one RIS panel in the deployment".into())),
        1 => &[RisSelection::None, RisSelection::First],
        _ => &[RisSelection::None, RisSelection::First, RisSelection::Both],
    };
    let spec = grid_for(&inp, a.cell)?;
    let workers = resolved_workers(a.workers)?;
    let base_scheme = inp.deploy.scheme(RisSelection::None)?;
    let env = sweep_environment(&inp.scene, &base_scheme, &spec, Some(workers)).map_err(runtime)?;
    let mut grids = Vec::new();
    for &sel in selections {
        let g = if sel == RisSelection::None {
            env.clone()
        } else {
            add_ris_contributions(&inp.scene, &inp.deploy.scheme(sel)?, &env, Some(workers)).map_err(runtime)?
        };
        grids.push((sel, g));
    }

    create_out(&a.out)?;
    let regions = inp.deploy.resolved_regions(&inp.scene);
    let mut table = String::from("condition");
    for (label, _) in &regions {
        table.push(',');
        table.push_str(&csv_field(label));
    }
    table.push('\n');
    for (sel, g) in &grids {
        table.push_str(&csv_field(sel.label()));
        for (_, r) in &regions {
            table.push(',');
            table.push_str(&fmt_dbm(region_average(g, r, a.avg_domain).dbm));
        }
        table.push('\n');
    }
    let mut gains = String::from("condition,region,baseline_dbm,variant_dbm,gain_db\n");
    for (sel, g) in grids.iter().skip(1) {
        for row in compare_schemes(&env, g, &regions, a.avg_domain).map_err(runtime)? {
            let gain = match row.gain {
                Gain::Db(x) => format!("{x:.6}"),
                other => other.to_string(),
            };
            let _ = writeln!(
                gains,
                "{},{},{},{},{}",
                csv_field(sel.label()),
                csv_field(&row.region),
                fmt_dbm(row.baseline),
                fmt_dbm(row.variant),
                csv_field(&gain)
            );
        }
    }
    write_text(&a.out.join("region_table.csv"), &table)?;
    write_text(&a.out.join("region_gains.csv"), &gains)?;
    for (sel, g) in &grids {
        write_heatmaps(g, &a.out, file_stem(*sel))?;
    }
    let conditions = grids.iter().map(|(s, g)| condition_entry(*s, g)).collect();
    write_manifest(&a.out, "compare", a, &inp, &spec, workers, conditions, started)?;

    println!("region averages ({} averaging), dBm:", a.avg_domain.label());
    print!("{table}");
    print!("{gains}");
    Ok(())
}

pub fn cmd_selfcheck(a: &SelfcheckArgs) -> Result<(), Failure> {
    let mut opts = selfcheck::SelfcheckOptions::default();
    if let Some(k) = a.perturb_c {
        opts.speed_of_light *= k;
    }
    let results = selfcheck::run_all(&opts);
    for r in &results {
        println!("{:8} {}  ({})", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} self-check suite(s) failed")));
    }
    println!("all suites passed");
    Ok(())
}
