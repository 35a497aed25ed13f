use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use sigma_vortex::asymptotics::{fit_decay, sweep_endpoints, DecayFit, SweepOptions};
use sigma_vortex::config::{validate_config, BetaParam, ConfigFile, VortexConfig};
use sigma_vortex::error::{AnalysisError, ConfigError, GridError, SolveError};
use sigma_vortex::greens::{gamma_convolve, spread_targets, Cell, SourceField, Support};
use sigma_vortex::grid::{build_disk_grid, radial_grid_for, DiskOptions, Mesh};
use sigma_vortex::io::{self, RunManifest};
use sigma_vortex::singular::{assemble, SingularData};
use sigma_vortex::solver::{solve as run_solve, IterationRecord, Problem, SolveOptions, SolveResult};
use sigma_vortex::verify::{run_verify, VerifyOptions};

use crate::{ConvolveArgs, DumpArgs, GridArgs, SolveArgs, SweepArgs, VerifyArgs};

const DEFAULT_RADIAL_RMAX: f64 = 1e4;
const DEFAULT_RADIAL_NODES: usize = 2001;

/// A failed run, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: config file, flags, grid parameters, output location. Exit 1.
    Config(String),
    /// The numerics did not deliver. Exit 2.
    Solver(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Solver(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Config(c) => c.into(),
            SolveError::Grid(g) => g.into(),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Solve(s) => s.into(),
            AnalysisError::Precondition(_) | AnalysisError::AnnulusOutsideGrid { .. } => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn write_failed(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("cannot write {}: {e}", path.display()))
}

pub struct Context {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn load(&self) -> Result<(ConfigFile, VortexConfig<f64>), Failure> {
        let path = self.config.as_ref().ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
        let file = ConfigFile::load(path)?;
        let config = validate_config(&file.raw())?;
        Ok((file, config))
    }

    fn csv(&self, name: &str, manifest: &RunManifest, cols: &[&str], rows: Vec<Vec<io::Cell>>) -> Result<(), Failure> {
        let path = self.path(name);
        io::write_csv_file(&path, manifest, cols, rows).map_err(|e| write_failed(&path, e))
    }

    fn json<S: Serialize>(&self, name: &str, value: &S) -> Result<(), Failure> {
        let path = self.path(name);
        io::write_json_file(&path, value).map_err(|e| write_failed(&path, e))
    }

    /// Wall-clock log, kept apart from the reproducible outputs.
    fn log_run(&self, manifest: &RunManifest, start: Instant) -> Result<(), Failure> {
        let stamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let log = json!({
            "manifest": manifest,
            "finished_unix": stamp,
            "wall_clock_s": start.elapsed().as_secs_f64(),
        });
        self.json(&format!("run_{}.json", manifest.subcommand), &log)
    }
}

fn beta_of(flag: Option<f64>, file: &ConfigFile) -> Result<f64, Failure> {
    flag.or(file.beta).ok_or_else(|| Failure::Config("beta is required (--beta or `beta` in the config)".into()))
}

/// The grid a solve or dump runs on.
enum GridChoice {
    Radial { r_max: f64, nodes: usize },
    Disk(DiskOptions),
}

impl GridChoice {
    fn resolve(args: &GridArgs, file: &ConfigFile, config: &VortexConfig<f64>) -> Self {
        if args.radial {
            GridChoice::Radial {
                r_max: args.rmax.or(file.rmax).unwrap_or(DEFAULT_RADIAL_RMAX),
                nodes: args.nodes.or(file.radial_nodes).unwrap_or(DEFAULT_RADIAL_NODES),
            }
        } else {
            let r_max = args.rmax.or(file.rmax).unwrap_or(4.0 * config.r0());
            let h = args.h.or(file.h).unwrap_or(config.varrho() / 8.0);
            GridChoice::Disk(DiskOptions::new(r_max, h))
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            GridChoice::Radial { r_max, nodes } => json!({"kind": "radial", "rmax": r_max, "nodes": nodes}),
            GridChoice::Disk(o) => json!({"kind": "disk", "rmax": o.r_max, "h": o.h, "node_cap": o.node_cap}),
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    manifest: &'a RunManifest,
    beta: f64,
    b_beta: f64,
    residual: f64,
    mass_defect: f64,
    relative_mass_defect: f64,
    interior_mass: f64,
    exterior_mass: f64,
    expected_mass: f64,
    flux: f64,
    converged: bool,
    bracket_width: Option<f64>,
    iterations: usize,
    decay: Option<DecayFit>,
    decay_note: Option<String>,
    log: &'a [IterationRecord],
}

fn decay_for<M: Mesh<f64>>(
    mesh: &M,
    r: &SolveResult<f64>,
    config: &VortexConfig<f64>,
    tol: f64,
) -> Result<DecayFit, String> {
    let r_max = mesh.outer_radius();
    let window = [10.0 * config.r0(), 0.1 * r_max];
    if window[0] >= window[1] {
        return Err(format!("domain too small for a decay window (rmax = {r_max})"));
    }
    fit_decay(&mesh.radii(), &r.v, r.b_beta, r.beta, window, 10.0 * tol).map_err(|e| e.to_string())
}

fn finish_solve<M: Mesh<f64>>(
    ctx: &Context,
    manifest: &mut RunManifest,
    mesh: &M,
    data: &SingularData<f64>,
    config: &VortexConfig<f64>,
    opts: &SolveOptions,
) -> Result<(), Failure> {
    let mut r = run_solve(&Problem::new(mesh, data), opts)?;
    let (decay, decay_note) = match decay_for(mesh, &r, config, opts.tol) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    r.decay = decay;
    manifest.outputs = vec!["solve.json".into(), "field.csv".into()];
    let report = SolveReport {
        manifest,
        beta: r.beta,
        b_beta: r.b_beta,
        residual: r.residual,
        mass_defect: r.mass_defect,
        relative_mass_defect: r.relative_mass_defect(),
        interior_mass: r.interior_mass,
        exterior_mass: r.exterior_mass,
        expected_mass: r.expected_mass,
        flux: r.flux,
        converged: r.converged,
        bracket_width: r.bracket_width,
        iterations: r.iterations.len(),
        decay,
        decay_note,
        log: &r.iterations,
    };
    ctx.json("solve.json", &report)?;
    let pts = mesh.points();
    let rows: Vec<Vec<io::Cell>> = if mesh.is_radial() {
        pts.iter().zip(&r.v).map(|(p, &v)| vec![p[0].into(), v.into()]).collect()
    } else {
        pts.iter().zip(&r.v).map(|(p, &v)| vec![p[0].into(), p[1].into(), v.into()]).collect()
    };
    let cols: &[&str] = if mesh.is_radial() { &["r", "v"] } else { &["x", "y", "v"] };
    ctx.csv("field.csv", manifest, cols, rows)?;
    ctx.say(format!(
        "beta = {}: b_beta = {:.10}, residual {:.2e}, relative mass defect {:.2e}, {} iterations",
        r.beta,
        r.b_beta,
        r.residual,
        r.relative_mass_defect(),
        r.iterations.len()
    ));
    Ok(())
}

pub fn solve(ctx: &Context, args: SolveArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let (file, config) = ctx.load()?;
    let beta = BetaParam::new(beta_of(args.beta, &file)?, &config)?;
    if !(args.tol > 0.0) {
        return Err(Failure::Config(format!("--tol must be positive, got {}", args.tol)));
    }
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, method: args.method, ..SolveOptions::default() };
    let grid = GridChoice::resolve(&args.grid, &file, &config);
    let mut manifest = RunManifest::new("solve", ctx.seed);
    manifest.config = Some(config.to_raw());
    manifest.grid = grid.describe();
    manifest.options = json!({"beta": beta.value(), "solver": opts});
    match grid {
        GridChoice::Radial { r_max, nodes } => {
            let mesh = radial_grid_for(&config, r_max, nodes)?;
            let data = assemble(&config, beta, &mesh)?;
            finish_solve(ctx, &mut manifest, &mesh, &data, &config, &opts)?;
        }
        GridChoice::Disk(o) => {
            let mesh = build_disk_grid(o, &config)?;
            let data = assemble(&config, beta, &mesh)?;
            finish_solve(ctx, &mut manifest, &mesh, &data, &config, &opts)?;
        }
    }
    ctx.log_run(&manifest, start)
}

pub fn sweep(ctx: &Context, args: SweepArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let (file, config) = ctx.load()?;
    let opts = SweepOptions {
        r_max: args.rmax.or(file.rmax).unwrap_or(DEFAULT_RADIAL_RMAX),
        nodes: args.nodes.or(file.radial_nodes).unwrap_or(DEFAULT_RADIAL_NODES),
        ..SweepOptions::default()
    };
    let record = sweep_endpoints(&config, &args.epsilons, args.endpoint, &opts)?;
    let verdict = record.verdict();
    let name = match args.endpoint {
        sigma_vortex::asymptotics::Endpoint::Upper => "upper",
        sigma_vortex::asymptotics::Endpoint::Lower => "lower",
    };
    let (csv_name, json_name) = (format!("sweep_{name}.csv"), format!("sweep_{name}_verdict.json"));
    let mut manifest = RunManifest::new("sweep", ctx.seed);
    manifest.config = Some(config.to_raw());
    manifest.grid = json!({"kind": "radial", "rmax": opts.r_max, "nodes": opts.nodes});
    manifest.options = json!({"endpoint": args.endpoint, "epsilons": args.epsilons, "solver": opts.solve});
    manifest.outputs = vec![csv_name.clone(), json_name.clone()];
    let rows = record
        .points
        .iter()
        .map(|p| {
            let status = p.error.as_deref().map_or("ok".to_string(), |e| e.replace([',', '\n'], ";"));
            vec![
                p.beta.into(),
                p.epsilon.into(),
                p.b_beta.into(),
                p.b_over_logeps.into(),
                p.decay_slope.into(),
                p.mass_defect.into(),
                io::Cell::Text(status),
            ]
        })
        .collect();
    ctx.csv(
        &csv_name,
        &manifest,
        &["beta", "epsilon", "b_beta", "b_over_logeps", "decay_slope", "mass_defect", "note"],
        rows,
    )?;
    ctx.json(&json_name, &json!({"manifest": manifest, "verdict": verdict}))?;
    for p in record.by_epsilon() {
        match p.b_beta {
            Some(b) => ctx.say(format!(
                "eps = {:e}: beta = {}, b_beta = {b:.6}, b/ln eps = {:.4}",
                p.epsilon,
                p.beta,
                b / p.epsilon.ln()
            )),
            None => ctx.say(format!("eps = {:e}: FAILED {}", p.epsilon, p.error.as_deref().unwrap_or(""))),
        }
    }
    ctx.say(format!(
        "band {:.3} ({}), ratio trend {}: {}",
        verdict.band,
        if verdict.band_pass { "<= 2" } else { "> 2" },
        if verdict.ratio_trend_pass { "towards 1" } else { "not towards 1" },
        if verdict.pass { "PASS" } else { "FAIL" }
    ));
    ctx.log_run(&manifest, start)?;
    if verdict.failures > 0 {
        return Err(Failure::Solver(format!("{} sweep point(s) failed; see {csv_name}", verdict.failures)));
    }
    Ok(())
}

pub fn verify(ctx: &Context, args: VerifyArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let opts =
        VerifyOptions { seed: ctx.seed, inject_g_sign_error: args.inject_g_sign_error, ..VerifyOptions::default() };
    let report = run_verify(&args.suite, &opts);
    let mut manifest = RunManifest::new("verify", ctx.seed);
    manifest.options = json!({"suites": report.outcomes.iter().map(|o| o.suite).collect::<Vec<_>>(), "verify": opts});
    manifest.outputs = vec!["verify.json".into()];
    ctx.json("verify.json", &json!({"manifest": manifest, "report": report}))?;
    ctx.say(report.table().trim_end());
    ctx.log_run(&manifest, start)?;
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.outcomes.iter().filter(|o| !o.pass).map(|o| o.suite.name()).collect();
        Err(Failure::Solver(format!("suites failed: {}", failed.join(", "))))
    }
}

/// Side of a uniform lattice: the smallest positive gap between distinct x.
fn infer_side(xs: &[f64]) -> Option<f64> {
    let mut u: Vec<f64> = xs.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    u.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).min_by(f64::total_cmp)
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn convolve(ctx: &Context, args: ConvolveArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let bad = |p: &Path, e: String| Failure::Config(format!("{}: {e}", p.display()));
    let cols = io::read_columns(open(&args.source)?, &["x", "y", "value"]).map_err(|e| bad(&args.source, e))?;
    let sides = if io::has_column(open(&args.source)?, "side").map_err(|e| bad(&args.source, e))? {
        io::read_columns(open(&args.source)?, &["side"]).map_err(|e| bad(&args.source, e))?.remove(0)
    } else {
        let h = infer_side(&cols[0])
            .ok_or_else(|| Failure::Config("cannot infer the cell side; add a `side` column".into()))?;
        vec![h; cols[0].len()]
    };
    if cols[0].is_empty() {
        return Err(Failure::Config(format!("{}: no source cells", args.source.display())));
    }
    let cells: Vec<Cell<f64>> = (0..cols[0].len())
        .map(|i| Cell { center: [cols[0][i], cols[1][i]], side: sides[i], value: cols[2][i] })
        .collect();
    let probe = SourceField::from_cells(cells.clone(), Support::Compact { radius: 0.0 });
    let source = SourceField::from_cells(cells, Support::Compact { radius: probe.support_radius() });
    let targets: Vec<[f64; 2]> = match (&args.targets, args.radii.is_empty()) {
        (Some(path), _) => {
            let t = io::read_columns(open(path)?, &["x", "y"]).map_err(|e| bad(path, e))?;
            t[0].iter().zip(&t[1]).map(|(&x, &y)| [x, y]).collect()
        }
        (None, false) => spread_targets(&args.radii),
        (None, true) => return Err(Failure::Config("give --targets FILE or --radii r1,r2,...".into())),
    };
    let values = gamma_convolve(&source, &targets);
    let mut manifest = RunManifest::new("convolve", ctx.seed);
    manifest.options = json!({
        "source": args.source,
        "cells": source.cells().len(),
        "mass": source.mass(),
        "l1": source.l1(),
        "support_radius": source.support_radius(),
    });
    manifest.outputs = vec!["convolve.csv".into()];
    let rows = targets.iter().zip(&values).map(|(t, &v)| vec![t[0].into(), t[1].into(), v.into()]).collect();
    ctx.csv("convolve.csv", &manifest, &["x", "y", "value"], rows)?;
    ctx.say(format!(
        "{} targets from {} cells, source mass {:.3e}",
        targets.len(),
        source.cells().len(),
        source.mass()
    ));
    ctx.log_run(&manifest, start)
}

fn dump_rows<M: Mesh<f64>>(mesh: &M, data: &SingularData<f64>) -> (Vec<&'static str>, Vec<Vec<io::Cell>>) {
    let f = data.fields();
    let radial = mesh.is_radial();
    let mut cols = if radial { vec!["r"] } else { vec!["x", "y"] };
    cols.extend(["v1", "v2", "v3", "K_beta", "g_beta", "u0"]);
    let rows = mesh
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row: Vec<io::Cell> = if radial { vec![p[0].into()] } else { vec![p[0].into(), p[1].into()] };
            row.extend([f.v1[i], f.v2[i], f.v3[i], data.k_beta(i), data.g()[i], data.u0(i)].map(io::Cell::from));
            row
        })
        .collect();
    (cols, rows)
}

pub fn dump_singular(ctx: &Context, args: DumpArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let (file, config) = ctx.load()?;
    let beta = BetaParam::new(beta_of(args.beta, &file)?, &config)?;
    let grid = GridChoice::resolve(&args.grid, &file, &config);
    let mut manifest = RunManifest::new("dump-singular", ctx.seed);
    manifest.config = Some(config.to_raw());
    manifest.grid = grid.describe();
    manifest.options = json!({"beta": beta.value()});
    manifest.outputs = vec!["singular.csv".into()];
    let (cols, rows, mass) = match grid {
        GridChoice::Radial { r_max, nodes } => {
            let mesh = radial_grid_for(&config, r_max, nodes)?;
            let data = assemble(&config, beta, &mesh)?;
            let (c, r) = dump_rows(&mesh, &data);
            (c, r, data.relative_mass_defect())
        }
        GridChoice::Disk(o) => {
            let mesh = build_disk_grid(o, &config)?;
            let data = assemble(&config, beta, &mesh)?;
            let (c, r) = dump_rows(&mesh, &data);
            (c, r, data.relative_mass_defect())
        }
    };
    let n = rows.len();
    ctx.csv("singular.csv", &manifest, &cols, rows)?;
    ctx.say(format!("{n} nodes, relative mass defect of g_beta {mass:.2e}"));
    ctx.log_run(&manifest, start)
}
