//! Command-line front end for the volumetric edge pipeline.
//!
//! Subcommands: `voxelize`, `extract`, `fit`, `eval`, `perturb`, `pipeline`.
//! Set `NERVE_LOG=debug` (or another filter) for verbose logging.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nerve::fit::fitted_to_json;
use nerve::metrics::{
    chamfer, default_masks, grid_report, hausdorff_avg, sample_curve_set, EvalReport,
    DEFAULT_SAMPLES_PER_CURVE,
};
use nerve::perturb::parse_length_expr;
use nerve::pwl::{extract_pwl, PathsJson};
use nerve::voxelize::{default_chord_tolerance, voxelize_with_stats, PointRule};
use nerve::{
    CubeMask, CurveSet, NerveGrid, ParametricCurve, PerturbSpec, PipelineConfig, RefineParams,
};

#[derive(Parser)]
#[command(name = "nerve", version, about = "Volumetric edge grid pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a curve-set JSON file into a grid file.
    Voxelize(VoxelizeArgs),
    /// Extract, refine, and trace the PWL curve graph from a grid file.
    Extract(ExtractArgs),
    /// Fit parametric curves to traced paths.
    Fit(FitArgs),
    /// Compare a prediction (grid or curves) against ground truth.
    Eval(EvalArgs),
    /// Apply seeded corruption to a grid file.
    Perturb(PerturbArgs),
    /// Run voxelize -> extract -> fit -> eval for one or more shapes.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct VoxelizeArgs {
    /// Curve-set JSON file.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Output grid file.
    #[arg(long, short = 'o')]
    output: PathBuf,
    #[arg(long, short = 'r', default_value_t = 32)]
    resolution: u32,
    /// Point rule: "midpoint" or "qef:<lambda>".
    #[arg(long, default_value = "midpoint")]
    point_rule: String,
    /// Chord tolerance; accepts "l/10"-style expressions. Defaults to l/10.
    #[arg(long)]
    chord_tol: Option<String>,
}

#[derive(Args)]
struct RefineFlags {
    /// Reconnection distance; accepts "4l" or absolute values.
    #[arg(long, default_value = "4l")]
    delta_r: String,
    /// Minimum vertex count for dangling paths.
    #[arg(long, default_value_t = 5)]
    n_p: usize,
    /// Multi-path Chamfer threshold; accepts "2l" or absolute values.
    #[arg(long, default_value = "2l")]
    delta_p: String,
    /// Remove all degree-1-terminated paths.
    #[arg(long, default_value_t = false)]
    brep_strict: bool,
    /// Skip refinement entirely.
    #[arg(long, default_value_t = false)]
    no_refine: bool,
}

impl RefineFlags {
    fn params(&self, edge_length: f64) -> Result<RefineParams> {
        let mut p = RefineParams::for_edge_length(edge_length);
        p.delta_r = parse_length_expr(&self.delta_r, edge_length)?;
        p.delta_p = parse_length_expr(&self.delta_p, edge_length)?;
        p.n_p = self.n_p;
        p.brep_strict = self.brep_strict;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Input grid file.
    #[arg(long, short = 'g')]
    grid: PathBuf,
    /// Output OBJ polyline file.
    #[arg(long)]
    obj: PathBuf,
    /// Output paths JSON file.
    #[arg(long)]
    paths: PathBuf,
    #[command(flatten)]
    refine: RefineFlags,
}

#[derive(Args)]
struct FitArgs {
    /// Paths JSON file produced by `extract`.
    #[arg(long, short = 'p')]
    paths: PathBuf,
    /// Output fitted curve-set JSON.
    #[arg(long, short = 'o')]
    output: PathBuf,
    #[arg(long, default_value_t = 0.001)]
    circle_threshold: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted grid file or curve-set JSON.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth grid file or curve-set JSON.
    #[arg(long)]
    gt: PathBuf,
    /// Samples per curve for CD/HD.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CURVE)]
    samples: usize,
    /// Mask for orientation/point metrics: "gt" or "pred" occupancy.
    #[arg(long, default_value = "gt")]
    mask_ep: String,
    /// Emit CSV instead of JSON.
    #[arg(long, default_value_t = false)]
    csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Input grid file.
    #[arg(long, short = 'g')]
    grid: PathBuf,
    /// Output grid file.
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Gaussian point jitter std; accepts "l/4"-style expressions.
    #[arg(long, default_value = "0")]
    sigma: String,
    #[arg(long, default_value_t = 0.0)]
    occ_fp: f64,
    #[arg(long, default_value_t = 0.0)]
    occ_fn: f64,
    #[arg(long, default_value_t = 0.0)]
    orient_flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dilation (in cubes) of the occupied set used as the surface mask for
    /// false positives.
    #[arg(long, default_value_t = 2)]
    surface_dilate: u32,
}

#[derive(Args)]
struct PipelineArgs {
    /// One or more curve-set JSON files.
    #[arg(long, short = 'i', required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output directory (one subdirectory per shape).
    #[arg(long, short = 'o')]
    output_dir: PathBuf,
    #[arg(long, short = 'r', default_value_t = 32)]
    resolution: u32,
    /// Point rule: "midpoint" or "qef:<lambda>".
    #[arg(long, default_value = "midpoint")]
    point_rule: String,
    #[arg(long)]
    chord_tol: Option<String>,
    #[arg(long, default_value_t = 0.001)]
    circle_threshold: f64,
    #[command(flatten)]
    refine: RefineFlags,
    /// Perturbation sigma; accepts "l/4"-style expressions.
    #[arg(long)]
    seed_perturb_sigma: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    occ_fp: f64,
    #[arg(long, default_value_t = 0.0)]
    occ_fn: f64,
    #[arg(long, default_value_t = 0.0)]
    orient_flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for processing shapes (0 = all cores).
    #[arg(long, short = 'j', default_value_t = 0)]
    jobs: usize,
}

fn parse_point_rule(text: &str) -> Result<PointRule> {
    if text == "midpoint" {
        return Ok(PointRule::Midpoint);
    }
    if let Some(rest) = text.strip_prefix("qef") {
        let lambda = match rest.strip_prefix(':') {
            Some(v) => v.parse::<f64>().context("invalid qef lambda")?,
            None if rest.is_empty() => nerve::voxelize::DEFAULT_QEF_LAMBDA,
            _ => bail!("unknown point rule '{text}'"),
        };
        return Ok(PointRule::Qef { lambda });
    }
    bail!("unknown point rule '{text}' (expected 'midpoint' or 'qef:<lambda>')")
}

fn load_curves(path: &Path) -> Result<CurveSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading curve set {}", path.display()))?;
    CurveSet::from_json_str(&text)
        .with_context(|| format!("parsing curve set {}", path.display()))
}

fn load_grid(path: &Path) -> Result<NerveGrid> {
    let bytes = fs::read(path).with_context(|| format!("reading grid {}", path.display()))?;
    NerveGrid::from_bytes(&bytes).with_context(|| format!("parsing grid {}", path.display()))
}

fn write_report(report: &EvalReport, csv: bool, output: Option<&Path>) -> Result<()> {
    let text = if csv {
        report.csv()
    } else {
        serde_json::to_string_pretty(report)? + "\n"
    };
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_voxelize(args: &VoxelizeArgs) -> Result<()> {
    let curves = load_curves(&args.input)?;
    let rule = parse_point_rule(&args.point_rule)?;
    let l = 2.0 / args.resolution as f64;
    let tol = match &args.chord_tol {
        Some(expr) => parse_length_expr(expr, l)?,
        None => default_chord_tolerance(args.resolution),
    };
    let (grid, stats) = voxelize_with_stats(&curves, args.resolution, rule, tol)?;
    fs::write(&args.output, grid.to_bytes())
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "occupied cubes: {} | junction cubes: {} ({:.4}% of occupied) | orientation flags: {}",
        stats.occupied_cubes,
        stats.junction_cubes,
        100.0 * stats.junction_fraction().unwrap_or(0.0),
        stats.orientation_flags
    );
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let grid = load_grid(&args.grid)?;
    let extraction = extract_pwl(&grid);
    for inc in &extraction.inconsistencies {
        log::warn!(
            "dropping orientation flag into unoccupied cube at ({}, {}, {}) axis {}",
            inc.cube.0,
            inc.cube.1,
            inc.cube.2,
            inc.axis
        );
    }
    let graph = if args.refine.no_refine {
        extraction.graph
    } else {
        let params = args.refine.params(grid.edge_length())?;
        nerve::refine(&extraction.graph, &params)
    };
    if graph.is_empty() {
        log::warn!("extracted graph is empty");
    }
    fs::write(&args.obj, graph.to_obj())
        .with_context(|| format!("writing {}", args.obj.display()))?;
    let paths = graph.trace_paths();
    let paths_json = PathsJson::from_graph(&graph, &paths);
    fs::write(&args.paths, serde_json::to_string_pretty(&paths_json)?)
        .with_context(|| format!("writing {}", args.paths.display()))?;
    println!(
        "vertices: {} | edges: {} | paths: {} ({} closed) | dropped flags: {}",
        graph.vertex_count(),
        graph.edge_count(),
        paths.len(),
        paths.iter().filter(|p| p.closed).count(),
        extraction.inconsistencies.len()
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let text = fs::read_to_string(&args.paths)
        .with_context(|| format!("reading paths {}", args.paths.display()))?;
    let paths: PathsJson = serde_json::from_str(&text)?;
    if paths.paths.is_empty() {
        log::warn!("no paths to fit");
    }
    let mut fitted = Vec::new();
    let mut skipped = 0usize;
    for p in &paths.paths {
        let points: Vec<nerve::Vec3> = p
            .points
            .iter()
            .map(|q| nerve::Vec3::new(q[0], q[1], q[2]))
            .collect();
        let result = if p.closed {
            match nerve::fit_circle(&points) {
                Ok(c) if c.residual < args.circle_threshold => Ok(c),
                _ => {
                    let mut looped = points.clone();
                    if let Some(first) = looped.first().copied() {
                        looped.push(first);
                    }
                    nerve::fit_bspline(&looped)
                }
            }
        } else {
            nerve::fit_bspline(&points)
        };
        match result {
            Ok(c) => fitted.push(c),
            Err(err) => {
                skipped += 1;
                log::warn!("skipping path with {} points: {err}", p.points.len());
            }
        }
    }
    let json = fitted_to_json(&fitted);
    fs::write(&args.output, serde_json::to_string_pretty(&json)?)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "fitted {} curves ({} circles, {} splines, {} skipped)",
        fitted.len(),
        fitted.iter().filter(|c| c.is_circle()).count(),
        fitted.iter().filter(|c| !c.is_circle()).count(),
        skipped
    );
    Ok(())
}

fn is_grid_file(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 6];
    use std::io::Read;
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let n = f.read(&mut magic)?;
    Ok(n == 6 && &magic == b"NERVE1")
}

/// Converts fitted/ground-truth curve JSON into sample points for CD/HD.
fn curve_samples(path: &Path, samples: usize) -> Result<Vec<nerve::Vec3>> {
    let set = load_curves(path)?;
    Ok(sample_curve_set(&set, samples))
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pred_is_grid = is_grid_file(&args.pred)?;
    let gt_is_grid = is_grid_file(&args.gt)?;
    let mut report = EvalReport::default();
    match (pred_is_grid, gt_is_grid) {
        (true, true) => {
            let pred = load_grid(&args.pred)?;
            let gt = load_grid(&args.gt)?;
            let (mask_o, mut mask_e, mut mask_p) = default_masks(&gt);
            match args.mask_ep.as_str() {
                "gt" => {}
                "pred" => {
                    mask_e = pred.occupancy_mask();
                    mask_p = mask_e.clone();
                }
                other => bail!("unknown --mask-ep '{other}' (expected 'gt' or 'pred')"),
            }
            let grids = grid_report(&pred, &gt, &mask_o, &mask_e, &mask_p)?;
            report.r_o = grids.r_o;
            report.p_o = grids.p_o;
            report.c_e = grids.c_e;
            report.d_p = grids.d_p;
            // PWL comparison via edge midpoints
            let pm = extract_pwl(&pred).graph.sample_edge_midpoints();
            let gm = extract_pwl(&gt).graph.sample_edge_midpoints();
            if !pm.is_empty() && !gm.is_empty() {
                report.cd = Some(chamfer(&pm, &gm)?);
                report.hd = Some(hausdorff_avg(&pm, &gm)?);
            }
        }
        (false, false) => {
            let pred = curve_samples(&args.pred, args.samples)?;
            let gt = curve_samples(&args.gt, args.samples)?;
            report.cd = Some(chamfer(&pred, &gt)?);
            report.hd = Some(hausdorff_avg(&pred, &gt)?);
        }
        (pred_grid, _) => {
            let (grid_path, curve_path) = if pred_grid {
                (&args.pred, &args.gt)
            } else {
                (&args.gt, &args.pred)
            };
            let grid = load_grid(grid_path)?;
            let gm = extract_pwl(&grid).graph.sample_edge_midpoints();
            let cs = curve_samples(curve_path, args.samples)?;
            if !gm.is_empty() {
                let (x, y) = if pred_grid { (&gm, &cs) } else { (&cs, &gm) };
                report.cd = Some(chamfer(x, y)?);
                report.hd = Some(hausdorff_avg(x, y)?);
            }
        }
    }
    write_report(&report, args.csv, args.output.as_deref())
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let grid = load_grid(&args.grid)?;
    let sigma = parse_length_expr(&args.sigma, grid.edge_length())?;
    let spec = PerturbSpec {
        point_sigma: sigma,
        occ_fp: args.occ_fp,
        occ_fn: args.occ_fn,
        orient_flip: args.orient_flip,
        seed: args.seed,
    };
    let mask = if args.surface_dilate == 0 {
        CubeMask::full(grid.resolution())?
    } else {
        grid.occupancy_mask().dilate(args.surface_dilate)
    };
    let out = nerve::perturb(&grid, &spec, &mask)?;
    fs::write(&args.output, out.to_bytes())
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "occupied: {} -> {} | orientation flags: {} -> {}",
        grid.occupied_count(),
        out.occupied_count(),
        grid.orientation_count(),
        out.orientation_count()
    );
    Ok(())
}

fn shape_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "shape".to_string())
}

fn run_one_pipeline(args: &PipelineArgs, input: &Path) -> Result<EvalReport> {
    let curves = load_curves(input)?;
    let l = 2.0 / args.resolution as f64;
    let cfg = PipelineConfig {
        resolution: args.resolution,
        point_rule: parse_point_rule(&args.point_rule)?,
        chord_tolerance: match &args.chord_tol {
            Some(expr) => Some(parse_length_expr(expr, l)?),
            None => None,
        },
        refine: Some(args.refine.params(l)?),
        refine_enabled: !args.refine.no_refine,
        circle_threshold: args.circle_threshold,
        perturb: match &args.seed_perturb_sigma {
            Some(expr) => Some(PerturbSpec {
                point_sigma: parse_length_expr(expr, l)?,
                occ_fp: args.occ_fp,
                occ_fn: args.occ_fn,
                orient_flip: args.orient_flip,
                seed: args.seed,
            }),
            None if args.occ_fp > 0.0 || args.occ_fn > 0.0 || args.orient_flip > 0.0 => {
                Some(PerturbSpec {
                    point_sigma: 0.0,
                    occ_fp: args.occ_fp,
                    occ_fn: args.occ_fn,
                    orient_flip: args.orient_flip,
                    seed: args.seed,
                })
            }
            None => None,
        },
        samples_per_curve: DEFAULT_SAMPLES_PER_CURVE,
    };
    let result = nerve::run_pipeline(&curves, &cfg)?;

    let dir = args.output_dir.join(shape_stem(input));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("grid.nerve"), result.grid.to_bytes())?;
    fs::write(dir.join("pwl.obj"), result.graph.to_obj())?;
    let paths_json = PathsJson::from_graph(&result.graph, &result.paths);
    fs::write(dir.join("paths.json"), serde_json::to_string_pretty(&paths_json)?)?;
    let fitted: Vec<ParametricCurve> = result.fitted.clone();
    fs::write(
        dir.join("fitted.json"),
        serde_json::to_string_pretty(&fitted_to_json(&fitted))?,
    )?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&result.report)? + "\n",
    )?;
    Ok(result.report)
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("building worker pool")?;
    let reports: Vec<(String, Result<EvalReport>)> = pool.install(|| {
        use rayon::prelude::*;
        args.input
            .par_iter()
            .map(|input| (shape_stem(input), run_one_pipeline(args, input)))
            .collect()
    });

    let mut cds = Vec::new();
    let mut hds = Vec::new();
    let mut failed = 0usize;
    for (name, report) in &reports {
        match report {
            Ok(r) => {
                println!(
                    "{name}: CD {} HD {}",
                    r.cd.map_or("undefined".into(), |v| format!("{v:.6e}")),
                    r.hd.map_or("undefined".into(), |v| format!("{v:.6e}")),
                );
                if let (Some(cd), Some(hd)) = (r.cd, r.hd) {
                    cds.push(cd);
                    hds.push(hd);
                }
            }
            Err(err) => {
                failed += 1;
                eprintln!("{name}: failed: {err:#}");
            }
        }
    }
    if !cds.is_empty() {
        println!(
            "summary: shapes {} | mean CD {:.6e} | mean HD {:.6e}",
            cds.len(),
            cds.iter().sum::<f64>() / cds.len() as f64,
            hds.iter().sum::<f64>() / hds.len() as f64
        );
    }
    if failed > 0 {
        bail!("{failed} shape(s) failed");
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("NERVE_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Voxelize(args) => cmd_voxelize(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
