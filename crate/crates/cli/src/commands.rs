//! The four subcommands: `plan`, `benchmark`, `manip-map` and `synth`.
//!
//! All argument structs support a `--config FILE` TOML file supplying any
//! flag by its long name (underscored); explicit flags override the file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use nalgebra::Point3;
use rayon::prelude::*;
use surfplan_core::kinematics::{
    manipulability, solve_ik, tool_target_from_surface, JacobianMode, JointConfig, KinematicChain,
};
use surfplan_core::planner::{plan, PlanResult, PlannerConfig};
use surfplan_core::surface::{tangent_frame, IngestOptions, SurfaceIndex, WorkspaceBox};

use crate::cloud_io::{self, CloudFormat, ReadOptions};
use crate::config::FileConfig;
use crate::report::{
    write_benchmark_csv, write_waypoint_csv, BenchmarkReport, PlanReport, TrialRecord,
};
use crate::robot::{self, RobotDescription, SourceFormat};
use crate::scene::{self, BenchmarkScene, SceneSpec, Shape};

/// Failures split by exit code: bad input (1) vs planning failure (2).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Planning(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Planning(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Planning(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CloudFormatArg {
    Ply,
    Pcd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RobotFormatArg {
    Urdf,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JacobianModeArg {
    Full,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Plane,
    Cylinder,
    SphereCap,
}

/// Planner parameters, all optional: command line beats config file beats
/// built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct PlannerFlags {
    /// Cost blend in [0,1]: 0 = distance only, 1 = manipulability only.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Tangent step fraction in (0,1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sampling iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step cap in meters (default 2.5 x median spacing).
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Near-radius constant.
    #[arg(long)]
    pub near_gamma: Option<f64>,
    /// Goal acceptance radius in meters (default 2 x median spacing).
    #[arg(long)]
    pub goal_tolerance: Option<f64>,
    /// Probability of sampling the goal.
    #[arg(long)]
    pub goal_bias: Option<f64>,
    /// PCA neighbourhood size.
    #[arg(long)]
    pub pca_k: Option<usize>,
    /// Tool stand-off along the surface normal, meters.
    #[arg(long)]
    pub standoff: Option<f64>,
    /// Manipulability clamp floor.
    #[arg(long)]
    pub w_floor: Option<f64>,
    /// Jacobian used by the manipulability index.
    #[arg(long, value_enum)]
    pub jacobian_mode: Option<JacobianModeArg>,
    /// Home configuration, comma-separated radians (IK seed at start/goal).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub home: Option<Vec<f64>>,
}

impl PlannerFlags {
    /// Resolves flags against the config file and the built-in defaults.
    pub fn resolve(&self, file: &FileConfig) -> Result<PlannerConfig, CliError> {
        let defaults = PlannerConfig::default();
        let mode = match self.jacobian_mode {
            Some(JacobianModeArg::Full) => Some(JacobianMode::Full),
            Some(JacobianModeArg::Position) => Some(JacobianMode::Position),
            None => match file.string("jacobian_mode").map_err(input)?.as_deref() {
                None => None,
                Some("full") => Some(JacobianMode::Full),
                Some("position") => Some(JacobianMode::Position),
                Some(other) => {
                    return Err(CliError::Input(format!(
                        "config jacobian_mode `{other}` (use full|position)"
                    )))
                }
            },
        };
        Ok(PlannerConfig {
            alpha: self
                .alpha
                .or(file.f64("alpha").map_err(input)?)
                .unwrap_or(defaults.alpha),
            beta: self
                .beta
                .or(file.f64("beta").map_err(input)?)
                .unwrap_or(defaults.beta),
            max_step: self.max_step.or(file.f64("max_step").map_err(input)?),
            iterations: self
                .iterations
                .or(file.usize("iterations").map_err(input)?)
                .unwrap_or(defaults.iterations),
            near_gamma: self
                .near_gamma
                .or(file.f64("near_gamma").map_err(input)?)
                .unwrap_or(defaults.near_gamma),
            goal_tolerance: self
                .goal_tolerance
                .or(file.f64("goal_tolerance").map_err(input)?),
            goal_bias: self
                .goal_bias
                .or(file.f64("goal_bias").map_err(input)?)
                .unwrap_or(defaults.goal_bias),
            rng_seed: self
                .seed
                .or(file.u64("seed").map_err(input)?)
                .unwrap_or(defaults.rng_seed),
            pca_k: self
                .pca_k
                .or(file.usize("pca_k").map_err(input)?)
                .unwrap_or(defaults.pca_k),
            standoff: self
                .standoff
                .or(file.f64("standoff").map_err(input)?)
                .unwrap_or(defaults.standoff),
            w_floor: self
                .w_floor
                .or(file.f64("w_floor").map_err(input)?)
                .unwrap_or(defaults.w_floor),
            jacobian_mode: mode.unwrap_or(defaults.jacobian_mode),
            home_seed: self
                .home
                .clone()
                .or(file.f64_list("home").map_err(input)?),
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CloudFlags {
    /// Point-cloud file.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Cloud format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<CloudFormatArg>,
    /// Sensor position "x,y,z" used to orient normals (overrides the file).
    #[arg(long, allow_hyphen_values = true)]
    pub viewpoint: Option<String>,
    /// Workspace crop box "x0,y0,z0,x1,y1,z1".
    #[arg(long, allow_hyphen_values = true)]
    pub workspace_box: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RobotFlags {
    /// Robot description file.
    #[arg(long)]
    pub robot: Option<PathBuf>,
    /// Robot format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub robot_format: Option<RobotFormatArg>,
}

pub fn parse_point(s: &str) -> Result<Point3<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Input(format!("`{s}`: expected \"x,y,z\"")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| CliError::Input(format!("`{p}` is not a number")))?;
    }
    Ok(Point3::new(v[0], v[1], v[2]))
}

fn parse_box(s: &str) -> Result<WorkspaceBox, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(CliError::Input(format!(
            "`{s}`: expected \"x0,y0,z0,x1,y1,z1\""
        )));
    }
    let mut v = [0.0; 6];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| CliError::Input(format!("`{p}` is not a number")))?;
    }
    Ok(WorkspaceBox {
        min: [v[0], v[1], v[2]],
        max: [v[3], v[4], v[5]],
    })
}

fn load_cloud(flags: &CloudFlags, file: &FileConfig) -> Result<SurfaceIndex, CliError> {
    let path = flags
        .cloud
        .clone()
        .or(file.string("cloud").map_err(input)?.map(PathBuf::from))
        .ok_or_else(|| CliError::Input("no --cloud file given".into()))?;
    let format = match flags.format {
        Some(CloudFormatArg::Ply) => CloudFormat::PlyAscii,
        Some(CloudFormatArg::Pcd) => CloudFormat::PcdAscii,
        None => match file.string("format").map_err(input)?.as_deref() {
            Some("ply") => CloudFormat::PlyAscii,
            Some("pcd") => CloudFormat::PcdAscii,
            Some(other) => {
                return Err(CliError::Input(format!("config format `{other}` (use ply|pcd)")))
            }
            None => CloudFormat::from_path(&path).ok_or_else(|| {
                CliError::Input(format!(
                    "cannot infer cloud format of `{}`; pass --format",
                    path.display()
                ))
            })?,
        },
    };
    let viewpoint = match flags
        .viewpoint
        .clone()
        .or(file.string("viewpoint").map_err(input)?)
    {
        Some(s) => Some(parse_point(&s)?),
        None => None,
    };
    let workspace_box = match flags
        .workspace_box
        .clone()
        .or(file.string("workspace_box").map_err(input)?)
    {
        Some(s) => Some(parse_box(&s)?),
        None => None,
    };
    let options = ReadOptions {
        viewpoint,
        ingest: IngestOptions {
            workspace_box,
            ..Default::default()
        },
    };
    let cloud = cloud_io::read_cloud(&path, format, &options).map_err(input)?;
    SurfaceIndex::build(cloud).map_err(input)
}

fn load_robot(flags: &RobotFlags, file: &FileConfig) -> Result<RobotDescription, CliError> {
    let path = flags
        .robot
        .clone()
        .or(file.string("robot").map_err(input)?.map(PathBuf::from))
        .ok_or_else(|| CliError::Input("no --robot file given".into()))?;
    let format = match flags.robot_format {
        Some(RobotFormatArg::Urdf) => SourceFormat::UrdfSubset,
        Some(RobotFormatArg::Native) => SourceFormat::Native,
        None => match file.string("robot_format").map_err(input)?.as_deref() {
            Some("urdf") => SourceFormat::UrdfSubset,
            Some("native") => SourceFormat::Native,
            Some(other) => {
                return Err(CliError::Input(format!(
                    "config robot_format `{other}` (use urdf|native)"
                )))
            }
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("urdf") | Some("xml") => SourceFormat::UrdfSubset,
                Some("robot") | Some("txt") => SourceFormat::Native,
                _ => {
                    return Err(CliError::Input(format!(
                        "cannot infer robot format of `{}`; pass --robot-format",
                        path.display()
                    )))
                }
            },
        },
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
    robot::parse(&text, format).map_err(input)
}

/// Snaps a user marker onto the cloud, within the sanity bound of
/// 5 x median spacing.
pub fn snap_to_cloud(index: &SurfaceIndex, p: Point3<f64>, what: &str) -> Result<Point3<f64>, CliError> {
    let nn = index.nearest(&p);
    let limit = 5.0 * index.median_spacing();
    if nn.distance > limit {
        return Err(CliError::Input(format!(
            "{what} ({}, {}, {}) is {:.4} m from the cloud (limit {:.4} m)",
            p.x, p.y, p.z, nn.distance, limit
        )));
    }
    Ok(index.cloud().points()[nn.index])
}

fn load_file_config(config: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    match config {
        Some(path) => FileConfig::load(path).map_err(input),
        None => Ok(FileConfig::empty()),
    }
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Input(format!("cannot write `{}`: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub cloud: CloudFlags,
    #[command(flatten)]
    pub robot: RobotFlags,
    /// Start marker "x,y,z" (snapped to the cloud).
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Goal marker "x,y,z" (snapped to the cloud).
    #[arg(long, allow_hyphen_values = true)]
    pub goal: Option<String>,
    #[command(flatten)]
    pub planner: PlannerFlags,
    /// Plan report JSON output path.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Waypoint CSV output path.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// TOML config file supplying any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let file = load_file_config(&args.config)?;
    let index = load_cloud(&args.cloud, &file)?;
    let desc = load_robot(&args.robot, &file)?;
    let cfg = args.planner.resolve(&file)?;

    let start_raw = args
        .start
        .clone()
        .or(file.string("start").map_err(input)?)
        .ok_or_else(|| CliError::Input("no --start point given".into()))?;
    let goal_raw = args
        .goal
        .clone()
        .or(file.string("goal").map_err(input)?)
        .ok_or_else(|| CliError::Input("no --goal point given".into()))?;
    let start = snap_to_cloud(&index, parse_point(&start_raw)?, "start")?;
    let goal = snap_to_cloud(&index, parse_point(&goal_raw)?, "goal")?;

    let outcome = plan(&index, &desc.chain, start, goal, &cfg);
    let (report, verdict) = match &outcome {
        Ok(result) => {
            let report = PlanReport::from_result(result, cfg.alpha, cfg.rng_seed, cfg.iterations);
            let verdict = result
                .succeeded
                .then_some(())
                .ok_or_else(|| CliError::Planning("goal not reached".into()));
            (report, verdict)
        }
        Err(e) => (
            PlanReport {
                succeeded: false,
                failure_reason: Some(e.to_string()),
                alpha: cfg.alpha,
                seed: cfg.rng_seed,
                iterations: cfg.iterations,
                iterations_used: 0,
                tree_size: 0,
                cost: surfplan_core::planner::CostBreakdown::zero(),
                waypoints: Vec::new(),
            },
            Err(CliError::Planning(e.to_string())),
        ),
    };

    if let Some(path) = &args.out_json {
        write_text(path, &report.to_json())?;
    }
    if let Some(path) = &args.out_csv {
        write_text(path, &write_waypoint_csv(&report.waypoints))?;
    }
    if report.succeeded {
        println!(
            "plan: reached goal with {} waypoints, length {:.6} m, c_total {:.6}, tree {} nodes",
            report.waypoints.len(),
            report.cost.c_dist,
            report.cost.c_total,
            report.tree_size
        );
    } else {
        eprintln!(
            "plan: failed ({})",
            report.failure_reason.as_deref().unwrap_or("unknown")
        );
    }
    verdict
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Scene list (TOML, see docs/formats.md).
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    #[command(flatten)]
    pub robot: RobotFlags,
    /// Comma-separated blend values to pair per seed.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Number of paired trials (seeds 1..=N) when --seeds is not given.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Explicit seed list, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Seed for synthetic scene sampling (shared by all trials).
    #[arg(long)]
    pub scene_seed: Option<u64>,
    /// Worker threads (default: rayon's choice).
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub planner: PlannerFlags,
    /// Per-trial CSV output path.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Records + aggregates JSON output path.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let file = load_file_config(&args.config)?;
    let scenes_path = args
        .scenes
        .clone()
        .or(file.string("scenes").map_err(input)?.map(PathBuf::from))
        .ok_or_else(|| CliError::Input("no --scenes file given".into()))?;
    let text = std::fs::read_to_string(&scenes_path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", scenes_path.display())))?;
    let scenes = scene::parse_scene_file(&text).map_err(input)?;
    if scenes.is_empty() {
        return Err(CliError::Input("scene list is empty".into()));
    }
    let desc = load_robot(&args.robot, &file)?;
    let base_cfg = args.planner.resolve(&file)?;

    let alphas = args
        .alphas
        .clone()
        .or(file.f64_list("alphas").map_err(input)?)
        .unwrap_or_else(|| vec![0.0, 0.7]);
    let seeds: Vec<u64> = match (&args.seeds, args.trials) {
        (Some(s), _) => s.clone(),
        (None, Some(n)) => (1..=n as u64).collect(),
        (None, None) => match file.f64_list("seeds").map_err(input)? {
            Some(v) => v.into_iter().map(|x| x as u64).collect(),
            None => (1..=5).collect(),
        },
    };
    if seeds.is_empty() || alphas.is_empty() {
        return Err(CliError::Input("need at least one seed and one alpha".into()));
    }
    let scene_seed = args
        .scene_seed
        .or(file.u64("scene_seed").map_err(input)?)
        .unwrap_or(0);

    let report = run_benchmark(
        &scenes,
        &desc.chain,
        &base_cfg,
        &alphas,
        &seeds,
        scene_seed,
        args.threads,
    )?;

    let failed = report.records.iter().filter(|r| !r.succeeded).count();
    if failed > 0 {
        eprintln!("benchmark: {failed}/{} trials failed", report.records.len());
    }
    if let Some(path) = &args.out_csv {
        write_text(path, &write_benchmark_csv(&report))?;
    }
    if let Some(path) = &args.out_json {
        write_text(path, &report.to_json())?;
    }
    println!(
        "benchmark: {} records over {} scenes x {} alphas x {} seeds",
        report.records.len(),
        scenes.len(),
        alphas.len(),
        seeds.len()
    );
    Ok(())
}

/// Runs the full trial matrix; one record per (scene, alpha, seed), paired
/// by seed across alphas. Trials run in parallel; records come back sorted.
pub fn run_benchmark(
    scenes: &[BenchmarkScene],
    chain: &KinematicChain,
    base_cfg: &PlannerConfig,
    alphas: &[f64],
    seeds: &[u64],
    scene_seed: u64,
    threads: Option<usize>,
) -> Result<BenchmarkReport, CliError> {
    // Build every scene once, up front.
    let mut prepared: Vec<(String, SurfaceIndex, Point3<f64>, Point3<f64>)> = Vec::new();
    for s in scenes {
        let cloud = scene::generate_scene(&s.spec, scene_seed).map_err(input)?;
        let index = SurfaceIndex::build(cloud).map_err(input)?;
        let start = snap_to_cloud(&index, s.start, &format!("scene `{}` start", s.name))?;
        let goal = snap_to_cloud(&index, s.goal, &format!("scene `{}` goal", s.name))?;
        prepared.push((s.name.clone(), index, start, goal));
    }

    let mut jobs: Vec<(usize, f64, u64)> = Vec::new();
    for (i, _) in prepared.iter().enumerate() {
        for &alpha in alphas {
            for &seed in seeds {
                jobs.push((i, alpha, seed));
            }
        }
    }

    let run_one = |&(i, alpha, seed): &(usize, f64, u64)| -> TrialRecord {
        let (name, index, start, goal) = &prepared[i];
        let cfg = PlannerConfig {
            alpha,
            rng_seed: seed,
            ..base_cfg.clone()
        };
        let t0 = Instant::now();
        let outcome = plan(index, chain, *start, *goal, &cfg);
        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(result) => TrialRecord::from_result(name, seed, alpha, &result, runtime_ms),
            Err(_) => TrialRecord::from_result(
                name,
                seed,
                alpha,
                &PlanResult {
                    succeeded: false,
                    waypoints: Vec::new(),
                    cost: surfplan_core::planner::CostBreakdown::zero(),
                    tree_size: 0,
                    iterations_used: 0,
                },
                runtime_ms,
            ),
        }
    };

    let records: Vec<TrialRecord> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(input)?
            .install(|| jobs.par_iter().map(run_one).collect()),
        None => jobs.par_iter().map(run_one).collect(),
    };
    Ok(BenchmarkReport::from_records(records))
}

// ---------------------------------------------------------------------------
// manip-map
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ManipMapArgs {
    #[command(flatten)]
    pub cloud: CloudFlags,
    #[command(flatten)]
    pub robot: RobotFlags,
    /// Evaluate every k-th cloud point only.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Tool stand-off along the surface normal, meters.
    #[arg(long)]
    pub standoff: Option<f64>,
    /// PCA neighbourhood size.
    #[arg(long)]
    pub pca_k: Option<usize>,
    /// Jacobian used by the manipulability index.
    #[arg(long, value_enum)]
    pub jacobian_mode: Option<JacobianModeArg>,
    /// Home configuration, comma-separated radians (IK seed).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub home: Option<Vec<f64>>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_manip_map(args: &ManipMapArgs) -> Result<(), CliError> {
    let file = load_file_config(&args.config)?;
    let index = load_cloud(&args.cloud, &file)?;
    let desc = load_robot(&args.robot, &file)?;
    let standoff = args
        .standoff
        .or(file.f64("standoff").map_err(input)?)
        .unwrap_or(0.0);
    let pca_k = args
        .pca_k
        .or(file.usize("pca_k").map_err(input)?)
        .unwrap_or(20);
    let mode = match args.jacobian_mode {
        Some(JacobianModeArg::Position) => JacobianMode::Position,
        _ => JacobianMode::Full,
    };
    let home = match args.home.clone().or(file.f64_list("home").map_err(input)?) {
        Some(h) => {
            if h.len() != desc.chain.dof() {
                return Err(CliError::Input(format!(
                    "home has {} joints, robot has {}",
                    h.len(),
                    desc.chain.dof()
                )));
            }
            JointConfig(h)
        }
        None => desc.chain.limit_midpoint(),
    };
    if args.stride == 0 {
        return Err(CliError::Input("stride must be at least 1".into()));
    }
    let out_path = args
        .out
        .clone()
        .or(file.string("out").map_err(input)?.map(PathBuf::from))
        .ok_or_else(|| CliError::Input("no --out file given".into()))?;

    let text = manip_map_csv(&index, &desc.chain, &home, standoff, pca_k, mode, args.stride);
    write_text(&out_path, &text)?;
    println!(
        "manip-map: {} points written to {}",
        (index.len() + args.stride - 1) / args.stride,
        out_path.display()
    );
    Ok(())
}

/// CSV of per-point manipulability: `x,y,z,w,ik_ok`. Unreachable points are
/// flagged, not dropped; their `w` field is empty.
pub fn manip_map_csv(
    index: &SurfaceIndex,
    chain: &KinematicChain,
    home: &JointConfig,
    standoff: f64,
    pca_k: usize,
    mode: JacobianMode,
    stride: usize,
) -> String {
    let mut out = String::from("x,y,z,w,ik_ok\n");
    for (i, p) in index.cloud().points().iter().enumerate() {
        if i % stride != 0 {
            continue;
        }
        let solved = tangent_frame(index, p, pca_k)
            .ok()
            .and_then(|frame| solve_ik(chain, &tool_target_from_surface(&frame, standoff), home).ok());
        match solved {
            Some(q) => {
                let w = manipulability(chain, &q, mode);
                out.push_str(&format!("{},{},{},{},true\n", p.x, p.y, p.z, w));
            }
            None => {
                out.push_str(&format!("{},{},{},,false\n", p.x, p.y, p.z));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Analytic surface to sample.
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    /// Shape parameters, comma-separated:
    /// plane: sx,sy; cylinder: radius,height,arc; sphere-cap: radius,cap_angle.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    /// Number of surface samples.
    #[arg(long)]
    pub count: Option<usize>,
    /// Gaussian noise along the normal, meters.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pose translation "x,y,z".
    #[arg(long, allow_hyphen_values = true)]
    pub pose_xyz: Option<String>,
    /// Pose rotation "roll,pitch,yaw" in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub pose_rpy: Option<String>,
    /// Output cloud path (.ply or .pcd).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let file = load_file_config(&args.config)?;
    let shape_arg = args.shape.or_else(|| {
        match file.string("shape").ok().flatten().as_deref() {
            Some("plane") => Some(ShapeArg::Plane),
            Some("cylinder") => Some(ShapeArg::Cylinder),
            Some("sphere_cap") | Some("sphere-cap") => Some(ShapeArg::SphereCap),
            _ => None,
        }
    });
    let shape_arg = shape_arg.ok_or_else(|| CliError::Input("no --shape given".into()))?;
    let params = args
        .params
        .clone()
        .or(file.f64_list("params").map_err(input)?)
        .unwrap_or_default();
    let need = |n: usize, usage: &str| -> Result<(), CliError> {
        if params.len() != n {
            return Err(CliError::Input(format!(
                "--params for this shape needs {n} values: {usage}"
            )));
        }
        Ok(())
    };
    let shape = match shape_arg {
        ShapeArg::Plane => {
            need(2, "sx,sy")?;
            Shape::Plane {
                size: [params[0], params[1]],
            }
        }
        ShapeArg::Cylinder => {
            need(3, "radius,height,arc")?;
            Shape::Cylinder {
                radius: params[0],
                height: params[1],
                arc: params[2],
            }
        }
        ShapeArg::SphereCap => {
            need(2, "radius,cap_angle")?;
            Shape::SphereCap {
                radius: params[0],
                cap_angle: params[1],
            }
        }
    };
    let xyz = match args.pose_xyz.clone().or(file.string("pose_xyz").map_err(input)?) {
        Some(s) => parse_point(&s)?,
        None => Point3::origin(),
    };
    let rpy = match args.pose_rpy.clone().or(file.string("pose_rpy").map_err(input)?) {
        Some(s) => parse_point(&s)?,
        None => Point3::origin(),
    };
    let spec = SceneSpec {
        shape,
        sample_count: args
            .count
            .or(file.usize("count").map_err(input)?)
            .unwrap_or(10_000),
        noise_sigma: args.noise.or(file.f64("noise").map_err(input)?).unwrap_or(0.0),
        pose: nalgebra::Isometry3::from_parts(
            nalgebra::Translation3::new(xyz.x, xyz.y, xyz.z),
            nalgebra::UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z),
        ),
        workspace_box: None,
    };
    let seed = args.seed.or(file.u64("seed").map_err(input)?).unwrap_or(0);
    let cloud = scene::generate_scene(&spec, seed).map_err(input)?;

    let out_path = args
        .out
        .clone()
        .or(file.string("out").map_err(input)?.map(PathBuf::from))
        .ok_or_else(|| CliError::Input("no --out file given".into()))?;
    let text = match CloudFormat::from_path(&out_path) {
        Some(CloudFormat::PcdAscii) => cloud_io::write_pcd(&cloud),
        _ => cloud_io::write_ply(&cloud),
    };
    write_text(&out_path, &text)?;
    println!("synth: {} points written to {}", cloud.len(), out_path.display());
    Ok(())
}
