//! Synthetic test scenes: analytic surfaces sampled uniformly by area,
//! optionally noised perpendicular to the surface and posed into the robot
//! base frame. Stand-ins for the captured objects the planner is meant to
//! run against (a barrel, a curved panel, a helmet, a flat board).

use std::path::PathBuf;

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;
use surfplan_core::surface::{IngestOptions, PointCloud, SurfaceError, WorkspaceBox};
use thiserror::Error;

use crate::cloud_io::{self, CloudFormat, CloudIoError, ReadOptions};

#[derive(Debug, Clone)]
pub enum Shape {
    /// Rectangle on z = 0, centred at the origin; normal +z.
    Plane { size: [f64; 2] },
    /// Outward-facing cylinder patch about the z axis, arc centred on +x.
    Cylinder { radius: f64, height: f64, arc: f64 },
    /// Spherical cap around the +z pole, `cap_angle` from the pole.
    SphereCap { radius: f64, cap_angle: f64 },
    /// Pre-captured cloud from disk.
    FromFile {
        path: PathBuf,
        format: Option<CloudFormat>,
    },
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub shape: Shape,
    pub sample_count: usize,
    /// Gaussian noise along the local normal, meters.
    pub noise_sigma: f64,
    /// Rigid transform into the robot base frame.
    pub pose: Isometry3<f64>,
    pub workspace_box: Option<WorkspaceBox>,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] CloudIoError),
    #[error("cloud rejected: {0}")]
    Surface(#[from] SurfaceError),
}

impl SceneSpec {
    fn validate(&self) -> Result<(), SceneError> {
        if self.noise_sigma < 0.0 {
            return Err(SceneError::Invalid(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !matches!(self.shape, Shape::FromFile { .. }) && self.sample_count < 100 {
            return Err(SceneError::Invalid(format!(
                "synthetic shapes need at least 100 samples, got {}",
                self.sample_count
            )));
        }
        match &self.shape {
            Shape::Plane { size } => {
                if size.iter().any(|&s| s <= 0.0) {
                    return Err(SceneError::Invalid("plane size must be positive".into()));
                }
            }
            Shape::Cylinder { radius, height, arc } => {
                if *radius <= 0.0 || *height <= 0.0 || *arc <= 0.0 || *arc > std::f64::consts::PI {
                    return Err(SceneError::Invalid(
                        "cylinder needs radius > 0, height > 0, 0 < arc <= pi".into(),
                    ));
                }
            }
            Shape::SphereCap { radius, cap_angle } => {
                if *radius <= 0.0 || *cap_angle <= 0.0 || *cap_angle > 75f64.to_radians() {
                    return Err(SceneError::Invalid(
                        "sphere cap needs radius > 0 and 0 < cap_angle <= 75 degrees".into(),
                    ));
                }
            }
            Shape::FromFile { .. } => {}
        }
        Ok(())
    }
}

/// Samples the scene's surface; deterministic in `seed`.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<PointCloud, SceneError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .expect("validated sigma");

    // Canonical-frame samples with their analytic normals, plus a viewpoint
    // placed so normal orientation is unambiguous over the whole patch.
    let (mut samples, viewpoint): (Vec<(Point3<f64>, Vector3<f64>)>, Point3<f64>) =
        match &spec.shape {
            Shape::Plane { size } => {
                let pts = (0..spec.sample_count)
                    .map(|_| {
                        let x = rng.random_range(-0.5 * size[0]..=0.5 * size[0]);
                        let y = rng.random_range(-0.5 * size[1]..=0.5 * size[1]);
                        (Point3::new(x, y, 0.0), Vector3::z())
                    })
                    .collect();
                (pts, Point3::new(0.0, 0.0, 2.0 * size[0].max(size[1])))
            }
            Shape::Cylinder { radius, height, arc } => {
                let pts = (0..spec.sample_count)
                    .map(|_| {
                        let theta = rng.random_range(-0.5 * arc..=0.5 * arc);
                        let z = rng.random_range(-0.5 * height..=0.5 * height);
                        let normal = Vector3::new(theta.cos(), theta.sin(), 0.0);
                        (Point3::new(radius * theta.cos(), radius * theta.sin(), z), normal)
                    })
                    .collect();
                (pts, Point3::new(radius + 4.0 * radius.max(*height), 0.0, 0.0))
            }
            Shape::SphereCap { radius, cap_angle } => {
                let pts = (0..spec.sample_count)
                    .map(|_| {
                        let cos_phi = rng.random_range(cap_angle.cos()..=1.0);
                        let sin_phi = (1.0 - cos_phi * cos_phi).sqrt();
                        let theta = rng.random_range(0.0..std::f64::consts::TAU);
                        let normal =
                            Vector3::new(sin_phi * theta.cos(), sin_phi * theta.sin(), cos_phi);
                        (Point3::from(normal * *radius), normal)
                    })
                    .collect();
                (pts, Point3::new(0.0, 0.0, 5.0 * radius))
            }
            Shape::FromFile { path, format } => {
                let format = format
                    .or_else(|| CloudFormat::from_path(path))
                    .ok_or_else(|| {
                        SceneError::Invalid(format!(
                            "cannot infer cloud format of `{}`",
                            path.display()
                        ))
                    })?;
                // Read untouched, then pose and re-ingest below.
                let raw = cloud_io::read_cloud(
                    path,
                    format,
                    &ReadOptions {
                        viewpoint: None,
                        ingest: IngestOptions {
                            merge_tolerance: 0.0,
                            workspace_box: None,
                        },
                    },
                )?;
                let vp = raw.viewpoint();
                let pts = raw
                    .points()
                    .iter()
                    .map(|p| (*p, Vector3::zeros()))
                    .collect();
                (pts, vp)
            }
        };

    if spec.noise_sigma > 0.0 {
        for (p, n) in samples.iter_mut() {
            *p += *n * noise.sample(&mut rng);
        }
    }

    let points = samples.into_iter().map(|(p, _)| spec.pose * p).collect();
    let cloud = PointCloud::build(
        points,
        spec.pose * viewpoint,
        &IngestOptions {
            workspace_box: spec.workspace_box,
            ..Default::default()
        },
    )?;
    Ok(cloud)
}

// ---------------------------------------------------------------------------
// Scene list file (TOML) for the benchmark harness
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct SceneFileRaw {
    #[serde(rename = "scene")]
    scenes: Vec<SceneEntryRaw>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneEntryRaw {
    name: String,
    shape: String,
    size: Option<[f64; 2]>,
    radius: Option<f64>,
    height: Option<f64>,
    /// Radians.
    arc: Option<f64>,
    /// Radians from the pole.
    cap_angle: Option<f64>,
    file: Option<String>,
    format: Option<String>,
    sample_count: Option<usize>,
    noise_sigma: Option<f64>,
    pose_xyz: Option<[f64; 3]>,
    /// Fixed-axis XYZ, radians.
    pose_rpy: Option<[f64; 3]>,
    workspace_box: Option<[f64; 6]>,
    start: [f64; 3],
    goal: [f64; 3],
}

/// One benchmark object: a scene plus its start/goal markers.
#[derive(Debug, Clone)]
pub struct BenchmarkScene {
    pub name: String,
    pub spec: SceneSpec,
    pub start: Point3<f64>,
    pub goal: Point3<f64>,
}

pub fn parse_scene_file(text: &str) -> Result<Vec<BenchmarkScene>, SceneError> {
    let raw: SceneFileRaw =
        toml::from_str(text).map_err(|e| SceneError::Invalid(format!("scene file: {e}")))?;
    raw.scenes.into_iter().map(convert_entry).collect()
}

fn convert_entry(raw: SceneEntryRaw) -> Result<BenchmarkScene, SceneError> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| {
            SceneError::Invalid(format!("scene `{}` ({}): missing `{what}`", raw.name, raw.shape))
        })
    };
    let shape = match raw.shape.as_str() {
        "plane" => Shape::Plane {
            size: raw.size.ok_or_else(|| {
                SceneError::Invalid(format!("scene `{}`: plane needs `size`", raw.name))
            })?,
        },
        "cylinder" => Shape::Cylinder {
            radius: need(raw.radius, "radius")?,
            height: need(raw.height, "height")?,
            arc: need(raw.arc, "arc")?,
        },
        "sphere_cap" => Shape::SphereCap {
            radius: need(raw.radius, "radius")?,
            cap_angle: need(raw.cap_angle, "cap_angle")?,
        },
        "from_file" => Shape::FromFile {
            path: PathBuf::from(raw.file.ok_or_else(|| {
                SceneError::Invalid(format!("scene `{}`: from_file needs `file`", raw.name))
            })?),
            format: match raw.format.as_deref() {
                None => None,
                Some("ply") => Some(CloudFormat::PlyAscii),
                Some("pcd") => Some(CloudFormat::PcdAscii),
                Some(other) => {
                    return Err(SceneError::Invalid(format!(
                        "scene `{}`: unknown format `{other}`",
                        raw.name
                    )))
                }
            },
        },
        other => {
            return Err(SceneError::Invalid(format!(
                "scene `{}`: unknown shape `{other}`",
                raw.name
            )))
        }
    };
    let xyz = raw.pose_xyz.unwrap_or([0.0; 3]);
    let rpy = raw.pose_rpy.unwrap_or([0.0; 3]);
    let pose = Isometry3::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    );
    let spec = SceneSpec {
        shape,
        sample_count: raw.sample_count.unwrap_or(10_000),
        noise_sigma: raw.noise_sigma.unwrap_or(0.0),
        pose,
        workspace_box: raw.workspace_box.map(|b| WorkspaceBox {
            min: [b[0], b[1], b[2]],
            max: [b[3], b[4], b[5]],
        }),
    };
    spec.validate()?;
    Ok(BenchmarkScene {
        name: raw.name,
        spec,
        start: Point3::new(raw.start[0], raw.start[1], raw.start[2]),
        goal: Point3::new(raw.goal[0], raw.goal[1], raw.goal[2]),
    })
}
