//! The observed point cloud as a queryable 2-manifold.
//!
//! A point cloud has no parametric form, so the exponential and logarithmic
//! maps between the surface and its tangent planes are realised
//! approximately: tangent planes come from PCA over a k-nearest-neighbour
//! patch, the log map is an orthogonal projection, and the exp map lifts a
//! tangent vector and re-projects it onto the local PCA plane twice. For
//! steps that are small relative to the cloud's sampling density this tracks
//! the true geodesic closely; the planner enforces that step bound.

mod index;

pub use index::{Neighbor, SurfaceIndex};

use alloc::vec::Vec;

use alloc::collections::BTreeMap;
use nalgebra::{Matrix3, Point3, Vector3};
use thiserror::Error;

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Errors from cloud ingestion and surface queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("point cloud needs at least 3 points, got {count}")]
    TooFewPoints { count: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
    #[error("cloud collapses to coincident points; cannot estimate spacing")]
    DegenerateSpacing,
    #[error("point ({x:.6}, {y:.6}, {z:.6}) is {distance:.6} m from the cloud (limit {limit:.6} m)")]
    OffSurface {
        x: f64,
        y: f64,
        z: f64,
        distance: f64,
        limit: f64,
    },
    #[error("neighbourhood is degenerate (collinear points); no tangent plane")]
    DegenerateFrame,
}

/// Axis-aligned box, used to crop clouds to the robot's workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkspaceBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBox {
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Ingestion rules applied when building a [`PointCloud`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Points closer than this are merged (first occurrence wins).
    pub merge_tolerance: f64,
    /// Points outside this box are dropped before anything else.
    pub workspace_box: Option<WorkspaceBox>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            merge_tolerance: 1e-6,
            workspace_box: None,
        }
    }
}

/// The raw observed surface: 3D points plus the sensor position used to
/// orient estimated normals.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    viewpoint: Point3<f64>,
}

impl PointCloud {
    /// Ingests raw points: workspace crop, finiteness check, duplicate merge.
    pub fn build(
        points: Vec<Point3<f64>>,
        viewpoint: Point3<f64>,
        options: &IngestOptions,
    ) -> Result<Self, SurfaceError> {
        for (index, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(SurfaceError::NonFinitePoint { index });
            }
        }
        let cropped: Vec<Point3<f64>> = match &options.workspace_box {
            Some(b) => points.into_iter().filter(|p| b.contains(p)).collect(),
            None => points,
        };
        let points = dedup(cropped, options.merge_tolerance);
        if points.len() < 3 {
            return Err(SurfaceError::TooFewPoints {
                count: points.len(),
            });
        }
        Ok(PointCloud { points, viewpoint })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn viewpoint(&self) -> Point3<f64> {
        self.viewpoint
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Keeps the first of any group of points within `tol` of each other,
/// preserving input order. Grid hashing keeps this linear.
fn dedup(points: Vec<Point3<f64>>, tol: f64) -> Vec<Point3<f64>> {
    if tol <= 0.0 {
        return points;
    }
    let mut grid: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    let mut kept: Vec<Point3<f64>> = Vec::with_capacity(points.len());
    let cell = |v: f64| -> i64 { (v / tol).floor() as i64 };
    let tol2 = tol * tol;
    'outer: for p in points {
        let key = (cell(p.x), cell(p.y), cell(p.z));
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let k = (key.0 + dx, key.1 + dy, key.2 + dz);
                    if let Some(ids) = grid.get(&k) {
                        for &i in ids {
                            if (kept[i] - p).norm_squared() < tol2 {
                                continue 'outer;
                            }
                        }
                    }
                }
            }
        }
        grid.entry(key).or_default().push(kept.len());
        kept.push(p);
    }
    kept
}

/// Orthonormal right-handed frame `{tangent_u, tangent_v, normal}` anchored
/// at a cloud point: the tangent space of the surface at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub origin: Point3<f64>,
    pub normal: Vector3<f64>,
    pub tangent_u: Vector3<f64>,
    pub tangent_v: Vector3<f64>,
}

impl SurfaceFrame {
    /// Assembles a frame from explicit parts, for callers that already know
    /// the analytic geometry (mostly tests and fixtures).
    ///
    /// `tangent_u` is orthonormalised against `normal`; `tangent_v` is
    /// derived so the triple is right-handed.
    pub fn from_parts(origin: Point3<f64>, normal: Vector3<f64>, tangent_u: Vector3<f64>) -> Self {
        let normal = normal.normalize();
        let u = (tangent_u - normal * tangent_u.dot(&normal)).normalize();
        let v = normal.cross(&u);
        SurfaceFrame {
            origin,
            normal,
            tangent_u: u,
            tangent_v: v,
        }
    }
}

/// Coordinates of a projected point in a [`SurfaceFrame`], in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCoord {
    pub u: f64,
    pub v: f64,
}

impl TangentCoord {
    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v).sqrt()
    }
}

// Two secondary covariance eigenvalues below this mean the neighbourhood is
// a line, not a surface patch.
const DEGENERATE_EIGENVALUE: f64 = 1e-12;

// Queries farther than this many median spacings from the cloud are off the
// observed surface.
pub(crate) const OFF_SURFACE_FACTOR: f64 = 5.0;

/// Estimates the tangent frame of the surface near `p`.
///
/// The frame origin is the cloud point nearest to `p`; the normal is the
/// smallest-eigenvalue direction of the PCA covariance over the origin's `k`
/// nearest neighbours, oriented toward the cloud's viewpoint.
pub fn tangent_frame(
    index: &SurfaceIndex,
    p: &Point3<f64>,
    k: usize,
) -> Result<SurfaceFrame, SurfaceError> {
    assert!(k >= 3, "PCA needs at least 3 neighbours");
    let nn = index.nearest(p);
    let limit = OFF_SURFACE_FACTOR * index.median_spacing();
    if nn.distance > limit {
        return Err(SurfaceError::OffSurface {
            x: p.x,
            y: p.y,
            z: p.z,
            distance: nn.distance,
            limit,
        });
    }
    let origin = index.cloud().points()[nn.index];
    let patch = index.knn(&origin, k);

    let mut centroid = Vector3::zeros();
    for n in &patch {
        centroid += index.cloud().points()[n.index].coords;
    }
    centroid /= patch.len() as f64;
    let mut cov = Matrix3::zeros();
    for n in &patch {
        let d = index.cloud().points()[n.index].coords - centroid;
        cov += d * d.transpose();
    }
    cov /= patch.len() as f64;

    let eig = cov.symmetric_eigen();
    // Sort eigenpairs by ascending eigenvalue.
    let mut ord = [0usize, 1, 2];
    ord.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues[ord[1]] < DEGENERATE_EIGENVALUE {
        return Err(SurfaceError::DegenerateFrame);
    }

    let mut normal: Vector3<f64> = eig.eigenvectors.column(ord[0]).into_owned();
    normal.normalize_mut();
    if normal.dot(&(index.cloud().viewpoint() - origin)) < 0.0 {
        normal = -normal;
    }

    let mut u: Vector3<f64> = eig.eigenvectors.column(ord[2]).into_owned();
    u -= normal * u.dot(&normal);
    u.normalize_mut();
    // Canonical sign: largest-magnitude component positive.
    let dominant = (0..3).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
    if u[dominant] < 0.0 {
        u = -u;
    }
    let v = normal.cross(&u);

    Ok(SurfaceFrame {
        origin,
        normal,
        tangent_u: u,
        tangent_v: v,
    })
}

/// Logarithmic map: orthogonal projection of `x` onto the frame's tangent
/// plane, expressed in frame coordinates.
pub fn log_map(frame: &SurfaceFrame, x: &Point3<f64>) -> TangentCoord {
    let d = x - frame.origin;
    TangentCoord {
        u: d.dot(&frame.tangent_u),
        v: d.dot(&frame.tangent_v),
    }
}

/// The clipped interpolation step: a fraction `beta` of the way toward
/// `target`, where `target` is expressed relative to the stepping point
/// (which therefore sits at `(0, 0)`). The returned move never exceeds
/// `max_step` in length.
pub fn step_toward(target: TangentCoord, beta: f64, max_step: f64) -> TangentCoord {
    debug_assert!(beta > 0.0 && beta <= 1.0);
    debug_assert!(max_step > 0.0);
    let mut u = beta * target.u;
    let mut v = beta * target.v;
    let norm = (u * u + v * v).sqrt();
    if norm > max_step {
        let scale = max_step / norm;
        u *= scale;
        v *= scale;
    }
    TangentCoord { u, v }
}

/// Exponential map: lifts a tangent vector to 3D and walks it back onto the
/// observed surface.
///
/// The lifted point is projected along the local PCA-plane normal twice,
/// re-estimating the plane at the current point each time. Fails with an
/// off-surface error when the step leaves the observed patch (boundary or
/// hole in the cloud).
pub fn exp_map(
    index: &SurfaceIndex,
    frame: &SurfaceFrame,
    t: TangentCoord,
    pca_k: usize,
) -> Result<Point3<f64>, SurfaceError> {
    let mut current = frame.origin + frame.tangent_u * t.u + frame.tangent_v * t.v;
    for _ in 0..2 {
        let local = tangent_frame(index, &current, pca_k)?;
        let offset = (current - local.origin).dot(&local.normal);
        current -= local.normal * offset;
    }
    let limit = 2.0 * index.median_spacing();
    let nn = index.nearest(&current);
    if nn.distance > limit {
        return Err(SurfaceError::OffSurface {
            x: current.x,
            y: current.y,
            z: current.z,
            distance: nn.distance,
            limit,
        });
    }
    Ok(current)
}

/// Length of one path segment: adjacent waypoints are close by construction,
/// so the geodesic between them is approximated by the chord.
pub fn geodesic_segment(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    (a - b).norm()
}
