//! Serial-chain kinematics: forward kinematics, geometric Jacobian,
//! Yoshikawa manipulability and the tool-axis task construction.
//!
//! Chains are revolute-only. Each joint carries a fixed transform from its
//! parent frame and a unit rotation axis expressed in its own frame; a fixed
//! tool transform follows the last joint.

mod ik;

pub use ik::{axis_misalignment, solve_ik, solve_ik_with, IkError, IkParams};

use alloc::vec::Vec;

use nalgebra::{Dyn, Isometry3, OMatrix, Point3, Unit, UnitQuaternion, Vector3, U6};
use thiserror::Error;

pub type Jacobian = OMatrix<f64, U6, Dyn>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("chain needs at least one joint")]
    Empty,
    #[error("joint {index} axis norm {norm} is not unit within 1e-9")]
    NonUnitAxis { index: usize, norm: f64 },
    #[error("joint {index} limits are inverted (lower {lower} >= upper {upper})")]
    InvertedLimits { index: usize, lower: f64, upper: f64 },
}

/// One revolute joint: fixed transform from the parent frame, then a
/// rotation of `angle` about `axis`.
#[derive(Debug, Clone)]
pub struct Joint {
    pub origin: Isometry3<f64>,
    pub axis: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Revolute-only serial arm with a fixed tool transform after the last
/// joint. Immutable and safe to share between planner runs.
#[derive(Debug, Clone)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    tool: Isometry3<f64>,
}

impl KinematicChain {
    pub fn new(joints: Vec<Joint>, tool: Isometry3<f64>) -> Result<Self, ChainError> {
        if joints.is_empty() {
            return Err(ChainError::Empty);
        }
        for (index, j) in joints.iter().enumerate() {
            let norm = j.axis.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(ChainError::NonUnitAxis { index, norm });
            }
            if j.lower >= j.upper {
                return Err(ChainError::InvertedLimits {
                    index,
                    lower: j.lower,
                    upper: j.upper,
                });
            }
        }
        Ok(KinematicChain { joints, tool })
    }

    /// Degrees of freedom.
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn tool(&self) -> &Isometry3<f64> {
        &self.tool
    }

    /// Midpoint of every joint range; the default "home" seed for inverse
    /// kinematics, guaranteed to be inside the limits.
    pub fn limit_midpoint(&self) -> JointConfig {
        JointConfig(
            self.joints
                .iter()
                .map(|j| 0.5 * (j.lower + j.upper))
                .collect(),
        )
    }

    /// True when every coordinate of `q` lies within its joint's limits.
    pub fn within_limits(&self, q: &JointConfig) -> bool {
        self.joints
            .iter()
            .zip(q.0.iter())
            .all(|(j, &v)| v >= j.lower && v <= j.upper)
    }

    /// Clamps `q` into the joint limits, in place.
    pub fn clamp_to_limits(&self, q: &mut JointConfig) {
        for (j, v) in self.joints.iter().zip(q.0.iter_mut()) {
            *v = v.clamp(j.lower, j.upper);
        }
    }
}

/// A joint configuration `q`, one angle in radians per joint.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Tool-tip pose in the base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    /// The tool axis: the tool frame's `z` direction in the base frame.
    pub fn tool_axis(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }
}

/// Inverse-kinematics goal: tool-tip position plus the desired tool axis.
/// Rotation about the axis is left free.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolTarget {
    pub position: Point3<f64>,
    pub axis: Unit<Vector3<f64>>,
}

/// Which Jacobian feeds the manipulability index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum JacobianMode {
    /// Full 6-row geometric Jacobian for chains with 6+ joints; chains with
    /// fewer joints fall back to the position block, where the full-rank
    /// index would be identically zero.
    #[default]
    Full,
    /// Position block (top 3 rows) only.
    Position,
}

fn joint_transform(joint: &Joint, angle: f64) -> Isometry3<f64> {
    joint.origin
        * UnitQuaternion::from_axis_angle(&Unit::new_unchecked(joint.axis), angle)
}

/// World position and rotation axis of every joint, plus the tool pose.
/// The axis of joint `i` is fixed in the frame reached *before* its own
/// rotation is applied.
fn frames(chain: &KinematicChain, q: &JointConfig) -> (Vec<(Point3<f64>, Vector3<f64>)>, Isometry3<f64>) {
    assert_eq!(q.len(), chain.dof(), "configuration size != chain dof");
    let mut axes = Vec::with_capacity(chain.dof());
    let mut t = Isometry3::identity();
    for (joint, &angle) in chain.joints.iter().zip(q.0.iter()) {
        let pre = t * joint.origin;
        axes.push((
            Point3::from(pre.translation.vector),
            pre.rotation * joint.axis,
        ));
        t = t * joint_transform(joint, angle);
    }
    (axes, t * chain.tool)
}

/// Tool-tip pose for configuration `q`.
pub fn forward_kinematics(chain: &KinematicChain, q: &JointConfig) -> Pose {
    let (_, tool) = frames(chain, q);
    Pose {
        position: Point3::from(tool.translation.vector),
        orientation: tool.rotation,
    }
}

/// Geometric Jacobian in the base frame: column `i` is
/// `(z_i x (p_tool - p_i); z_i)` for revolute joint `i` with world axis
/// `z_i` anchored at `p_i`.
pub fn jacobian(chain: &KinematicChain, q: &JointConfig) -> Jacobian {
    let (axes, tool) = frames(chain, q);
    let p_tool = tool.translation.vector;
    let mut j = Jacobian::zeros(chain.dof());
    for (i, (p, z)) in axes.iter().enumerate() {
        let linear = z.cross(&(p_tool - p.coords));
        for r in 0..3 {
            j[(r, i)] = linear[r];
            j[(r + 3, i)] = z[r];
        }
    }
    j
}

/// Yoshikawa manipulability: the product of the singular values of the task
/// Jacobian, which equals `sqrt(det(J J^T))` for wide matrices. Returns
/// exactly zero when the Jacobian is rank-deficient to machine tolerance.
pub fn manipulability(chain: &KinematicChain, q: &JointConfig, mode: JacobianMode) -> f64 {
    let full = jacobian(chain, q);
    let n = chain.dof();
    let use_full = matches!(mode, JacobianMode::Full) && n >= 6;
    let singular_values = if use_full {
        full.svd(false, false).singular_values
    } else {
        full.rows(0, 3).into_owned().svd(false, false).singular_values
    };
    let sigma_max = singular_values[0];
    if sigma_max == 0.0 {
        return 0.0;
    }
    let rows = if use_full { 6 } else { 3 };
    let tol = sigma_max * f64::EPSILON * rows.max(n) as f64;
    let mut w = 1.0;
    for &s in singular_values.iter() {
        if s <= tol {
            return 0.0;
        }
        w *= s;
    }
    w
}

/// Builds the IK goal for touching a surface point: stand off along the
/// normal, tool axis anti-parallel to it (pointing into the surface).
pub fn tool_target_from_surface(frame: &crate::surface::SurfaceFrame, standoff: f64) -> ToolTarget {
    debug_assert!(standoff >= 0.0);
    ToolTarget {
        position: frame.origin + frame.normal * standoff,
        axis: Unit::new_normalize(-frame.normal),
    }
}
