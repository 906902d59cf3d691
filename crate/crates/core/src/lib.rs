//! Sampling-based path planning constrained to a surface that is observed
//! only as a raw point cloud.
//!
//! The crate has three layers:
//!
//! * [`surface`] — treats the point cloud as a discrete 2-manifold:
//!   spatial queries, PCA tangent frames and the approximate
//!   exponential/logarithmic maps that keep samples on the surface.
//! * [`kinematics`] — serial-chain forward kinematics, geometric Jacobian,
//!   Yoshikawa manipulability and damped-least-squares inverse kinematics
//!   with a tool-axis-normal task.
//! * [`planner`] — the surface-constrained RRT* search blending geodesic
//!   path length with a manipulability cost. With `alpha = 0` it degenerates
//!   to a classical RRT* on the surface.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature enables the standard library. File formats, robot-description
//! parsing and the command-line front-end live in the companion
//! `surfplan-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod kinematics;
pub mod planner;
pub mod surface;

pub use kinematics::{JacobianMode, JointConfig, KinematicChain, Pose, ToolTarget};
pub use planner::{CostBreakdown, PlanResult, PlannerConfig, PlannerTree, TreeNode, Waypoint};
pub use surface::{PointCloud, SurfaceFrame, SurfaceIndex, TangentCoord};
