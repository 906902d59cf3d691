//! Damped-least-squares inverse kinematics for the surface-touch task.
//!
//! The task is 5-dimensional: 3 position components plus the 2 components
//! of tool-axis misalignment orthogonal to the current tool axis. Rotation
//! about the tool axis is deliberately unconstrained.

use nalgebra::{Dyn, Matrix5, OMatrix, Vector3, Vector5, U5};
use thiserror::Error;

use super::{forward_kinematics, jacobian, JointConfig, KinematicChain, ToolTarget};

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IkError {
    #[error(
        "no convergence after {iterations} iterations \
         (position error {position_error:.6} m, axis error {axis_error:.6} rad)"
    )]
    NoConvergence {
        iterations: usize,
        position_error: f64,
        axis_error: f64,
    },
}

#[derive(Debug, Clone)]
pub struct IkParams {
    pub max_iterations: usize,
    /// Convergence bound on the tool-tip position error, meters.
    pub position_tolerance: f64,
    /// Convergence bound on the tool-axis misalignment, radians.
    pub axis_tolerance: f64,
    /// Damping factor of the regularised pseudo-inverse.
    pub damping: f64,
}

impl Default for IkParams {
    fn default() -> Self {
        IkParams {
            max_iterations: 100,
            position_tolerance: 1e-4,
            axis_tolerance: 1e-3,
            damping: 1e-3,
        }
    }
}

struct TaskState {
    error: Vector5<f64>,
    basis: (Vector3<f64>, Vector3<f64>),
    position_error: f64,
    axis_error: f64,
}

fn task_state(chain: &KinematicChain, q: &JointConfig, target: &ToolTarget) -> TaskState {
    let pose = forward_kinematics(chain, q);
    let axis = pose.tool_axis();
    let e_pos = target.position - pose.position;

    let desired = target.axis.into_inner();
    let cross = axis.cross(&desired);
    let sin = cross.norm();
    let cos = axis.dot(&desired).clamp(-1.0, 1.0);
    let angle = sin.atan2(cos);

    // Rotation vector carrying the current axis onto the desired one; it is
    // orthogonal to the current axis, so spin about the tool stays free.
    let rot = if sin > 1e-12 {
        cross * (angle / sin)
    } else if cos > 0.0 {
        Vector3::zeros()
    } else {
        // Anti-parallel: rotate about any perpendicular.
        perpendicular(&axis) * core::f64::consts::PI
    };

    let basis = orthonormal_basis(&axis);
    let error = Vector5::new(
        e_pos.x,
        e_pos.y,
        e_pos.z,
        basis.0.dot(&rot),
        basis.1.dot(&rot),
    );
    TaskState {
        error,
        basis,
        position_error: e_pos.norm(),
        axis_error: angle,
    }
}

fn perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let pivot = if v.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    v.cross(&pivot).normalize()
}

fn orthonormal_basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let b1 = perpendicular(axis);
    let b2 = axis.cross(&b1);
    (b1, b2)
}

/// Solves the surface-touch task with default parameters. Deterministic:
/// identical inputs give bit-identical outputs.
pub fn solve_ik(
    chain: &KinematicChain,
    target: &ToolTarget,
    seed: &JointConfig,
) -> Result<JointConfig, IkError> {
    solve_ik_with(chain, target, seed, &IkParams::default())
}

/// [`solve_ik`] with explicit parameters. Joint limits are clamped after
/// every step, and the returned configuration is always within limits.
pub fn solve_ik_with(
    chain: &KinematicChain,
    target: &ToolTarget,
    seed: &JointConfig,
    params: &IkParams,
) -> Result<JointConfig, IkError> {
    assert_eq!(seed.len(), chain.dof(), "seed size != chain dof");
    let n = chain.dof();
    let mut q = seed.clone();
    chain.clamp_to_limits(&mut q);

    let lambda2 = params.damping * params.damping;
    let mut state = task_state(chain, &q, target);
    for _ in 0..params.max_iterations {
        if state.position_error <= params.position_tolerance
            && state.axis_error <= params.axis_tolerance
        {
            return Ok(q);
        }

        let j6 = jacobian(chain, &q);
        let mut j_task: OMatrix<f64, U5, Dyn> = OMatrix::zeros_generic(U5, Dyn(n));
        for c in 0..n {
            for r in 0..3 {
                j_task[(r, c)] = j6[(r, c)];
            }
            let omega = Vector3::new(j6[(3, c)], j6[(4, c)], j6[(5, c)]);
            j_task[(3, c)] = state.basis.0.dot(&omega);
            j_task[(4, c)] = state.basis.1.dot(&omega);
        }

        // dq = J^T (J J^T + lambda^2 I)^-1 e
        let gram = &j_task * j_task.transpose() + Matrix5::identity() * lambda2;
        let chol = gram
            .cholesky()
            .expect("damped Gram matrix is positive definite");
        let dq = j_task.transpose() * chol.solve(&state.error);
        for (v, d) in q.0.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp_to_limits(&mut q);
        state = task_state(chain, &q, target);
    }

    if state.position_error <= params.position_tolerance
        && state.axis_error <= params.axis_tolerance
    {
        return Ok(q);
    }
    Err(IkError::NoConvergence {
        iterations: params.max_iterations,
        position_error: state.position_error,
        axis_error: state.axis_error,
    })
}

/// Angle between the achieved and desired tool axes, radians.
pub fn axis_misalignment(pose_axis: &Vector3<f64>, desired: &Vector3<f64>) -> f64 {
    let sin = pose_axis.cross(desired).norm();
    let cos = pose_axis.dot(desired).clamp(-1.0, 1.0);
    sin.atan2(cos)
}
