//! Surface-constrained RRT* blending geodesic path length with a
//! manipulability cost.
//!
//! Each iteration samples a cloud point, projects it into the tangent frame
//! of the nearest tree node, takes a small step there, lifts the step back
//! onto the surface, and validates the new point with inverse kinematics
//! before the usual RRT* parent selection and rewiring. With `alpha = 0`
//! the cost reduces to pure path length and the search behaves like a
//! classical RRT* constrained to the surface.

mod tree;
mod trace;

pub use trace::{
    ExtendOutcome, IterationEvent, NoopObserver, PlanObserver, RecordingObserver, RejectReason,
};
pub use tree::{choose_parent, node_cost, rewire, CostBreakdown, PlannerTree, ProvisionalNode, TreeNode};

use alloc::vec::Vec;

use nalgebra::Point3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kinematics::{
    manipulability, solve_ik, tool_target_from_surface, IkError, JacobianMode, JointConfig,
    KinematicChain,
};
use crate::surface::{
    exp_map, geodesic_segment, log_map, step_toward, tangent_frame, SurfaceError, SurfaceIndex,
    TangentCoord, OFF_SURFACE_FACTOR,
};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// All planner knobs. `None` fields are derived from the cloud's sampling
/// density when the plan starts.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlannerConfig {
    /// Cost blend in `[0, 1]`: 0 = pure distance (classical RRT*),
    /// 1 = pure manipulability.
    pub alpha: f64,
    /// Tangent-plane step fraction in `(0, 1]`; must stay well below 1 for
    /// the small-step geodesic approximation to hold.
    pub beta: f64,
    /// Step-length cap, meters. Default: 2.5 x median spacing.
    pub max_step: Option<f64>,
    /// Number of sampling iterations.
    pub iterations: usize,
    /// Near-neighbourhood radius constant: `r = near_gamma sqrt(log n / n)`,
    /// capped so edges stay within the step bound.
    pub near_gamma: f64,
    /// Goal acceptance radius, meters. Default: 2 x median spacing.
    pub goal_tolerance: Option<f64>,
    /// Probability of sampling the goal instead of a random cloud point.
    pub goal_bias: f64,
    pub rng_seed: u64,
    /// Neighbourhood size for PCA tangent frames.
    pub pca_k: usize,
    /// Tool stand-off along the surface normal, meters.
    pub standoff: f64,
    /// Lower clamp on manipulability before inversion, keeps `1/w` finite.
    pub w_floor: f64,
    pub jacobian_mode: JacobianMode,
    /// IK seed for the start/goal feasibility checks. Default: joint-limit
    /// midpoints.
    pub home_seed: Option<Vec<f64>>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            alpha: 0.7,
            beta: 0.1,
            max_step: None,
            iterations: 5000,
            near_gamma: 1.5,
            goal_tolerance: None,
            goal_bias: 0.05,
            rng_seed: 0,
            pca_k: 20,
            standoff: 0.0,
            w_floor: 1e-6,
            jacobian_mode: JacobianMode::Full,
            home_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must be in [0, 1], got {0}")]
    Alpha(f64),
    #[error("beta must be in (0, 1], got {0}")]
    Beta(f64),
    #[error("max_step must be positive, got {0}")]
    MaxStep(f64),
    #[error("iterations must be at least 1")]
    Iterations,
    #[error("near_gamma must be positive, got {0}")]
    NearGamma(f64),
    #[error("goal_tolerance must be positive, got {0}")]
    GoalTolerance(f64),
    #[error("goal_bias must be in [0, 1], got {0}")]
    GoalBias(f64),
    #[error("pca_k must be at least 3, got {0}")]
    PcaK(usize),
    #[error("standoff must be non-negative, got {0}")]
    Standoff(f64),
    #[error("w_floor must be positive, got {0}")]
    WFloor(f64),
    #[error("home seed has {got} joints, chain has {expected}")]
    HomeSeedSize { got: usize, expected: usize },
}

impl PlannerConfig {
    pub fn validate(&self, chain: &KinematicChain) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(ConfigError::Beta(self.beta));
        }
        if let Some(s) = self.max_step {
            if !(s > 0.0) {
                return Err(ConfigError::MaxStep(s));
            }
        }
        if self.iterations == 0 {
            return Err(ConfigError::Iterations);
        }
        if !(self.near_gamma > 0.0) {
            return Err(ConfigError::NearGamma(self.near_gamma));
        }
        if let Some(t) = self.goal_tolerance {
            if !(t > 0.0) {
                return Err(ConfigError::GoalTolerance(t));
            }
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(ConfigError::GoalBias(self.goal_bias));
        }
        if self.pca_k < 3 {
            return Err(ConfigError::PcaK(self.pca_k));
        }
        if !(self.standoff >= 0.0) {
            return Err(ConfigError::Standoff(self.standoff));
        }
        if !(self.w_floor > 0.0) {
            return Err(ConfigError::WFloor(self.w_floor));
        }
        if let Some(h) = &self.home_seed {
            if h.len() != chain.dof() {
                return Err(ConfigError::HomeSeedSize {
                    got: h.len(),
                    expected: chain.dof(),
                });
            }
        }
        Ok(())
    }
}

/// Why a plan could not even start.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    Config(#[from] ConfigError),
    #[error("start point rejected: {0}")]
    Start(SurfaceError),
    #[error("goal point rejected: {0}")]
    Goal(SurfaceError),
    #[error("inverse kinematics failed at the start point: {0}")]
    StartIk(IkError),
    #[error("inverse kinematics failed at the goal point: {0}")]
    GoalIk(IkError),
}

/// One path point of a finished plan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Waypoint {
    pub position: [f64; 3],
    pub config: JointConfig,
    /// Manipulability at this configuration.
    pub w: f64,
}

/// Outcome of a planning run. `succeeded == false` means no tree node
/// reached the goal tolerance within the iteration budget; the tree
/// statistics still describe the attempt.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanResult {
    pub succeeded: bool,
    /// Start-to-goal path; empty when the plan failed.
    pub waypoints: Vec<Waypoint>,
    /// Accumulated cost of the goal node; zeros when the plan failed.
    pub cost: CostBreakdown,
    pub tree_size: usize,
    pub iterations_used: usize,
}

/// Planning run with full tree access, for audits and diagnostics.
pub struct PlanOutcome {
    pub result: PlanResult,
    pub tree: PlannerTree,
}

/// Step bound and derived radii resolved against a concrete cloud.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    max_step: f64,
    goal_tolerance: f64,
    /// Longest admissible edge: `max_step + 2 x median spacing`. Keeps every
    /// parent-child segment inside the short-segment geodesic regime.
    edge_cap: f64,
}

fn resolve(cfg: &PlannerConfig, index: &SurfaceIndex) -> Resolved {
    let ms = index.median_spacing();
    let max_step = cfg.max_step.unwrap_or(2.5 * ms);
    Resolved {
        max_step,
        goal_tolerance: cfg.goal_tolerance.unwrap_or(2.0 * ms),
        edge_cap: max_step + 2.0 * ms,
    }
}

/// Draws the next sample: the goal with probability `goal_bias`, otherwise
/// a uniformly random cloud point.
pub fn sample_surface(
    index: &SurfaceIndex,
    goal: &Point3<f64>,
    cfg: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Point3<f64> {
    if rng.random_bool(cfg.goal_bias) {
        *goal
    } else {
        index.cloud().points()[rng.random_range(0..index.len())]
    }
}

/// A validated extension candidate, or the reason there is none.
#[derive(Debug, Clone)]
pub enum Extension {
    Extended {
        candidate: ProvisionalNode,
        nearest: usize,
    },
    Rejected(RejectReason),
}

fn map_surface_error(err: SurfaceError) -> RejectReason {
    match err {
        SurfaceError::DegenerateFrame => RejectReason::DegenerateFrame,
        _ => RejectReason::OffSurface,
    }
}

// Steps shorter than this collapse onto the nearest node.
const DUPLICATE_EPS: f64 = 1e-9;

/// One tree-extension attempt toward `x_rand` (no insertion).
///
/// Finds the nearest tree node, steps `beta` of the way toward the sample in
/// that node's tangent frame (clipped to the step bound), lifts the step
/// back onto the surface and validates it with inverse kinematics seeded
/// from the nearest node's configuration.
pub fn extend(
    tree: &PlannerTree,
    index: &SurfaceIndex,
    chain: &KinematicChain,
    x_rand: &Point3<f64>,
    cfg: &PlannerConfig,
) -> Extension {
    let resolved = resolve(cfg, index);
    let nearest = tree.nearest(x_rand);
    let near_node = tree.node(nearest);

    let frame = match tangent_frame(index, &near_node.position, cfg.pca_k) {
        Ok(f) => f,
        Err(e) => return Extension::Rejected(map_surface_error(e)),
    };
    // Interpolate from the node's own tangent coordinates, not the frame
    // origin: the frame is anchored at the node's nearest *cloud* point, and
    // a step anchored there would be identical for every node sharing that
    // anchor, stalling repeated extensions toward the same sample.
    let t_node = log_map(&frame, &near_node.position);
    let t_rand = log_map(&frame, x_rand);
    let step = step_toward(
        TangentCoord {
            u: t_rand.u - t_node.u,
            v: t_rand.v - t_node.v,
        },
        cfg.beta,
        resolved.max_step,
    );
    if step.norm() <= DUPLICATE_EPS {
        return Extension::Rejected(RejectReason::Duplicate);
    }
    let t_new = TangentCoord {
        u: t_node.u + step.u,
        v: t_node.v + step.v,
    };
    let x_new = match exp_map(index, &frame, t_new, cfg.pca_k) {
        Ok(p) => p,
        Err(e) => return Extension::Rejected(map_surface_error(e)),
    };
    let advance = geodesic_segment(&near_node.position, &x_new);
    if advance <= DUPLICATE_EPS {
        return Extension::Rejected(RejectReason::Duplicate);
    }
    if advance > resolved.edge_cap {
        // Projection drifted past the admissible edge length; treat it like
        // stepping off the observed patch.
        return Extension::Rejected(RejectReason::OffSurface);
    }

    let new_frame = match tangent_frame(index, &x_new, cfg.pca_k) {
        Ok(f) => f,
        Err(e) => return Extension::Rejected(map_surface_error(e)),
    };
    let tool = tool_target_from_surface(&new_frame, cfg.standoff);
    let config = match solve_ik(chain, &tool, &near_node.config) {
        Ok(q) => q,
        Err(IkError::NoConvergence { .. }) => {
            return Extension::Rejected(RejectReason::IkFailure)
        }
    };
    let w = manipulability(chain, &config, cfg.jacobian_mode);
    let inv_w = 1.0 / w.max(cfg.w_floor);
    Extension::Extended {
        candidate: ProvisionalNode {
            position: x_new,
            config,
            w,
            inv_w,
        },
        nearest,
    }
}

/// Near-set of an accepted candidate: nodes within the RRT* radius of
/// `x_new` (with `n` the pre-insertion tree size), always including the
/// nearest node, never anything beyond the edge cap.
fn near_set(
    tree: &PlannerTree,
    x_new: &Point3<f64>,
    nearest: usize,
    near_gamma: f64,
    edge_cap: f64,
) -> Vec<usize> {
    let n = tree.len() as f64;
    let radius = (near_gamma * (n.ln() / n).sqrt()).min(edge_cap);
    let mut near = tree.within_radius(x_new, radius);
    if !near.contains(&nearest) {
        near.push(nearest);
        near.sort_unstable();
    }
    near
}

/// Plans a path from `start` to `goal` across the surface.
///
/// Runs the full iteration budget, then returns the path to the best
/// goal-tolerant node. Fully deterministic given the config's seed.
pub fn plan(
    index: &SurfaceIndex,
    chain: &KinematicChain,
    start: Point3<f64>,
    goal: Point3<f64>,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    plan_with_observer(index, chain, start, goal, cfg, &mut NoopObserver)
        .map(|outcome| outcome.result)
}

/// [`plan`], additionally invoking `observer` after every iteration and
/// returning the final tree.
pub fn plan_with_observer<O: PlanObserver>(
    index: &SurfaceIndex,
    chain: &KinematicChain,
    start: Point3<f64>,
    goal: Point3<f64>,
    cfg: &PlannerConfig,
    observer: &mut O,
) -> Result<PlanOutcome, PlanError> {
    cfg.validate(chain)?;
    let resolved = resolve(cfg, index);
    let off_limit = OFF_SURFACE_FACTOR * index.median_spacing();
    for (p, is_start) in [(&start, true), (&goal, false)] {
        let nn = index.nearest(p);
        if nn.distance > off_limit {
            let err = SurfaceError::OffSurface {
                x: p.x,
                y: p.y,
                z: p.z,
                distance: nn.distance,
                limit: off_limit,
            };
            return Err(if is_start {
                PlanError::Start(err)
            } else {
                PlanError::Goal(err)
            });
        }
    }

    let home = match &cfg.home_seed {
        Some(h) => JointConfig(h.clone()),
        None => chain.limit_midpoint(),
    };

    let start_frame = tangent_frame(index, &start, cfg.pca_k).map_err(PlanError::Start)?;
    let q_start = solve_ik(
        chain,
        &tool_target_from_surface(&start_frame, cfg.standoff),
        &home,
    )
    .map_err(PlanError::StartIk)?;

    let goal_frame = tangent_frame(index, &goal, cfg.pca_k).map_err(PlanError::Goal)?;
    solve_ik(
        chain,
        &tool_target_from_surface(&goal_frame, cfg.standoff),
        &home,
    )
    .map_err(PlanError::GoalIk)?;

    let w_start = manipulability(chain, &q_start, cfg.jacobian_mode);
    let inv_w_start = 1.0 / w_start.max(cfg.w_floor);
    let mut tree = PlannerTree::with_root(start, q_start, w_start, inv_w_start);

    // Degenerate query: the root already satisfies the goal.
    if geodesic_segment(&start, &goal) <= resolved.goal_tolerance {
        let result = extract_result(&tree, 0, cfg.alpha, 0);
        return Ok(PlanOutcome { result, tree });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    for iteration in 0..cfg.iterations {
        let sample = sample_surface(index, &goal, cfg, &mut rng);
        let (outcome, rewired) = match extend(&tree, index, chain, &sample, cfg) {
            Extension::Rejected(reason) => (ExtendOutcome::Rejected(reason), Vec::new()),
            Extension::Extended { candidate, nearest } => {
                let near = near_set(
                    &tree,
                    &candidate.position,
                    nearest,
                    cfg.near_gamma,
                    resolved.edge_cap,
                );
                let parent = choose_parent(&tree, &candidate, &near, cfg.alpha);
                let position = candidate.position;
                let id = tree.insert(candidate, parent);
                let rewired = rewire(&mut tree, id, &near, cfg.alpha);
                (
                    ExtendOutcome::Added {
                        node: id,
                        parent,
                        position,
                    },
                    rewired,
                )
            }
        };
        observer.iteration(
            &tree,
            &IterationEvent {
                index: iteration,
                sample,
                outcome,
                rewired,
            },
        );
    }

    // Best goal-reaching node: lowest blended cost, ties to lower distance
    // cost, then lower id.
    let mut best: Option<(usize, CostBreakdown)> = None;
    for id in 0..tree.len() {
        if geodesic_segment(&tree.node(id).position, &goal) > resolved.goal_tolerance {
            continue;
        }
        let cost = node_cost(tree.node(id), cfg.alpha);
        let better = match &best {
            None => true,
            Some((_, b)) => {
                cost.c_total < b.c_total || (cost.c_total == b.c_total && cost.c_dist < b.c_dist)
            }
        };
        if better {
            best = Some((id, cost));
        }
    }

    let result = match best {
        Some((goal_id, _)) => extract_result(&tree, goal_id, cfg.alpha, cfg.iterations),
        None => PlanResult {
            succeeded: false,
            waypoints: Vec::new(),
            cost: CostBreakdown::zero(),
            tree_size: tree.len(),
            iterations_used: cfg.iterations,
        },
    };
    Ok(PlanOutcome { result, tree })
}

fn extract_result(
    tree: &PlannerTree,
    goal_id: usize,
    alpha: f64,
    iterations_used: usize,
) -> PlanResult {
    let waypoints = tree
        .path_to(goal_id)
        .into_iter()
        .map(|id| {
            let node = tree.node(id);
            Waypoint {
                position: [node.position.x, node.position.y, node.position.z],
                config: node.config.clone(),
                w: node.w,
            }
        })
        .collect();
    PlanResult {
        succeeded: true,
        waypoints,
        cost: node_cost(tree.node(goal_id), alpha),
        tree_size: tree.len(),
        iterations_used,
    }
}
