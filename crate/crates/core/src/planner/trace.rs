//! Iteration-level observation hooks.
//!
//! Used by tests to compare the planner trace-for-trace against a reference
//! implementation and to audit tree integrity after every iteration.

use alloc::vec::Vec;

use nalgebra::Point3;

use super::tree::PlannerTree;

/// Why a sampled extension was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RejectReason {
    /// The step collapsed onto the nearest node.
    Duplicate,
    /// The step left the observed surface (hole or cloud boundary).
    OffSurface,
    /// The local neighbourhood had no usable tangent plane.
    DegenerateFrame,
    /// Inverse kinematics did not converge at the new point.
    IkFailure,
}

/// Result of one extension attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendOutcome {
    Added {
        node: usize,
        parent: usize,
        position: Point3<f64>,
    },
    Rejected(RejectReason),
}

/// Everything that happened in one planner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationEvent {
    pub index: usize,
    pub sample: Point3<f64>,
    pub outcome: ExtendOutcome,
    /// `(node, new_parent)` pairs rewired after the insertion.
    pub rewired: Vec<(usize, usize)>,
}

/// Observer invoked after every planner iteration with the event and the
/// tree state at that moment.
pub trait PlanObserver {
    fn iteration(&mut self, tree: &PlannerTree, event: &IterationEvent);
}

/// Observer that ignores everything.
pub struct NoopObserver;

impl PlanObserver for NoopObserver {
    fn iteration(&mut self, _tree: &PlannerTree, _event: &IterationEvent) {}
}

/// Observer that stores every event.
#[derive(Default)]
pub struct RecordingObserver {
    pub events: Vec<IterationEvent>,
}

impl PlanObserver for RecordingObserver {
    fn iteration(&mut self, _tree: &PlannerTree, event: &IterationEvent) {
        self.events.push(event.clone());
    }
}
