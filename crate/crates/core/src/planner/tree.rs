//! Search tree with per-node cumulative cost accumulators.
//!
//! The blended cost mixes an additive term (path length from the start) with
//! a path *average* (mean inverse manipulability), so every node carries the
//! running sum of inverse manipulability and its path depth alongside the
//! usual distance-from-root. Re-parenting recomputes those fields through
//! the new parent and pushes them down the whole subtree, keeping stored
//! costs exact at all times.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use nalgebra::Point3;

use crate::kinematics::JointConfig;
use crate::surface::geodesic_segment;

/// Cost of reaching a node, split into its two blended components.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostBreakdown {
    /// Sum of segment lengths from the start, meters.
    pub c_dist: f64,
    /// Mean of clamped `1/w` over the path points.
    pub c_manip: f64,
    /// `(1 - alpha) * c_dist + alpha * c_manip`.
    pub c_total: f64,
}

impl CostBreakdown {
    pub fn blend(alpha: f64, c_dist: f64, c_manip: f64) -> Self {
        CostBreakdown {
            c_dist,
            c_manip,
            c_total: (1.0 - alpha) * c_dist + alpha * c_manip,
        }
    }

    pub fn zero() -> Self {
        CostBreakdown {
            c_dist: 0.0,
            c_manip: 0.0,
            c_total: 0.0,
        }
    }
}

/// One vertex of the search tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Position on the surface.
    pub position: Point3<f64>,
    /// Arm configuration touching this position.
    pub config: JointConfig,
    /// Parent node id; `None` only for the root.
    pub parent: Option<usize>,
    /// Path length from the start, meters.
    pub cum_dist: f64,
    /// Sum of `inv_w` over the path including this node.
    pub cum_inv_w: f64,
    /// Number of path points from the root including this node.
    pub depth: usize,
    /// This node's clamped inverse manipulability `1 / max(w, w_floor)`.
    pub inv_w: f64,
    /// Raw manipulability at `config`.
    pub w: f64,
    children: Vec<usize>,
}

impl TreeNode {
    pub fn children(&self) -> &[usize] {
        &self.children
    }
}

/// Candidate node produced by an extension, not yet attached to the tree.
#[derive(Debug, Clone)]
pub struct ProvisionalNode {
    pub position: Point3<f64>,
    pub config: JointConfig,
    pub w: f64,
    pub inv_w: f64,
}

/// Evaluates the blended cost of a node from its stored accumulators.
pub fn node_cost(node: &TreeNode, alpha: f64) -> CostBreakdown {
    CostBreakdown::blend(alpha, node.cum_dist, node.cum_inv_w / node.depth as f64)
}

/// The RRT* tree. Node 0 is always the root.
pub struct PlannerTree {
    nodes: Vec<TreeNode>,
}

impl PlannerTree {
    /// Creates a tree holding only the root node.
    pub fn with_root(position: Point3<f64>, config: JointConfig, w: f64, inv_w: f64) -> Self {
        PlannerTree {
            nodes: alloc::vec![TreeNode {
                position,
                config,
                parent: None,
                cum_dist: 0.0,
                cum_inv_w: inv_w,
                depth: 1,
                inv_w,
                w,
                children: Vec::new(),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Id of the node nearest to `p` (Euclidean; ties go to the smaller id).
    pub fn nearest(&self, p: &Point3<f64>) -> usize {
        let mut best = 0;
        let mut best_d2 = (self.nodes[0].position - p).norm_squared();
        for (id, node) in self.nodes.iter().enumerate().skip(1) {
            let d2 = (node.position - p).norm_squared();
            if d2 < best_d2 {
                best = id;
                best_d2 = d2;
            }
        }
        best
    }

    /// Ids of all nodes within `radius` of `p`, in ascending id order.
    pub fn within_radius(&self, p: &Point3<f64>, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| (n.position - p).norm_squared() <= r2)
            .map(|(id, _)| id)
            .collect()
    }

    /// Accumulators the provisional node would get when attached through
    /// `parent`: `(cum_dist, cum_inv_w, depth)`.
    pub fn attach_through(
        &self,
        parent: usize,
        candidate: &ProvisionalNode,
    ) -> (f64, f64, usize) {
        let p = &self.nodes[parent];
        (
            p.cum_dist + geodesic_segment(&p.position, &candidate.position),
            p.cum_inv_w + candidate.inv_w,
            p.depth + 1,
        )
    }

    /// Inserts `candidate` under `parent` and returns the new node id.
    pub fn insert(&mut self, candidate: ProvisionalNode, parent: usize) -> usize {
        let (cum_dist, cum_inv_w, depth) = self.attach_through(parent, &candidate);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            position: candidate.position,
            config: candidate.config,
            parent: Some(parent),
            cum_dist,
            cum_inv_w,
            depth,
            inv_w: candidate.inv_w,
            w: candidate.w,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// All ancestors of `id`, root included.
    pub fn ancestors(&self, id: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.insert(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    /// Re-parents `id` under `new_parent` and refreshes the cumulative
    /// fields of `id` and its whole subtree.
    pub fn reparent(&mut self, id: usize, new_parent: usize) {
        let old_parent = self.nodes[id].parent.expect("cannot reparent the root");
        let pos = self.nodes[old_parent]
            .children
            .iter()
            .position(|&c| c == id)
            .expect("child listed under its parent");
        self.nodes[old_parent].children.remove(pos);
        self.nodes[id].parent = Some(new_parent);
        self.nodes[new_parent].children.push(id);
        self.refresh_subtree(id);
    }

    /// Recomputes cumulative fields of `id` and its descendants from their
    /// parents, depth-first.
    fn refresh_subtree(&mut self, id: usize) {
        let mut stack = alloc::vec![id];
        while let Some(cur) = stack.pop() {
            let parent = self.nodes[cur].parent.expect("subtree refresh below root");
            let seg = geodesic_segment(&self.nodes[parent].position, &self.nodes[cur].position);
            self.nodes[cur].cum_dist = self.nodes[parent].cum_dist + seg;
            self.nodes[cur].cum_inv_w = self.nodes[parent].cum_inv_w + self.nodes[cur].inv_w;
            self.nodes[cur].depth = self.nodes[parent].depth + 1;
            stack.extend_from_slice(&self.nodes[cur].children);
        }
    }

    /// Path of node ids from the root to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut path = alloc::vec![id];
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            path.push(p);
            cur = self.nodes[p].parent;
        }
        path.reverse();
        path
    }
}

/// Picks the near-set member that minimises the candidate's blended cost
/// when attached through it. Ties break on smaller `c_dist`, then smaller
/// node id; `near` is scanned in ascending id order.
pub fn choose_parent(
    tree: &PlannerTree,
    candidate: &ProvisionalNode,
    near: &[usize],
    alpha: f64,
) -> usize {
    debug_assert!(!near.is_empty());
    let mut best_id = near[0];
    let mut best = through_cost(tree, near[0], candidate, alpha);
    for &id in &near[1..] {
        let cost = through_cost(tree, id, candidate, alpha);
        if cost.c_total < best.c_total
            || (cost.c_total == best.c_total && cost.c_dist < best.c_dist)
        {
            best_id = id;
            best = cost;
        }
    }
    best_id
}

fn through_cost(
    tree: &PlannerTree,
    parent: usize,
    candidate: &ProvisionalNode,
    alpha: f64,
) -> CostBreakdown {
    let (cum_dist, cum_inv_w, depth) = tree.attach_through(parent, candidate);
    CostBreakdown::blend(alpha, cum_dist, cum_inv_w / depth as f64)
}

/// Re-parents every near node through `new_id` when that strictly lowers
/// its blended cost, propagating updated accumulators to descendants.
/// Ancestors of `new_id` are skipped: with a path-averaged cost term a
/// re-parented ancestor could otherwise close a cycle.
///
/// Returns the `(node, new_parent)` pairs actually rewired, in scan order.
pub fn rewire(
    tree: &mut PlannerTree,
    new_id: usize,
    near: &[usize],
    alpha: f64,
) -> Vec<(usize, usize)> {
    let ancestors = tree.ancestors(new_id);
    let mut rewired = Vec::new();
    for &id in near {
        if id == new_id || ancestors.contains(&id) {
            continue;
        }
        let new = &tree.nodes[new_id];
        let node = &tree.nodes[id];
        let seg = geodesic_segment(&new.position, &node.position);
        let through = CostBreakdown::blend(
            alpha,
            new.cum_dist + seg,
            (new.cum_inv_w + node.inv_w) / (new.depth + 1) as f64,
        );
        if through.c_total < node_cost(node, alpha).c_total {
            tree.reparent(id, new_id);
            rewired.push((id, new_id));
        }
    }
    rewired
}
