//! Spatial index over the point cloud: a static 3-d kd-tree supporting
//! exact k-nearest-neighbour and radius queries.

use alloc::vec::Vec;

use nalgebra::Point3;

use super::{PointCloud, SurfaceError};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// A neighbour returned by a spatial query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index of the point in [`PointCloud::points`].
    pub index: usize,
    /// Euclidean distance from the query point.
    pub distance: f64,
}

const LEAF_SIZE: usize = 12;

enum Node {
    Leaf {
        start: usize,
        len: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

struct KdTree {
    nodes: Vec<Node>,
    // Point indices, reordered so every leaf owns a contiguous range.
    order: Vec<usize>,
}

impl KdTree {
    fn build(points: &[Point3<f64>]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let n = points.len();
        Self::split(points, &mut order, &mut nodes, 0, n);
        KdTree { nodes, order }
    }

    fn split(
        points: &[Point3<f64>],
        order: &mut [usize],
        nodes: &mut Vec<Node>,
        start: usize,
        len: usize,
    ) -> usize {
        let id = nodes.len();
        if len <= LEAF_SIZE {
            nodes.push(Node::Leaf { start, len });
            return id;
        }

        // Split on the axis with the widest spread.
        let slice = &order[..len];
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in slice.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(points[i][a]);
                hi[a] = hi[a].max(points[i][a]);
            }
        }
        let mut axis = 0;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }

        let mid = len / 2;
        order[..len].select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis]
                .total_cmp(&points[b][axis])
                .then(a.cmp(&b))
        });
        let value = points[order[mid]][axis];

        nodes.push(Node::Leaf { start: 0, len: 0 }); // placeholder
        let (head, tail) = order.split_at_mut(mid);
        let left = Self::split(points, head, nodes, start, mid);
        let right = Self::split(points, tail, nodes, start + mid, len - mid);
        nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }
}

/// Queryable view of a [`PointCloud`]: the manifold the planner walks on.
///
/// Immutable after construction; concurrent read-only queries are safe.
pub struct SurfaceIndex {
    cloud: PointCloud,
    tree: KdTree,
    median_spacing: f64,
}

impl SurfaceIndex {
    /// Builds the index. Fails on clouds with fewer than 3 points.
    pub fn build(cloud: PointCloud) -> Result<Self, SurfaceError> {
        if cloud.len() < 3 {
            return Err(SurfaceError::TooFewPoints { count: cloud.len() });
        }
        let tree = KdTree::build(cloud.points());
        let mut index = SurfaceIndex {
            cloud,
            tree,
            median_spacing: 0.0,
        };
        index.median_spacing = index.compute_median_spacing()?;
        Ok(index)
    }

    /// Median over all points of the distance to their nearest other point.
    fn compute_median_spacing(&self) -> Result<f64, SurfaceError> {
        let mut spacings: Vec<f64> = Vec::with_capacity(self.cloud.len());
        for p in self.cloud.points() {
            let nn = self.knn(p, 2);
            // nn[0] is the point itself at distance 0 (dedup guarantees
            // uniqueness), nn[1] the true nearest neighbour.
            spacings.push(nn[1].distance);
        }
        spacings.sort_by(f64::total_cmp);
        let n = spacings.len();
        let median = if n % 2 == 1 {
            spacings[n / 2]
        } else {
            0.5 * (spacings[n / 2 - 1] + spacings[n / 2])
        };
        if median <= 0.0 {
            return Err(SurfaceError::DegenerateSpacing);
        }
        Ok(median)
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.len() == 0
    }

    /// Median nearest-neighbour distance of the cloud, in meters.
    pub fn median_spacing(&self) -> f64 {
        self.median_spacing
    }

    /// The `min(k, |cloud|)` nearest points to `query`, sorted by ascending
    /// distance (ties broken by point index).
    pub fn knn(&self, query: &Point3<f64>, k: usize) -> Vec<Neighbor> {
        let k = k.min(self.cloud.len());
        if k == 0 {
            return Vec::new();
        }
        // Sorted candidate list of (dist2, index); small k keeps this cheap.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_visit(0, query, k, &mut best);
        best.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    fn knn_visit(&self, node: usize, query: &Point3<f64>, k: usize, best: &mut Vec<(f64, usize)>) {
        match self.tree.nodes[node] {
            Node::Leaf { start, len } => {
                for &i in &self.tree.order[start..start + len] {
                    let d2 = (self.cloud.points()[i] - query).norm_squared();
                    let cand = (d2, i);
                    if best.len() == k && cand >= best[k - 1] {
                        continue;
                    }
                    let pos = best.partition_point(|&e| e < cand);
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_visit(near, query, k, best);
                if best.len() < k || delta * delta <= best[best.len() - 1].0 {
                    self.knn_visit(far, query, k, best);
                }
            }
        }
    }

    /// Convenience: the single nearest point.
    pub fn nearest(&self, query: &Point3<f64>) -> Neighbor {
        self.knn(query, 1)[0]
    }

    /// All points within `radius` of `query`, sorted by ascending distance.
    pub fn within_radius(&self, query: &Point3<f64>, radius: f64) -> Vec<Neighbor> {
        let mut hits: Vec<(f64, usize)> = Vec::new();
        self.radius_visit(0, query, radius * radius, &mut hits);
        hits.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        hits.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    fn radius_visit(&self, node: usize, query: &Point3<f64>, r2: f64, hits: &mut Vec<(f64, usize)>) {
        match self.tree.nodes[node] {
            Node::Leaf { start, len } => {
                for &i in &self.tree.order[start..start + len] {
                    let d2 = (self.cloud.points()[i] - query).norm_squared();
                    if d2 <= r2 {
                        hits.push((d2, i));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.radius_visit(near, query, r2, hits);
                if delta * delta <= r2 {
                    self.radius_visit(far, query, r2, hits);
                }
            }
        }
    }
}
