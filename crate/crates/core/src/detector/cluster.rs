use std::collections::HashMap;

use super::{DetectorConfig, DetectorError, PointCloudFrame};
use crate::geometry::{BoundingBox3D, Point3};

/// Indices into a frame's point list, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub point_indices: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

fn cell_of(p: &Point3, inv_size: f64) -> (i64, i64, i64) {
    (
        (p.x * inv_size).floor() as i64,
        (p.y * inv_size).floor() as i64,
        (p.z * inv_size).floor() as i64,
    )
}

/// Connected components of the graph linking points within `cluster_radius`.
///
/// Neighbor search runs over a uniform grid whose cell edge equals the
/// radius, so only the 27 surrounding cells need checking. Components
/// smaller than `min_cluster_points` are dropped. Clusters come out ordered
/// by their smallest point index.
pub fn euclidean_cluster(
    frame: &PointCloudFrame,
    cfg: &DetectorConfig,
) -> Result<Vec<Cluster>, DetectorError> {
    cfg.validate()?;
    let points = &frame.points;
    if points.iter().any(|p| !p.is_finite()) {
        return Err(DetectorError::NonFiniteMeasurement);
    }
    let n = points.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let r2 = cfg.cluster_radius * cfg.cluster_radius;
    let inv = 1.0 / cfg.cluster_radius;

    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(p, inv)).or_default().push(i);
    }

    let mut sets = DisjointSet::new(n);
    for (i, p) in points.iter().enumerate() {
        let (cx, cy, cz) = cell_of(p, inv);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j <= i {
                            continue;
                        }
                        let d = *p - points[j];
                        if d.x * d.x + d.y * d.y + d.z * d.z <= r2 {
                            sets.union(i, j);
                        }
                    }
                }
            }
        }
    }

    // Components keyed by root, visited in index order so each component's
    // first index is its minimum.
    let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    for i in 0..n {
        let root = sets.find(i);
        let slot = *slot_of_root.entry(root).or_insert_with(|| {
            clusters.push(Cluster {
                point_indices: Vec::new(),
            });
            clusters.len() - 1
        });
        clusters[slot].point_indices.push(i);
    }
    clusters.retain(|c| c.len() >= cfg.min_cluster_points);
    Ok(clusters)
}

/// Tight axis-aligned box over the cluster's points.
pub fn fit_bounding_box(
    frame: &PointCloudFrame,
    cluster: &Cluster,
    box_id: u64,
) -> Result<BoundingBox3D, DetectorError> {
    let len = frame.points.len();
    let mut indices = cluster.point_indices.iter();
    let first = *indices.next().ok_or(DetectorError::EmptyCluster)?;
    let lookup = |index: usize| {
        frame
            .points
            .get(index)
            .copied()
            .ok_or(DetectorError::IndexOutOfRange { index, len })
    };
    let p0 = lookup(first)?;
    let (mut lo, mut hi) = (p0, p0);
    for &i in indices {
        let p = lookup(i)?;
        lo = lo.component_min(&p);
        hi = hi.component_max(&p);
    }
    Ok(BoundingBox3D::new(lo, hi, frame.timestamp, box_id)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(points: &[[f64; 3]]) -> PointCloudFrame {
        PointCloudFrame::new(0, 0.0, points.iter().map(|&p| p.into()).collect())
    }

    fn cfg(radius: f64, min_points: usize) -> DetectorConfig {
        DetectorConfig {
            cluster_radius: radius,
            min_cluster_points: min_points,
            ..DetectorConfig::default()
        }
    }

    /// O(n²) union-find over every pair; shares nothing with the grid path.
    fn brute_force_components(points: &[Point3], radius: f64, min_points: usize) -> Vec<Vec<usize>> {
        let n = points.len();
        let mut label: Vec<usize> = (0..n).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                for j in 0..n {
                    if (points[i] - points[j]).norm() <= radius && label[j] < label[i] {
                        label[i] = label[j];
                        changed = true;
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for root in 0..n {
            let members: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
            if !members.is_empty() && members.len() >= min_points {
                groups.push(members);
            }
        }
        groups
    }

    #[test]
    fn two_clusters_forced_by_radius() {
        let f = frame(&[[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [5.0, 0.0, 0.0]]);
        let got = euclidean_cluster(&f, &cfg(0.5, 1)).unwrap();
        let idx: Vec<_> = got.into_iter().map(|c| c.point_indices).collect();
        assert_eq!(idx, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn min_points_filter_and_empty_frame() {
        let f = frame(&[[1.0, 1.0, 1.0]]);
        assert!(euclidean_cluster(&f, &cfg(0.5, 2)).unwrap().is_empty());
        assert!(euclidean_cluster(&frame(&[]), &cfg(0.5, 1)).unwrap().is_empty());
    }

    #[test]
    fn chained_points_join_across_cells() {
        let f = frame(&[[0.0, 0.0, 0.0], [0.45, 0.0, 0.0], [0.9, 0.0, 0.0], [1.35, 0.0, 0.0]]);
        let got = euclidean_cluster(&f, &cfg(0.5, 1)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].point_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn distance_exactly_radius_links() {
        let f = frame(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        assert_eq!(euclidean_cluster(&f, &cfg(0.5, 1)).unwrap().len(), 1);
    }

    #[test]
    fn invalid_config_rejected() {
        let f = frame(&[[0.0, 0.0, 0.0]]);
        assert!(euclidean_cluster(&f, &cfg(0.0, 1)).is_err());
        assert!(euclidean_cluster(&f, &cfg(0.5, 0)).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(0..=50);
            let radius = rng.random_range(0.2..1.5);
            let min_points = rng.random_range(1..=3);
            let points: Vec<Point3> = (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.random_range(-4.0..4.0),
                        rng.random_range(-4.0..4.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            let f = PointCloudFrame::new(0, 0.0, points.clone());
            let got: Vec<Vec<usize>> = euclidean_cluster(&f, &cfg(radius, min_points))
                .unwrap()
                .into_iter()
                .map(|c| c.point_indices)
                .collect();
            assert_eq!(got, brute_force_components(&points, radius, min_points));
        }
    }

    #[test]
    fn box_is_componentwise_extrema() {
        let f = frame(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
        let b = fit_bounding_box(&f, &Cluster { point_indices: vec![0, 1] }, 7).unwrap();
        assert_eq!(b.min_corner, Vec3::new(0.0, 0.0, 0.0));
        assert_eq!(b.max_corner, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(b.box_id, 7);
    }

    #[test]
    fn single_point_box_is_degenerate() {
        let f = frame(&[[2.0, -1.0, 0.5]]);
        let b = fit_bounding_box(&f, &Cluster { point_indices: vec![0] }, 0).unwrap();
        assert_eq!(b.min_corner, b.max_corner);
        assert_eq!(b.volume(), 0.0);
    }

    #[test]
    fn empty_or_bad_cluster_errors() {
        let f = frame(&[[0.0, 0.0, 0.0]]);
        assert_eq!(
            fit_bounding_box(&f, &Cluster { point_indices: vec![] }, 0),
            Err(DetectorError::EmptyCluster)
        );
        assert!(matches!(
            fit_bounding_box(&f, &Cluster { point_indices: vec![3] }, 0),
            Err(DetectorError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn box_is_tight_on_random_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-6;
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let pts: Vec<[f64; 3]> = (0..n)
                .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..2.0)])
                .collect();
            let f = frame(&pts);
            let b = fit_bounding_box(&f, &Cluster { point_indices: (0..n).collect() }, 0).unwrap();
            assert!(f.points.iter().all(|p| b.contains(p)));
            // Pulling any face inward by eps leaves some point outside.
            for axis in 0..3 {
                for upper in [false, true] {
                    let mut lo = b.min_corner.to_array();
                    let mut hi = b.max_corner.to_array();
                    if upper {
                        hi[axis] -= eps;
                    } else {
                        lo[axis] += eps;
                    }
                    if lo[axis] > hi[axis] {
                        continue;
                    }
                    let shrunk = BoundingBox3D::new(lo.into(), hi.into(), 0.0, 0).unwrap();
                    assert!(f.points.iter().any(|p| !shrunk.contains(p)));
                }
            }
        }
    }
}
