use super::{DetectorConfig, DetectorError};
use crate::geometry::{iou_3d, BoundingBox3D};

/// Outcome of matching the previous frame's boxes to the current frame's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    /// `(prev_idx, curr_idx)` pairs, ordered by `prev_idx`.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_prev: Vec<usize>,
    pub unmatched_curr: Vec<usize>,
}

/// Minimum-cost assignment for a rectangular cost matrix.
///
/// Returns, for every row, the column it was assigned to. When there are
/// more rows than columns the surplus rows get `None`. Shortest augmenting
/// paths with row/column potentials, O(n²·m).
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    debug_assert!(cost.iter().all(|r| r.len() == cols));
    if cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| cost[i][j]).collect())
            .collect();
        let mut out = vec![None; rows];
        for (j, i) in solve_assignment(&transposed).into_iter().enumerate() {
            if let Some(i) = i {
                out[i] = Some(j);
            }
        }
        return out;
    }

    // 1-based internal indexing; column 0 is the virtual source.
    let (n, m) = (rows, cols);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=m {
        if row_of_col[j] != 0 {
            out[row_of_col[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Pairwise association cost; `None` when the pair is outside the gate.
pub fn pair_cost(prev: &BoundingBox3D, curr: &BoundingBox3D, cfg: &DetectorConfig) -> Option<f64> {
    let displacement = (curr.center() - prev.center()).norm();
    if displacement > cfg.max_match_displacement {
        return None;
    }
    Some(cfg.cost_weight_displacement * displacement + cfg.cost_weight_iou * (1.0 - iou_3d(prev, curr)))
}

/// Hungarian matching of boxes across consecutive frames.
///
/// Gated pairs are priced above any feasible total so the solver first
/// maximizes the number of feasible matches, then minimizes their summed
/// cost; gated pairs it is forced to use are reported as unmatched.
pub fn associate(
    prev: &[BoundingBox3D],
    curr: &[BoundingBox3D],
    cfg: &DetectorConfig,
) -> Result<Association, DetectorError> {
    cfg.validate()?;
    if prev.is_empty() || curr.is_empty() {
        return Ok(Association {
            matches: Vec::new(),
            unmatched_prev: (0..prev.len()).collect(),
            unmatched_curr: (0..curr.len()).collect(),
        });
    }
    let feasible: Vec<Vec<Option<f64>>> = prev
        .iter()
        .map(|p| curr.iter().map(|c| pair_cost(p, c, cfg)).collect())
        .collect();
    let max_cost = feasible
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |acc, &c| acc.max(c));
    let forbidden = (max_cost + 1.0) * (prev.len().min(curr.len()) as f64 + 1.0);
    let matrix: Vec<Vec<f64>> = feasible
        .iter()
        .map(|row| row.iter().map(|c| c.unwrap_or(forbidden)).collect())
        .collect();

    let mut result = Association::default();
    let mut curr_taken = vec![false; curr.len()];
    for (i, col) in solve_assignment(&matrix).into_iter().enumerate() {
        match col {
            Some(j) if feasible[i][j].is_some() => {
                result.matches.push((i, j));
                curr_taken[j] = true;
            }
            _ => result.unmatched_prev.push(i),
        }
    }
    result.unmatched_curr = (0..curr.len()).filter(|&j| !curr_taken[j]).collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(cx: f64, cy: f64) -> BoundingBox3D {
        BoundingBox3D::from_center(Vec3::new(cx, cy, 0.5), Vec3::new(0.6, 0.6, 1.0), 0.0, 0).unwrap()
    }

    /// Exhaustive search over all injections of the smaller side into the
    /// larger, scored lexicographically by (feasible pairs desc, cost asc).
    fn brute_force(prev: &[BoundingBox3D], curr: &[BoundingBox3D], cfg: &DetectorConfig) -> (usize, f64) {
        fn rec(
            i: usize,
            prev: &[BoundingBox3D],
            curr: &[BoundingBox3D],
            used: &mut Vec<bool>,
            cfg: &DetectorConfig,
            acc: (usize, f64),
            best: &mut (usize, f64),
        ) {
            if i == prev.len() {
                if acc.0 > best.0 || (acc.0 == best.0 && acc.1 < best.1) {
                    *best = acc;
                }
                return;
            }
            // Row i may also stay unassigned.
            rec(i + 1, prev, curr, used, cfg, acc, best);
            for j in 0..curr.len() {
                if used[j] {
                    continue;
                }
                if let Some(c) = pair_cost(&prev[i], &curr[j], cfg) {
                    used[j] = true;
                    rec(i + 1, prev, curr, used, cfg, (acc.0 + 1, acc.1 + c), best);
                    used[j] = false;
                }
            }
        }
        let mut best = (0, 0.0);
        rec(0, prev, curr, &mut vec![false; curr.len()], cfg, (0, 0.0), &mut best);
        best
    }

    #[test]
    fn empty_sides() {
        let cfg = DetectorConfig::default();
        let a = associate(&[], &[bx(0.0, 0.0)], &cfg).unwrap();
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_curr, vec![0]);
        let a = associate(&[bx(0.0, 0.0)], &[], &cfg).unwrap();
        assert_eq!(a.unmatched_prev, vec![0]);
    }

    #[test]
    fn stationary_boxes_match_identity() {
        let cfg = DetectorConfig::default();
        let boxes = [bx(0.0, 0.0), bx(10.0, 0.0), bx(0.0, 10.0)];
        let a = associate(&boxes, &boxes, &cfg).unwrap();
        assert_eq!(a.matches, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn gate_blocks_far_pairs() {
        let cfg = DetectorConfig::default();
        let a = associate(&[bx(0.0, 0.0)], &[bx(10.0, 0.0)], &cfg).unwrap();
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_prev, vec![0]);
        assert_eq!(a.unmatched_curr, vec![0]);
    }

    #[test]
    fn crossing_boxes_pick_global_optimum() {
        // Greedy would pair prev0 with curr1 (distance 0.9) and strand prev1.
        let cfg = DetectorConfig {
            max_match_displacement: 1.5,
            ..DetectorConfig::default()
        };
        let prev = [bx(0.0, 0.0), bx(2.0, 0.0)];
        let curr = [bx(-1.0, 0.0), bx(0.9, 0.0)];
        let a = associate(&prev, &curr, &cfg).unwrap();
        assert_eq!(a.matches, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn solver_handles_rectangular_matrices() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0]];
        assert_eq!(solve_assignment(&cost), vec![Some(1), Some(0)]);
        let tall = vec![vec![4.0, 2.0], vec![1.0, 0.0], vec![3.0, 5.0]];
        let got = solve_assignment(&tall);
        let total: f64 = got.iter().enumerate().filter_map(|(i, c)| c.map(|j| tall[i][j])).sum();
        assert_eq!(total, 3.0);
        assert_eq!(got.iter().filter(|c| c.is_none()).count(), 1);
    }

    #[test]
    fn matches_permutation_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let cfg = DetectorConfig {
                cost_weight_displacement: rng.random_range(0.0..2.0),
                cost_weight_iou: rng.random_range(0.1..2.0),
                max_match_displacement: rng.random_range(0.5..4.0),
                ..DetectorConfig::default()
            };
            let np = rng.random_range(0..=6);
            let nc = rng.random_range(0..=6);
            let mut gen = |_| {
                BoundingBox3D::from_center(
                    Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0),
                    Vec3::new(rng.random_range(0.2..1.5), rng.random_range(0.2..1.5), 1.0),
                    0.0,
                    0,
                )
                .unwrap()
            };
            let prev: Vec<_> = (0..np).map(&mut gen).collect();
            let curr: Vec<_> = (0..nc).map(&mut gen).collect();
            let a = associate(&prev, &curr, &cfg).unwrap();
            let cost: f64 = a
                .matches
                .iter()
                .map(|&(i, j)| pair_cost(&prev[i], &curr[j], &cfg).unwrap())
                .sum();
            let (count, best) = brute_force(&prev, &curr, &cfg);
            assert_eq!(a.matches.len(), count);
            assert!((cost - best).abs() < 1e-9, "{cost} vs {best}");
        }
    }
}
