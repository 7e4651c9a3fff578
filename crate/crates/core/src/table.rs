//! Table-based forward and inverse kinematics.
//!
//! Both directions look up the `k = 3` nearest stored entries and return
//! the inverse-distance weighted mean of their counterparts. An exact hit
//! returns the stored value unchanged.

use alloc::vec::Vec;

use crate::acquisition::Dataset;
use crate::error::TableError;
use crate::geom::wrap_deg;
use crate::plant::{BLADDERS_PER_SEGMENT, N_BLADDERS};

pub const DEFAULT_K: usize = 3;

pub type Times = [f64; N_BLADDERS];
/// Position (mm) followed by `[yaw, pitch, roll]` (deg).
pub type PoseVec = [f64; 6];

/// Distance used when searching by pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseMetric {
    /// Euclidean over position ⊕ Euler, angle differences on the shortest arc.
    #[default]
    Full,
    PositionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Time,
    Pose(PoseMetric),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTable {
    times: Vec<Times>,
    poses: Vec<PoseVec>,
    t_max_ms: f64,
    k: usize,
}

pub fn time_distance(a: &Times, b: &Times) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::sqrt(s)
}

pub fn pose_distance(a: &PoseVec, b: &PoseVec, metric: PoseMetric) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    if metric == PoseMetric::Full {
        for i in 3..6 {
            let d = wrap_deg(a[i] - b[i]);
            s += d * d;
        }
    }
    libm::sqrt(s)
}

/// Zeroes the smallest time of any segment with three positive entries.
pub fn enforce_two_bladder_rule(times: &mut Times) {
    for seg in times.chunks_mut(BLADDERS_PER_SEGMENT) {
        if seg.iter().all(|t| *t > 0.0) {
            let mut smallest = 0;
            for i in 1..seg.len() {
                if seg[i] < seg[smallest] {
                    smallest = i;
                }
            }
            seg[smallest] = 0.0;
        }
    }
}

impl KinematicTable {
    pub fn new(entries: Vec<(Times, PoseVec)>, t_max_ms: f64) -> Self {
        let (times, poses) = entries.into_iter().unzip();
        Self {
            times,
            poses,
            t_max_ms,
            k: DEFAULT_K,
        }
    }

    /// Decodes the percent-encoded times of every sample.
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let entries = dataset
            .samples
            .iter()
            .map(|s| (s.times_ms(dataset.t_max_ms), s.pose_vector()))
            .collect();
        Self::new(entries, dataset.t_max_ms)
    }

    /// Overrides the neighbor count (ablation only; the model uses 3).
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k.max(1);
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max_ms(&self) -> f64 {
        self.t_max_ms
    }

    pub fn times(&self, index: usize) -> &Times {
        &self.times[index]
    }

    pub fn pose(&self, index: usize) -> &PoseVec {
        &self.poses[index]
    }

    /// Keeps the entries whose pose satisfies `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&PoseVec) -> bool) -> Self {
        let entries = self
            .times
            .iter()
            .zip(&self.poses)
            .filter(|(_, p)| keep(p))
            .map(|(t, p)| (*t, *p))
            .collect();
        Self::new(entries, self.t_max_ms).with_k(self.k)
    }

    /// The `k` closest entries, ascending by distance, ties to the lower index.
    pub fn nearest(&self, query: &[f64], k: usize, space: Space) -> Result<Vec<Neighbor>, TableError> {
        let expected = match space {
            Space::Time => N_BLADDERS,
            Space::Pose(_) => 6,
        };
        if query.len() != expected {
            return Err(TableError::Dimension {
                got: query.len(),
                expected,
            });
        }
        if self.len() < k || k == 0 {
            return Err(TableError::Capacity {
                available: self.len(),
                required: k.max(1),
            });
        }
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        for index in 0..self.len() {
            let distance = match space {
                Space::Time => {
                    let mut q = [0.0; N_BLADDERS];
                    q.copy_from_slice(query);
                    time_distance(&q, &self.times[index])
                }
                Space::Pose(metric) => {
                    let mut q = [0.0; 6];
                    q.copy_from_slice(query);
                    pose_distance(&q, &self.poses[index], metric)
                }
            };
            if best.len() == k && distance >= best[k - 1].distance {
                continue;
            }
            let at = best.partition_point(|n| n.distance <= distance);
            best.insert(at, Neighbor { index, distance });
            best.truncate(k);
        }
        Ok(best)
    }

    fn weights(neighbors: &[Neighbor]) -> Vec<f64> {
        neighbors.iter().map(|n| 1.0 / n.distance).collect()
    }

    /// Forward kinematics: times (ms) to pose.
    pub fn forward(&self, times: &Times) -> Result<PoseVec, TableError> {
        let nn = self.nearest(times, self.k, Space::Time)?;
        if nn[0].distance == 0.0 {
            return Ok(self.poses[nn[0].index]);
        }
        let w = Self::weights(&nn);
        let total: f64 = w.iter().sum();
        let reference = self.poses[nn[0].index];
        let mut out = [0.0; 6];
        for (n, wi) in nn.iter().zip(&w) {
            let p = &self.poses[n.index];
            for i in 0..3 {
                out[i] += wi * p[i];
            }
            for i in 3..6 {
                out[i] += wi * wrap_deg(p[i] - reference[i]);
            }
        }
        for v in out.iter_mut().take(3) {
            *v /= total;
        }
        for i in 3..6 {
            out[i] = wrap_deg(reference[i] + out[i] / total);
        }
        Ok(out)
    }

    /// Inverse kinematics: pose to times (ms), with the default metric.
    pub fn inverse(&self, pose: &PoseVec) -> Result<Times, TableError> {
        self.inverse_with(pose, PoseMetric::Full)
    }

    pub fn inverse_with(&self, pose: &PoseVec, metric: PoseMetric) -> Result<Times, TableError> {
        let nn = self.nearest(pose, self.k, Space::Pose(metric))?;
        if nn[0].distance == 0.0 {
            return Ok(self.times[nn[0].index]);
        }
        let w = Self::weights(&nn);
        let total: f64 = w.iter().sum();
        let mut out = [0.0; N_BLADDERS];
        for (n, wi) in nn.iter().zip(&w) {
            for (o, t) in out.iter_mut().zip(&self.times[n.index]) {
                *o += wi * t;
            }
        }
        for o in out.iter_mut() {
            *o = (*o / total).clamp(0.0, self.t_max_ms);
        }
        enforce_two_bladder_rule(&mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar_table(times: &[f64], xs: &[f64]) -> KinematicTable {
        let entries = times
            .iter()
            .zip(xs)
            .map(|(t, x)| {
                let mut tv = [0.0; 9];
                tv[0] = *t;
                (tv, [*x, 0.0, 0.0, 0.0, 0.0, 0.0])
            })
            .collect();
        KinematicTable::new(entries, 1000.0)
    }

    #[test]
    fn forward_weighted_by_inverse_distance() {
        // query at t=0 → distances 1, 2, 2 to entries at 1, 2, -2
        let table = scalar_table(&[1.0, 2.0, -2.0, 50.0], &[10.0, 20.0, 30.0, 99.0]);
        let x = table.forward(&[0.0; 9]).unwrap();
        assert!((x[0] - 17.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_weighted_by_inverse_distance() {
        let entries = vec![
            ([100.0, 0., 0., 0., 0., 0., 0., 0., 0.], [1.0, 0., 0., 0., 0., 0.]),
            ([200.0, 0., 0., 0., 0., 0., 0., 0., 0.], [-1.0, 0., 0., 0., 0., 0.]),
            ([400.0, 0., 0., 0., 0., 0., 0., 0., 0.], [2.0, 0., 0., 0., 0., 0.]),
            ([900.0, 0., 0., 0., 0., 0., 0., 0., 0.], [9.0, 0., 0., 0., 0., 0.]),
        ];
        let table = KinematicTable::new(entries, 1000.0);
        let t = table.inverse(&[0.0; 6]).unwrap();
        assert!((t[0] - 200.0).abs() < 1e-12);
    }

    #[test]
    fn exact_hits_return_stored_values() {
        let table = scalar_table(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0],
        );
        let nn = table.nearest(table.times(7), 3, Space::Time).unwrap();
        assert_eq!((nn[0].index, nn[0].distance), (7, 0.0));
        assert_eq!(table.forward(table.times(5)).unwrap(), *table.pose(5));
        assert_eq!(table.inverse(table.pose(4)).unwrap(), *table.times(4));
    }

    #[test]
    fn ties_go_to_lower_index() {
        let table = scalar_table(&[5.0, -5.0, 1.0, -1.0], &[0.0; 4]);
        let nn = table.nearest(&[0.0; 9], 4, Space::Time).unwrap();
        let order: Vec<usize> = nn.iter().map(|n| n.index).collect();
        assert_eq!(order, vec![2, 3, 0, 1]);
    }

    #[test]
    fn capacity_and_dimension_errors() {
        let table = scalar_table(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(
            table.forward(&[0.0; 9]),
            Err(TableError::Capacity {
                available: 2,
                required: 3
            })
        );
        assert!(matches!(
            table.nearest(&[0.0; 4], 1, Space::Time),
            Err(TableError::Dimension { got: 4, expected: 9 })
        ));
    }

    #[test]
    fn euler_mean_uses_shortest_arc() {
        let mk = |yaw: f64| ([0.0; 9], [0.0, 0.0, 0.0, yaw, 0.0, 0.0]);
        let mut entries = vec![mk(179.0), mk(-179.0), mk(178.0)];
        entries[0].0[0] = 1.0;
        entries[1].0[0] = -1.0;
        entries[2].0[1] = 1.0;
        let table = KinematicTable::new(entries, 1000.0);
        let x = table.forward(&[0.0; 9]).unwrap();
        // equal weights: mean of 179, 181, 178 on the circle = 179.333
        assert!((x[3] - 179.333_333_333_333_3).abs() < 1e-9, "{}", x[3]);
    }

    #[test]
    fn two_bladder_rule_clamp() {
        let mut t = [5.0, 3.0, 4.0, 1.0, 0.0, 2.0, 1.0, 1.0, 1.0];
        enforce_two_bladder_rule(&mut t);
        assert_eq!(t, [5.0, 0.0, 4.0, 1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn position_only_metric_ignores_angles() {
        let a = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0];
        let b = [1.0, 2.0, 4.0, -170.0, 0.0, 0.0];
        assert_eq!(pose_distance(&a, &b, PoseMetric::PositionOnly), 1.0);
        assert!(pose_distance(&a, &b, PoseMetric::Full) > 100.0);
    }
}
