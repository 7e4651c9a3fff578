//! Validation experiments: error statistics, workspace extent, bending
//! sweeps, forward/inverse model accuracy and payload degradation.

use alloc::vec::Vec;

use crate::acquisition::{draw_times, sample_rng, Dataset, BLADDER_PAIRS, MAX_T_MAX_MS};
use crate::error::ExperimentError;
use crate::geom::{self, Vec3};
use crate::plant::{beacon_world_positions, Plant, PlantConfig, PlantState, N_BLADDERS};
use crate::table::{KinematicTable, PoseMetric, PoseVec, Space, Times};
use crate::vision::{euler_from_rotation, pose_from_spheres};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n − 1).
    pub sd: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Option<Histogram>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64], bins: Option<usize>) -> Result<Self, ExperimentError> {
        if errors.is_empty() {
            return Err(ExperimentError::Empty("no trials"));
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(ExperimentError::InvalidParameter("non-finite error value"));
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            libm::sqrt(sorted.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        let (min, max) = (sorted[0], sorted[n - 1]);
        let histogram = bins.filter(|b| *b > 0).map(|b| {
            let width = if max > min { (max - min) / b as f64 } else { 1.0 };
            let edges = (0..=b).map(|i| min + width * i as f64).collect();
            let mut counts = alloc::vec![0u64; b];
            for e in &sorted {
                let i = (((e - min) / width) as usize).min(b - 1);
                counts[i] += 1;
            }
            Histogram { edges, counts }
        });
        Ok(Self {
            count: n,
            mean,
            median: quantile(&sorted, 0.5),
            sd,
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            min,
            max,
            histogram,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceSummary {
    pub min: Vec3,
    pub max: Vec3,
    /// `[yaw, pitch, roll]` ranges (deg).
    pub euler_min: [f64; 3],
    pub euler_max: [f64; 3],
}

impl WorkspaceSummary {
    pub fn extents(&self) -> Vec3 {
        geom::sub(self.max, self.min)
    }
}

pub fn workspace_scan(dataset: &Dataset) -> Result<WorkspaceSummary, ExperimentError> {
    let first = dataset.samples.first().ok_or(ExperimentError::Empty("dataset"))?;
    let mut ws = WorkspaceSummary {
        min: first.position,
        max: first.position,
        euler_min: first.euler,
        euler_max: first.euler,
    };
    for s in &dataset.samples[1..] {
        for i in 0..3 {
            ws.min[i] = ws.min[i].min(s.position[i]);
            ws.max[i] = ws.max[i].max(s.position[i]);
            ws.euler_min[i] = ws.euler_min[i].min(s.euler[i]);
            ws.euler_max[i] = ws.euler_max[i].max(s.euler[i]);
        }
    }
    Ok(ws)
}

/// Deflection of a point from the vertical through `(x0, y0)`, in degrees:
/// `atan(√((x−x0)² + (y−y0)²) / z)`.
pub fn bending_angle(position: Vec3, x0: f64, y0: f64) -> Result<f64, ExperimentError> {
    let [x, y, z] = position;
    if !(z > 0.0) {
        return Err(ExperimentError::UndefinedAngle(z));
    }
    Ok(libm::atan(libm::hypot(x - x0, y - y0) / z).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Reset before every point and inflate the cumulative time at once.
    #[default]
    ZeroReturn,
    /// Keep inflating in steps; resumed inflation pays the hysteresis factor.
    Incremental,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub cumulative_ms: f64,
    pub angle_deg: f64,
}

/// Bends the base segment with its first bladder in `step_ms` increments up
/// to the inflation budget, reading the deflection of that segment's
/// distal end relative to its base.
pub fn bending_sweep(
    config: &PlantConfig,
    n_segments: usize,
    step_ms: f64,
    mode: SweepMode,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    let cfg = PlantConfig { n_segments, ..*config };
    let plant = Plant::new(cfg, Default::default())?;
    let budget = cfg.inflation_cap_ms;
    let steps = budget / step_ms;
    if !(step_ms > 0.0) || libm::fabs(steps - libm::round(steps)) > 1e-9 {
        return Err(ExperimentError::InvalidParameter(
            "step must divide the inflation budget",
        ));
    }
    let steps = libm::round(steps) as usize;

    let read = |state: &PlantState| -> Result<f64, ExperimentError> {
        let shape = plant.shape(state, 0.0);
        let rel = geom::sub(shape.segment_ends[0].position, shape.segment_bases[0].position);
        bending_angle(rel, 0.0, 0.0)
    };

    let mut out = Vec::with_capacity(steps + 1);
    let mut state = plant.reset();
    out.push(SweepPoint {
        cumulative_ms: 0.0,
        angle_deg: read(&state)?,
    });
    for i in 1..=steps {
        let cumulative = step_ms * i as f64;
        state = match mode {
            SweepMode::ZeroReturn => plant.step_inflate(&plant.reset(), 0, cumulative)?,
            SweepMode::Incremental => plant.step_inflate(&state, 0, step_ms)?,
        };
        out.push(SweepPoint {
            cumulative_ms: cumulative,
            angle_deg: read(&state)?,
        });
    }
    Ok(out)
}

/// What the rig would store for a tip pose with perfect detection: the
/// green sphere position and the beacon orientation as Euler angles.
pub fn ideal_pose_vector(plant: &Plant, tip: &crate::vision::Pose) -> PoseVec {
    let [g, r, b] = beacon_world_positions(tip, &plant.beacon);
    let e = pose_from_spheres(g, r, b)
        .map(|p| euler_from_rotation(&p.orientation))
        .unwrap_or([0.0; 3]);
    [g[0], g[1], g[2], e[0], e[1], e[2]]
}

/// Exhaustive table over the first `active` segments: every bladder pair
/// on a grid of `step_ms`, later segments deflated. Poses are the noiseless
/// plant's ideal measurements.
pub fn structured_table(
    plant: &Plant,
    step_ms: f64,
    t_max: f64,
    active: usize,
) -> Result<KinematicTable, ExperimentError> {
    if !(step_ms > 0.0) || !(t_max > 0.0 && t_max <= MAX_T_MAX_MS) {
        return Err(ExperimentError::InvalidParameter(
            "grid step and t_max must be positive",
        ));
    }
    let levels = libm::round(t_max / step_ms) as usize;
    let values: Vec<f64> = (0..=levels).map(|i| (step_ms * i as f64).min(t_max)).collect();
    let mut per_segment: Vec<[f64; 3]> = Vec::new();
    for (a, b) in BLADDER_PAIRS {
        for va in &values {
            for vb in &values {
                let mut t = [0.0; 3];
                t[a] = *va;
                t[b] = *vb;
                if !per_segment.contains(&t) {
                    per_segment.push(t);
                }
            }
        }
    }
    let mut combos: Vec<Times> = alloc::vec![[0.0; N_BLADDERS]];
    for seg in 0..active.min(plant.config.n_segments) {
        let mut next = Vec::with_capacity(combos.len() * per_segment.len());
        for base in &combos {
            for s in &per_segment {
                let mut t = *base;
                t[seg * 3..seg * 3 + 3].copy_from_slice(s);
                next.push(t);
            }
        }
        combos = next;
    }
    let mut entries = Vec::with_capacity(combos.len());
    for t in combos {
        let state = plant.drive(&t)?;
        entries.push((t, ideal_pose_vector(plant, &plant.tip_pose(&state, 0.0))));
    }
    Ok(KinematicTable::new(entries, t_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkTrial {
    pub index: usize,
    pub times: Times,
    pub predicted: PoseVec,
    pub reached: Vec3,
    pub error_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkReport {
    pub stats: ErrorStats,
    pub trials: Vec<FkTrial>,
}

pub const HISTOGRAM_BINS: usize = 10;

// Experiments share the caller's seed with acquisition, so their streams
// live in separate domains; otherwise trial i would replay sample i.
const TRIAL_DOMAIN: u64 = 0x7472_6961_6c73_0001;
const PAYLOAD_NOISE_DOMAIN: u64 = 0x7061_796c_6f61_0002;

/// Minimum time-space distance (ms) from every table entry for a forward
/// trial to count as unseen; stored times carry 9-digit rounding.
const UNSEEN_MIN_MS: f64 = 1e-3;

/// RNG stream for validation trial `index`, independent of the acquisition
/// streams of the same seed.
pub fn trial_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    sample_rng(seed ^ TRIAL_DOMAIN, index)
}

/// Forward-model accuracy: random commands outside the table, compared
/// against the position the plant actually reaches.
///
/// Commands are drawn for the first `active_segments` segments (3 for the
/// full arm).
pub fn fk_validation(
    plant: &Plant,
    table: &KinematicTable,
    n_trials: usize,
    seed: u64,
    active_segments: usize,
) -> Result<FkReport, ExperimentError> {
    if n_trials == 0 {
        return Err(ExperimentError::Empty("trials"));
    }
    let mut trials = Vec::with_capacity(n_trials);
    for i in 0..n_trials {
        let mut rng = trial_rng(seed, i as u64);
        let times = loop {
            let t = draw_times(&mut rng, table.t_max_ms(), active_segments);
            if table.nearest(&t, 1, Space::Time)?[0].distance > UNSEEN_MIN_MS {
                break t;
            }
        };
        let predicted = table.forward(&times)?;
        let state = plant.drive(&times)?;
        let reached = plant.tip_pose_noisy(&state, 0.0, &mut rng).position;
        let error_mm = geom::dist(reached, [predicted[0], predicted[1], predicted[2]]);
        trials.push(FkTrial {
            index: i,
            times,
            predicted,
            reached,
            error_mm,
        });
    }
    let errors: Vec<f64> = trials.iter().map(|t| t.error_mm).collect();
    Ok(FkReport {
        stats: ErrorStats::from_errors(&errors, Some(HISTOGRAM_BINS))?,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Full,
    /// Targets whose tip lies within `half_width_mm` of the horizontal
    /// plane at height `plane_z_mm` (the median table height if `None`),
    /// searched by position only.
    Restricted {
        plane_z_mm: Option<f64>,
        half_width_mm: f64,
    },
}

impl Region {
    pub const DEFAULT_RESTRICTED: Region = Region::Restricted {
        plane_z_mm: None,
        half_width_mm: 15.0,
    };
}

/// Rejection-sampling budget per restricted target.
const MAX_TARGET_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkTrial {
    pub index: usize,
    pub target: PoseVec,
    pub times: Times,
    pub reached: Vec3,
    pub error_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkReport {
    pub stats: ErrorStats,
    pub trials: Vec<IkTrial>,
    /// Height of the target plane for restricted runs (mm).
    pub plane_z_mm: Option<f64>,
}

/// Inverse-model accuracy on plant-reachable targets: compute times with
/// the table, drive a fresh plant with them and measure the position error.
pub fn ik_validation(
    plant: &Plant,
    table: &KinematicTable,
    n_trials: usize,
    seed: u64,
    region: Region,
) -> Result<IkReport, ExperimentError> {
    if n_trials == 0 {
        return Err(ExperimentError::Empty("trials"));
    }
    let (metric, band) = match region {
        Region::Full => (PoseMetric::Full, None),
        Region::Restricted {
            plane_z_mm,
            half_width_mm,
        } => {
            if !(half_width_mm > 0.0) {
                return Err(ExperimentError::InvalidParameter("band half-width must be positive"));
            }
            let z = match plane_z_mm {
                Some(z) => z,
                None => median_height(table).ok_or(ExperimentError::Empty("table"))?,
            };
            (PoseMetric::PositionOnly, Some((z, half_width_mm)))
        }
    };
    let mut trials = Vec::with_capacity(n_trials);
    for i in 0..n_trials {
        let mut rng = trial_rng(seed, i as u64);
        let mut target = None;
        for _ in 0..MAX_TARGET_DRAWS {
            let t = draw_times(&mut rng, table.t_max_ms(), plant.config.n_segments);
            let tip = plant.tip_pose(&plant.drive(&t)?, 0.0);
            if band.is_none_or(|(z, w)| libm::fabs(tip.position[2] - z) <= w) {
                target = Some(ideal_pose_vector(plant, &tip));
                break;
            }
        }
        let target = target.ok_or(ExperimentError::InvalidParameter("target plane is out of reach"))?;
        let times = table.inverse_with(&target, metric)?;
        let state = plant.drive(&times)?;
        let reached = plant.tip_pose_noisy(&state, 0.0, &mut rng).position;
        let error_mm = geom::dist(reached, [target[0], target[1], target[2]]);
        trials.push(IkTrial {
            index: i,
            target,
            times,
            reached,
            error_mm,
        });
    }
    let errors: Vec<f64> = trials.iter().map(|t| t.error_mm).collect();
    Ok(IkReport {
        stats: ErrorStats::from_errors(&errors, Some(HISTOGRAM_BINS))?,
        trials,
        plane_z_mm: band.map(|(z, _)| z),
    })
}

fn median_height(table: &KinematicTable) -> Option<f64> {
    let mut z: Vec<f64> = (0..table.len()).map(|i| table.pose(i)[2]).collect();
    if z.is_empty() {
        return None;
    }
    z.sort_by(f64::total_cmp);
    Some(quantile(&z, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadPoint {
    pub index: usize,
    pub target: PoseVec,
    /// Horizontal distance of the target from the arm axis (mm).
    pub radial_mm: f64,
    pub error_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadReport {
    pub payload_g: f64,
    pub stats: ErrorStats,
    pub points: Vec<PayloadPoint>,
}

impl PayloadReport {
    /// Mean error of the points nearer the arm axis than the median radial
    /// distance, and of the rest.
    pub fn center_periphery_means(&self) -> (f64, f64) {
        let mut radial: Vec<f64> = self.points.iter().map(|p| p.radial_mm).collect();
        radial.sort_by(f64::total_cmp);
        let cut = quantile(&radial, 0.5);
        let mean = |inner: bool| {
            let sel: Vec<f64> = self
                .points
                .iter()
                .filter(|p| (p.radial_mm <= cut) == inner)
                .map(|p| p.error_mm)
                .collect();
            if sel.is_empty() {
                0.0
            } else {
                sel.iter().sum::<f64>() / sel.len() as f64
            }
        };
        (mean(true), mean(false))
    }
}

/// For each payload, drives the plant with inverse-model times at
/// `n_points` reachable targets and compares the loaded position with the
/// unloaded one under the same command.
pub fn payload_eval(
    plant: &Plant,
    table: &KinematicTable,
    payloads_g: &[f64],
    n_points: usize,
    seed: u64,
) -> Result<Vec<PayloadReport>, ExperimentError> {
    if n_points == 0 || payloads_g.is_empty() {
        return Err(ExperimentError::Empty("payload points"));
    }
    if payloads_g.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(ExperimentError::InvalidParameter("payloads must be non-negative"));
    }
    let mut commands = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let mut rng = trial_rng(seed, i as u64);
        let t = draw_times(&mut rng, table.t_max_ms(), plant.config.n_segments);
        let target = ideal_pose_vector(plant, &plant.tip_pose(&plant.drive(&t)?, 0.0));
        let times = table.inverse(&target)?;
        commands.push((target, plant.drive(&times)?));
    }
    let mut reports = Vec::with_capacity(payloads_g.len());
    for (j, payload) in payloads_g.iter().enumerate() {
        let mut points = Vec::with_capacity(n_points);
        for (i, (target, state)) in commands.iter().enumerate() {
            let mut rng = sample_rng(seed ^ PAYLOAD_NOISE_DOMAIN, (i * 64 + j) as u64);
            let unloaded = plant.tip_pose_noisy(state, 0.0, &mut rng).position;
            let loaded = plant.tip_pose_noisy(state, *payload, &mut rng).position;
            points.push(PayloadPoint {
                index: i,
                target: *target,
                radial_mm: libm::hypot(target[0], target[1]),
                error_mm: geom::dist(loaded, unloaded),
            });
        }
        let errors: Vec<f64> = points.iter().map(|p| p.error_mm).collect();
        reports.push(PayloadReport {
            payload_g: *payload,
            stats: ErrorStats::from_errors(&errors, None)?,
            points,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{collect, merge, CollectConfig};
    use crate::vision::StereoRig;

    #[test]
    fn bending_angle_cases() {
        assert_eq!(bending_angle([3.0, 4.0, 10.0], 3.0, 4.0).unwrap(), 0.0);
        assert!((bending_angle([3.0, 4.0, 5.0], 0.0, 0.0).unwrap() - 45.0).abs() < 1e-12);
        assert!(matches!(
            bending_angle([1.0, 0.0, 0.0], 0.0, 0.0),
            Err(ExperimentError::UndefinedAngle(_))
        ));
        assert!(bending_angle([1.0, 0.0, -1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn stats_basic() {
        let s = ErrorStats::from_errors(&[1.0, 2.0, 3.0, 4.0, 10.0], Some(3)).unwrap();
        assert_eq!(s.count, 5);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 3.0);
        assert_eq!((s.q1, s.q3), (2.0, 4.0));
        assert!((s.sd - libm::sqrt(12.5)).abs() < 1e-12);
        let h = s.histogram.unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5);
        assert_eq!(h.counts, alloc::vec![3, 1, 1]);
        assert!(ErrorStats::from_errors(&[], None).is_err());
        let one = ErrorStats::from_errors(&[2.5], Some(4)).unwrap();
        assert_eq!((one.median, one.sd, one.min, one.max), (2.5, 0.0, 2.5, 2.5));
    }

    #[test]
    fn sweep_shape() {
        let cfg = PlantConfig::default();
        let sweep = bending_sweep(&cfg, 1, 100.0, SweepMode::ZeroReturn).unwrap();
        assert_eq!(sweep.len(), 11);
        assert_eq!(sweep[0].angle_deg, 0.0);
        assert!(sweep.windows(2).all(|w| w[1].angle_deg >= w[0].angle_deg));
        assert!((sweep[10].angle_deg - 40.0).abs() <= 1.0);
        assert!(bending_sweep(&cfg, 1, 300.0, SweepMode::ZeroReturn).is_err());

        let inc = bending_sweep(&cfg, 1, 100.0, SweepMode::Incremental).unwrap();
        assert!(inc.windows(2).all(|w| w[1].angle_deg >= w[0].angle_deg));
        assert!(inc[10].angle_deg < sweep[10].angle_deg);
    }

    #[test]
    fn workspace_of_single_and_merged() {
        let plant = Plant::default();
        let rig = StereoRig::default_rig();
        let a = collect(&plant, &rig, &CollectConfig::new(15, 1000.0, 1, 0.0)).unwrap();
        let b = collect(&plant, &rig, &CollectConfig::new(15, 600.0, 2, 0.0)).unwrap();
        let mut one = a.clone();
        one.samples.truncate(1);
        let ws = workspace_scan(&one).unwrap();
        assert_eq!(ws.min, ws.max);
        assert_eq!(ws.min, one.samples[0].position);
        let wa = workspace_scan(&a).unwrap();
        let wm = workspace_scan(&merge(&[a.clone(), b]).unwrap()).unwrap();
        for i in 0..3 {
            assert!(wm.min[i] <= wa.min[i] && wm.max[i] >= wa.max[i]);
            assert!(wa.min[i] <= wa.max[i]);
        }
        one.samples.clear();
        assert!(workspace_scan(&one).is_err());
    }

    #[test]
    fn trials_do_not_replay_the_campaign() {
        let plant = Plant::default();
        let rig = StereoRig::default_rig();
        let d = collect(&plant, &rig, &CollectConfig::new(50, 1000.0, 9, 0.0)).unwrap();
        let table = KinematicTable::from_dataset(&d);
        let r = fk_validation(&plant, &table, 50, 9, 3).unwrap();
        for t in &r.trials {
            assert!(table.nearest(&t.times, 1, Space::Time).unwrap()[0].distance > UNSEEN_MIN_MS);
        }
    }

    #[test]
    fn structured_table_size() {
        let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
        let t = structured_table(&plant, 250.0, 1000.0, 1).unwrap();
        assert_eq!(t.len(), 61);
    }

    #[test]
    fn exact_support_trials_hit_noise_floor() {
        let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
        let table = structured_table(&plant, 250.0, 1000.0, 1).unwrap();
        for i in 0..table.len() {
            let pred = table.forward(table.times(i)).unwrap();
            let reached = plant.tip_pose(&plant.drive(table.times(i)).unwrap(), 0.0).position;
            assert!(geom::dist(reached, [pred[0], pred[1], pred[2]]) < 1e-9);
        }
    }

    #[test]
    fn ik_exact_target_is_reached() {
        let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
        let table = structured_table(&plant, 250.0, 1000.0, 1).unwrap();
        let target = *table.pose(17);
        let t = table.inverse(&target).unwrap();
        let reached = plant.tip_pose(&plant.drive(&t).unwrap(), 0.0).position;
        assert!(geom::dist(reached, [target[0], target[1], target[2]]) < 1e-9);
    }

    #[test]
    fn zero_payload_matches_noiseless_self() {
        let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
        let rig = StereoRig::default_rig();
        let d = collect(&plant, &rig, &CollectConfig::new(60, 1000.0, 3, 0.0)).unwrap();
        let table = KinematicTable::from_dataset(&d);
        let r = payload_eval(&plant, &table, &[0.0, 155.0], 8, 5).unwrap();
        assert!(r[0].points.iter().all(|p| p.error_mm == 0.0));
        assert!(r[1].stats.mean > 0.0);
    }
}
