//! Dataset-collection campaigns against the plant and the stereo rig.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::AcquisitionError;
use crate::geom::Vec3;
use crate::plant::{beacon_world_positions, Plant, BLADDERS_PER_SEGMENT, MAX_SEGMENTS, N_BLADDERS};
use crate::vision::{euler_from_rotation, StereoRig};

/// Hard per-valve ceiling; longer inflations risk punctures.
pub const MAX_T_MAX_MS: f64 = 1000.0;

/// Bladder pairs that may be active together within one segment.
pub const BLADDER_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Nine inflation durations (ms), grouped three per segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValveTimes(pub [f64; N_BLADDERS]);

impl ValveTimes {
    pub fn new(times: [f64; N_BLADDERS], t_max: f64) -> Result<Self, AcquisitionError> {
        let vt = Self(times);
        vt.validate(t_max)?;
        Ok(vt)
    }

    pub fn validate(&self, t_max: f64) -> Result<(), AcquisitionError> {
        if self.0.iter().any(|t| !(t.is_finite() && *t >= 0.0 && *t <= t_max)) {
            return Err(AcquisitionError::InvalidSample("time outside [0, t_max]"));
        }
        if !two_bladder_rule(&self.0) {
            return Err(AcquisitionError::InvalidSample(
                "more than two active bladders in a segment",
            ));
        }
        Ok(())
    }

    pub fn segment(&self, s: usize) -> [f64; 3] {
        let k = s * BLADDERS_PER_SEGMENT;
        [self.0[k], self.0[k + 1], self.0[k + 2]]
    }
}

/// Whether every segment triple has at most two strictly positive entries.
pub fn two_bladder_rule(times: &[f64; N_BLADDERS]) -> bool {
    times
        .chunks(BLADDERS_PER_SEGMENT)
        .all(|seg| seg.iter().filter(|t| **t > 0.0).count() <= 2)
}

fn check_t_max(t_max: f64) -> Result<(), AcquisitionError> {
    if !(t_max > 0.0 && t_max <= MAX_T_MAX_MS) {
        return Err(AcquisitionError::Config("t_max must lie in (0, 1000] ms"));
    }
    Ok(())
}

/// Draws one valve command: per segment a uniformly chosen bladder pair,
/// each member uniform in `[0, t_max]`, the third bladder idle.
pub fn generate_sample_times<R: Rng + ?Sized>(rng: &mut R, t_max: f64) -> Result<ValveTimes, AcquisitionError> {
    check_t_max(t_max)?;
    Ok(ValveTimes(draw_times(rng, t_max, MAX_SEGMENTS)))
}

/// Same draw restricted to the first `active` segments; later segments
/// stay deflated.
pub fn draw_times<R: Rng + ?Sized>(rng: &mut R, t_max: f64, active: usize) -> [f64; N_BLADDERS] {
    let mut times = [0.0; N_BLADDERS];
    for seg in 0..active.min(MAX_SEGMENTS) {
        let (a, b) = BLADDER_PAIRS[rng.random_range(0..BLADDER_PAIRS.len())];
        let k = seg * BLADDERS_PER_SEGMENT;
        times[k + a] = rng.random_range(0.0..=t_max);
        times[k + b] = rng.random_range(0.0..=t_max);
    }
    times
}

pub fn encode_percent(t_ms: f64, t_max: f64) -> Result<f64, AcquisitionError> {
    if !(t_max > 0.0) || !(t_ms >= 0.0 && t_ms <= t_max) {
        return Err(AcquisitionError::Encoding {
            value: t_ms,
            max: t_max,
        });
    }
    Ok(100.0 * t_ms / t_max)
}

pub fn decode_percent(percent: f64, t_max: f64) -> Result<f64, AcquisitionError> {
    if !(t_max > 0.0) || !(0.0..=100.0).contains(&percent) {
        return Err(AcquisitionError::Encoding {
            value: percent,
            max: 100.0,
        });
    }
    Ok(percent / 100.0 * t_max)
}

/// Formats `x` rounded to 9 significant digits, in plain decimal notation.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            String::from("0")
        } else {
            format!("{x}")
        };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 8 {
        out.push_str(&digits);
        out.extend(core::iter::repeat_n('0', (exp - 8) as usize));
    } else if exp >= 0 {
        let split = exp as usize + 1;
        out.push_str(&digits[..split]);
        out.push('.');
        out.push_str(&digits[split..]);
    } else {
        out.push_str("0.");
        out.extend(core::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = String::from(trimmed);
    }
    out
}

/// Rounds to the value that survives a 9-significant-digit round trip.
pub fn quantize(x: f64) -> f64 {
    let q: f64 = format_sig9(x).parse().unwrap_or(x);
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId {
    pub session: u64,
    pub index: u32,
}

impl core::fmt::Display for SampleId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.session, self.index)
    }
}

impl core::str::FromStr for SampleId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let (a, b) = s.split_once(':').ok_or(())?;
        Ok(Self {
            session: a.trim().parse().map_err(|_| ())?,
            index: b.trim().parse().map_err(|_| ())?,
        })
    }
}

/// One stored measurement: percent-encoded times and the captured pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub id: SampleId,
    pub times_percent: [f64; N_BLADDERS],
    /// Green sphere position (mm).
    pub position: Vec3,
    /// Beacon orientation as `[yaw, pitch, roll]` (deg).
    pub euler: [f64; 3],
}

impl Sample {
    /// Builds a sample with every number quantized to storage precision.
    pub fn new(id: SampleId, times_percent: [f64; N_BLADDERS], position: Vec3, euler: [f64; 3]) -> Self {
        Self {
            id,
            times_percent: times_percent.map(quantize),
            position: position.map(quantize),
            euler: euler.map(quantize),
        }
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.times_percent.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return Err(AcquisitionError::InvalidSample("percent outside [0, 100]"));
        }
        if !two_bladder_rule(&self.times_percent) {
            return Err(AcquisitionError::InvalidSample(
                "more than two active bladders in a segment",
            ));
        }
        if self.position.iter().chain(self.euler.iter()).any(|v| !v.is_finite()) {
            return Err(AcquisitionError::InvalidSample("non-finite pose"));
        }
        Ok(())
    }

    pub fn times_ms(&self, t_max: f64) -> [f64; N_BLADDERS] {
        self.times_percent.map(|p| p / 100.0 * t_max)
    }

    /// Position followed by Euler angles.
    pub fn pose_vector(&self) -> [f64; 6] {
        let [x, y, z] = self.position;
        let [a, b, c] = self.euler;
        [x, y, z, a, b, c]
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id).then_with(|| {
            let lhs = self.times_percent.iter().chain(&self.position).chain(&self.euler);
            let rhs = other.times_percent.iter().chain(&other.position).chain(&other.euler);
            lhs.zip(rhs)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

/// Provenance of one collection session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInfo {
    pub id: u64,
    pub seed: u64,
    pub t_max_ms: f64,
    pub pressure_bar: f64,
    pub temperature_c: f64,
    pub n_requested: u64,
    pub n_samples: u64,
    pub discarded_count: u64,
    pub created_at: Option<String>,
}

impl SessionInfo {
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.id
            .cmp(&other.id)
            .then(self.seed.cmp(&other.seed))
            .then(self.t_max_ms.total_cmp(&other.t_max_ms))
            .then(self.pressure_bar.total_cmp(&other.pressure_bar))
            .then(self.temperature_c.total_cmp(&other.temperature_c))
            .then(self.n_requested.cmp(&other.n_requested))
            .then(self.n_samples.cmp(&other.n_samples))
            .then(self.discarded_count.cmp(&other.discarded_count))
            .then_with(|| self.created_at.cmp(&other.created_at))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub pressure_bar: f64,
    pub temperature_c: f64,
    pub seed: u64,
    pub created_at: Option<String>,
    pub discarded_count: u64,
    pub sessions: Vec<SessionInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub t_max_ms: f64,
    pub metadata: DatasetMeta,
}

impl Dataset {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if !(self.t_max_ms > 0.0) {
            return Err(AcquisitionError::Config("t_max must be positive"));
        }
        self.samples.iter().try_for_each(Sample::validate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Parameters of one collection session.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectConfig {
    pub n_samples: usize,
    pub t_max_ms: f64,
    pub seed: u64,
    pub failure_prob: f64,
    pub pressure_bar: f64,
    pub temperature_c: f64,
    pub created_at: Option<String>,
}

impl CollectConfig {
    pub fn new(n_samples: usize, t_max_ms: f64, seed: u64, failure_prob: f64) -> Self {
        Self {
            n_samples,
            t_max_ms,
            seed,
            failure_prob,
            pressure_bar: 1.2,
            temperature_c: 22.0,
            created_at: None,
        }
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.n_samples == 0 {
            return Err(AcquisitionError::Config("n_samples must be positive"));
        }
        check_t_max(self.t_max_ms)?;
        if !(0.0..1.0).contains(&self.failure_prob) {
            return Err(AcquisitionError::Config("failure_prob must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Independent RNG stream for sample `index` of a session.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outcome of one acquisition attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capture {
    Stored(Sample),
    Discarded,
}

/// Runs one sample of a campaign: command, inflate, capture, encode.
pub fn acquire_sample(
    plant: &Plant,
    rig: &StereoRig,
    cfg: &CollectConfig,
    index: u32,
) -> Result<Capture, AcquisitionError> {
    let mut rng = sample_rng(cfg.seed, index as u64);
    let times = generate_sample_times(&mut rng, cfg.t_max_ms)?;
    let failed = rng.random::<f64>() < cfg.failure_prob;
    let measured = measure_times(plant, rig, &times.0, &mut rng)?;
    let (position, euler) = match (failed, measured) {
        (false, Some(m)) => m,
        _ => return Ok(Capture::Discarded),
    };
    let mut percent = [0.0; N_BLADDERS];
    for (p, t) in percent.iter_mut().zip(times.0) {
        *p = encode_percent(t, cfg.t_max_ms)?;
    }
    let id = SampleId {
        session: cfg.seed,
        index,
    };
    Ok(Capture::Stored(Sample::new(id, percent, position, euler)))
}

/// Drives the plant from rest with `times` and captures the beacon.
/// Returns `None` when the capture fails (sphere missed or geometry
/// degenerate), as the real rig reports an error code.
pub fn measure_times<R: Rng + ?Sized>(
    plant: &Plant,
    rig: &StereoRig,
    times: &[f64; N_BLADDERS],
    rng: &mut R,
) -> Result<Option<(Vec3, [f64; 3])>, AcquisitionError> {
    let state = plant.drive(times)?;
    let tip = plant.tip_pose_noisy(&state, 0.0, rng);
    let spheres = beacon_world_positions(&tip, &plant.beacon);
    Ok(match rig.measure(&spheres, rng) {
        Ok(Some(pose)) => Some((pose.position, euler_from_rotation(&pose.orientation))),
        _ => None,
    })
}

/// Collects a dataset. Sample `i` uses its own RNG stream, so its content
/// does not depend on any other sample.
pub fn collect(plant: &Plant, rig: &StereoRig, cfg: &CollectConfig) -> Result<Dataset, AcquisitionError> {
    cfg.validate()?;
    for cam in &rig.cameras {
        cam.validate()?;
    }
    plant.config.validate()?;
    let n = u32::try_from(cfg.n_samples).map_err(|_| AcquisitionError::Config("too many samples"))?;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut discarded = 0u64;
    for i in 0..n {
        match acquire_sample(plant, rig, cfg, i)? {
            Capture::Stored(s) => samples.push(s),
            Capture::Discarded => discarded += 1,
        }
    }
    let session = SessionInfo {
        id: cfg.seed,
        seed: cfg.seed,
        t_max_ms: cfg.t_max_ms,
        pressure_bar: cfg.pressure_bar,
        temperature_c: cfg.temperature_c,
        n_requested: cfg.n_samples as u64,
        n_samples: samples.len() as u64,
        discarded_count: discarded,
        created_at: cfg.created_at.clone(),
    };
    Ok(Dataset {
        samples,
        t_max_ms: cfg.t_max_ms,
        metadata: DatasetMeta {
            pressure_bar: cfg.pressure_bar,
            temperature_c: cfg.temperature_c,
            seed: cfg.seed,
            created_at: cfg.created_at.clone(),
            discarded_count: discarded,
            sessions: alloc::vec![session],
        },
    })
}

/// Unions sessions under the largest `t_max`. Percent values are
/// re-encoded, sessions and samples are put in canonical order, so the
/// result does not depend on argument order.
pub fn merge(datasets: &[Dataset]) -> Result<Dataset, AcquisitionError> {
    let first = datasets
        .first()
        .ok_or(AcquisitionError::Config("merge needs at least one dataset"))?;
    let t_max = datasets.iter().map(|d| d.t_max_ms).fold(first.t_max_ms, f64::max);

    let mut samples = Vec::new();
    let mut sessions = Vec::new();
    for d in datasets {
        let ratio = d.t_max_ms / t_max;
        for s in &d.samples {
            let percent = s.times_percent.map(|p| (p * ratio).min(100.0));
            samples.push(Sample::new(s.id, percent, s.position, s.euler));
        }
        sessions.extend(d.metadata.sessions.iter().cloned());
    }
    samples.sort_by(Sample::total_cmp);
    sessions.sort_by(SessionInfo::total_cmp);

    let n = sessions.len().max(1) as f64;
    let pressure = sessions.iter().map(|s| s.pressure_bar).sum::<f64>() / n;
    let temperature = sessions.iter().map(|s| s.temperature_c).sum::<f64>() / n;
    let seed = sessions.iter().map(|s| s.seed).min().unwrap_or(first.metadata.seed);
    let discarded = datasets.iter().map(|d| d.metadata.discarded_count).sum();
    let created_at = if datasets.len() == 1 {
        first.metadata.created_at.clone()
    } else {
        None
    };
    Ok(Dataset {
        samples,
        t_max_ms: t_max,
        metadata: DatasetMeta {
            pressure_bar: quantize(pressure),
            temperature_c: quantize(temperature),
            seed,
            created_at,
            discarded_count: discarded,
            sessions,
        },
    })
}
