//! Synthetic three-segment arm used as ground truth.
//!
//! Each segment bends as a constant-curvature arc. The bend grows linearly
//! with the fill-weighted resultant of its bladder azimuths and points away
//! from the inflated side. Bladder fills are tracked in ms-equivalent units
//! with the actuation bench's asymmetries: venting is `deflation_factor`
//! times slower than filling, and resuming inflation of a non-empty bladder
//! is `hysteresis_factor` times less effective.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::PlantError;
use crate::geom::{self, Vec3};
use crate::vision::Pose;

pub const MAX_SEGMENTS: usize = 3;
pub const BLADDERS_PER_SEGMENT: usize = 3;
pub const N_BLADDERS: usize = MAX_SEGMENTS * BLADDERS_PER_SEGMENT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    pub n_segments: usize,
    pub segment_length_mm: f64,
    /// Intersegment connector length.
    pub connector_length_mm: f64,
    /// Connector between the fixed base and the first segment.
    pub base_connector_mm: f64,
    /// Beacon rod on top of the last segment.
    pub rod_length_mm: f64,
    pub segment_diameter_mm: f64,
    /// Bladder directions about the segment axis, degrees.
    pub bladder_azimuths_deg: [f64; 3],
    /// Tangent bend (rad) per ms-equivalent of resultant fill.
    pub curvature_gain: f64,
    pub max_fill_ms: f64,
    /// Per-bladder commanded inflation budget between resets.
    pub inflation_cap_ms: f64,
    pub deflation_factor: f64,
    pub hysteresis_factor: f64,
    /// Line pressure, recorded as metadata only.
    pub line_pressure_bar: f64,
    /// Extra tilt (rad) of each segment per gram of payload per mm of
    /// horizontal lever arm between the segment base and the tip.
    pub payload_droop_gain: f64,
    /// Isotropic Gaussian noise on the tip position (mm).
    pub process_noise_sd_mm: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            n_segments: 3,
            segment_length_mm: 100.0,
            connector_length_mm: 20.0,
            base_connector_mm: 20.0,
            rod_length_mm: 30.0,
            segment_diameter_mm: 45.0,
            bladder_azimuths_deg: [90.0, 210.0, 330.0],
            // A single bladder at full fill gives an 80° arc, whose chord
            // sits at 40° from the segment axis.
            curvature_gain: 80f64.to_radians() / 1000.0,
            max_fill_ms: 1000.0,
            inflation_cap_ms: 1000.0,
            deflation_factor: 1.45,
            hysteresis_factor: 1.2,
            line_pressure_bar: 1.2,
            payload_droop_gain: 5e-7,
            process_noise_sd_mm: 0.5,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(1..=MAX_SEGMENTS).contains(&self.n_segments) {
            return Err(PlantError::InvalidConfig("n_segments must be 1..=3"));
        }
        let lengths = [
            self.segment_length_mm,
            self.connector_length_mm,
            self.base_connector_mm,
            self.rod_length_mm,
            self.segment_diameter_mm,
        ];
        if lengths.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || self.segment_length_mm <= 0.0 {
            return Err(PlantError::InvalidConfig("lengths must be finite and non-negative"));
        }
        if !(self.deflation_factor > 1.0) {
            return Err(PlantError::InvalidConfig("deflation_factor must exceed 1"));
        }
        if !(self.hysteresis_factor >= 1.0) {
            return Err(PlantError::InvalidConfig("hysteresis_factor must be at least 1"));
        }
        if !(self.max_fill_ms > 0.0) || !(self.inflation_cap_ms > 0.0) {
            return Err(PlantError::InvalidConfig("max_fill and inflation cap must be positive"));
        }
        if !(self.curvature_gain >= 0.0) || !(self.payload_droop_gain >= 0.0) {
            return Err(PlantError::InvalidConfig("gains must be non-negative"));
        }
        if !(self.process_noise_sd_mm >= 0.0) {
            return Err(PlantError::InvalidConfig("process noise must be non-negative"));
        }
        Ok(())
    }

    /// Tip height of the straight, unloaded arm.
    pub fn straight_height_mm(&self) -> f64 {
        let n = self.n_segments as f64;
        self.base_connector_mm + n * self.segment_length_mm + (n - 1.0) * self.connector_length_mm + self.rod_length_mm
    }

    pub fn n_bladders(&self) -> usize {
        self.n_segments * BLADDERS_PER_SEGMENT
    }

    pub fn noiseless(mut self) -> Self {
        self.process_noise_sd_mm = 0.0;
        self
    }
}

/// Sphere centers relative to the tip frame (mm). Green sits on the rod end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeaconGeometry {
    pub offsets: [Vec3; 3],
}

impl Default for BeaconGeometry {
    fn default() -> Self {
        Self {
            offsets: [[0.0, 0.0, 0.0], [40.0, 0.0, 0.0], [0.0, 40.0, 0.0]],
        }
    }
}

impl BeaconGeometry {
    pub fn validate(&self) -> Result<(), PlantError> {
        let [g, r, b] = self.offsets;
        let n = geom::norm(geom::cross(geom::sub(r, g), geom::sub(b, g)));
        if !(n > 1e-9) {
            return Err(PlantError::InvalidConfig("beacon spheres are collinear"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Effective fill per bladder (ms-equivalent).
    pub fill: [f64; N_BLADDERS],
    /// Commanded inflation per bladder since the last reset (ms).
    pub cumulative_ms: [f64; N_BLADDERS],
}

impl PlantState {
    pub fn segment_fills(&self, segment: usize) -> [f64; 3] {
        let k = segment * BLADDERS_PER_SEGMENT;
        [self.fill[k], self.fill[k + 1], self.fill[k + 2]]
    }
}

/// Arc parameters of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentBend {
    /// Tangent bend angle over the segment (rad); curvature is this over
    /// the segment length.
    pub angle: f64,
    /// Direction of the fill resultant about the segment axis (rad). The
    /// arc bends toward the opposite side.
    pub plane: f64,
}

/// Frames along the arm for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmShape {
    pub n_segments: usize,
    pub segment_bases: [Pose; MAX_SEGMENTS],
    pub segment_ends: [Pose; MAX_SEGMENTS],
    pub tip: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Plant {
    pub config: PlantConfig,
    pub beacon: BeaconGeometry,
}

impl Plant {
    pub fn new(config: PlantConfig, beacon: BeaconGeometry) -> Result<Self, PlantError> {
        config.validate()?;
        beacon.validate()?;
        Ok(Self { config, beacon })
    }

    pub fn reset(&self) -> PlantState {
        PlantState::default()
    }

    fn check_bladder(&self, bladder: usize) -> Result<(), PlantError> {
        if bladder >= self.config.n_bladders() {
            return Err(PlantError::BladderOutOfRange(bladder));
        }
        Ok(())
    }

    fn check_duration(duration_ms: f64) -> Result<(), PlantError> {
        if !(duration_ms >= 0.0 && duration_ms.is_finite()) {
            return Err(PlantError::NegativeDuration(duration_ms));
        }
        Ok(())
    }

    pub fn step_inflate(&self, state: &PlantState, bladder: usize, duration_ms: f64) -> Result<PlantState, PlantError> {
        self.check_bladder(bladder)?;
        Self::check_duration(duration_ms)?;
        let cfg = &self.config;
        let cumulative = state.cumulative_ms[bladder];
        if cumulative + duration_ms > cfg.inflation_cap_ms + 1e-9 {
            return Err(PlantError::Overinflation {
                bladder,
                cumulative,
                requested: duration_ms,
                cap: cfg.inflation_cap_ms,
            });
        }
        let mut next = *state;
        let current = state.fill[bladder];
        if current == 0.0 && duration_ms > 0.0 {
            let seg = bladder / BLADDERS_PER_SEGMENT;
            let active = state.segment_fills(seg).iter().filter(|f| **f > 0.0).count();
            if active >= 2 {
                return Err(PlantError::InvalidConfig(
                    "at most two bladders per segment may be inflated",
                ));
            }
        }
        let gained = if current > 0.0 {
            duration_ms / cfg.hysteresis_factor
        } else {
            duration_ms
        };
        next.fill[bladder] = (current + gained).min(cfg.max_fill_ms);
        next.cumulative_ms[bladder] = cumulative + duration_ms;
        Ok(next)
    }

    pub fn step_deflate(&self, state: &PlantState, bladder: usize, duration_ms: f64) -> Result<PlantState, PlantError> {
        self.check_bladder(bladder)?;
        Self::check_duration(duration_ms)?;
        let mut next = *state;
        let vented = duration_ms / self.config.deflation_factor;
        next.fill[bladder] = (state.fill[bladder] - vented).max(0.0);
        Ok(next)
    }

    pub fn segment_bend(&self, state: &PlantState, segment: usize) -> SegmentBend {
        let cfg = &self.config;
        let fills = state.segment_fills(segment);
        let (mut rx, mut ry) = (0.0, 0.0);
        for (f, az) in fills.iter().zip(cfg.bladder_azimuths_deg) {
            let a = az.to_radians();
            rx += f * libm::cos(a);
            ry += f * libm::sin(a);
        }
        let magnitude = libm::hypot(rx, ry).min(cfg.max_fill_ms);
        SegmentBend {
            angle: cfg.curvature_gain * magnitude,
            plane: libm::atan2(ry, rx),
        }
    }

    /// Arc end relative to the segment base: (position, rotation).
    fn arc(&self, bend: SegmentBend) -> Pose {
        let l = self.config.segment_length_mm;
        let beta = bend.angle;
        if beta.abs() < 1e-12 {
            return Pose {
                position: [0.0, 0.0, l],
                orientation: geom::IDENTITY,
            };
        }
        let toward = bend.plane + core::f64::consts::PI;
        let u = [libm::cos(toward), libm::sin(toward), 0.0];
        let radius = l / beta;
        let lateral = radius * (1.0 - libm::cos(beta));
        let axial = radius * libm::sin(beta);
        Pose {
            position: geom::add(geom::scale(u, lateral), [0.0, 0.0, axial]),
            orientation: geom::axis_angle(geom::cross([0.0, 0.0, 1.0], u), beta),
        }
    }

    fn compose(&self, state: &PlantState, droop: &[f64; MAX_SEGMENTS], axes: &[Vec3; MAX_SEGMENTS]) -> ArmShape {
        let cfg = &self.config;
        let n = cfg.n_segments;
        let mut rot = geom::IDENTITY;
        let mut pos = [0.0, 0.0, cfg.base_connector_mm];
        let mut bases = [Pose::identity(); MAX_SEGMENTS];
        let mut ends = [Pose::identity(); MAX_SEGMENTS];
        for s in 0..n {
            if droop[s] != 0.0 {
                rot = geom::mat_mul(&geom::axis_angle(axes[s], droop[s]), &rot);
            }
            bases[s] = Pose {
                position: pos,
                orientation: rot,
            };
            let arc = self.arc(self.segment_bend(state, s));
            pos = geom::add(pos, geom::mat_vec(&rot, arc.position));
            rot = geom::mat_mul(&rot, &arc.orientation);
            ends[s] = Pose {
                position: pos,
                orientation: rot,
            };
            let extension = if s + 1 < n {
                cfg.connector_length_mm
            } else {
                cfg.rod_length_mm
            };
            pos = geom::add(pos, geom::mat_vec(&rot, [0.0, 0.0, extension]));
        }
        ArmShape {
            n_segments: n,
            segment_bases: bases,
            segment_ends: ends,
            tip: Pose {
                position: pos,
                orientation: rot,
            },
        }
    }

    /// Noiseless arm shape under a payload hung at the tip.
    ///
    /// Each segment is tilted about its base, toward gravity, by
    /// `payload_droop_gain · payload · lever`, where the lever is the
    /// horizontal distance from the segment base to the unloaded tip.
    pub fn shape(&self, state: &PlantState, payload_g: f64) -> ArmShape {
        let zero = [0.0; MAX_SEGMENTS];
        let axes = [[0.0; 3]; MAX_SEGMENTS];
        let unloaded = self.compose(state, &zero, &axes);
        if payload_g <= 0.0 || self.config.payload_droop_gain == 0.0 {
            return unloaded;
        }
        let mut droop = zero;
        let mut droop_axes = axes;
        for s in 0..self.config.n_segments {
            let h = geom::sub(unloaded.tip.position, unloaded.segment_bases[s].position);
            let lever = libm::hypot(h[0], h[1]);
            if lever < 1e-9 {
                continue;
            }
            droop[s] = self.config.payload_droop_gain * payload_g * lever;
            droop_axes[s] = [-h[1] / lever, h[0] / lever, 0.0];
        }
        self.compose(state, &droop, &droop_axes)
    }

    /// Noiseless tip pose (rod end, where the green sphere sits).
    pub fn tip_pose(&self, state: &PlantState, payload_g: f64) -> Pose {
        self.shape(state, payload_g).tip
    }

    /// Tip pose with isotropic Gaussian position noise.
    pub fn tip_pose_noisy<R: Rng + ?Sized>(&self, state: &PlantState, payload_g: f64, rng: &mut R) -> Pose {
        let mut pose = self.tip_pose(state, payload_g);
        let sd = self.config.process_noise_sd_mm;
        if sd > 0.0 {
            if let Ok(n) = Normal::new(0.0, sd) {
                for c in pose.position.iter_mut() {
                    *c += n.sample(rng);
                }
            }
        }
        pose
    }

    /// Resets the plant and inflates each bladder once, in index order.
    pub fn drive(&self, times_ms: &[f64; N_BLADDERS]) -> Result<PlantState, PlantError> {
        let mut state = self.reset();
        for (b, t) in times_ms.iter().enumerate() {
            if *t > 0.0 {
                state = self.step_inflate(&state, b, *t)?;
            }
        }
        Ok(state)
    }
}

/// Sphere centers in the world frame for a tip pose.
pub fn beacon_world_positions(pose: &Pose, beacon: &BeaconGeometry) -> [Vec3; 3] {
    beacon.offsets.map(|o| pose.transform(o))
}
