//! Core models for a three-segment soft pneumatic arm: stereo beacon
//! tracking, a constant-curvature plant simulator, dataset acquisition,
//! lookup-table kinematics and the validation experiments built on them.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command line
//! live in the `softarm` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod acquisition;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod plant;
pub mod table;
pub mod vision;

pub use acquisition::{collect, merge, CollectConfig, Dataset, DatasetMeta, Sample, SampleId, SessionInfo, ValveTimes};
pub use error::{AcquisitionError, ExperimentError, PlantError, TableError, VisionError};
pub use plant::{BeaconGeometry, Plant, PlantConfig, PlantState};
pub use table::{KinematicTable, PoseMetric};
pub use vision::{CameraModel, PixelPoint, Pose, StereoRig};
