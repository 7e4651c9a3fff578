use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionError {
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("degenerate stereo geometry (condition number {condition:e})")]
    DegenerateGeometry { condition: f64 },
    #[error("inconsistent observation: recovered depths ({depth1}, {depth2})")]
    InconsistentObservation { depth1: f64, depth2: f64 },
    #[error("degenerate beacon: coincident spheres")]
    DegenerateBeacon,
    #[error("singular orientation: beacon directions are antiparallel")]
    SingularOrientation,
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("bladder index {0} out of range")]
    BladderOutOfRange(usize),
    #[error("negative duration {0} ms")]
    NegativeDuration(f64),
    #[error("overinflation of bladder {bladder}: {requested} ms requested on top of {cumulative} ms (cap {cap} ms)")]
    Overinflation {
        bladder: usize,
        cumulative: f64,
        requested: f64,
        cap: f64,
    },
    #[error("invalid plant configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcquisitionError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("value {value} outside encodable range [0, {max}]")]
    Encoding { value: f64, max: f64 },
    #[error("sample violates valve-time invariants: {0}")]
    InvalidSample(&'static str),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("table has {available} entries, {required} required")]
    Capacity { available: usize, required: usize },
    #[error("query has dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("bending angle undefined for z = {0}")]
    UndefinedAngle(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
}
