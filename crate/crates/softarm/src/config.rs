//! JSON camera and plant configuration files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use softarm_core::plant::BeaconGeometry;
use softarm_core::{CameraModel, Plant, PlantConfig, StereoRig};

use crate::error::FormatError;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_size: [u32; 2],
    /// World-to-camera rotation, row-major.
    #[serde(rename = "R")]
    pub rotation: [f64; 9],
    /// World-to-camera translation (m).
    pub t: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    pub cameras: [CameraEntry; 2],
    #[serde(default)]
    pub pixel_noise_px: f64,
}

impl CameraFile {
    pub fn to_rig(&self) -> Result<StereoRig, FormatError> {
        let cam = |c: &CameraEntry| {
            let r = c.rotation;
            CameraModel::new(
                c.fx,
                c.fy,
                c.cx,
                c.cy,
                [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
                c.t,
                c.image_size,
            )
        };
        if !(self.pixel_noise_px >= 0.0 && self.pixel_noise_px.is_finite()) {
            return Err(FormatError::Config("pixel_noise_px must be non-negative".into()));
        }
        Ok(StereoRig {
            cameras: [cam(&self.cameras[0])?, cam(&self.cameras[1])?],
            pixel_noise_px: self.pixel_noise_px,
        })
    }
}

impl From<&StereoRig> for CameraFile {
    fn from(rig: &StereoRig) -> Self {
        let entry = |c: &CameraModel| CameraEntry {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            image_size: c.image_size,
            rotation: [
                c.rotation[0][0],
                c.rotation[0][1],
                c.rotation[0][2],
                c.rotation[1][0],
                c.rotation[1][1],
                c.rotation[1][2],
                c.rotation[2][0],
                c.rotation[2][1],
                c.rotation[2][2],
            ],
            t: c.translation,
        };
        Self {
            cameras: [entry(&rig.cameras[0]), entry(&rig.cameras[1])],
            pixel_noise_px: rig.pixel_noise_px,
        }
    }
}

/// Plant parameters; omitted keys take the calibrated defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantFile {
    pub n_segments: usize,
    pub segment_length_mm: f64,
    pub connector_length_mm: f64,
    pub base_connector_mm: f64,
    pub rod_length_mm: f64,
    pub segment_diameter_mm: f64,
    pub bladder_azimuths_deg: [f64; 3],
    /// Tangent bend of a segment at `max_fill_ms` (deg).
    pub bend_at_max_fill_deg: f64,
    pub max_fill_ms: f64,
    pub inflation_cap_ms: f64,
    pub deflation_factor: f64,
    pub hysteresis_factor: f64,
    pub line_pressure_bar: f64,
    pub payload_droop_gain: f64,
    pub process_noise_sd_mm: f64,
    /// Green, red and blue sphere centres in the tip frame (mm).
    pub beacon_offsets_mm: [[f64; 3]; 3],
}

impl Default for PlantFile {
    fn default() -> Self {
        Self::from(&Plant::default())
    }
}

impl From<&Plant> for PlantFile {
    fn from(p: &Plant) -> Self {
        let c = &p.config;
        Self {
            n_segments: c.n_segments,
            segment_length_mm: c.segment_length_mm,
            connector_length_mm: c.connector_length_mm,
            base_connector_mm: c.base_connector_mm,
            rod_length_mm: c.rod_length_mm,
            segment_diameter_mm: c.segment_diameter_mm,
            bladder_azimuths_deg: c.bladder_azimuths_deg,
            bend_at_max_fill_deg: (c.curvature_gain * c.max_fill_ms).to_degrees(),
            max_fill_ms: c.max_fill_ms,
            inflation_cap_ms: c.inflation_cap_ms,
            deflation_factor: c.deflation_factor,
            hysteresis_factor: c.hysteresis_factor,
            line_pressure_bar: c.line_pressure_bar,
            payload_droop_gain: c.payload_droop_gain,
            process_noise_sd_mm: c.process_noise_sd_mm,
            beacon_offsets_mm: p.beacon.offsets,
        }
    }
}

impl PlantFile {
    pub fn to_plant(&self) -> Result<Plant, FormatError> {
        let config = PlantConfig {
            n_segments: self.n_segments,
            segment_length_mm: self.segment_length_mm,
            connector_length_mm: self.connector_length_mm,
            base_connector_mm: self.base_connector_mm,
            rod_length_mm: self.rod_length_mm,
            segment_diameter_mm: self.segment_diameter_mm,
            bladder_azimuths_deg: self.bladder_azimuths_deg,
            curvature_gain: self.bend_at_max_fill_deg.to_radians() / self.max_fill_ms,
            max_fill_ms: self.max_fill_ms,
            inflation_cap_ms: self.inflation_cap_ms,
            deflation_factor: self.deflation_factor,
            hysteresis_factor: self.hysteresis_factor,
            line_pressure_bar: self.line_pressure_bar,
            payload_droop_gain: self.payload_droop_gain,
            process_noise_sd_mm: self.process_noise_sd_mm,
        };
        let beacon = BeaconGeometry {
            offsets: self.beacon_offsets_mm,
        };
        Ok(Plant::new(config, beacon)?)
    }
}

pub fn load_rig(path: Option<&Path>) -> Result<StereoRig, FormatError> {
    match path {
        Some(p) => read_json::<CameraFile>(p)?.to_rig(),
        None => Ok(StereoRig::default_rig()),
    }
}

pub fn load_plant(path: Option<&Path>) -> Result<Plant, FormatError> {
    match path {
        Some(p) => read_json::<PlantFile>(p)?.to_plant(),
        None => Ok(Plant::default()),
    }
}
