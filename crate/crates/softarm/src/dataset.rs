//! Dataset CSV plus its `<name>.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softarm_core::acquisition::{format_sig9, SessionInfo};
use softarm_core::{Dataset, DatasetMeta, Sample, SampleId};

use crate::config::{read_json, write_json};
use crate::error::FormatError;

pub const COLUMNS: [&str; 16] = [
    "id",
    "t1p",
    "t2p",
    "t3p",
    "t4p",
    "t5p",
    "t6p",
    "t7p",
    "t8p",
    "t9p",
    "x_mm",
    "y_mm",
    "z_mm",
    "yaw_deg",
    "pitch_deg",
    "roll_deg",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub id: u64,
    pub seed: u64,
    pub t_max_ms: f64,
    pub pressure_bar: f64,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    pub n_requested: u64,
    pub n_samples: u64,
    pub discarded_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaFile {
    pub t_max_ms: f64,
    pub pressure_bar: f64,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    pub seed: u64,
    pub discarded_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    pub sessions: Vec<SessionFile>,
}

impl From<&SessionInfo> for SessionFile {
    fn from(s: &SessionInfo) -> Self {
        Self {
            id: s.id,
            seed: s.seed,
            t_max_ms: s.t_max_ms,
            pressure_bar: s.pressure_bar,
            temperature_c: s.temperature_c,
            n_requested: s.n_requested,
            n_samples: s.n_samples,
            discarded_count: s.discarded_count,
            created_at: s.created_at.clone(),
        }
    }
}

impl From<SessionFile> for SessionInfo {
    fn from(s: SessionFile) -> Self {
        Self {
            id: s.id,
            seed: s.seed,
            t_max_ms: s.t_max_ms,
            pressure_bar: s.pressure_bar,
            temperature_c: s.temperature_c,
            n_requested: s.n_requested,
            n_samples: s.n_samples,
            discarded_count: s.discarded_count,
            created_at: s.created_at,
        }
    }
}

/// Sidecar path: `runs/a.csv` → `runs/a.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn save(dataset: &Dataset, path: &Path) -> Result<(), FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(COLUMNS).map_err(csv_err)?;
    for s in &dataset.samples {
        let mut row = vec![s.id.to_string()];
        row.extend(
            s.times_percent
                .iter()
                .chain(&s.position)
                .chain(&s.euler)
                .map(|v| format_sig9(*v)),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))?;

    let m = &dataset.metadata;
    let meta = MetaFile {
        t_max_ms: dataset.t_max_ms,
        pressure_bar: m.pressure_bar,
        temperature_c: m.temperature_c,
        seed: m.seed,
        discarded_count: m.discarded_count,
        created_at: m.created_at.clone(),
        sessions: m.sessions.iter().map(SessionFile::from).collect(),
    };
    write_json(&meta_path(path), &meta)
}

pub fn load(path: &Path) -> Result<Dataset, FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = r.headers().map_err(csv_err)?.clone();
    let mut index = [0usize; COLUMNS.len()];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FormatError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })?;
    }

    let mut samples = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field_err = |field: &str, message: String| FormatError::Field {
            path: path.to_path_buf(),
            line,
            field: field.to_string(),
            message,
        };
        let get = |i: usize| -> Result<&str, FormatError> {
            record
                .get(index[i])
                .ok_or_else(|| field_err(COLUMNS[i], "missing value".into()))
        };
        let id: SampleId = get(0)?
            .parse()
            .map_err(|_| field_err("id", "expected `session:index`".into()))?;
        let mut values = [0.0; 15];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = get(k + 1)?;
            *v = raw
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| field_err(COLUMNS[k + 1], format!("not a finite number: `{raw}`")))?;
        }
        let mut percent = [0.0; 9];
        percent.copy_from_slice(&values[..9]);
        let sample = Sample::new(
            id,
            percent,
            [values[9], values[10], values[11]],
            [values[12], values[13], values[14]],
        );
        sample.validate().map_err(|e| field_err("sample", e.to_string()))?;
        samples.push(sample);
    }

    let meta: MetaFile = read_json(&meta_path(path))?;
    let dataset = Dataset {
        samples,
        t_max_ms: meta.t_max_ms,
        metadata: DatasetMeta {
            pressure_bar: meta.pressure_bar,
            temperature_c: meta.temperature_c,
            seed: meta.seed,
            created_at: meta.created_at,
            discarded_count: meta.discarded_count,
            sessions: meta.sessions.into_iter().map(SessionInfo::from).collect(),
        },
    };
    dataset.validate()?;
    Ok(dataset)
}
