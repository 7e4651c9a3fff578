//! Experiment outputs: a raw per-trial CSV, a stats JSON and a plot-ready
//! CSV for each run, plus the invariant checks the CLI enforces.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use softarm_core::acquisition::format_sig9;
use softarm_core::experiments::{ErrorStats, FkReport, IkReport, PayloadReport, SweepPoint, WorkspaceSummary};

use crate::config::write_json;
use crate::error::FormatError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramJson {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsJson {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramJson>,
}

impl From<&ErrorStats> for StatsJson {
    fn from(s: &ErrorStats) -> Self {
        Self {
            count: s.count,
            mean: s.mean,
            median: s.median,
            sd: s.sd,
            q1: s.q1,
            q3: s.q3,
            min: s.min,
            max: s.max,
            histogram: s.histogram.as_ref().map(|h| HistogramJson {
                edges: h.edges.clone(),
                counts: h.counts.clone(),
            }),
        }
    }
}

/// Where one experiment's three files go.
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub raw: PathBuf,
    pub stats: PathBuf,
    pub plot: PathBuf,
}

impl ReportPaths {
    pub fn new(dir: &Path, name: &str) -> Self {
        Self {
            raw: dir.join(format!("{name}_raw.csv")),
            stats: dir.join(format!("{name}_stats.json")),
            plot: dir.join(format!("{name}_plot.csv")),
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

fn nums(values: impl IntoIterator<Item = f64>) -> impl Iterator<Item = String> {
    values.into_iter().map(format_sig9)
}

const TIME_COLS: [&str; 9] = [
    "t1_ms", "t2_ms", "t3_ms", "t4_ms", "t5_ms", "t6_ms", "t7_ms", "t8_ms", "t9_ms",
];
const POSE_COLS: [&str; 6] = ["x_mm", "y_mm", "z_mm", "yaw_deg", "pitch_deg", "roll_deg"];

fn header(parts: &[&[&str]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().map(|s| s.to_string())).collect()
}

fn histogram_plot(path: &Path, stats: &ErrorStats) -> Result<(), FormatError> {
    let rows = stats.histogram.iter().flat_map(|h| {
        h.counts
            .iter()
            .enumerate()
            .map(|(i, c)| vec![format_sig9(h.edges[i]), format_sig9(h.edges[i + 1]), c.to_string()])
    });
    write_csv(path, &["bin_lo_mm", "bin_hi_mm", "count"], rows)
}

pub fn write_fk(paths: &ReportPaths, report: &FkReport) -> Result<(), FormatError> {
    let pred: Vec<String> = POSE_COLS.iter().map(|c| format!("pred_{c}")).collect();
    let pred: Vec<&str> = pred.iter().map(String::as_str).collect();
    let cols = header(&[
        &["trial"],
        &TIME_COLS,
        &pred,
        &["reached_x_mm", "reached_y_mm", "reached_z_mm", "error_mm"],
    ]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = report.trials.iter().map(|t| {
        let mut row = vec![t.index.to_string()];
        row.extend(nums(t.times));
        row.extend(nums(t.predicted));
        row.extend(nums(t.reached));
        row.push(format_sig9(t.error_mm));
        row
    });
    write_csv(&paths.raw, &cols, rows)?;
    write_json(&paths.stats, &StatsJson::from(&report.stats))?;
    histogram_plot(&paths.plot, &report.stats)
}

#[derive(Serialize)]
struct IkStatsJson<'a> {
    region: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    plane_z_mm: Option<f64>,
    #[serde(flatten)]
    stats: StatsJson,
}

pub fn write_ik(paths: &ReportPaths, report: &IkReport, region: &str) -> Result<(), FormatError> {
    let target: Vec<String> = POSE_COLS.iter().map(|c| format!("target_{c}")).collect();
    let target: Vec<&str> = target.iter().map(String::as_str).collect();
    let cols = header(&[
        &["trial"],
        &target,
        &TIME_COLS,
        &["reached_x_mm", "reached_y_mm", "reached_z_mm", "error_mm"],
    ]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = report.trials.iter().map(|t| {
        let mut row = vec![t.index.to_string()];
        row.extend(nums(t.target));
        row.extend(nums(t.times));
        row.extend(nums(t.reached));
        row.push(format_sig9(t.error_mm));
        row
    });
    write_csv(&paths.raw, &cols, rows)?;
    let json = IkStatsJson {
        region,
        plane_z_mm: report.plane_z_mm,
        stats: StatsJson::from(&report.stats),
    };
    write_json(&paths.stats, &json)?;
    histogram_plot(&paths.plot, &report.stats)
}

#[derive(Serialize)]
struct PayloadStatsJson {
    payload_g: f64,
    center_mean_mm: f64,
    periphery_mean_mm: f64,
    #[serde(flatten)]
    stats: StatsJson,
}

pub fn write_payload(paths: &ReportPaths, reports: &[PayloadReport]) -> Result<(), FormatError> {
    let target: Vec<String> = POSE_COLS.iter().map(|c| format!("target_{c}")).collect();
    let target: Vec<&str> = target.iter().map(String::as_str).collect();
    let cols = header(&[&["payload_g", "point"], &target, &["radial_mm", "error_mm"]]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = reports.iter().flat_map(|r| {
        r.points.iter().map(move |p| {
            let mut row = vec![format_sig9(r.payload_g), p.index.to_string()];
            row.extend(nums(p.target));
            row.push(format_sig9(p.radial_mm));
            row.push(format_sig9(p.error_mm));
            row
        })
    });
    write_csv(&paths.raw, &cols, rows)?;
    let json: Vec<PayloadStatsJson> = reports
        .iter()
        .map(|r| {
            let (center, periphery) = r.center_periphery_means();
            PayloadStatsJson {
                payload_g: r.payload_g,
                center_mean_mm: center,
                periphery_mean_mm: periphery,
                stats: StatsJson::from(&r.stats),
            }
        })
        .collect();
    write_json(&paths.stats, &json)?;
    let rows = reports.iter().map(|r| {
        let s = &r.stats;
        let mut row = vec![format_sig9(r.payload_g)];
        row.extend(nums([s.min, s.q1, s.median, s.q3, s.max, s.mean]));
        row
    });
    write_csv(
        &paths.plot,
        &[
            "payload_g",
            "min_mm",
            "q1_mm",
            "median_mm",
            "q3_mm",
            "max_mm",
            "mean_mm",
        ],
        rows,
    )
}

#[derive(Serialize)]
struct SweepStatsJson {
    n_segments: usize,
    step_ms: f64,
    endpoint_deg: f64,
}

pub fn write_bending(
    paths: &ReportPaths,
    sweeps: &[(usize, Vec<SweepPoint>)],
    step_ms: f64,
) -> Result<(), FormatError> {
    let rows: Vec<Vec<String>> = sweeps
        .iter()
        .flat_map(|(n, pts)| {
            pts.iter()
                .map(move |p| vec![n.to_string(), format_sig9(p.cumulative_ms), format_sig9(p.angle_deg)])
        })
        .collect();
    let cols = ["n_segments", "cumulative_ms", "angle_deg"];
    write_csv(&paths.raw, &cols, rows.clone())?;
    let json: Vec<SweepStatsJson> = sweeps
        .iter()
        .map(|(n, pts)| SweepStatsJson {
            n_segments: *n,
            step_ms,
            endpoint_deg: pts.last().map_or(0.0, |p| p.angle_deg),
        })
        .collect();
    write_json(&paths.stats, &json)?;
    write_csv(&paths.plot, &cols, rows)
}

#[derive(Serialize)]
struct WorkspaceJson {
    n_samples: usize,
    min_mm: [f64; 3],
    max_mm: [f64; 3],
    extents_mm: [f64; 3],
    euler_min_deg: [f64; 3],
    euler_max_deg: [f64; 3],
}

pub fn write_workspace(paths: &ReportPaths, ws: &WorkspaceSummary, n_samples: usize) -> Result<(), FormatError> {
    let names = ["x_mm", "y_mm", "z_mm", "yaw_deg", "pitch_deg", "roll_deg"];
    let rows: Vec<Vec<String>> = (0..6)
        .map(|i| {
            let (lo, hi) = if i < 3 {
                (ws.min[i], ws.max[i])
            } else {
                (ws.euler_min[i - 3], ws.euler_max[i - 3])
            };
            vec![
                names[i].to_string(),
                format_sig9(lo),
                format_sig9(hi),
                format_sig9(hi - lo),
            ]
        })
        .collect();
    let cols = ["axis", "min", "max", "range"];
    write_csv(&paths.raw, &cols, rows.clone())?;
    let json = WorkspaceJson {
        n_samples,
        min_mm: ws.min,
        max_mm: ws.max,
        extents_mm: ws.extents(),
        euler_min_deg: ws.euler_min,
        euler_max_deg: ws.euler_max,
    };
    write_json(&paths.stats, &json)?;
    write_csv(&paths.plot, &cols, rows)
}

/// Recomputes summary statistics from raw per-trial errors and lists every
/// mismatch; an empty result means the report is self-consistent.
pub fn audit_stats(stats: &ErrorStats, errors: &[f64]) -> Vec<String> {
    let mut failures = Vec::new();
    let n = errors.len();
    if stats.count != n {
        failures.push(format!("count {} != {} records", stats.count, n));
    }
    if n == 0 {
        return failures;
    }
    let mean = errors.iter().sum::<f64>() / n as f64;
    if (stats.mean - mean).abs() > 1e-9 * mean.abs().max(1.0) {
        failures.push(format!("mean {} != recomputed {}", stats.mean, mean));
    }
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if stats.min != lo || stats.max != hi {
        failures.push("min/max disagree with records".into());
    }
    if !(stats.min <= stats.q1 && stats.q1 <= stats.median && stats.median <= stats.q3 && stats.q3 <= stats.max) {
        failures.push("quartiles out of order".into());
    }
    if let Some(h) = &stats.histogram {
        let total: u64 = h.counts.iter().sum();
        if total != n as u64 {
            failures.push(format!("histogram holds {total} of {n} trials"));
        }
    }
    failures
}

/// Non-decreasing from zero.
pub fn audit_sweep(points: &[SweepPoint]) -> Vec<String> {
    let mut failures = Vec::new();
    if points.first().map(|p| p.angle_deg) != Some(0.0) {
        failures.push("sweep does not start at 0°".into());
    }
    if points.windows(2).any(|w| w[1].angle_deg < w[0].angle_deg) {
        failures.push("sweep is not monotone".into());
    }
    failures
}
