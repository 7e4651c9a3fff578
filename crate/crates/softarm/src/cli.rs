//! `softarm` command line: collect, eval, replay, merge.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use softarm_core::acquisition::{format_sig9, sample_rng, MAX_T_MAX_MS};
use softarm_core::experiments::{
    bending_sweep, fk_validation, ik_validation, payload_eval, workspace_scan, Region, SweepMode,
};
use softarm_core::{collect, merge, CollectConfig, Dataset, KinematicTable};

use crate::config::{load_plant, load_rig};
use crate::error::{RunError, EXIT_USAGE};
use crate::{dataset, report, schedule};

#[derive(Debug, Parser)]
#[command(
    name = "softarm",
    version,
    about = "Soft pneumatic arm datasets, models and experiments"
)]
pub struct Cli {
    /// Plant configuration (JSON); built-in calibrated plant if omitted.
    #[arg(long, global = true)]
    pub plant: Option<PathBuf>,
    /// Stereo camera configuration (JSON); built-in rig if omitted.
    #[arg(long, global = true)]
    pub camera: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a randomized collection campaign and write a dataset.
    Collect(CollectArgs),
    /// Run a validation experiment and write its reports.
    Eval {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Drive the plant from a valve schedule and write the pose trace.
    Replay(ReplayArgs),
    /// Union datasets under a common t_max.
    Merge(MergeArgs),
}

fn parse_t_max(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= MAX_T_MAX_MS {
        Ok(v)
    } else {
        Err(format!(
            "must lie in (0, {MAX_T_MAX_MS}] ms; longer inflations puncture the bladders"
        ))
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1)".into())
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    /// Number of samples to attempt.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Longest inflation time per bladder (ms).
    #[arg(long = "t-max", default_value = "1000", value_parser = parse_t_max)]
    pub t_max: f64,
    /// Probability that a sample's beacons are not detected.
    #[arg(long = "failure-prob", default_value = "0.05", value_parser = parse_probability)]
    pub failure_prob: f64,
    /// Dataset file stem inside the output directory.
    #[arg(long, default_value = "dataset")]
    pub name: String,
    /// Supply pressure recorded in the session info (bar).
    #[arg(long, default_value_t = 1.2)]
    pub pressure: f64,
    /// Ambient temperature recorded in the session info (°C).
    #[arg(long, default_value_t = 22.0)]
    pub temperature: f64,
    /// Timestamp recorded in the metadata (left out when absent).
    #[arg(long = "created-at")]
    pub created_at: Option<String>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV files; several are merged into one table.
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Full,
    Restricted,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Table forward kinematics against the plant on unseen valve times
    Fk {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
    /// Table inverse kinematics: reach recorded poses and measure the miss
    Ik {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t = RegionArg::Full)]
        region: RegionArg,
        /// Height of the restricted target plane (mm); median table height if omitted.
        #[arg(long = "plane-z")]
        plane_z: Option<f64>,
        /// Half-width of the restricted target band around the plane (mm).
        #[arg(long, default_value = "15", value_parser = parse_positive)]
        band: f64,
    },
    /// Bending angle of the base segment over a fill sweep
    Bending {
        /// Sweep step (ms).
        #[arg(long, default_value = "100", value_parser = parse_positive)]
        step: f64,
        /// Resume inflation from the previous point instead of returning to zero.
        #[arg(long)]
        incremental: bool,
    },
    /// Bounding box and Euler ranges of the recorded tip poses
    Workspace {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Inverse kinematics accuracy with tip payloads
    Payload {
        #[command(flatten)]
        data: DataArgs,
        /// Payload masses (g).
        #[arg(long, value_delimiter = ',', default_value = "55,90,130,155")]
        payloads: Vec<f64>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        points: u64,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Valve schedule: INF <bladder> <ms>, DEF <bladder> <ms> or RESET per line.
    #[arg(long)]
    pub schedule: PathBuf,
    /// Trace CSV; defaults to `<out>/trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "merged")]
    pub name: String,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_datasets(paths: &[PathBuf]) -> Result<Dataset, RunError> {
    let sets = paths.iter().map(|p| dataset::load(p)).collect::<Result<Vec<_>, _>>()?;
    if sets.len() == 1 {
        Ok(sets.into_iter().next().expect("one dataset"))
    } else {
        Ok(merge(&sets)?)
    }
}

fn check(failures: Vec<String>) -> Result<(), RunError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Assertion(failures))
    }
}

fn print_stats(label: &str, s: &softarm_core::experiments::ErrorStats) {
    println!(
        "{label}: n={} mean={} median={} sd={} mm",
        s.count,
        format_sig9(s.mean),
        format_sig9(s.median),
        format_sig9(s.sd)
    );
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    let plant = load_plant(cli.plant.as_deref())?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Collect(a) => {
            let rig = load_rig(cli.camera.as_deref())?;
            let cfg = CollectConfig {
                n_samples: a.n as usize,
                t_max_ms: a.t_max,
                seed: cli.seed,
                failure_prob: a.failure_prob,
                pressure_bar: a.pressure,
                temperature_c: a.temperature,
                created_at: a.created_at.clone(),
            };
            let start = Instant::now();
            let data = collect(&plant, &rig, &cfg)?;
            let elapsed = start.elapsed().as_secs_f64();
            let path = out.join(format!("{}.csv", a.name));
            dataset::save(&data, &path)?;
            println!(
                "collected {} of {} samples ({} discarded), {:.3} ms per sample -> {}",
                data.len(),
                a.n,
                data.metadata.discarded_count,
                1e3 * elapsed / a.n as f64,
                path.display()
            );
            Ok(())
        }
        Command::Merge(a) => {
            let sets = a
                .data
                .datasets
                .iter()
                .map(|p| dataset::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let merged = merge(&sets)?;
            let path = out.join(format!("{}.csv", a.name));
            dataset::save(&merged, &path)?;
            println!(
                "merged {} sessions, {} samples at t_max {} ms -> {}",
                merged.metadata.sessions.len(),
                merged.len(),
                format_sig9(merged.t_max_ms),
                path.display()
            );
            Ok(())
        }
        Command::Replay(a) => {
            let text = std::fs::read_to_string(&a.schedule).map_err(|e| crate::FormatError::io(&a.schedule, e))?;
            let steps = schedule::parse(&text)?;
            let rows = schedule::replay(&plant, &steps, &mut sample_rng(cli.seed, 0))?;
            let path = a.trace.clone().unwrap_or_else(|| out.join("trace.csv"));
            write_trace(&path, &rows)?;
            println!("replayed {} commands -> {}", rows.len(), path.display());
            Ok(())
        }
        Command::Eval { experiment } => eval(cli, &plant, experiment, out),
    }
}

fn write_trace(path: &Path, rows: &[schedule::TraceRow]) -> Result<(), RunError> {
    let csv_err = |source| crate::FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| crate::FormatError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "line",
        "command",
        "x_mm",
        "y_mm",
        "z_mm",
        "yaw_deg",
        "pitch_deg",
        "roll_deg",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.step.line.to_string(), r.step.command.to_string()];
        rec.extend(r.pose.iter().map(|v| format_sig9(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| crate::FormatError::io(path, e))?;
    Ok(())
}

fn eval(cli: &Cli, plant: &softarm_core::Plant, experiment: &Experiment, out: &Path) -> Result<(), RunError> {
    match experiment {
        Experiment::Fk { data, trials } => {
            let table = KinematicTable::from_dataset(&load_datasets(&data.datasets)?);
            let r = fk_validation(plant, &table, *trials as usize, cli.seed, plant.config.n_segments)?;
            report::write_fk(&report::ReportPaths::new(out, "fk"), &r)?;
            print_stats("fk", &r.stats);
            let errors: Vec<f64> = r.trials.iter().map(|t| t.error_mm).collect();
            check(report::audit_stats(&r.stats, &errors))
        }
        Experiment::Ik {
            data,
            trials,
            region,
            plane_z,
            band,
        } => {
            let table = KinematicTable::from_dataset(&load_datasets(&data.datasets)?);
            let (region, name) = match region {
                RegionArg::Full => (Region::Full, "full"),
                RegionArg::Restricted => (
                    Region::Restricted {
                        plane_z_mm: *plane_z,
                        half_width_mm: *band,
                    },
                    "restricted",
                ),
            };
            let r = ik_validation(plant, &table, *trials as usize, cli.seed, region)?;
            report::write_ik(&report::ReportPaths::new(out, &format!("ik_{name}")), &r, name)?;
            print_stats(&format!("ik {name}"), &r.stats);
            let errors: Vec<f64> = r.trials.iter().map(|t| t.error_mm).collect();
            check(report::audit_stats(&r.stats, &errors))
        }
        Experiment::Bending { step, incremental } => {
            let mode = if *incremental {
                SweepMode::Incremental
            } else {
                SweepMode::ZeroReturn
            };
            let mut sweeps = Vec::new();
            let mut failures = Vec::new();
            for n in 1..=plant.config.n_segments {
                let pts = bending_sweep(&plant.config, n, *step, mode)?;
                failures.extend(report::audit_sweep(&pts));
                println!(
                    "bending {n} segment(s): {}° at {} ms",
                    format_sig9(pts.last().map_or(0.0, |p| p.angle_deg)),
                    format_sig9(pts.last().map_or(0.0, |p| p.cumulative_ms))
                );
                sweeps.push((n, pts));
            }
            report::write_bending(&report::ReportPaths::new(out, "bending"), &sweeps, *step)?;
            check(failures)
        }
        Experiment::Workspace { data } => {
            let d = load_datasets(&data.datasets)?;
            let ws = workspace_scan(&d)?;
            report::write_workspace(&report::ReportPaths::new(out, "workspace"), &ws, d.len())?;
            let e = ws.extents();
            println!(
                "workspace: {} x {} x {} mm over {} samples",
                format_sig9(e[0]),
                format_sig9(e[1]),
                format_sig9(e[2]),
                d.len()
            );
            check(if (0..3).all(|i| ws.min[i] <= ws.max[i]) {
                Vec::new()
            } else {
                vec!["inverted bounding box".into()]
            })
        }
        Experiment::Payload { data, payloads, points } => {
            let table = KinematicTable::from_dataset(&load_datasets(&data.datasets)?);
            let reports = payload_eval(plant, &table, payloads, *points as usize, cli.seed)?;
            report::write_payload(&report::ReportPaths::new(out, "payload"), &reports)?;
            let mut failures = Vec::new();
            for r in &reports {
                print_stats(&format!("payload {} g", format_sig9(r.payload_g)), &r.stats);
                let errors: Vec<f64> = r.points.iter().map(|p| p.error_mm).collect();
                failures.extend(report::audit_stats(&r.stats, &errors));
            }
            check(failures)
        }
    }
}
