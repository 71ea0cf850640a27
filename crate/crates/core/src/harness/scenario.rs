//! Truth, sensors, filter and evaluation for one seeded run.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use thiserror::Error;

use super::config::ScenarioConfig;
use crate::filter::{defect_bound, run_filter, FilterError, FilterRun};
use crate::measurements::{
    build_stream, default_catalog, simulate_truth, MeasurementError, MeasurementStream, TruthState,
};
use crate::so3::{principal_angle, AxialVector};

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "step",
    "time_s",
    "phi_rad",
    "omega_err_x",
    "omega_err_y",
    "omega_err_z",
    "V",
    "deltaV",
    "potential",
    "kinetic",
    "num_vectors",
    "fresh",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: row {row}: {message}")]
    Format { path: PathBuf, row: usize, message: String },
}

/// One line of the trajectory file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    /// Principal angle of `Q = R R̂ᵀ`.
    pub phi: f64,
    pub omega_error: AxialVector,
    pub lyapunov: f64,
    pub delta_v: f64,
    pub potential: f64,
    pub kinetic: f64,
    pub num_vectors: usize,
    pub fresh: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub final_phi: f64,
    /// Max `φ` over `t > T/2`.
    pub settled_phi: f64,
    pub final_omega: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// Steps where `ΔV` exceeds the defect allowance.
    pub violations: usize,
    pub wall_clock_s: f64,
}

/// Everything a run produces, kept in memory.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub truth: Vec<TruthState>,
    pub stream: MeasurementStream,
    pub filter: FilterRun,
    pub rows: Vec<TrajectoryRow>,
    pub summary: RunSummary,
}

impl ScenarioOutcome {
    pub fn phis(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.phi).collect()
    }
}

/// Runs truth, sensors and filter for `seed`.
pub fn simulate(cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioOutcome, ScenarioError> {
    let started = Instant::now();
    let h = cfg.time.step;
    let steps = cfg.steps();
    let initial = TruthState {
        attitude: cfg.initial_attitude(),
        angular_velocity: Vector3::from(cfg.truth.angular_velocity),
        time: 0.0,
    };
    let truth = simulate_truth(&cfg.truth_model(), initial, h, steps);
    let stream = build_stream(&truth, &cfg.sensor_config(seed), &default_catalog())?;
    let r_hat0 = cfg.initial_attitude_error().transpose() * initial.attitude;
    let filter = run_filter(&stream, r_hat0, Vector3::from(cfg.estimate.omega_error), &cfg.run_options())?;

    let rows: Vec<TrajectoryRow> = filter
        .states
        .iter()
        .zip(&filter.diagnostics)
        .zip(&truth)
        .enumerate()
        .map(|(i, ((state, diag), t))| TrajectoryRow {
            step: i,
            time: i as f64 * h,
            phi: principal_angle(&(t.attitude * state.attitude.transpose())),
            omega_error: state.omega_error,
            lyapunov: diag.lyapunov,
            delta_v: diag.delta_v,
            potential: diag.potential,
            kinetic: diag.kinetic_l,
            num_vectors: stream.ensemble_at(i).observed(),
            fresh: stream.records[i].fresh.is_some(),
        })
        .collect();

    let summary = summarize(&rows, cfg, seed, started.elapsed().as_secs_f64());
    Ok(ScenarioOutcome { truth, stream, filter, rows, summary })
}

pub fn summarize(rows: &[TrajectoryRow], cfg: &ScenarioConfig, seed: u64, wall_clock_s: f64) -> RunSummary {
    let last = rows.last().expect("trajectory has at least one row");
    let half = 0.5 * cfg.time.duration;
    let h = cfg.time.step;
    let c = cfg.diagnostics.defect_constant;
    RunSummary {
        seed,
        final_phi: last.phi,
        settled_phi: rows.iter().filter(|r| r.time > half).map(|r| r.phi).fold(0.0, f64::max),
        final_omega: last.omega_error.norm(),
        min_v: rows.iter().map(|r| r.lyapunov).fold(f64::INFINITY, f64::min),
        max_v: rows.iter().map(|r| r.lyapunov).fold(f64::NEG_INFINITY, f64::max),
        violations: rows.iter().filter(|r| r.delta_v > defect_bound(c, h, &r.omega_error, r.phi)).count(),
        wall_clock_s,
    }
}

/// First step from which `φ` stays below `threshold` through the end.
pub fn steps_to_settle(phis: &[f64], threshold: f64) -> Option<usize> {
    match phis.iter().rposition(|p| *p >= threshold) {
        None => Some(0),
        Some(i) if i + 1 < phis.len() => Some(i + 1),
        Some(_) => None,
    }
}

fn real(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_trajectory<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            real(r.time),
            real(r.phi),
            real(r.omega_error.x),
            real(r.omega_error.y),
            real(r.omega_error.z),
            real(r.lyapunov),
            real(r.delta_v),
            real(r.potential),
            real(r.kinetic),
            r.num_vectors.to_string(),
            u8::from(r.fresh).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, ScenarioError> {
    let file = File::open(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_trajectory(file, path)
}

fn parse_trajectory<R: Read>(input: R, path: &Path) -> Result<Vec<TrajectoryRow>, ScenarioError> {
    let csv_err = |source| ScenarioError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(ScenarioError::Format { path: path.to_path_buf(), row: 0, message: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let bad = |message: String| ScenarioError::Format { path: path.to_path_buf(), row: n + 1, message };
        let f = |j: usize| record[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", TRAJECTORY_HEADER[j])));
        let u = |j: usize| record[j].parse::<usize>().map_err(|e| bad(format!("{}: {e}", TRAJECTORY_HEADER[j])));
        rows.push(TrajectoryRow {
            step: u(0)?,
            time: f(1)?,
            phi: f(2)?,
            omega_error: Vector3::new(f(3)?, f(4)?, f(5)?),
            lyapunov: f(6)?,
            delta_v: f(7)?,
            potential: f(8)?,
            kinetic: f(9)?,
            num_vectors: u(10)?,
            fresh: u(11)? != 0,
        });
    }
    Ok(rows)
}

/// Runs one scenario and writes `trajectory.csv` into `out_dir` when given.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<(Option<PathBuf>, RunSummary), ScenarioError> {
    let outcome = simulate(cfg, seed)?;
    let path = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
            let path = dir.join("trajectory.csv");
            let file = File::create(&path).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
            write_trajectory(&outcome.rows, BufWriter::new(file))
                .map_err(|source| ScenarioError::Csv { path: path.clone(), source })?;
            Some(path)
        }
        None => None,
    };
    Ok((path, outcome.summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::NoiseMode;

    fn short(noise: NoiseMode) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default().with_noise(noise);
        cfg.time.duration = 2.0;
        cfg
    }

    #[test]
    fn row_count_and_columns() {
        let cfg = short(NoiseMode::Rot);
        let out = simulate(&cfg, 4).unwrap();
        assert_eq!(out.rows.len(), 201);
        assert_eq!(out.rows[0].phi, cfg.estimate.error_angle);
        assert!(out.rows.iter().all(|r| (2..=9).contains(&r.num_vectors)));
        assert_eq!(out.rows.iter().filter(|r| r.fresh).count(), 21);
        let last = out.rows.last().unwrap();
        assert!((last.time - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let out = simulate(&short(NoiseMode::Add), 9).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&TRAJECTORY_HEADER.join(",")));
        let back = parse_trajectory(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, out.rows);
    }

    #[test]
    fn settle_detection() {
        assert_eq!(steps_to_settle(&[3.0, 2.0, 0.5, 0.1], 1.0), Some(2));
        assert_eq!(steps_to_settle(&[0.1, 2.0, 0.5], 1.0), Some(2));
        assert_eq!(steps_to_settle(&[0.1, 0.2], 1.0), Some(0));
        assert_eq!(steps_to_settle(&[0.1, 2.0], 1.0), None);
    }

    #[test]
    fn rejects_foreign_header() {
        let err = parse_trajectory("a,b\n1,2\n".as_bytes(), Path::new("x")).unwrap_err();
        assert!(matches!(err, ScenarioError::Format { row: 0, .. }));
    }
}
