//! Scenario configuration.
//!
//! The file format is TOML restricted to flat dotted keys, one per line:
//!
//! ```text
//! time.step = 0.01
//! gains.kp = 150
//! sensors.noise = "rot"
//! weights.d = [30, 20, 10]
//! ```
//!
//! Every key is optional; omitted keys take the reference-scenario default,
//! so an empty file is a complete configuration. Unknown keys are rejected.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{FilterGains, RunOptions};
use crate::measurements::{AttitudeIntegration, SensorConfig, TorqueLaw, TruthModel, VectorNoise};
use crate::so3::{axis_angle, RotationMatrix};
use crate::wahba::TargetEigenvalues;

/// Number of directions in the default catalog.
pub const CATALOG_SIZE: usize = 9;

/// Allowance constant `C` in the Lyapunov defect bound `C h² (1 + ‖ω‖² + φ)`,
/// calibrated by the step-refinement study in `tests/fixtures`.
pub const DEFAULT_DEFECT_CONSTANT: f64 = 1200.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Malformed config text.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {}: {}{message}", line.map_or("?".to_string(), |l| l.to_string()), field.as_ref().map_or(String::new(), |f| format!("`{f}`: ")))]
pub struct ParseError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

/// A well-formed config that violates an invariant.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {invariant}")]
pub struct ValidationError {
    pub field: String,
    pub invariant: String,
}

fn invalid(field: &str, invariant: &str) -> ValidationError {
    ValidationError { field: field.to_string(), invariant: invariant.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Off,
    #[default]
    Rot,
    Add,
}

impl std::str::FromStr for NoiseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "rot" => Ok(Self::Rot),
            "add" => Ok(Self::Add),
            other => Err(format!("unknown noise mode `{other}` (expected off, rot or add)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttitudeMode {
    #[default]
    Averaged,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    /// Gyro period `h` (s).
    pub step: f64,
    /// Horizon `T` (s).
    pub duration: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { step: 0.01, duration: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    /// Direction vectors arrive every `rate_ratio` gyro samples.
    pub rate_ratio: usize,
    pub gyro_noise_deg_s: f64,
    pub vector_noise_deg: f64,
    pub min_vectors: usize,
    pub max_vectors: usize,
    pub noise: NoiseMode,
}

impl Default for SensorSection {
    fn default() -> Self {
        Self {
            rate_ratio: 10,
            gyro_noise_deg_s: 0.97,
            vector_noise_deg: 2.4,
            min_vectors: 2,
            max_vectors: 9,
            noise: NoiseMode::Rot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSection {
    pub m: f64,
    pub l: f64,
    pub kp: f64,
}

impl Default for GainSection {
    fn default() -> Self {
        Self { m: 100.0, l: 40.0, kp: 150.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSection {
    /// Target eigenvalues of `K`.
    pub d: [f64; 3],
}

impl Default for WeightSection {
    fn default() -> Self {
        Self { d: [30.0, 20.0, 10.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthSection {
    /// Principal moments (kg·m²).
    pub inertia: [f64; 3],
    pub torque_amplitude: [f64; 3],
    /// rad/s
    pub torque_frequency: [f64; 3],
    /// Initial attitude as axis (normalized on load) and angle (rad).
    pub attitude_axis: [f64; 3],
    pub attitude_angle: f64,
    /// rad/s, body frame
    pub angular_velocity: [f64; 3],
    pub attitude_mode: AttitudeMode,
}

impl Default for TruthSection {
    fn default() -> Self {
        let s = PI / 60.0;
        Self {
            inertia: [1.0, 1.2, 1.5],
            torque_amplitude: [0.05; 3],
            torque_frequency: [0.2, 0.3, 0.5],
            attitude_axis: [4.0, 2.0, 5.0],
            attitude_angle: PI / 4.0,
            angular_velocity: [-1.2 * s, 2.1 * s, -1.9 * s],
            attitude_mode: AttitudeMode::Averaged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSection {
    /// Initial attitude error `Q₀ = R₀ R̂₀ᵀ` as axis and angle (rad).
    pub error_axis: [f64; 3],
    pub error_angle: f64,
    /// Initial `ω₀ = Ωᵐ₀ - Ω̂₀` (rad/s).
    pub omega_error: [f64; 3],
}

impl Default for EstimateSection {
    fn default() -> Self {
        let s = PI / 60.0;
        Self { error_axis: [4.0, 2.0, 5.0], error_angle: PI / 2.5, omega_error: [0.001 * s, -0.002 * s, 0.003 * s] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub trials: usize,
    /// Trial `j` of a batch uses `seed + seed_stride * j`.
    pub seed_stride: u64,
    pub output_dir: PathBuf,
    /// Re-project the estimate onto SO(3) every this many steps; 0 disables.
    pub reproject_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1, trials: 20, seed_stride: 1, output_dir: PathBuf::from("out"), reproject_every: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub defect_constant: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { defect_constant: DEFAULT_DEFECT_CONSTANT }
    }
}

/// A complete, validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub time: TimeSection,
    pub sensors: SensorSection,
    pub gains: GainSection,
    pub weights: WeightSection,
    pub truth: TruthSection,
    pub estimate: EstimateSection,
    pub run: RunSection,
    pub diagnostics: DiagnosticsSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

impl ScenarioConfig {
    /// Parses and validates config text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            ParseError { line: e.span().map(|s| line_of(text, s.start)), field: backticked(&message), message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The flat dotted form read by [`ScenarioConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = String::new();
        for (section, table) in value.as_table().expect("config is a table") {
            for (key, v) in table.as_table().expect("sections are tables") {
                writeln!(out, "{section}.{key} = {v}").unwrap();
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let t = &self.time;
        if !(t.step.is_finite() && t.step > 0.0) {
            return Err(invalid("time.step", "h > 0"));
        }
        if !(t.duration.is_finite() && t.duration > 0.0) {
            return Err(invalid("time.duration", "T > 0"));
        }
        let ratio = t.duration / t.step;
        if (ratio - ratio.round()).abs() > f64::EPSILON * ratio.round().max(1.0) {
            return Err(invalid("time.duration", "T/h is an integer step count"));
        }

        let s = &self.sensors;
        if s.rate_ratio == 0 {
            return Err(invalid("sensors.rate_ratio", "n >= 1"));
        }
        if !(s.gyro_noise_deg_s >= 0.0 && s.gyro_noise_deg_s.is_finite()) {
            return Err(invalid("sensors.gyro_noise_deg_s", "bound >= 0"));
        }
        if !(s.vector_noise_deg >= 0.0 && s.vector_noise_deg < 90.0) {
            return Err(invalid("sensors.vector_noise_deg", "0 <= bound < 90"));
        }
        if s.min_vectors < 2 || s.min_vectors > s.max_vectors {
            return Err(invalid("sensors.min_vectors", "2 <= min_vectors <= max_vectors"));
        }
        if s.max_vectors > CATALOG_SIZE {
            return Err(invalid("sensors.max_vectors", "max_vectors <= 9"));
        }

        let g = &self.gains;
        if !(g.m.is_finite() && g.m > 0.0) {
            return Err(invalid("gains.m", "m > 0"));
        }
        if !(g.l.is_finite() && g.l > 0.0) {
            return Err(invalid("gains.l", "l > 0"));
        }
        if (g.m - g.l).abs() <= 1e-12 {
            return Err(invalid("gains.l", "l ≠ m"));
        }
        if !(g.kp.is_finite() && g.kp > 0.0) {
            return Err(invalid("gains.kp", "k_p > 0"));
        }

        TargetEigenvalues::new(self.weights.d)
            .map_err(|_| invalid("weights.d", "distinct positive target eigenvalues"))?;

        let tr = &self.truth;
        if !tr.inertia.iter().all(|j| j.is_finite() && *j > 0.0) {
            return Err(invalid("truth.inertia", "positive principal moments"));
        }
        let finite = |a: &[f64]| a.iter().all(|x| x.is_finite());
        if !finite(&tr.torque_amplitude) || !finite(&tr.torque_frequency) {
            return Err(invalid("truth.torque_amplitude", "finite torque law"));
        }
        if !finite(&tr.angular_velocity) {
            return Err(invalid("truth.angular_velocity", "finite"));
        }
        let unitizable = |a: &[f64; 3]| finite(a) && vec3(*a).norm() > 1e-12;
        if !unitizable(&tr.attitude_axis) {
            return Err(invalid("truth.attitude_axis", "nonzero axis"));
        }
        if !tr.attitude_angle.is_finite() {
            return Err(invalid("truth.attitude_angle", "finite"));
        }

        let e = &self.estimate;
        if !unitizable(&e.error_axis) {
            return Err(invalid("estimate.error_axis", "nonzero axis"));
        }
        if !e.error_angle.is_finite() {
            return Err(invalid("estimate.error_angle", "finite"));
        }
        if !finite(&e.omega_error) {
            return Err(invalid("estimate.omega_error", "finite"));
        }

        if self.run.trials == 0 {
            return Err(invalid("run.trials", "trials >= 1"));
        }
        if self.run.seed > i64::MAX as u64 || self.run.seed_stride > i64::MAX as u64 {
            return Err(invalid("run.seed", "seed fits in a signed 64-bit integer"));
        }
        let c = self.diagnostics.defect_constant;
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("diagnostics.defect_constant", "C > 0"));
        }
        Ok(())
    }

    /// Number of filter steps `N = T/h`; the trajectory has `N + 1` rows.
    pub fn steps(&self) -> usize {
        (self.time.duration / self.time.step).round() as usize
    }

    pub fn gains(&self) -> FilterGains {
        FilterGains { inertia: self.gains.m, dissipation: self.gains.l, potential: self.gains.kp, step: self.time.step }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            gains: self.gains(),
            eigenvalues: TargetEigenvalues::new(self.weights.d).expect("validated"),
            reproject_every: self.run.reproject_every,
        }
    }

    pub fn sensor_config(&self, seed: u64) -> SensorConfig {
        let s = &self.sensors;
        let off = s.noise == NoiseMode::Off;
        SensorConfig {
            step: self.time.step,
            rate_ratio: s.rate_ratio,
            gyro_noise_bound: if off { 0.0 } else { s.gyro_noise_deg_s.to_radians() },
            vector_noise_bound: if off { 0.0 } else { s.vector_noise_deg.to_radians() },
            vector_noise: match s.noise {
                NoiseMode::Off => VectorNoise::Off,
                NoiseMode::Rot => VectorNoise::Rotational,
                NoiseMode::Add => VectorNoise::AdditiveRenormalized,
            },
            min_vectors: s.min_vectors,
            max_vectors: s.max_vectors,
            seed,
        }
    }

    pub fn truth_model(&self) -> TruthModel {
        let t = &self.truth;
        TruthModel {
            inertia: vec3(t.inertia),
            torque: TorqueLaw::Sinusoidal { amplitude: vec3(t.torque_amplitude), frequency: vec3(t.torque_frequency) },
            attitude_integration: match t.attitude_mode {
                AttitudeMode::Averaged => AttitudeIntegration::Averaged,
                AttitudeMode::Rk4 => AttitudeIntegration::Rk4,
            },
        }
    }

    pub fn initial_attitude(&self) -> RotationMatrix {
        axis_angle(&vec3(self.truth.attitude_axis), self.truth.attitude_angle)
    }

    pub fn initial_attitude_error(&self) -> RotationMatrix {
        axis_angle(&vec3(self.estimate.error_axis), self.estimate.error_angle)
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.sensors.noise = noise;
        self
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::from_toml_str(&text)
}

/// Resolves a config search path: entries separated by the platform path
/// separator, each a file or a directory holding `so3me.toml`. The first
/// existing file wins.
pub fn search_config(search_path: &str) -> Option<PathBuf> {
    std::env::split_paths(search_path).find_map(|entry| {
        let candidate = if entry.is_dir() { entry.join("so3me.toml") } else { entry };
        candidate.is_file().then_some(candidate)
    })
}
