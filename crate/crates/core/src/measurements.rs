//! Ground truth, sensor sampling and multi-rate vector propagation.
//!
//! The gyro is sampled every step `h`; direction vectors only every `n`
//! steps. In between, the last body-frame directions are carried forward
//! with the averaged gyro rate:
//!
//! ```text
//! Ũᵢ = Uᵢ                                   if i mod n == 0
//! Ũᵢ = exp(-(h/2)(Ωᵐᵢ₋₁ + Ωᵐᵢ)^) Ũᵢ₋₁       otherwise
//! ```
//!
//! Truth attitude is advanced with the same averaged-rate step by default,
//! so noise-free propagation reproduces `Rᵢᵀ E` to roundoff.

use std::f64::consts::PI;

use nalgebra::{Matrix3xX, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitBall};
use thiserror::Error;

use crate::so3::{exp_so3, hat, AxialVector, RotationMatrix};
use crate::wahba::{BodyVectorSet, DirectionEnsemble, WahbaError, PAIR_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),
    #[error("step {step}: {source}")]
    Vectors { step: usize, source: WahbaError },
    #[error(transparent)]
    Wahba(#[from] WahbaError),
    #[error("truth trajectory is empty")]
    EmptyTruth,
}

/// Attitude and body angular velocity at one sample instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    /// Body-to-inertial attitude.
    pub attitude: RotationMatrix,
    /// Body-frame angular velocity (rad/s).
    pub angular_velocity: AxialVector,
    pub time: f64,
}

/// External torque applied to the body (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorqueLaw {
    Zero,
    /// `τₖ(t) = amplitudeₖ · sin(frequencyₖ · t)`
    Sinusoidal {
        amplitude: Vector3<f64>,
        frequency: Vector3<f64>,
    },
}

impl TorqueLaw {
    pub fn at(&self, t: f64) -> Vector3<f64> {
        match self {
            TorqueLaw::Zero => Vector3::zeros(),
            TorqueLaw::Sinusoidal { amplitude, frequency } => {
                amplitude.component_mul(&frequency.map(|w| (w * t).sin()))
            }
        }
    }
}

/// How the truth attitude is advanced between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttitudeIntegration {
    /// Averaged-rate exponential step, the same model the filter assumes.
    #[default]
    Averaged,
    /// Joint RK4 on `(R, Ω)` with re-projection onto SO(3).
    Rk4,
}

/// Rigid body with diagonal inertia driven by a torque law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthModel {
    /// Principal moments of inertia (kg·m²).
    pub inertia: Vector3<f64>,
    pub torque: TorqueLaw,
    pub attitude_integration: AttitudeIntegration,
}

impl TruthModel {
    /// `Ω̇ = J⁻¹ (τ(t) - Ω × JΩ)`
    pub fn angular_acceleration(&self, t: f64, omega: &Vector3<f64>) -> Vector3<f64> {
        let j_omega = self.inertia.component_mul(omega);
        (self.torque.at(t) - omega.cross(&j_omega)).component_div(&self.inertia)
    }

    pub fn kinetic_energy(&self, omega: &Vector3<f64>) -> f64 {
        0.5 * omega.dot(&self.inertia.component_mul(omega))
    }

    pub fn angular_momentum(&self, omega: &Vector3<f64>) -> Vector3<f64> {
        self.inertia.component_mul(omega)
    }
}

/// `R exp((h/2)(Ω_next + Ω_now)^)`
pub fn discrete_attitude_step(
    r: &RotationMatrix,
    omega_now: &AxialVector,
    omega_next: &AxialVector,
    h: f64,
) -> RotationMatrix {
    r * &exp_so3(&((omega_next + omega_now) * (0.5 * h)))
}

fn rk4_rate(model: &TruthModel, t: f64, omega: &Vector3<f64>, h: f64) -> Vector3<f64> {
    let k1 = model.angular_acceleration(t, omega);
    let k2 = model.angular_acceleration(t + 0.5 * h, &(omega + k1 * (0.5 * h)));
    let k3 = model.angular_acceleration(t + 0.5 * h, &(omega + k2 * (0.5 * h)));
    let k4 = model.angular_acceleration(t + h, &(omega + k3 * h));
    omega + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn rk4_attitude(model: &TruthModel, t: f64, r: &RotationMatrix, omega: &Vector3<f64>, h: f64) -> RotationMatrix {
    let rm = *r.matrix();
    let f = |m: &nalgebra::Matrix3<f64>, w: &Vector3<f64>| m * hat(w).matrix();
    let w1 = *omega;
    let k1r = f(&rm, &w1);
    let k1w = model.angular_acceleration(t, &w1);
    let w2 = w1 + k1w * (0.5 * h);
    let k2r = f(&(rm + k1r * (0.5 * h)), &w2);
    let k2w = model.angular_acceleration(t + 0.5 * h, &w2);
    let w3 = w1 + k2w * (0.5 * h);
    let k3r = f(&(rm + k2r * (0.5 * h)), &w3);
    let k3w = model.angular_acceleration(t + 0.5 * h, &w3);
    let w4 = w1 + k3w * h;
    let k4r = f(&(rm + k3r * h), &w4);
    let next = rm + (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (h / 6.0);
    crate::so3::project_to_so3(&next).unwrap_or(*r)
}

/// Integrates `steps` intervals of length `h`, returning `steps + 1` states.
///
/// Angular velocity always uses fixed-step RK4 on Euler's equations. The
/// attitude follows [`TruthModel::attitude_integration`].
pub fn simulate_truth(model: &TruthModel, initial: TruthState, h: f64, steps: usize) -> Vec<TruthState> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    let mut state = initial;
    for _ in 0..steps {
        let omega_next = rk4_rate(model, state.time, &state.angular_velocity, h);
        let attitude = match model.attitude_integration {
            AttitudeIntegration::Averaged => {
                discrete_attitude_step(&state.attitude, &state.angular_velocity, &omega_next, h)
            }
            AttitudeIntegration::Rk4 => rk4_attitude(model, state.time, &state.attitude, &state.angular_velocity, h),
        };
        state = TruthState { attitude, angular_velocity: omega_next, time: state.time + h };
        out.push(state);
    }
    out
}

/// How direction measurements are corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorNoise {
    /// Each direction is rotated by a random angle in `[0, bound]` about a
    /// random axis perpendicular to it.
    #[default]
    Rotational,
    /// A vector uniform in the ball of radius `sin(bound)` is added and the
    /// result renormalized; the angular error is still at most `bound`.
    AdditiveRenormalized,
    Off,
}

/// Sampling rates, noise bounds and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Gyro period `h` (s).
    pub step: f64,
    /// Direction vectors arrive every `rate_ratio` gyro samples.
    pub rate_ratio: usize,
    /// Gyro noise radius (rad/s).
    pub gyro_noise_bound: f64,
    /// Direction noise angle bound (rad).
    pub vector_noise_bound: f64,
    pub vector_noise: VectorNoise,
    pub min_vectors: usize,
    pub max_vectors: usize,
    pub seed: u64,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), MeasurementError> {
        let bad = |s: &str| Err(MeasurementError::InvalidConfig(s.to_string()));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("step must be positive");
        }
        if self.rate_ratio < 1 {
            return bad("rate ratio must be at least 1");
        }
        if !(self.gyro_noise_bound >= 0.0) || !(self.vector_noise_bound >= 0.0) {
            return bad("noise bounds must be non-negative");
        }
        if self.vector_noise_bound >= PI / 2.0 {
            return bad("vector noise bound must be below 90 degrees");
        }
        if self.min_vectors < 2 || self.min_vectors > self.max_vectors {
            return bad("vector counts must satisfy 2 <= min <= max");
        }
        Ok(())
    }

    pub fn noise_free(&self) -> bool {
        self.gyro_noise_bound == 0.0 && (self.vector_noise_bound == 0.0 || self.vector_noise == VectorNoise::Off)
    }
}

const CATALOG: [[f64; 3]; 9] = [
    [-0.415061604870505, -0.21884490764576975, -0.8830802741313132],
    [0.3297372766880441, -0.5276933783991625, -0.7828237520387528],
    [-0.5742312272412312, -0.7209948992100559, 0.3878464296266125],
    [0.9112915408909146, 0.3399432209412313, 0.23234959444071293],
    [0.28360140974570264, 0.2814624310302869, -0.9167055908571581],
    [0.18129077006901675, 0.7334704350355279, 0.6550990593922238],
    [-0.22562368498521718, -0.9420886635480701, 0.24811872720111758],
    [0.6210754061208014, -0.7549627770593563, 0.21046744443430254],
    [0.137314662059559, -0.8080983032375277, 0.572819182542011],
];

/// The nine inertial reference directions used by default.
///
/// Chosen by a max-min search so that no pair is close to parallel and
/// every triple is well conditioned.
pub fn default_catalog() -> Vec<Vector3<f64>> {
    CATALOG.iter().map(|c| Vector3::from(*c).normalize()).collect()
}

/// Adds zero-mean noise drawn uniformly from the ball of radius `bound`.
pub fn sample_gyro<R: Rng + ?Sized>(omega_true: &AxialVector, bound: f64, rng: &mut R) -> AxialVector {
    if bound == 0.0 {
        return *omega_true;
    }
    let [x, y, z]: [f64; 3] = UnitBall.sample(rng);
    omega_true + Vector3::new(x, y, z) * bound
}

fn perpendicular_basis(u: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let p = u.cross(&helper).normalize();
    let q = u.cross(&p);
    (p, q)
}

/// Corrupts one unit direction; the angle to the original never exceeds
/// `bound`.
pub fn perturb_direction<R: Rng + ?Sized>(
    u: &Vector3<f64>,
    bound: f64,
    mode: VectorNoise,
    rng: &mut R,
) -> Vector3<f64> {
    if bound == 0.0 || mode == VectorNoise::Off {
        return *u;
    }
    match mode {
        VectorNoise::Rotational => {
            let (p, q) = perpendicular_basis(u);
            let psi = rng.random_range(0.0..2.0 * PI);
            let axis = p * psi.cos() + q * psi.sin();
            let theta = rng.random_range(0.0..=bound);
            exp_so3(&(axis * theta)).rotate(u)
        }
        VectorNoise::AdditiveRenormalized => {
            let [x, y, z]: [f64; 3] = UnitBall.sample(rng);
            (u + Vector3::new(x, y, z) * bound.sin()).normalize()
        }
        VectorNoise::Off => *u,
    }
}

/// A fresh direction measurement: the observed inertial subset and its
/// measured body-frame image, both augmented when only two were seen.
#[derive(Debug, Clone, PartialEq)]
pub struct FreshBlock {
    pub ensemble: DirectionEnsemble,
    pub body: BodyVectorSet,
}

/// Picks `k` distinct catalog directions and measures them in the body
/// frame of `r_true`.
pub fn sample_vectors<R: Rng + ?Sized>(
    r_true: &RotationMatrix,
    catalog: &[Vector3<f64>],
    k: usize,
    bound: f64,
    mode: VectorNoise,
    rng: &mut R,
) -> Result<FreshBlock, WahbaError> {
    if k < 2 || k > catalog.len() {
        return Err(WahbaError::TooFewDirections(k));
    }
    let mut picked = index::sample(rng, catalog.len(), k).into_vec();
    picked.sort_unstable();
    let inertial: Vec<Vector3<f64>> = picked.iter().map(|&j| catalog[j]).collect();
    let r_t = r_true.transpose();

    let measure = |rng: &mut R| -> Vec<Vector3<f64>> {
        inertial.iter().map(|e| perturb_direction(&r_t.rotate(e), bound, mode, rng)).collect()
    };
    let mut body = measure(rng);
    if k == 2 && body[0].cross(&body[1]).norm() <= PAIR_TOLERANCE {
        body = measure(rng);
    }
    let ensemble = DirectionEnsemble::from_directions(&inertial)?;
    let body = BodyVectorSet::measured(Matrix3xX::from_columns(&body))?;
    Ok(FreshBlock { ensemble, body })
}

/// `exp(-(h/2)(Ωᵐ_prev + Ωᵐ_now)^) · prev`
pub fn propagate_vectors(
    prev: &BodyVectorSet,
    omega_prev: &AxialVector,
    omega_now: &AxialVector,
    h: f64,
) -> BodyVectorSet {
    prev.rotated(&exp_so3(&((omega_prev + omega_now) * (-0.5 * h))))
}

/// Everything the estimator sees at step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub step: usize,
    /// Measured angular velocity `Ωᵐᵢ`.
    pub gyro: AxialVector,
    /// Present exactly when `step % n == 0` and the sample was usable.
    pub fresh: Option<FreshBlock>,
    /// `Ũᵐᵢ`: the fresh body vectors or their propagated predecessor.
    pub propagated: BodyVectorSet,
    /// Step of the fresh block whose inertial directions pair with
    /// `propagated`.
    pub reference_step: usize,
    /// Fresh instant whose sample was rank deficient and therefore dropped.
    pub rejected: bool,
}

/// A full multi-rate measurement sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStream {
    pub records: Vec<MeasurementRecord>,
    pub step: f64,
    pub rate_ratio: usize,
}

impl MeasurementStream {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `Ωᵐᵢ₊₁`, holding the last sample past the end of the stream. The
    /// flag reports whether the value was held.
    pub fn next_gyro(&self, i: usize) -> (AxialVector, bool) {
        match self.records.get(i + 1) {
            Some(r) => (r.gyro, false),
            None => (self.records.last().map(|r| r.gyro).unwrap_or_else(Vector3::zeros), true),
        }
    }

    /// Inertial directions paired with `Ũᵐᵢ`.
    pub fn ensemble_at(&self, i: usize) -> &DirectionEnsemble {
        let r = &self.records[self.records[i].reference_step];
        &r.fresh.as_ref().expect("reference step carries a fresh block").ensemble
    }

    pub fn fresh_count(&self) -> usize {
        self.records.iter().filter(|r| r.fresh.is_some()).count()
    }
}

const INITIAL_DRAW_ATTEMPTS: usize = 16;

/// Samples the sensors along a truth trajectory.
///
/// One RNG stream (ChaCha8 seeded from `cfg.seed`) feeds every draw in a
/// fixed order: gyro noise first, then on fresh instants the direction count,
/// subset and direction noise. Identical inputs give identical streams.
///
/// A fresh sample whose directions are rank deficient is dropped and the
/// previous directions keep propagating; at step 0 the draw is repeated.
pub fn build_stream(
    truth: &[TruthState],
    cfg: &SensorConfig,
    catalog: &[Vector3<f64>],
) -> Result<MeasurementStream, MeasurementError> {
    cfg.validate()?;
    if truth.is_empty() {
        return Err(MeasurementError::EmptyTruth);
    }
    if cfg.max_vectors > catalog.len() {
        return Err(MeasurementError::InvalidConfig(format!(
            "max vectors {} exceeds catalog size {}",
            cfg.max_vectors,
            catalog.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vector_bound = if cfg.vector_noise == VectorNoise::Off { 0.0 } else { cfg.vector_noise_bound };
    let h = cfg.step;

    let mut records: Vec<MeasurementRecord> = Vec::with_capacity(truth.len());
    for (i, state) in truth.iter().enumerate() {
        let gyro = sample_gyro(&state.angular_velocity, cfg.gyro_noise_bound, &mut rng);

        let mut fresh = None;
        let mut rejected = false;
        if i % cfg.rate_ratio == 0 {
            let attempts = if i == 0 { INITIAL_DRAW_ATTEMPTS } else { 1 };
            for _ in 0..attempts {
                let k = rng.random_range(cfg.min_vectors..=cfg.max_vectors);
                let block = sample_vectors(&state.attitude, catalog, k, vector_bound, cfg.vector_noise, &mut rng)
                    .map_err(|source| MeasurementError::Vectors { step: i, source })?;
                if block.ensemble.is_full_rank() {
                    fresh = Some(block);
                    break;
                }
            }
            if fresh.is_none() {
                if i == 0 {
                    let sigma_min = 0.0;
                    return Err(MeasurementError::Vectors { step: 0, source: WahbaError::RankDeficient { sigma_min } });
                }
                rejected = true;
            }
        }

        let (propagated, reference_step) = match (&fresh, records.last()) {
            (Some(block), _) => (block.body.clone(), i),
            (None, Some(prev)) => (propagate_vectors(&prev.propagated, &prev.gyro, &gyro, h), prev.reference_step),
            (None, None) => unreachable!("step 0 always carries a fresh block"),
        };
        records.push(MeasurementRecord { step: i, gyro, fresh, propagated, reference_step, rejected });
    }
    Ok(MeasurementStream { records, step: h, rate_ratio: cfg.rate_ratio })
}
