//! The explicit multi-rate attitude filter and its energy diagnostics.
//!
//! One step maps `(R̂ᵢ, ωᵢ)` to `(R̂ᵢ₊₁, ωᵢ₊₁)`, where `ω = Ωᵐ - Ω̂` is the
//! angular-velocity estimation error:
//!
//! ```text
//! ωᵢ₊₁ = ((m - l) ωᵢ + k_p h S_L(R̂ᵢ)) / (m + l)
//! Ω̂ᵢ   = Ωᵐᵢ - ωᵢ
//! R̂ᵢ₊₁ = R̂ᵢ exp((h/2)(Ω̂ᵢ₊₁ + Ω̂ᵢ)^)
//! ```
//!
//! The same trajectory solves the implicit variational update when the
//! dissipation torque of [`dissipation_torque`] is applied;
//! [`implicit_residual`] measures how well a trajectory satisfies it.
//!
//! The Lyapunov candidate `V = k_p 𝒰 + (m/2)‖ω‖²` decreases by
//! `(l/2)‖ωᵢ₊₁ + ωᵢ‖²` per step up to the error of linearizing the attitude
//! increment, which is `O(h²)` in the increment.

use thiserror::Error;

use crate::measurements::{propagate_vectors, MeasurementStream};
use crate::so3::{exp_so3, AxialVector, RotationMatrix};
use crate::wahba::{
    potential_error, s_l, wahba_cost, BodyVectorSet, DirectionEnsemble, KMatrix, TargetEigenvalues, WahbaError,
    WeightMatrix, WeightedEnsemble,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("step {step}: {source}")]
    Weights { step: usize, source: WahbaError },
    #[error("measurement stream is empty")]
    EmptyStream,
}

/// Scalar gains and the gyro period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterGains {
    /// Inertia-like weight `m` on the angular-velocity error.
    pub inertia: f64,
    /// Dissipation `l`.
    pub dissipation: f64,
    /// Potential gain `k_p`.
    pub potential: f64,
    /// Step `h` (s).
    pub step: f64,
}

impl FilterGains {
    pub fn new(inertia: f64, dissipation: f64, potential: f64, step: f64) -> Result<Self, FilterError> {
        let gains = Self { inertia, dissipation, potential, step };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |s: &str| Err(FilterError::InvalidGains(s.to_string()));
        let all = [self.inertia, self.dissipation, self.potential, self.step];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("gains must be finite");
        }
        if !(self.inertia > 0.0) {
            return bad("m must be positive");
        }
        if !(self.dissipation > 0.0) {
            return bad("l must be positive");
        }
        if (self.inertia - self.dissipation).abs() <= 1e-12 {
            return bad("l must differ from m");
        }
        if !(self.potential > 0.0) {
            return bad("k_p must be positive");
        }
        if !(self.step > 0.0) {
            return bad("h must be positive");
        }
        Ok(())
    }

    /// `(m - l)/(m + l)`, the per-step decay of `ω` with the gradient frozen.
    pub fn omega_decay(&self) -> f64 {
        (self.inertia - self.dissipation) / (self.inertia + self.dissipation)
    }

    /// `k_p h / (m + l)`, the gradient feed into `ω`.
    pub fn gradient_gain(&self) -> f64 {
        self.potential * self.step / (self.inertia + self.dissipation)
    }
}

/// Filter state at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub attitude: RotationMatrix,
    /// `ω = Ωᵐ - Ω̂`.
    pub omega_error: AxialVector,
    /// `Ω̂ = Ωᵐ - ω` for the gyro sample attached to this step.
    pub angular_velocity: AxialVector,
    pub step: usize,
}

impl EstimatorState {
    pub fn new(attitude: RotationMatrix, omega_error: AxialVector, gyro: &AxialVector) -> Self {
        Self { attitude, omega_error, angular_velocity: gyro - omega_error, step: 0 }
    }
}

/// Advances one step given the precomputed gradient `S_L(R̂ᵢ)`.
pub fn advance(
    state: &EstimatorState,
    gyro_now: &AxialVector,
    gyro_next: &AxialVector,
    gradient: &AxialVector,
    gains: &FilterGains,
) -> EstimatorState {
    let omega_next = (state.omega_error * (gains.inertia - gains.dissipation)
        + gradient * (gains.potential * gains.step))
        / (gains.inertia + gains.dissipation);
    let hat_now = gyro_now - state.omega_error;
    let hat_next = gyro_next - omega_next;
    let attitude = state.attitude * exp_so3(&((hat_next + hat_now) * (0.5 * gains.step)));
    EstimatorState { attitude, omega_error: omega_next, angular_velocity: hat_next, step: state.step + 1 }
}

/// One explicit filter step from the measurements at `i` and the gyro at
/// `i + 1`.
pub fn filter_step(
    state: &EstimatorState,
    gyro_now: &AxialVector,
    gyro_next: &AxialVector,
    propagated: &BodyVectorSet,
    ensemble: &DirectionEnsemble,
    weights: &WeightMatrix,
    gains: &FilterGains,
) -> EstimatorState {
    let gradient = s_l(&state.attitude, ensemble, weights, propagated);
    advance(state, gyro_now, gyro_next, &gradient, gains)
}

/// The dissipation torque at `i + 1` under which the implicit variational
/// update reproduces the explicit filter.
pub fn dissipation_torque(
    omega_i: &AxialVector,
    omega_next: &AxialVector,
    hat_i: &AxialVector,
    hat_next: &AxialVector,
    gradient_next: &AxialVector,
    gains: &FilterGains,
) -> AxialVector {
    let (m, l, kp, h) = (gains.inertia, gains.dissipation, gains.potential, gains.step);
    let rotation = exp_so3(&((hat_next + hat_i) * (0.5 * h)));
    let pushed = rotation.rotate(&(omega_next * (2.0 * m) + gradient_next * (kp * h)));
    ((omega_next + omega_i) * (2.0 * m) + gradient_next * h - pushed * (2.0 * m / (m + l))) / h
}

/// Norm of the residual of the implicit angular-velocity update
///
/// ```text
/// m(ωᵢ₊₂ + ωᵢ₊₁) = exp(-(h/2)(Ω̂ᵢ₊₁ + Ω̂ᵢ)^) [m(ωᵢ₊₁ + ωᵢ) + (h/2) S_L - (h/2) τ_D]
/// ```
#[allow(clippy::too_many_arguments)]
pub fn implicit_residual(
    omega_i: &AxialVector,
    omega_next: &AxialVector,
    omega_after: &AxialVector,
    hat_i: &AxialVector,
    hat_next: &AxialVector,
    gradient_next: &AxialVector,
    torque_next: &AxialVector,
    gains: &FilterGains,
) -> f64 {
    let (m, h) = (gains.inertia, gains.step);
    let rotation = exp_so3(&((hat_next + hat_i) * (-0.5 * h)));
    let rhs = rotation.rotate(&((omega_next + omega_i) * m + gradient_next * (0.5 * h) - torque_next * (0.5 * h)));
    ((omega_after + omega_next) * m - rhs).norm()
}

/// `(m/2)‖ω‖²`
pub fn kinetic_energy_l(omega: &AxialVector, m: f64) -> f64 {
    0.5 * m * omega.norm_squared()
}

/// `(m/2)‖ωᵢ + ωᵢ₊₁‖²`
pub fn kinetic_energy_v(omega_i: &AxialVector, omega_next: &AxialVector, m: f64) -> f64 {
    0.5 * m * (omega_i + omega_next).norm_squared()
}

/// Discrete Lagrangian `𝒯ᵛ(ωᵢ, ωᵢ₊₁) - 𝒰(R̂ᵢ, Ũᵢ)`.
pub fn lagrangian(
    r_hat: &RotationMatrix,
    propagated: &BodyVectorSet,
    ensemble: &DirectionEnsemble,
    weights: &WeightMatrix,
    omega_i: &AxialVector,
    omega_next: &AxialVector,
    m: f64,
) -> f64 {
    kinetic_energy_v(omega_i, omega_next, m) - wahba_cost(r_hat, propagated, ensemble, weights)
}

/// Discrete action: the sum of per-step Lagrangians.
pub fn action_sum(lagrangians: &[f64]) -> f64 {
    lagrangians.iter().sum()
}

/// `V = k_p ⟨I - Q, K⟩ + (m/2)‖ω‖²`
pub fn lyapunov_value(q: &RotationMatrix, omega: &AxialVector, k: &KMatrix, gains: &FilterGains) -> f64 {
    gains.potential * potential_error(q, k) + kinetic_energy_l(omega, gains.inertia)
}

/// Observed against predicted Lyapunov change over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecrementCheck {
    pub observed: f64,
    /// `-(l/2)‖ωᵢ₊₁ + ωᵢ‖²`
    pub predicted: f64,
    pub defect: f64,
}

pub fn lyapunov_decrement_check(
    omega_i: &AxialVector,
    omega_next: &AxialVector,
    v_i: f64,
    v_next: f64,
    l: f64,
) -> DecrementCheck {
    let observed = v_next - v_i;
    let predicted = -0.5 * l * (omega_next + omega_i).norm_squared();
    DecrementCheck { observed, predicted, defect: (observed - predicted).abs() }
}

/// Allowance `C h² (1 + ‖ω‖² + φ)` for the decrement defect.
pub fn defect_bound(constant: f64, h: f64, omega: &AxialVector, phi: f64) -> f64 {
    constant * h * h * (1.0 + omega.norm_squared() + phi)
}

/// Per-step energy bookkeeping. Everything here is computed from the
/// measurements the filter sees; nothing reads ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    /// Wahba potential `𝒰ᵢ`.
    pub potential: f64,
    /// `𝒯ˡᵢ = (m/2)‖ωᵢ‖²`.
    pub kinetic_l: f64,
    /// `𝒯ᵛᵢ = (m/2)‖ωᵢ + ωᵢ₊₁‖²`.
    pub kinetic_v: f64,
    /// `Vᵢ = k_p 𝒰ᵢ + 𝒯ˡᵢ`.
    pub lyapunov: f64,
    /// `Vᵢ₊₁ - Vᵢ` with the weights of step `i` held fixed.
    pub delta_v: f64,
    pub predicted_delta_v: f64,
    pub lagrangian: f64,
    /// Running action sum through this step.
    pub action: f64,
    /// `S_L(R̂ᵢ)`.
    pub gradient: AxialVector,
    /// `τ_Dᵢ`; undefined at step 0.
    pub dissipation_torque: Option<AxialVector>,
    /// Implicit-update residual at step `i`; undefined at step 0.
    pub implicit_residual: Option<f64>,
    /// Whether the step used a held gyro sample past the end of the stream.
    pub held_gyro: bool,
}

impl DiagnosticRecord {
    pub fn decrement(&self) -> DecrementCheck {
        DecrementCheck {
            observed: self.delta_v,
            predicted: self.predicted_delta_v,
            defect: (self.delta_v - self.predicted_delta_v).abs(),
        }
    }
}

/// Options for driving the filter over a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub gains: FilterGains,
    pub eigenvalues: TargetEigenvalues,
    /// Re-project `R̂` onto SO(3) every this many steps (0 disables).
    pub reproject_every: usize,
}

/// States `0..=N` and one diagnostic record per state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub states: Vec<EstimatorState>,
    pub diagnostics: Vec<DiagnosticRecord>,
    /// Number of K-matrix rebuilds (fresh vector instants).
    pub rebuilds: usize,
}

/// Runs the filter over a whole stream.
///
/// Weights and `K` are rebuilt from each fresh inertial set and retained
/// in between. Step `N` is advanced once more with the last gyro sample
/// held, so every row has a `ΔV`.
pub fn run_filter(
    stream: &MeasurementStream,
    initial_attitude: RotationMatrix,
    initial_omega_error: AxialVector,
    options: &RunOptions,
) -> Result<FilterRun, FilterError> {
    let gains = &options.gains;
    gains.validate()?;
    let first = stream.records.first().ok_or(FilterError::EmptyStream)?;
    let (m, l, kp, h) = (gains.inertia, gains.dissipation, gains.potential, gains.step);

    let mut state = EstimatorState::new(initial_attitude, initial_omega_error, &first.gyro);
    let mut states = Vec::with_capacity(stream.len());
    let mut diagnostics = Vec::with_capacity(stream.len());
    let mut reference: Option<WeightedEnsemble> = None;
    let mut rebuilds = 0;
    let mut previous: Option<EstimatorState> = None;
    let mut action = 0.0;

    for (i, record) in stream.records.iter().enumerate() {
        if let Some(block) = &record.fresh {
            let set = WeightedEnsemble::new(block.ensemble.clone(), options.eigenvalues)
                .map_err(|source| FilterError::Weights { step: i, source })?;
            reference = Some(set);
            rebuilds += 1;
        }
        let set = reference.as_ref().expect("first record carries a fresh block");
        let u = &record.propagated;

        let gradient = set.gradient(&state.attitude, u);
        let (gyro_next, held_gyro) = stream.next_gyro(i);
        let mut next = advance(&state, &record.gyro, &gyro_next, &gradient, gains);
        if options.reproject_every > 0 && next.step.is_multiple_of(options.reproject_every) {
            next.attitude = next.attitude.renormalized();
        }

        let potential = set.cost(&state.attitude, u);
        let kinetic_l = kinetic_energy_l(&state.omega_error, m);
        let lyapunov = kp * potential + kinetic_l;
        let u_next = propagate_vectors(u, &record.gyro, &gyro_next, h);
        let v_next = kp * set.cost(&next.attitude, &u_next) + kinetic_energy_l(&next.omega_error, m);
        let check = lyapunov_decrement_check(&state.omega_error, &next.omega_error, lyapunov, v_next, l);
        let kinetic_v = kinetic_energy_v(&state.omega_error, &next.omega_error, m);
        let lagrangian = kinetic_v - potential;
        action += lagrangian;

        let (dissipation, implicit_residual) = match &previous {
            Some(prev) => {
                let tau = dissipation_torque(
                    &prev.omega_error,
                    &state.omega_error,
                    &prev.angular_velocity,
                    &state.angular_velocity,
                    &gradient,
                    gains,
                );
                let residual = implicit_residual(
                    &prev.omega_error,
                    &state.omega_error,
                    &next.omega_error,
                    &prev.angular_velocity,
                    &state.angular_velocity,
                    &gradient,
                    &tau,
                    gains,
                );
                (Some(tau), Some(residual))
            }
            None => (None, None),
        };

        diagnostics.push(DiagnosticRecord {
            potential,
            kinetic_l,
            kinetic_v,
            lyapunov,
            delta_v: check.observed,
            predicted_delta_v: check.predicted,
            lagrangian,
            action,
            gradient,
            dissipation_torque: dissipation,
            implicit_residual,
            held_gyro,
        });
        states.push(state);
        previous = Some(state);
        state = next;
    }
    Ok(FilterRun { states, diagnostics, rebuilds })
}
