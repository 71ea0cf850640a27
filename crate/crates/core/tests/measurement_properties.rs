use std::f64::consts::PI;

use nalgebra::Vector3;
use so3me::measurements::{
    build_stream, default_catalog, discrete_attitude_step, simulate_truth, AttitudeIntegration, SensorConfig,
    TorqueLaw, TruthModel, TruthState, VectorNoise,
};
use so3me::so3::{axis_angle, RotationMatrix};

fn reference_model() -> TruthModel {
    TruthModel {
        inertia: Vector3::new(1.0, 1.2, 1.5),
        torque: TorqueLaw::Sinusoidal { amplitude: Vector3::repeat(0.05), frequency: Vector3::new(0.2, 0.3, 0.5) },
        attitude_integration: AttitudeIntegration::Averaged,
    }
}

fn reference_initial() -> TruthState {
    TruthState {
        attitude: axis_angle(&Vector3::new(4.0, 2.0, 5.0), PI / 4.0),
        angular_velocity: Vector3::new(-1.2, 2.1, -1.9) * (PI / 60.0),
        time: 0.0,
    }
}

fn sensors(n: usize, noisy: bool, seed: u64) -> SensorConfig {
    SensorConfig {
        step: 0.01,
        rate_ratio: n,
        gyro_noise_bound: if noisy { 0.97f64.to_radians() } else { 0.0 },
        vector_noise_bound: if noisy { 2.4f64.to_radians() } else { 0.0 },
        vector_noise: if noisy { VectorNoise::Rotational } else { VectorNoise::Off },
        min_vectors: 2,
        max_vectors: 9,
        seed,
    }
}

#[test]
fn propagated_vectors_match_truth() {
    let truth = simulate_truth(&reference_model(), reference_initial(), 0.01, 6000);
    for n in [1, 2, 5, 10, 50] {
        let stream = build_stream(&truth, &sensors(n, false, 3), &default_catalog()).unwrap();
        let worst = stream
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (r.propagated.matrix() - truth[i].attitude.matrix().transpose() * stream.ensemble_at(i).matrix()).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "n={n}: {worst:e}");
        for r in &stream.records {
            assert_eq!(r.fresh.is_some(), r.step % n == 0);
        }
    }
}

#[test]
fn free_body_conserves_energy_and_momentum() {
    let model = TruthModel {
        inertia: Vector3::new(1.0, 2.0, 3.0),
        torque: TorqueLaw::Zero,
        attitude_integration: AttitudeIntegration::Averaged,
    };
    let truth = simulate_truth(&model, reference_initial(), 0.01, 6000);
    let e0 = model.kinetic_energy(&truth[0].angular_velocity);
    let h0 = model.angular_momentum(&truth[0].angular_velocity).norm();
    for s in &truth {
        assert!((model.kinetic_energy(&s.angular_velocity) - e0).abs() <= 1e-8 * e0);
        assert!((model.angular_momentum(&s.angular_velocity).norm() - h0).abs() <= 1e-8 * h0);
    }
}

#[test]
fn constant_rate_steps_compose() {
    let r = axis_angle(&Vector3::new(1.0, -2.0, 0.5), 0.8);
    let w = Vector3::new(0.3, -0.4, 1.2);
    let whole = discrete_attitude_step(&r, &w, &w, 1.0);
    let mut pieces = r;
    for _ in 0..10 {
        pieces = discrete_attitude_step(&pieces, &w, &w, 0.1);
    }
    assert!((whole.matrix() - pieces.matrix()).norm() <= 1e-12);
}

#[test]
fn streams_are_deterministic() {
    let truth = simulate_truth(&reference_model(), reference_initial(), 0.01, 1000);
    let a = build_stream(&truth, &sensors(10, true, 42), &default_catalog()).unwrap();
    let b = build_stream(&truth, &sensors(10, true, 42), &default_catalog()).unwrap();
    assert_eq!(a, b);
    let c = build_stream(&truth, &sensors(10, true, 43), &default_catalog()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn noisy_stream_counts_and_bounds() {
    let truth = simulate_truth(&reference_model(), reference_initial(), 0.01, 6000);
    let stream = build_stream(&truth, &sensors(10, true, 8), &default_catalog()).unwrap();
    let bound = 0.97f64.to_radians();
    let mut counts = [0usize; 10];
    for (r, t) in stream.records.iter().zip(&truth) {
        assert!((r.gyro - t.angular_velocity).norm() <= bound + 1e-15);
        if let Some(block) = &r.fresh {
            counts[block.ensemble.observed()] += 1;
        }
    }
    assert!(counts[2..=9].iter().all(|c| *c > 0), "{counts:?}");
}

#[test]
fn reference_truth_is_bounded() {
    for mode in [AttitudeIntegration::Averaged, AttitudeIntegration::Rk4] {
        let model = TruthModel { attitude_integration: mode, ..reference_model() };
        let truth = simulate_truth(&model, reference_initial(), 0.01, 6000);
        assert_eq!(truth.len(), 6001);
        for s in &truth {
            assert!(s.angular_velocity.iter().all(|x| x.is_finite()));
            assert!(s.angular_velocity.norm() < 1.0);
            assert!(RotationMatrix::new(*s.attitude.matrix()).is_ok());
        }
        assert!((truth[6000].time - 60.0).abs() < 1e-9);
    }
}

#[test]
fn rk4_attitude_tracks_averaged_step() {
    let averaged = simulate_truth(&reference_model(), reference_initial(), 0.01, 6000);
    let model = TruthModel { attitude_integration: AttitudeIntegration::Rk4, ..reference_model() };
    let rk4 = simulate_truth(&model, reference_initial(), 0.01, 6000);
    let gap =
        averaged.iter().zip(&rk4).map(|(a, b)| (a.attitude.matrix() - b.attitude.matrix()).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-3, "{gap:e}");
}
