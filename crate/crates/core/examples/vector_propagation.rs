//! Between direction samples the body vectors are carried forward with the
//! gyro. Noise-free, the carried vectors match `Rᵀ E` to rounding.

use std::f64::consts::PI;

use nalgebra::Vector3;
use so3me::measurements::{
    build_stream, default_catalog, simulate_truth, AttitudeIntegration, SensorConfig, TorqueLaw, TruthModel,
    TruthState, VectorNoise,
};
use so3me::so3::axis_angle;

fn main() {
    let model = TruthModel {
        inertia: Vector3::new(1.0, 1.2, 1.5),
        torque: TorqueLaw::Sinusoidal { amplitude: Vector3::repeat(0.05), frequency: Vector3::new(0.2, 0.3, 0.5) },
        attitude_integration: AttitudeIntegration::Averaged,
    };
    let initial = TruthState {
        attitude: axis_angle(&Vector3::new(4.0, 2.0, 5.0), PI / 4.0),
        angular_velocity: Vector3::new(-1.2, 2.1, -1.9) * (PI / 60.0),
        time: 0.0,
    };
    let truth = simulate_truth(&model, initial, 0.01, 6000);

    for n in [1, 10, 100] {
        let sensors = SensorConfig {
            step: 0.01,
            rate_ratio: n,
            gyro_noise_bound: 0.0,
            vector_noise_bound: 0.0,
            vector_noise: VectorNoise::Off,
            min_vectors: 2,
            max_vectors: 9,
            seed: 7,
        };
        let stream = build_stream(&truth, &sensors, &default_catalog()).unwrap();
        let worst = stream
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (r.propagated.matrix() - truth[i].attitude.matrix().transpose() * stream.ensemble_at(i).matrix()).norm()
            })
            .fold(0.0, f64::max);
        println!("n = {n:3}: {} fresh samples, worst propagation error {worst:.2e}", stream.fresh_count());
    }
}
