//! One explicit filter step by hand, then the dissipation torque and the
//! implicit-update residual for the following step.

use nalgebra::Vector3;
use so3me::filter::{dissipation_torque, filter_step, implicit_residual, EstimatorState, FilterGains};
use so3me::measurements::default_catalog;
use so3me::so3::{axis_angle, exp_so3};
use so3me::wahba::{BodyVectorSet, DirectionEnsemble, TargetEigenvalues, WeightedEnsemble};

fn main() {
    let gains = FilterGains::new(100.0, 40.0, 150.0, 0.01).unwrap();
    let set = WeightedEnsemble::new(
        DirectionEnsemble::from_directions(&default_catalog()[..4]).unwrap(),
        TargetEigenvalues::new([30.0, 20.0, 10.0]).unwrap(),
    )
    .unwrap();

    let truth = axis_angle(&Vector3::new(4.0, 2.0, 5.0), 0.6);
    let gyro = [Vector3::new(0.05, -0.02, 0.1), Vector3::new(0.051, -0.021, 0.099), Vector3::new(0.052, -0.022, 0.098)];
    let u0 = BodyVectorSet::exact(&truth, &set.ensemble);
    let start =
        EstimatorState::new(truth * exp_so3(&Vector3::new(0.4, -0.3, 0.2)), Vector3::new(0.01, 0.0, -0.02), &gyro[0]);

    let s0 = set.gradient(&start.attitude, &u0);
    let one = filter_step(&start, &gyro[0], &gyro[1], &u0, &set.ensemble, &set.weights, &gains);
    println!("S_L(R0) = {:.9?}", s0.as_slice());
    println!("omega_1 = {:.9?}", one.omega_error.as_slice());
    println!("R1 =\n{}", one.attitude.matrix());

    let u1 = u0.rotated(&exp_so3(&((gyro[0] + gyro[1]) * -0.005)));
    let s1 = set.gradient(&one.attitude, &u1);
    let two = filter_step(&one, &gyro[1], &gyro[2], &u1, &set.ensemble, &set.weights, &gains);
    let tau = dissipation_torque(
        &start.omega_error,
        &one.omega_error,
        &start.angular_velocity,
        &one.angular_velocity,
        &s1,
        &gains,
    );
    let residual = implicit_residual(
        &start.omega_error,
        &one.omega_error,
        &two.omega_error,
        &start.angular_velocity,
        &one.angular_velocity,
        &s1,
        &tau,
        &gains,
    );
    println!("tau_D(1) = {:.9?}", tau.as_slice());
    println!("implicit residual = {residual:.2e}");
}
