//! Rotation-group primitives: hat/vex, exp/log, principal angle, projection.

use nalgebra::{Matrix3, Vector3};
use so3me::so3::{exp_so3, hat, log_so3, principal_angle, project_to_so3, vex};

fn main() {
    let v = Vector3::new(0.3, -1.1, 0.7);
    let skew = hat(&v);
    println!("hat(v) =\n{}", skew.matrix());
    println!("vex(hat(v)) = {:.9?}", vex(&skew).as_slice());

    let r = exp_so3(&v);
    println!("exp(v) =\n{}", r.matrix());
    println!("det = {:.15}, |RᵀR - I| = {:e}", r.matrix().determinant(), r.orthogonality_defect());
    println!("log(exp(v)) = {:.9?}", log_so3(&r).as_slice());
    println!("principal angle = {:.15} (|v| = {:.15})", principal_angle(&r), v.norm());

    // Near π the log picks the axis from the symmetric part.
    let flip = exp_so3(&(Vector3::new(1.0, 2.0, -2.0).normalize() * (std::f64::consts::PI - 1e-9)));
    println!("log near pi = {:.9?}", log_so3(&flip).as_slice());

    let drifted = r.matrix() + Matrix3::new(1e-7, 0.0, 2e-7, 0.0, -1e-7, 0.0, 3e-7, 0.0, 0.0);
    let fixed = project_to_so3(&drifted).expect("close to SO(3)");
    println!("projection moved the matrix by {:e}", (fixed.matrix() - drifted).norm());
}
