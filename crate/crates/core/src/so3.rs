//! Rotation-group algebra: hat/vex, exponential and logarithm, principal
//! angle and projection back onto SO(3).
//!
//! Rotations are stored as plain 3x3 matrices. Every constructor that accepts
//! a raw matrix validates orthogonality to [`ROTATION_TOLERANCE`]; results of
//! `exp_so3` and products of rotations are trusted and only drift by roundoff,
//! which long-running consumers repair with [`project_to_so3`].

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Angular velocities, rotation vectors and torques.
pub type AxialVector = Vector3<f64>;

/// Maximum Frobenius norm of `RᵀR - I` accepted for a rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Rotation angle below which `exp_so3` switches to Taylor coefficients.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Maximum asymmetry tolerated when reading a skew matrix from raw entries.
pub const SKEW_TOLERANCE: f64 = 1e-12;

/// Maximum Frobenius distance from the group accepted by `project_to_so3`.
pub const PROJECTION_RADIUS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:e})")]
    NotSkew { asymmetry: f64 },
    #[error("matrix is not a rotation (orthogonality defect {defect:e}, det {det})")]
    NotRotation { defect: f64, det: f64 },
    #[error("matrix is not near SO(3) (distance {distance:e}, det {det})")]
    NotNearGroup { distance: f64, det: f64 },
    #[error("non-finite entry")]
    NonFinite,
}

/// Element of so(3), stored as its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewMatrix(AxialVector);

impl SkewMatrix {
    /// Reads a skew matrix from raw entries, rejecting asymmetry beyond
    /// [`SKEW_TOLERANCE`].
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, So3Error> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let asymmetry = (m + m.transpose()).abs().max();
        if asymmetry > SKEW_TOLERANCE {
            return Err(So3Error::NotSkew { asymmetry });
        }
        Ok(Self::skew_part(m))
    }

    /// Skew part `(M - Mᵀ)/2` of an arbitrary matrix.
    pub fn skew_part(m: &Matrix3<f64>) -> Self {
        SkewMatrix(Vector3::new(
            0.5 * (m[(2, 1)] - m[(1, 2)]),
            0.5 * (m[(0, 2)] - m[(2, 0)]),
            0.5 * (m[(1, 0)] - m[(0, 1)]),
        ))
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let v = &self.0;
        Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
    }
}

impl From<SkewMatrix> for Matrix3<f64> {
    fn from(s: SkewMatrix) -> Self {
        s.matrix()
    }
}

/// The cross-product operator: `hat(v) * w == v × w`.
pub fn hat(v: &AxialVector) -> SkewMatrix {
    SkewMatrix(*v)
}

/// Inverse of [`hat`].
pub fn vex(m: &SkewMatrix) -> AxialVector {
    m.0
}

/// Convenience for the frequent `vex` of a raw matrix that is skew by
/// construction (e.g. `A - Aᵀ`); takes the skew part without validation.
pub fn vex_of_skew_part(m: &Matrix3<f64>) -> AxialVector {
    SkewMatrix::skew_part(m).0
}

/// Element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Validates `‖RᵀR - I‖_F <= 1e-9` and `det R > 0`.
    pub fn new(m: Matrix3<f64>) -> Result<Self, So3Error> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let defect = orthogonality_defect(&m);
        let det = m.determinant();
        if defect > ROTATION_TOLERANCE || det <= 0.0 {
            return Err(So3Error::NotRotation { defect, det });
        }
        Ok(RotationMatrix(m))
    }

    /// Wraps a matrix known to be a rotation up to roundoff.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn rotate(&self, v: &AxialVector) -> AxialVector {
        self.0 * v
    }

    /// Frobenius norm of `RᵀR - I`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }

    /// Re-projects onto the group; a no-op up to roundoff for valid input.
    pub fn renormalized(&self) -> Self {
        project_to_so3(&self.0).unwrap_or(*self)
    }
}

fn orthogonality_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<&RotationMatrix> for &RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<AxialVector> for &RotationMatrix {
    type Output = AxialVector;
    fn mul(self, rhs: AxialVector) -> AxialVector {
        self.0 * rhs
    }
}

impl AsRef<Matrix3<f64>> for RotationMatrix {
    fn as_ref(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Rodrigues coefficients `sin θ/θ` and `(1 - cos θ)/θ²`.
fn rodrigues_coefficients(theta: f64) -> (f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    }
}

/// Matrix exponential of `hat(v)` in closed form.
pub fn exp_so3(v: &AxialVector) -> RotationMatrix {
    let theta = v.norm();
    let (a, b) = rodrigues_coefficients(theta);
    let k = hat(v).matrix();
    RotationMatrix(Matrix3::identity() + k * a + k * k * b)
}

/// Rotation angle in `[0, π]`.
///
/// Evaluated as `atan2(‖vex(Q - Qᵀ)‖/2, (tr Q - 1)/2)`, which equals
/// `arccos((tr Q - 1)/2)` on the group but keeps full relative precision at
/// small angles where the arccos form bottoms out near `1.5e-8`.
pub fn principal_angle(q: &RotationMatrix) -> f64 {
    let m = q.matrix();
    let sin_part = vex_of_skew_part(m).norm();
    let cos_part = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    sin_part.atan2(cos_part)
}

/// Rotation vector of `R` with angle in `[0, π]`.
///
/// At exactly π the axis is not unique; the axis is read from the column of
/// the symmetric part with the largest diagonal entry and its sign fixed so
/// that the first nonzero component is positive.
pub fn log_so3(r: &RotationMatrix) -> AxialVector {
    let m = r.matrix();
    let theta = principal_angle(r);
    let s = vex_of_skew_part(m); // sin θ · axis
    if theta < SMALL_ANGLE {
        // θ / sin θ ≈ 1 + θ²/6
        return s * (1.0 + theta * theta / 6.0);
    }
    if theta < PI - 1e-3 {
        return s * (theta / theta.sin());
    }

    // Near π: (R + Rᵀ)/2 = cos θ I + (1 - cos θ) a aᵀ.
    let cos = theta.cos();
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
    let j = (0..3).max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)])).unwrap_or(0);
    let mut axis = outer.column(j) / outer[(j, j)].max(f64::MIN_POSITIVE).sqrt();
    axis.normalize_mut();
    if s.norm() > 1e-10 {
        if axis.dot(&s) < 0.0 {
            axis = -axis;
        }
    } else if let Some(first) = axis.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            axis = -axis;
        }
    }
    axis * theta
}

/// Nearest rotation in the Frobenius sense (the special orthogonal polar
/// factor `U diag(1, 1, det(UVᵀ)) Vᵀ`).
pub fn project_to_so3(m: &Matrix3<f64>) -> Result<RotationMatrix, So3Error> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(So3Error::NonFinite);
    }
    let det = m.determinant();
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(So3Error::NotNearGroup { distance: f64::INFINITY, det }),
    };
    let sign = (u * v_t).determinant().signum();
    let p = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * v_t;
    let distance = (m - p).norm();
    if det.abs() < f64::EPSILON || distance > PROJECTION_RADIUS {
        return Err(So3Error::NotNearGroup { distance, det });
    }
    Ok(RotationMatrix(p))
}

/// `R v`, the vector form of `Ad_R hat(v) = R hat(v) Rᵀ = hat(R v)`.
pub fn adjoint_rotate(r: &RotationMatrix, v: &AxialVector) -> AxialVector {
    r.matrix() * v
}

/// Rotation of `angle` radians about `axis`; the axis is normalized first.
pub fn axis_angle(axis: &AxialVector, angle: f64) -> RotationMatrix {
    let n = axis.norm();
    if n == 0.0 {
        return RotationMatrix::identity();
    }
    exp_so3(&(axis * (angle / n)))
}
