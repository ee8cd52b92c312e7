//! Planar pose algebra and the linearized prior/between factors built on it.

use super::{LinearFactor, VariableId};
use crate::error::Result;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 { x, y, theta }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Pose2::new(v[0], v[1], v[2])
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.y, self.theta]
    }

    /// `self ⊕ u`: applies a body-frame motion.
    pub fn compose(self, u: Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * u.x - s * u.y,
            self.y + s * u.x + c * u.y,
            wrap_angle(self.theta + u.theta),
        )
    }

    /// `self⁻¹ ⊕ other`: `other` expressed in the frame of `self`.
    pub fn between(self, other: Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (other.x - self.x, other.y - self.y);
        Pose2::new(c * dx + s * dy, -s * dx + c * dy, wrap_angle(other.theta - self.theta))
    }

    pub fn distance(self, other: Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub type Mat3 = [[f64; 3]; 3];

/// Jacobians of `between(a, b)` with respect to `a` and `b`.
pub fn between_jacobians(a: Pose2, b: Pose2) -> (Mat3, Mat3) {
    let (s, c) = a.theta.sin_cos();
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let ja = [
        [-c, -s, -s * dx + c * dy],
        [s, -c, -c * dx - s * dy],
        [0.0, 0.0, -1.0],
    ];
    let jb = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]];
    (ja, jb)
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mul_vec(a: &Mat3, v: [f64; 3]) -> Vec<f64> {
    (0..3).map(|i| (0..3).map(|k| a[i][k] * v[k]).sum()).collect()
}

fn flat(m: &Mat3) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// Upper Cholesky factor `U` with `UᵀU = Ω`, for a symmetric information
/// matrix given by its upper triangle `(i11, i12, i13, i22, i23, i33)`.
/// Returns `None` unless `Ω` is positive definite.
pub fn sqrt_information(upper: [f64; 6]) -> Option<Mat3> {
    let [a11, a12, a13, a22, a23, a33] = upper;
    let u11 = a11.sqrt();
    if !(u11 > 0.0) {
        return None;
    }
    let u12 = a12 / u11;
    let u13 = a13 / u11;
    let d22 = a22 - u12 * u12;
    if !(d22 > 0.0) {
        return None;
    }
    let u22 = d22.sqrt();
    let u23 = (a23 - u12 * u13) / u22;
    let d33 = a33 - u13 * u13 - u23 * u23;
    if !(d33 > 0.0) {
        return None;
    }
    Some([[u11, u12, u13], [0.0, u22, u23], [0.0, 0.0, d33.sqrt()]])
}

/// Square root information of a diagonal covariance with the given sigmas.
pub fn sqrt_information_diag(sigmas: [f64; 3]) -> Mat3 {
    [
        [1.0 / sigmas[0], 0.0, 0.0],
        [0.0, 1.0 / sigmas[1], 0.0],
        [0.0, 0.0, 1.0 / sigmas[2]],
    ]
}

fn pose_error(z: Pose2, predicted: Pose2) -> [f64; 3] {
    [
        z.x - predicted.x,
        z.y - predicted.y,
        wrap_angle(z.theta - predicted.theta),
    ]
}

/// Prior `x ~ N(mean, Ω⁻¹)` linearized at `lin`.
pub fn prior_factor(var: VariableId, lin: Pose2, mean: Pose2, sqrt_info: &Mat3) -> Result<LinearFactor> {
    let rhs = mul_vec(sqrt_info, pose_error(mean, lin));
    LinearFactor::unary(var, flat(sqrt_info), rhs)
}

/// Relative-pose measurement `z ≈ between(a, b)` linearized at
/// `(lin_a, lin_b)`.
pub fn between_factor(
    a: VariableId,
    b: VariableId,
    lin_a: Pose2,
    lin_b: Pose2,
    z: Pose2,
    sqrt_info: &Mat3,
) -> Result<LinearFactor> {
    let (ja, jb) = between_jacobians(lin_a, lin_b);
    let rhs = mul_vec(sqrt_info, pose_error(z, lin_a.between(lin_b)));
    LinearFactor::new(
        vec![a, b],
        vec![flat(&mul(sqrt_info, &ja)), flat(&mul(sqrt_info, &jb))],
        rhs,
    )
}
