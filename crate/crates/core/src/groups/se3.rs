//! Closed-form rigid-motion kernels. Tangent coordinates are ordered
//! `(ω, u)`: rotation first, then translation.

use nalgebra::{Matrix3, Vector3};

use super::so3;
use crate::error::Result;
use crate::policy::SMALL_ANGLE;

/// Left Jacobian `V(ω)` with `t = V u`.
pub fn left_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = so3::hat(w);
    Matrix3::identity() + k * so3::cosc(theta) + k * k * so3::sinc3(theta)
}

/// Closed-form `V(ω)⁻¹`.
pub fn left_jacobian_inverse(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = so3::hat(w);
    let d = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half / half.tan()) / (theta * theta)
    };
    Matrix3::identity() - k * 0.5 + k * k * d
}

pub fn exp(w: &Vector3<f64>, u: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    (so3::exp(w), left_jacobian(w) * u)
}

pub fn log(r: &Matrix3<f64>, t: &Vector3<f64>) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let w = so3::log(r)?;
    Ok((w, left_jacobian_inverse(&w) * t))
}
