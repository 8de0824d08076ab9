//! Closed-form rotation kernels in axis-angle coordinates.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::policy::{ROTATION_MARGIN, SMALL_ANGLE};

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// `sin θ / θ`
pub(crate) fn sinc(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// `(1 − cos θ) / θ²`
pub(crate) fn cosc(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        (1.0 - theta.cos()) / (theta * theta)
    }
}

/// `(θ − sin θ) / θ³`
pub(crate) fn sinc3(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// Rodrigues formula.
pub fn exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat(w);
    Matrix3::identity() + k * sinc(theta) + k * k * cosc(theta)
}

/// Rotation angle in `[0, π]`.
pub fn angle(r: &Matrix3<f64>) -> f64 {
    let c = (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0);
    let s = 0.5 * vee(&(r - r.transpose())).norm();
    s.atan2(c)
}

/// Principal logarithm; rejects angles at or beyond `π − ROTATION_MARGIN`.
pub fn log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let c = (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0);
    let sv = 0.5 * vee(&(r - r.transpose()));
    let s = sv.norm();
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - ROTATION_MARGIN {
        return Err(Error::OutsideLogDomain(format!("rotation angle {theta} too close to π")));
    }
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        return Ok(sv * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta < 3.0 {
        return Ok(sv * (theta / s));
    }
    // Near π the antisymmetric part is tiny; recover the axis from the
    // symmetric part (1 − cos θ) a aᵀ instead.
    let b = 0.5 * (r + r.transpose()) - Matrix3::identity() * c;
    let one_minus_c = 1.0 - c;
    let i = (0..3).max_by(|&p, &q| b[(p, p)].total_cmp(&b[(q, q)])).unwrap_or(0);
    let ai = (b[(i, i)] / one_minus_c).max(0.0).sqrt();
    let mut axis = Vector3::zeros();
    for j in 0..3 {
        axis[j] = if j == i { ai } else { b[(j, i)] / (one_minus_c * ai) };
    }
    axis /= axis.norm();
    if axis.dot(&sv) < 0.0 {
        axis = -axis;
    }
    Ok(axis * theta)
}

/// Checks `RᵀR = I` and `det R = +1` within `tol`.
pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    r.iter().all(|x| x.is_finite())
        && (r.transpose() * r - Matrix3::identity()).norm() <= tol
        && (r.determinant() - 1.0).abs() <= tol
}
