//! Paired-quaternion ("rotor") parameterization of 4D rotations.
//!
//! A 4D rotation is the product of a left-isoclinic and a right-isoclinic
//! rotation, each encoded by a unit quaternion: `M = L(q_l) * R(q_r)` where
//! `L`/`R` are the matrices of quaternion left/right multiplication acting on
//! (w, x, y, z) coordinates. [`so4_to_isoclinic`] inverts the factorization.

use nalgebra::{Matrix3, Matrix4};

use crate::error::CoreError;
use crate::mathx::sqrt;
use crate::Result;

/// Unit-norm tolerance accepted on rotor quaternions.
pub const ROTOR_NORM_TOL: f64 = 1e-6;
/// Orthogonality/determinant tolerance accepted on rotation-matrix input.
pub const ROTATION_TOL: f64 = 1e-9;

/// Quaternion with explicit (w, x, y, z) component order.
///
/// The component order is load-bearing: it matches the on-disk layout and the
/// row/column conventions of [`Quat::left_matrix`] and [`Quat::right_matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn conjugate(&self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, rhs: &Quat) -> Quat {
        Quat {
            w: self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            x: self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            y: self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            z: self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        }
    }

    /// Matrix of left multiplication: `left_matrix(q) * p == q * p`.
    pub fn left_matrix(&self) -> Matrix4<f64> {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            a, -b, -c, -d, //
            b, a, -d, c, //
            c, d, a, -b, //
            d, -c, b, a,
        )
    }

    /// Matrix of right multiplication: `right_matrix(q) * p == p * q`.
    pub fn right_matrix(&self) -> Matrix4<f64> {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            a, -b, -c, -d, //
            b, a, d, -c, //
            c, -d, a, b, //
            d, c, -b, a,
        )
    }

    /// 3D rotation matrix of the conjugation map `p -> q p q*`.
    pub fn to_rotation3(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Extract the quaternion of a 3D rotation matrix (Shepperd's method).
    ///
    /// Returns a unit quaternion up to global sign.
    pub fn from_rotation3(m: &Matrix3<f64>) -> Quat {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = sqrt(trace + 1.0) * 2.0;
            Quat::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = sqrt(1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]) * 2.0;
            Quat::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = sqrt(1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]) * 2.0;
            Quat::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = sqrt(1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]) * 2.0;
            Quat::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        q.normalized()
    }

    fn check_unit(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > ROTOR_NORM_TOL {
            return Err(CoreError::InvalidRotor { norm: n });
        }
        Ok(())
    }
}

/// Assemble the 4x4 rotation `L(q_l) * R(q_r)` of a rotor pair.
///
/// Both quaternions must be unit-norm within [`ROTOR_NORM_TOL`].
pub fn rotor_to_matrix(q_l: &Quat, q_r: &Quat) -> Result<Matrix4<f64>> {
    q_l.check_unit()?;
    q_r.check_unit()?;
    Ok(q_l.left_matrix() * q_r.right_matrix())
}

/// Factor a proper 4D rotation into its isoclinic rotor pair.
///
/// The pair is unique up to a simultaneous sign flip; the returned pair is
/// normalized so that `q_l.w >= 0` (first nonzero component positive when
/// `q_l.w == 0`). Rejects input that is not orthogonal with determinant +1
/// within [`ROTATION_TOL`].
pub fn so4_to_isoclinic(m: &Matrix4<f64>) -> Result<(Quat, Quat)> {
    let gram = m.transpose() * m;
    let mut ortho_err: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho_err = ortho_err.max((gram[(i, j)] - target).abs());
        }
    }
    if ortho_err > ROTATION_TOL {
        return Err(CoreError::InvalidRotation { reason: "matrix is not orthogonal" });
    }
    if (m.determinant() - 1.0).abs() > ROTATION_TOL {
        return Err(CoreError::InvalidRotation { reason: "determinant is not +1" });
    }

    // Column 0 is the image of the identity quaternion: q_l * 1 * q_r.
    let product = Quat::new(m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(3, 0)]).normalized();

    // L(product)^T * M maps p -> q_r* p q_r, a pure 3D conjugation whose
    // lower-right block yields q_r* by quaternion extraction.
    let n = product.left_matrix().transpose() * m;
    let block = n.fixed_view::<3, 3>(1, 1).into_owned();
    let s = Quat::from_rotation3(&block);

    let q_r = s.conjugate().normalized();
    let q_l = product.mul(&s).normalized();

    let (q_l, q_r) = canonical_sign(q_l, q_r);
    Ok((q_l, q_r))
}

fn canonical_sign(q_l: Quat, q_r: Quat) -> (Quat, Quat) {
    let lead = if q_l.w != 0.0 {
        q_l.w
    } else if q_l.x != 0.0 {
        q_l.x
    } else if q_l.y != 0.0 {
        q_l.y
    } else {
        q_l.z
    };
    if lead < 0.0 {
        (
            Quat::new(-q_l.w, -q_l.x, -q_l.y, -q_l.z),
            Quat::new(-q_r.w, -q_r.x, -q_r.y, -q_r.z),
        )
    } else {
        (q_l, q_r)
    }
}
