//! Real spherical harmonics up to degree 3.
//!
//! Basis constants and the +0.5 DC offset follow the splatting ecosystem
//! convention: zero coefficients render mid-gray.

use nalgebra::Vector3;

use crate::error::CoreError;
use crate::gaussian::sh_coeff_count;
use crate::Result;

pub const SH_C0: f64 = 0.28209479177387814;
pub const SH_C1: f64 = 0.4886025119029199;
pub const SH_C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
pub const SH_C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

/// Evaluate the SH color of one Gaussian towards a unit view direction.
///
/// `sh` must hold exactly `(degree+1)^2` RGB triples. The result is offset by
/// +0.5 per channel and is not clamped here.
pub fn evaluate_sh(sh: &[[f64; 3]], degree: usize, dir: &Vector3<f64>) -> Result<[f64; 3]> {
    if degree > 3 {
        return Err(CoreError::Parameter { reason: "sh degree must be 0..=3" });
    }
    let expected = sh_coeff_count(degree);
    if sh.len() != expected {
        return Err(CoreError::ShShapeMismatch { expected, got: sh.len() });
    }

    let mut out = [0.0f64; 3];
    for c in 0..3 {
        out[c] = SH_C0 * sh[0][c];
    }
    if degree >= 1 {
        let (x, y, z) = (dir[0], dir[1], dir[2]);
        for c in 0..3 {
            out[c] += -SH_C1 * y * sh[1][c] + SH_C1 * z * sh[2][c] - SH_C1 * x * sh[3][c];
        }
        if degree >= 2 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            let (xy, yz, xz) = (x * y, y * z, x * z);
            for c in 0..3 {
                out[c] += SH_C2[0] * xy * sh[4][c]
                    + SH_C2[1] * yz * sh[5][c]
                    + SH_C2[2] * (2.0 * zz - xx - yy) * sh[6][c]
                    + SH_C2[3] * xz * sh[7][c]
                    + SH_C2[4] * (xx - yy) * sh[8][c];
            }
            if degree >= 3 {
                for c in 0..3 {
                    out[c] += SH_C3[0] * y * (3.0 * xx - yy) * sh[9][c]
                        + SH_C3[1] * xy * z * sh[10][c]
                        + SH_C3[2] * y * (4.0 * zz - xx - yy) * sh[11][c]
                        + SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * sh[12][c]
                        + SH_C3[4] * x * (4.0 * zz - xx - yy) * sh[13][c]
                        + SH_C3[5] * z * (xx - yy) * sh[14][c]
                        + SH_C3[6] * x * (xx - 3.0 * yy) * sh[15][c];
                }
            }
        }
    }
    for c in &mut out {
        *c += 0.5;
    }
    Ok(out)
}

/// Invert the DC convention: the degree-0 coefficient that renders `rgb`.
pub fn rgb_to_sh_dc(rgb: [f64; 3]) -> [f64; 3] {
    [(rgb[0] - 0.5) / SH_C0, (rgb[1] - 0.5) / SH_C0, (rgb[2] - 0.5) / SH_C0]
}
