//! The 4D Gaussian primitive and its time-conditioned decomposition.
//!
//! Each primitive carries a 4D mean (x, y, z, t), four per-axis scales, a
//! rotor pair orienting the covariance, an opacity and SH color coefficients.
//! Conditioning on a timestamp splits it into a 3D spatial Gaussian plus a
//! scalar temporal weight; both derive from the 4x4 covariance
//! `R * diag(scales^2) * R^T`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::CoreError;
use crate::mathx::{exp, sqrt};
use crate::rotor::{so4_to_isoclinic, Quat, ROTOR_NORM_TOL};
use crate::Result;

/// Temporal variances below this are treated as degenerate and rejected.
pub const EPSILON_SIGMA_T: f64 = 1e-12;

/// One anisotropic space-time Gaussian primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian4D {
    /// (x, y, z, t) mean; spatial part in world units, time in scene time.
    pub mean: Vector4<f64>,
    /// Per-axis standard deviations, strictly positive.
    pub scales: Vector4<f64>,
    /// Left quaternion of the covariance rotor.
    pub q_l: Quat,
    /// Right quaternion of the covariance rotor.
    pub q_r: Quat,
    /// Learned opacity in (0, 1].
    pub opacity: f64,
    /// SH coefficients, RGB per band, length (degree+1)^2.
    pub sh: Vec<[f64; 3]>,
}

/// A 4D Gaussian conditioned on a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian3D {
    pub mean3: Vector3<f64>,
    pub cov3: Matrix3<f64>,
    /// Temporal opacity p(t) in (0, 1].
    pub temporal_weight: f64,
}

impl Gaussian4D {
    /// Validating constructor.
    pub fn new(
        mean: Vector4<f64>,
        scales: Vector4<f64>,
        q_l: Quat,
        q_r: Quat,
        opacity: f64,
        sh: Vec<[f64; 3]>,
    ) -> Result<Self> {
        let g = Gaussian4D { mean, scales, q_l, q_r, opacity, sh };
        g.validate()?;
        Ok(g)
    }

    /// Check the type invariants (unit rotors, positive scales, opacity range,
    /// legal SH length).
    pub fn validate(&self) -> Result<()> {
        for q in [&self.q_l, &self.q_r] {
            let n = q.norm();
            if (n - 1.0).abs() > ROTOR_NORM_TOL {
                return Err(CoreError::InvalidRotor { norm: n });
            }
        }
        for k in 0..4 {
            if !(self.scales[k] > 0.0) {
                return Err(CoreError::NonPositiveScale { value: self.scales[k] });
            }
        }
        if !(self.opacity > 0.0 && self.opacity <= 1.0) {
            return Err(CoreError::InvalidOpacity { value: self.opacity });
        }
        if sh_degree_from_len(self.sh.len()).is_none() {
            return Err(CoreError::ShShapeMismatch { expected: 1, got: self.sh.len() });
        }
        Ok(())
    }

    pub fn sh_degree(&self) -> usize {
        sh_degree_from_len(self.sh.len()).expect("validated sh length")
    }

    /// Replace the SH block, keeping everything else.
    pub fn with_sh(mut self, sh: Vec<[f64; 3]>) -> Result<Self> {
        self.sh = sh;
        self.validate()?;
        Ok(self)
    }

    pub fn with_opacity(mut self, opacity: f64) -> Result<Self> {
        self.opacity = opacity;
        self.validate()?;
        Ok(self)
    }

    /// The full 4x4 covariance `R * diag(scales^2) * R^T`.
    ///
    /// Assumes the type invariants hold; symmetric PSD by construction.
    pub fn covariance4d(&self) -> Matrix4<f64> {
        let r = self.q_l.left_matrix() * self.q_r.right_matrix();
        let s2 = Vector4::new(
            self.scales[0] * self.scales[0],
            self.scales[1] * self.scales[1],
            self.scales[2] * self.scales[2],
            self.scales[3] * self.scales[3],
        );
        let rs = r * Matrix4::from_diagonal(&s2);
        let cov = rs * r.transpose();
        // Force exact symmetry; the product is symmetric up to rounding.
        0.5 * (cov + cov.transpose())
    }

    /// Temporal variance: the (t, t) entry of the 4x4 covariance.
    pub fn sigma_t(&self) -> f64 {
        let r = self.q_l.left_matrix() * self.q_r.right_matrix();
        let mut acc = 0.0;
        for k in 0..4 {
            let v = r[(3, k)] * self.scales[k];
            acc += v * v;
        }
        acc
    }

    /// Unnormalized temporal opacity `exp(-(t - mu_t)^2 / (2 sigma_t))`.
    ///
    /// Peaks at 1 when `t == mu_t`. Errors when the temporal variance is
    /// degenerate.
    pub fn temporal_opacity(&self, t: f64) -> Result<f64> {
        let sigma_t = self.sigma_t();
        temporal_opacity_with(self.mean[3], sigma_t, t)
    }

    /// Second derivative of the temporal opacity:
    /// `((t - mu_t)^2 / sigma_t^2 - 1 / sigma_t) * p(t)`.
    pub fn temporal_opacity_d2(&self, t: f64) -> Result<f64> {
        let sigma_t = self.sigma_t();
        check_sigma_t(sigma_t)?;
        let dt = t - self.mean[3];
        let p = exp(-(dt * dt) / (2.0 * sigma_t));
        Ok((dt * dt / (sigma_t * sigma_t) - 1.0 / sigma_t) * p)
    }

    /// Condition on a timestamp: 3D mean and covariance of the spatial slice
    /// plus the temporal weight.
    ///
    /// The covariance is identical for every `t`; only the mean moves.
    pub fn condition_at_time(&self, t: f64) -> Result<ConditionalGaussian3D> {
        let cov = self.covariance4d();
        condition_with_cov(&cov, &self.mean, t)
    }

    /// Build a Gaussian whose conditional mean follows
    /// `position + velocity * (t - t_center)` with conditional covariance
    /// `spatial_cov` and temporal standard deviation `sigma_t_std`.
    pub fn from_motion(
        position: Vector3<f64>,
        velocity: Vector3<f64>,
        spatial_cov: Matrix3<f64>,
        t_center: f64,
        sigma_t_std: f64,
    ) -> Result<Self> {
        if !(sigma_t_std > 0.0) {
            return Err(CoreError::Parameter { reason: "sigma_t must be positive" });
        }
        let var_t = sigma_t_std * sigma_t_std;
        // Target covariance in block form: conditioning it back on t yields
        // exactly spatial_cov, and the mean drift per unit time is velocity.
        let mut target = Matrix4::zeros();
        for i in 0..3 {
            for j in 0..3 {
                target[(i, j)] = spatial_cov[(i, j)] + velocity[i] * velocity[j] * var_t;
            }
            target[(i, 3)] = velocity[i] * var_t;
            target[(3, i)] = velocity[i] * var_t;
        }
        target[(3, 3)] = var_t;

        let eigen = nalgebra::linalg::SymmetricEigen::new(target);
        let mut basis = eigen.eigenvectors;
        for k in 0..4 {
            if eigen.eigenvalues[k] <= 0.0 {
                return Err(CoreError::Internal {
                    reason: "assembled motion covariance is not positive definite",
                });
            }
        }
        if basis.determinant() < 0.0 {
            for i in 0..4 {
                basis[(i, 3)] = -basis[(i, 3)];
            }
        }
        let (q_l, q_r) = so4_to_isoclinic(&basis)?;
        let scales = Vector4::new(
            sqrt(eigen.eigenvalues[0]),
            sqrt(eigen.eigenvalues[1]),
            sqrt(eigen.eigenvalues[2]),
            sqrt(eigen.eigenvalues[3]),
        );
        Gaussian4D::new(
            Vector4::new(position[0], position[1], position[2], t_center),
            scales,
            q_l,
            q_r,
            1.0,
            vec![[0.0, 0.0, 0.0]],
        )
    }
}

fn check_sigma_t(sigma_t: f64) -> Result<()> {
    if sigma_t <= EPSILON_SIGMA_T {
        return Err(CoreError::DegenerateTimeVariance { sigma_t });
    }
    Ok(())
}

pub(crate) fn temporal_opacity_with(mu_t: f64, sigma_t: f64, t: f64) -> Result<f64> {
    check_sigma_t(sigma_t)?;
    let dt = t - mu_t;
    Ok(exp(-(dt * dt) / (2.0 * sigma_t)))
}

/// Conditioning given a precomputed covariance; shared with the rasterizer
/// which reuses one covariance per (Gaussian, frame).
pub(crate) fn condition_with_cov(
    cov: &Matrix4<f64>,
    mean: &Vector4<f64>,
    t: f64,
) -> Result<ConditionalGaussian3D> {
    let sigma_t = cov[(3, 3)];
    check_sigma_t(sigma_t)?;
    let cross = Vector3::new(cov[(0, 3)], cov[(1, 3)], cov[(2, 3)]);
    let dt = t - mean[3];
    let mean3 = Vector3::new(mean[0], mean[1], mean[2]) + cross * (dt / sigma_t);
    let mut cov3 = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            cov3[(i, j)] = cov[(i, j)] - cross[i] * cross[j] / sigma_t;
        }
    }
    let weight = exp(-(dt * dt) / (2.0 * sigma_t));
    Ok(ConditionalGaussian3D { mean3, cov3, temporal_weight: weight })
}

fn sh_degree_from_len(len: usize) -> Option<usize> {
    match len {
        1 => Some(0),
        4 => Some(1),
        9 => Some(2),
        16 => Some(3),
        _ => None,
    }
}

/// Number of SH coefficient triples for a degree.
pub fn sh_coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// An ordered collection of 4D Gaussians; list order is the canonical index
/// used by score tables and visibility masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene4D {
    pub gaussians: Vec<Gaussian4D>,
    pub sh_degree: usize,
    pub time_extent: (f64, f64),
    pub frame_count: usize,
}

impl Scene4D {
    pub fn new(
        gaussians: Vec<Gaussian4D>,
        sh_degree: usize,
        time_extent: (f64, f64),
        frame_count: usize,
    ) -> Result<Self> {
        let scene = Scene4D { gaussians, sh_degree, time_extent, frame_count };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sh_degree > 3 {
            return Err(CoreError::Parameter { reason: "sh degree must be 0..=3" });
        }
        if !(self.time_extent.0 < self.time_extent.1) {
            return Err(CoreError::Parameter { reason: "time extent must satisfy t_min < t_max" });
        }
        if self.frame_count == 0 {
            return Err(CoreError::Parameter { reason: "frame count must be at least 1" });
        }
        let expected = sh_coeff_count(self.sh_degree);
        for g in &self.gaussians {
            g.validate()?;
            if g.sh.len() != expected {
                return Err(CoreError::ShShapeMismatch { expected, got: g.sh.len() });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    /// One timestamp per source frame, evenly spaced over the time extent.
    pub fn frame_timestamps(&self) -> Vec<f64> {
        let (t0, t1) = self.time_extent;
        let n = self.frame_count;
        if n == 1 {
            return vec![t0];
        }
        (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
    }
}
