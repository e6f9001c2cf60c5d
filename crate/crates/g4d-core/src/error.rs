use thiserror::Error;

/// Errors raised by the core model and algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// A rotor quaternion is not unit-norm within tolerance.
    #[error("invalid rotor: quaternion norm {norm} deviates from 1 beyond 1e-6")]
    InvalidRotor { norm: f64 },

    /// A 4x4 matrix fed to the isoclinic factorization is not a proper rotation.
    #[error("invalid rotation: {reason}")]
    InvalidRotation { reason: &'static str },

    /// Temporal variance fell below the degeneracy threshold.
    #[error("degenerate temporal variance {sigma_t} (threshold 1e-12)")]
    DegenerateTimeVariance { sigma_t: f64 },

    /// A Gaussian scale is non-positive.
    #[error("non-positive scale {value}")]
    NonPositiveScale { value: f64 },

    /// Opacity outside (0, 1].
    #[error("opacity {value} outside (0, 1]")]
    InvalidOpacity { value: f64 },

    /// SH coefficient count does not match the declared degree.
    #[error("sh shape mismatch: expected {expected} coefficients, got {got}")]
    ShShapeMismatch { expected: usize, got: usize },

    /// Score/scene arrays with incompatible lengths.
    #[error("alignment error: {reason}")]
    Alignment { reason: &'static str },

    /// Scene and mask set built for different Gaussian counts.
    #[error("scene/mask incompatibility: scene has {scene} Gaussians, masks built for {masks}")]
    SceneMaskMismatch { scene: usize, masks: usize },

    /// An argument outside its documented range.
    #[error("parameter error: {reason}")]
    Parameter { reason: &'static str },

    /// An internal invariant that cannot fail by construction did.
    #[error("internal error: {reason}")]
    Internal { reason: &'static str },
}
