//! Shared random-input generators for the unit tests.

use alloc::vec;
use nalgebra::{Vector3, Vector4};
use rand::Rng;

use crate::gaussian::Gaussian4D;
use crate::rotor::Quat;

pub(crate) fn random_unit_quat(rng: &mut impl Rng) -> Quat {
    loop {
        let q = Quat::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if q.norm() > 0.1 {
            return q.normalized();
        }
    }
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 {
            return v / n;
        }
    }
}

/// A random valid Gaussian with a healthy temporal variance.
pub(crate) fn random_gaussian(rng: &mut impl Rng) -> Gaussian4D {
    let mean = Vector4::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(0.0..1.0),
    );
    let scales = Vector4::new(
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
    );
    Gaussian4D::new(
        mean,
        scales,
        random_unit_quat(rng),
        random_unit_quat(rng),
        rng.random_range(0.05..1.0),
        vec![[0.0; 3]],
    )
    .unwrap()
}
