//! Parameterized synthetic dynamic scenes.
//!
//! Stands in for trained checkpoints: a configurable mix of static Gaussians
//! (large temporal variance), moving ones (medium variance, sampled
//! velocity) and short-lifespan "flicker" chains whose members tile a
//! trajectory in time, overlapping at the half-height of their temporal
//! support. Generation is fully deterministic for a fixed seed.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::camera::Camera;
use crate::error::CoreError;
use crate::gaussian::{sh_coeff_count, Gaussian4D, Scene4D};
use crate::mathx::{cos, sin, sqrt, tan};
use crate::rotor::Quat;
use crate::sh::rgb_to_sh_dc;
use crate::Result;

/// Generator parameters. Temporal variance ranges are over the covariance's
/// (t, t) entry and must be ordered static > moving > flicker.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_static: usize,
    pub n_moving: usize,
    pub n_flicker: usize,
    pub frame_count: usize,
    pub time_extent: (f64, f64),
    pub box_min: [f64; 3],
    pub box_max: [f64; 3],
    /// Temporal variance range of the static class.
    pub sigma_t_static: (f64, f64),
    pub sigma_t_moving: (f64, f64),
    pub sigma_t_flicker: (f64, f64),
    /// Per-axis spatial standard deviation range.
    pub spatial_sigma: (f64, f64),
    /// Velocity magnitude range for the moving class (world units per unit
    /// time); flicker chains ride the same trajectories.
    pub velocity: (f64, f64),
    pub sh_degree: usize,
    /// Ring rig: camera count, ring radius, height offset above the box
    /// center, image size and full horizontal field of view.
    pub cameras: usize,
    pub camera_radius: f64,
    pub camera_height: f64,
    pub image_size: (u32, u32),
    pub fov_deg: f64,
}

impl Default for SceneSpec {
    /// The desk-scale default: 5000 Gaussians, 8 cameras at 128x128,
    /// 60 frames.
    fn default() -> Self {
        SceneSpec {
            seed: 7,
            n_static: 1500,
            n_moving: 1500,
            n_flicker: 2000,
            frame_count: 60,
            time_extent: (0.0, 1.0),
            box_min: [-1.0, -1.0, -1.0],
            box_max: [1.0, 1.0, 1.0],
            sigma_t_static: (4.0, 8.0),
            sigma_t_moving: (0.3, 1.0),
            sigma_t_flicker: (0.0004, 0.01),
            spatial_sigma: (0.02, 0.08),
            velocity: (0.2, 1.0),
            sh_degree: 1,
            cameras: 8,
            camera_radius: 6.0,
            camera_height: 1.5,
            image_size: (128, 128),
            fov_deg: 40.0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_static + self.n_moving + self.n_flicker == 0 {
            return Err(CoreError::Parameter { reason: "scene spec needs at least one Gaussian" });
        }
        if self.frame_count == 0 {
            return Err(CoreError::Parameter { reason: "frame count must be at least 1" });
        }
        if !(self.time_extent.0 < self.time_extent.1) {
            return Err(CoreError::Parameter { reason: "time extent must satisfy t_min < t_max" });
        }
        for (lo, hi) in [
            self.sigma_t_static,
            self.sigma_t_moving,
            self.sigma_t_flicker,
            self.spatial_sigma,
            self.velocity,
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(CoreError::Parameter { reason: "ranges must be positive with lo <= hi" });
            }
        }
        if !(self.sigma_t_static.0 > self.sigma_t_moving.1
            && self.sigma_t_moving.0 > self.sigma_t_flicker.1)
        {
            return Err(CoreError::Parameter {
                reason: "temporal variance ranges must be ordered static > moving > flicker",
            });
        }
        if (0..3).any(|i| !(self.box_min[i] < self.box_max[i])) {
            return Err(CoreError::Parameter { reason: "spatial box is degenerate" });
        }
        if self.cameras == 0 || self.camera_radius <= 0.0 {
            return Err(CoreError::Parameter { reason: "camera ring needs count and radius" });
        }
        if self.sh_degree > 3 {
            return Err(CoreError::Parameter { reason: "sh degree must be 0..=3" });
        }
        if !(self.fov_deg > 1.0 && self.fov_deg < 179.0) {
            return Err(CoreError::Parameter { reason: "fov must lie in (1, 179) degrees" });
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_static + self.n_moving + self.n_flicker
    }

    fn box_center(&self) -> Vector3<f64> {
        Vector3::new(
            0.5 * (self.box_min[0] + self.box_max[0]),
            0.5 * (self.box_min[1] + self.box_max[1]),
            0.5 * (self.box_min[2] + self.box_max[2]),
        )
    }

    /// The deterministic camera ring: evenly spaced, all looking at the box
    /// center.
    pub fn camera_ring(&self) -> Result<Vec<Camera>> {
        self.validate()?;
        let center = self.box_center();
        let (w, h) = self.image_size;
        let half_fov = self.fov_deg.to_radians() / 2.0;
        let fx = w as f64 / (2.0 * tan(half_fov));
        let mut cams = Vec::with_capacity(self.cameras);
        for i in 0..self.cameras {
            let theta = core::f64::consts::TAU * i as f64 / self.cameras as f64;
            let eye = center
                + Vector3::new(
                    self.camera_radius * cos(theta),
                    self.camera_height,
                    self.camera_radius * sin(theta),
                );
            cams.push(Camera::look_at(w, h, fx, fx, eye, center)?);
        }
        Ok(cams)
    }
}

fn sample_range(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn sample_box(rng: &mut impl Rng, spec: &SceneSpec) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(spec.box_min[0]..spec.box_max[0]),
        rng.random_range(spec.box_min[1]..spec.box_max[1]),
        rng.random_range(spec.box_min[2]..spec.box_max[2]),
    )
}

fn random_spd(rng: &mut impl Rng, sigma_range: (f64, f64)) -> Matrix3<f64> {
    let axis: Vector3<f64> = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 {
            break v / n;
        }
    };
    let angle: f64 = rng.random_range(0.0..core::f64::consts::PI);
    let q = Quat::new(
        cos(angle / 2.0),
        axis[0] * sin(angle / 2.0),
        axis[1] * sin(angle / 2.0),
        axis[2] * sin(angle / 2.0),
    );
    let rot = q.to_rotation3();
    let d = Matrix3::from_diagonal(&Vector3::new(
        {
            let s = sample_range(rng, sigma_range);
            s * s
        },
        {
            let s = sample_range(rng, sigma_range);
            s * s
        },
        {
            let s = sample_range(rng, sigma_range);
            s * s
        },
    ));
    rot * d * rot.transpose()
}

fn random_sh(rng: &mut impl Rng, degree: usize) -> Vec<[f64; 3]> {
    let mut sh = vec![[0.0f64; 3]; sh_coeff_count(degree)];
    sh[0] = rgb_to_sh_dc([
        rng.random_range(0.05..0.95),
        rng.random_range(0.05..0.95),
        rng.random_range(0.05..0.95),
    ]);
    for band in sh.iter_mut().skip(1) {
        for c in band.iter_mut() {
            *c = rng.random_range(-0.1..0.1);
        }
    }
    sh
}

fn random_velocity(rng: &mut impl Rng, spec: &SceneSpec) -> Vector3<f64> {
    let dir: Vector3<f64> = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 {
            break v / n;
        }
    };
    dir * sample_range(rng, spec.velocity)
}

/// Generate a scene and its camera ring.
///
/// Class proportions match the spec exactly; every Gaussian satisfies the
/// model invariants by construction.
pub fn generate_scene(spec: &SceneSpec) -> Result<(Scene4D, Vec<Camera>)> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let (t0, t1) = spec.time_extent;
    let extent = t1 - t0;
    let mut gaussians = Vec::with_capacity(spec.total());

    for _ in 0..spec.n_static {
        let var_t = sample_range(&mut rng, spec.sigma_t_static);
        let g = Gaussian4D::from_motion(
            sample_box(&mut rng, spec),
            Vector3::zeros(),
            random_spd(&mut rng, spec.spatial_sigma),
            t0 + extent * rng.random_range(0.25..0.75),
            sqrt(var_t),
        )?
        .with_opacity(rng.random_range(0.6..1.0))?
        .with_sh(random_sh(&mut rng, spec.sh_degree))?;
        gaussians.push(g);
    }

    for _ in 0..spec.n_moving {
        let var_t = sample_range(&mut rng, spec.sigma_t_moving);
        let g = Gaussian4D::from_motion(
            sample_box(&mut rng, spec),
            random_velocity(&mut rng, spec),
            random_spd(&mut rng, spec.spatial_sigma),
            t0 + extent * rng.random_range(0.25..0.75),
            sqrt(var_t),
        )?
        .with_opacity(rng.random_range(0.6..1.0))?
        .with_sh(random_sh(&mut rng, spec.sh_degree))?;
        gaussians.push(g);
    }

    // Flicker chains: short-lived Gaussians tiling a trajectory, consecutive
    // temporal supports meeting at the p = 0.5 level.
    let mut remaining = spec.n_flicker;
    while remaining > 0 {
        let var_t = sample_range(&mut rng, spec.sigma_t_flicker);
        let half_width = sqrt(2.0 * core::f64::consts::LN_2 * var_t);
        let base = sample_box(&mut rng, spec);
        let velocity = random_velocity(&mut rng, spec);
        let cov = random_spd(&mut rng, spec.spatial_sigma);
        let sh = random_sh(&mut rng, spec.sh_degree);
        let opacity = rng.random_range(0.6..1.0);
        let chain_len = ((extent / (2.0 * half_width)) as usize).clamp(1, remaining);
        for k in 0..chain_len {
            let t_center = (t0 + half_width + 2.0 * half_width * k as f64).min(t1);
            let position = base + velocity * (t_center - 0.5 * (t0 + t1));
            let g = Gaussian4D::from_motion(position, velocity, cov, t_center, sqrt(var_t))?
                .with_opacity(opacity)?
                .with_sh(sh.clone())?;
            gaussians.push(g);
        }
        remaining -= chain_len;
    }

    let scene = Scene4D::new(gaussians, spec.sh_degree, spec.time_extent, spec.frame_count)?;
    let cameras = spec.camera_ring()?;
    Ok((scene, cameras))
}
