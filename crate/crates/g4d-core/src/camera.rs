//! Pinhole camera with a rigid world-to-camera transform.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::CoreError;
use crate::Result;

/// Pinhole camera; camera space is x-right, y-down, z-forward, depth is the
/// camera-space z coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Rigid transform; upper-left 3x3 must be a rotation.
    pub world_to_camera: Matrix4<f64>,
}

impl Camera {
    pub fn new(
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        world_to_camera: Matrix4<f64>,
    ) -> Result<Self> {
        let cam = Camera { width, height, fx, fy, cx, cy, world_to_camera };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CoreError::Parameter { reason: "focal lengths must be positive" });
        }
        if self.width == 0 || self.height == 0 || self.width > 4096 || self.height > 4096 {
            return Err(CoreError::Parameter { reason: "image size must be in 1..=4096" });
        }
        let r = self.rotation();
        let gram = r.transpose() * r;
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((gram[(i, j)] - target).abs());
            }
        }
        if err > 1e-6 {
            return Err(CoreError::Parameter { reason: "rotation block is not orthogonal" });
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_to_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(
            self.world_to_camera[(0, 3)],
            self.world_to_camera[(1, 3)],
            self.world_to_camera[(2, 3)],
        )
    }

    /// World-space point to camera space.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    /// Camera looking from `eye` towards `target`, up hint (0, 1, 0) unless
    /// nearly collinear with the view direction.
    pub fn look_at(
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        eye: Vector3<f64>,
        target: Vector3<f64>,
    ) -> Result<Self> {
        let forward = (target - eye).normalize();
        let up_hint = if forward[1].abs() > 0.99 {
            Vector3::new(1.0, 0.0, 0.0)
        } else {
            Vector3::new(0.0, 1.0, 0.0)
        };
        let right = up_hint.cross(&forward).normalize();
        let down = forward.cross(&right);
        let mut w2c = Matrix4::identity();
        for j in 0..3 {
            w2c[(0, j)] = right[j];
            w2c[(1, j)] = down[j];
            w2c[(2, j)] = forward[j];
        }
        let t = Vector3::new(-right.dot(&eye), -down.dot(&eye), -forward.dot(&eye));
        w2c[(0, 3)] = t[0];
        w2c[(1, 3)] = t[1];
        w2c[(2, 3)] = t[2];
        Camera::new(width, height, fx, fy, width as f64 / 2.0, height as f64 / 2.0, w2c)
    }
}
