use serde::{Deserialize, Serialize};

use crate::math::{Ray, Vec3};

/// Pinhole camera description as it appears in scene files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDescription {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub vfov_degrees: f64,
}

fn default_up() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half: f64,
}

impl Camera {
    pub fn new(desc: &CameraDescription) -> Result<Self, String> {
        let forward = desc.look_at - desc.position;
        if !(forward.length() > 0.0) {
            return Err("camera position and look_at coincide".into());
        }
        let forward = forward.normalize();
        let right = forward.cross(desc.up);
        if !(right.length() > 1e-9) {
            return Err("camera up vector is parallel to the view direction".into());
        }
        let right = right.normalize();
        if !(desc.vfov_degrees > 0.0 && desc.vfov_degrees < 180.0) {
            return Err(format!("vfov_degrees must lie in (0, 180), got {}", desc.vfov_degrees));
        }
        Ok(Camera {
            position: desc.position,
            forward,
            right,
            up: right.cross(forward),
            tan_half: (desc.vfov_degrees.to_radians() / 2.0).tan(),
        })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    /// Ray through the center of pixel `(x, y)`; `y = 0` is the top row.
    pub fn ray(&self, x: usize, y: usize, width: usize, height: usize) -> Ray {
        let aspect = width as f64 / height as f64;
        let sx = (2.0 * (x as f64 + 0.5) / width as f64 - 1.0) * aspect * self.tan_half;
        let sy = (1.0 - 2.0 * (y as f64 + 0.5) / height as f64) * self.tan_half;
        Ray::new(
            self.position,
            (self.forward + self.right * sx + self.up * sy).normalize(),
        )
    }
}
