use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::DVec3;

/// Pinhole camera. Camera space follows the usual computer-vision layout:
/// +X right, +Y down, +Z forward. Pixel `(i, j)` covers
/// `[i, i + 1) × [j, j + 1)` in continuous image coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub eye: DVec3,
    pub look_at: DVec3,
    pub up: DVec3,
    /// Vertical field of view, degrees.
    pub vertical_fov: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct CameraBasis {
    pub right: DVec3,
    pub down: DVec3,
    pub forward: DVec3,
}

impl CameraSpec {
    pub fn new(eye: DVec3, look_at: DVec3, vertical_fov: f64, width: usize, height: usize) -> Self {
        CameraSpec {
            eye,
            look_at,
            up: DVec3::Y,
            vertical_fov,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 90.0) {
            return Err(Error::InvalidCamera(format!(
                "vertical fov {}° outside (0°, 90°)",
                self.vertical_fov
            )));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidCamera(format!(
                "image size {}x{} below 2x2",
                self.width, self.height
            )));
        }
        let view = self.look_at - self.eye;
        if !view.is_finite() || view.length() < 1e-12 {
            return Err(Error::InvalidCamera("eye coincides with look-at".into()));
        }
        if self.up.length() < 1e-12 || view.normalize().cross(self.up.normalize()).length() < 1e-6
        {
            return Err(Error::InvalidCamera("up is parallel to the view direction".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = (self.look_at - self.eye).normalize();
        let right = forward.cross(self.up).normalize();
        let down = forward.cross(right);
        CameraBasis {
            right,
            down,
            forward,
        }
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.vertical_fov.to_radians()).tan()
    }

    /// Camera-space direction (with z = 1) through continuous pixel coordinates.
    pub fn camera_ray(&self, x: f64, y: f64) -> DVec3 {
        let f = self.focal_px();
        DVec3::new(
            (x - 0.5 * self.width as f64) / f,
            (y - 0.5 * self.height as f64) / f,
            1.0,
        )
    }

    /// Unit world-space direction through continuous pixel coordinates.
    pub fn world_ray(&self, x: f64, y: f64) -> DVec3 {
        self.camera_to_world_dir(self.camera_ray(x, y)).normalize()
    }

    pub fn camera_to_world_dir(&self, d: DVec3) -> DVec3 {
        let b = self.basis();
        b.right * d.x + b.down * d.y + b.forward * d.z
    }

    pub fn camera_to_world(&self, p: DVec3) -> DVec3 {
        self.eye + self.camera_to_world_dir(p)
    }

    pub fn world_to_camera(&self, p: DVec3) -> DVec3 {
        let b = self.basis();
        let d = p - self.eye;
        DVec3::new(d.dot(b.right), d.dot(b.down), d.dot(b.forward))
    }

    /// Projects a world point to continuous pixel coordinates and z-depth.
    /// Returns `None` for points behind the camera.
    pub fn project(&self, p: DVec3) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        let f = self.focal_px();
        Some((
            c.x / c.z * f + 0.5 * self.width as f64,
            c.y / c.z * f + 0.5 * self.height as f64,
            c.z,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraSpec {
        CameraSpec::new(DVec3::new(0.3, 0.8, 1.5), DVec3::ZERO, 27.0, 64, 48)
    }

    #[test]
    fn basis_is_right_handed_and_down_points_down() {
        let c = CameraSpec::new(DVec3::new(0.0, 0.0, 2.0), DVec3::ZERO, 25.0, 8, 8);
        let b = c.basis();
        assert!((b.right - DVec3::X).length() < 1e-12);
        assert!((b.down + DVec3::Y).length() < 1e-12);
        assert!((b.right.cross(b.down) - b.forward).length() < 1e-12);
    }

    #[test]
    fn project_inverts_world_ray() {
        let c = cam();
        let d = c.camera_ray(10.25, 31.5) * 1.7;
        let (x, y, z) = c.project(c.camera_to_world(d)).unwrap();
        assert!((x - 10.25).abs() < 1e-9 && (y - 31.5).abs() < 1e-9 && (z - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_cameras() {
        let mut c = cam();
        c.vertical_fov = 90.0;
        assert!(c.validate().is_err());
        let mut c = cam();
        c.width = 1;
        assert!(c.validate().is_err());
        let c = CameraSpec::new(DVec3::new(0.0, 2.0, 0.0), DVec3::ZERO, 25.0, 8, 8);
        assert!(c.validate().is_err());
        assert!(cam().validate().is_ok());
    }
}
