use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::CameraSpec;
use crate::image::{read_gray_png, write_gray_png, Pfm};
use crate::math::DVec3;

/// Coverage at or above which a pixel counts as foreground for meshing.
pub const MASK_THRESHOLD: f32 = 0.5;

/// Per-pixel z-depth in meters along the camera forward axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), width * height);
        DepthMap {
            width,
            height,
            values,
        }
    }

    pub fn constant(width: usize, height: usize, depth: f32) -> Self {
        Self::new(width, height, vec![depth; width * height])
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        let d = self.values[i];
        d.is_finite() && d > 0.0
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Reads a single-channel PFM; for three-channel files the first channel
    /// is used.
    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Self> {
        let pfm = Pfm::read(path.as_ref())?;
        let values = pfm.data.iter().step_by(pfm.channels).copied().collect();
        Ok(DepthMap::new(pfm.width, pfm.height, values))
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        Pfm {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.values.clone(),
        }
        .write(path.as_ref())
    }
}

/// Per-pixel foreground coverage in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ForegroundMask {
    pub width: usize,
    pub height: usize,
    pub coverage: Vec<f32>,
}

impl ForegroundMask {
    pub fn new(width: usize, height: usize, coverage: Vec<f32>) -> Self {
        assert_eq!(coverage.len(), width * height);
        let coverage = coverage
            .into_iter()
            .map(|c| if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) })
            .collect();
        ForegroundMask {
            width,
            height,
            coverage,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![1.0; width * height])
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height])
    }

    #[inline]
    pub fn is_foreground(&self, i: usize) -> bool {
        self.coverage[i] >= MASK_THRESHOLD
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let (w, h, data) = read_gray_png(path)?;
        Ok(Self::new(
            w,
            h,
            data.into_iter().map(|v| v as f32 / 255.0).collect(),
        ))
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self
            .coverage
            .iter()
            .map(|&c| (c * 255.0).round() as u8)
            .collect();
        write_gray_png(path, self.width, self.height, &bytes)
    }
}

/// Back-projected foreground pixels, in camera space.
#[derive(Clone, Debug)]
pub struct PointGrid {
    pub width: usize,
    pub height: usize,
    pub camera: CameraSpec,
    pub points: Vec<Option<DVec3>>,
}

impl PointGrid {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<DVec3> {
        self.points[y * self.width + x]
    }

    pub fn world_point(&self, x: usize, y: usize) -> Option<DVec3> {
        self.get(x, y).map(|p| self.camera.camera_to_world(p))
    }

    pub fn foreground_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }
}

/// Lifts every foreground pixel centre to its z-depth along the pinhole ray.
pub fn backproject(depth: &DepthMap, mask: &ForegroundMask, camera: &CameraSpec) -> Result<PointGrid> {
    if (depth.width, depth.height) != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: (depth.width, depth.height),
            found: mask.dims(),
        });
    }
    if (camera.width, camera.height) != (depth.width, depth.height) {
        return Err(Error::DimensionMismatch {
            expected: (camera.width, camera.height),
            found: (depth.width, depth.height),
        });
    }
    camera.validate()?;
    let mut points = vec![None; depth.width * depth.height];
    for y in 0..depth.height {
        for x in 0..depth.width {
            let i = y * depth.width + x;
            if !mask.is_foreground(i) {
                continue;
            }
            if !depth.is_valid(i) {
                return Err(Error::InvalidDepth {
                    x,
                    y,
                    depth: depth.values[i],
                });
            }
            let ray = camera.camera_ray(x as f64 + 0.5, y as f64 + 0.5);
            points[i] = Some(ray * depth.values[i] as f64);
        }
    }
    Ok(PointGrid {
        width: depth.width,
        height: depth.height,
        camera: *camera,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera(w: usize, h: usize, fov: f64) -> CameraSpec {
        CameraSpec::new(DVec3::new(0.0, 0.0, 3.0), DVec3::ZERO, fov, w, h)
    }

    #[test]
    fn centre_pixel_lies_on_axis() {
        let depth = DepthMap::constant(5, 5, 2.0);
        let grid = backproject(&depth, &ForegroundMask::full(5, 5), &camera(5, 5, 25.0)).unwrap();
        assert_eq!(grid.get(2, 2), Some(DVec3::new(0.0, 0.0, 2.0)));
    }

    #[test]
    fn background_pixels_are_absent() {
        let depth = DepthMap::constant(4, 4, 1.0);
        let grid = backproject(&depth, &ForegroundMask::empty(4, 4), &camera(4, 4, 25.0)).unwrap();
        assert_eq!(grid.foreground_count(), 0);
    }

    #[test]
    fn constant_depth_is_coplanar() {
        // analytic pinhole oracle: x = (u - W/2) z / f with f = (H/2) / tan(fov/2)
        let depth = DepthMap::constant(3, 3, 1.0);
        let grid = backproject(&depth, &ForegroundMask::full(3, 3), &camera(3, 3, 25.0)).unwrap();
        let f = 1.5 / (12.5f64.to_radians()).tan();
        for y in 0..3 {
            for x in 0..3 {
                let p = grid.get(x, y).unwrap();
                assert!((p.z - 1.0).abs() < 1e-6);
                assert!((p.x - (x as f64 + 0.5 - 1.5) / f).abs() < 1e-12);
                assert!((p.y - (y as f64 + 0.5 - 1.5) / f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors_on_mismatch_and_bad_depth() {
        let depth = DepthMap::constant(4, 4, 1.0);
        let err = backproject(&depth, &ForegroundMask::full(4, 3), &camera(4, 4, 25.0));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));

        let mut bad = DepthMap::constant(4, 4, 1.0);
        bad.values[5] = 0.0;
        let err = backproject(&bad, &ForegroundMask::full(4, 4), &camera(4, 4, 25.0));
        assert!(matches!(err, Err(Error::InvalidDepth { x: 1, y: 1, .. })));

        // invalid depth in the background is fine
        let mut mask = ForegroundMask::full(4, 4);
        mask.coverage[5] = 0.2;
        assert!(backproject(&bad, &mask, &camera(4, 4, 25.0)).is_ok());
    }

    #[test]
    fn mask_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = ForegroundMask::new(3, 1, vec![0.0, 1.0, 2.0]);
        mask.write_png(&path).unwrap();
        let back = ForegroundMask::read_png(&path).unwrap();
        assert_eq!(back.coverage, vec![0.0, 1.0, 1.0]);
    }
}
