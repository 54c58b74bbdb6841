//! Sampling rules of the training corpus: viewpoints, per-object lighting
//! slates and the input/output pairing of renders.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraSpec, NormalMode};
use crate::lighting::{sample_lighting, EnvPool, LightingCategory, LightingSpec};
use crate::math::{spherical_y_up, DVec3};
use crate::packing::ColorPermutation;
use crate::rng::Rng;

pub const VIEWS_PER_OBJECT: usize = 4;
pub const ELEVATION_RANGE_DEG: (f64, f64) = (10.0, 90.0);
pub const DISTANCE_RANGE: (f64, f64) = (0.8, 1.1);
pub const FOV_RANGE_DEG: (f64, f64) = (25.0, 30.0);

/// Conditions per category in one object's slate, in category order.
pub const SLATE_COUNTS: [usize; 5] = [3, 1, 3, 2, 3];
pub const SLATE_SIZE: usize = 12;
pub const SMOOTHED_PROBABILITY: f64 = 0.1;

/// Camera placement on the upper hemisphere, looking at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    /// Angle above the horizon, degrees.
    pub elevation: f64,
    /// Degrees from +X towards +Z.
    pub azimuth: f64,
    /// Meters from the origin.
    pub distance: f64,
    /// Vertical field of view, degrees.
    pub vertical_fov: f64,
}

impl ViewSpec {
    pub fn eye(&self) -> DVec3 {
        let polar = (90.0 - self.elevation).to_radians();
        spherical_y_up(polar, self.azimuth.to_radians()) * self.distance
    }

    pub fn camera(&self, width: usize, height: usize) -> CameraSpec {
        let mut cam = CameraSpec::new(self.eye(), DVec3::ZERO, self.vertical_fov, width, height);
        let forward = (cam.look_at - cam.eye).normalize();
        if forward.dot(DVec3::Y).abs() > 0.999 {
            // looking straight down: keep image "up" along the azimuth
            cam.up = -spherical_y_up(PI / 2.0, self.azimuth.to_radians());
        }
        cam
    }

    pub fn in_range(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        within(self.elevation, ELEVATION_RANGE_DEG)
            && within(self.distance, DISTANCE_RANGE)
            && within(self.vertical_fov, FOV_RANGE_DEG)
            && (0.0..360.0).contains(&self.azimuth)
    }
}

/// Four independent views; elevation area-uniform on the cap above 10°.
pub fn sample_viewpoints(rng: &mut Rng) -> [ViewSpec; VIEWS_PER_OBJECT] {
    let sin_lo = ELEVATION_RANGE_DEG.0.to_radians().sin();
    std::array::from_fn(|_| {
        let s = sin_lo + (1.0 - sin_lo) * rng.random::<f64>();
        ViewSpec {
            elevation: s.asin().to_degrees().clamp(ELEVATION_RANGE_DEG.0, ELEVATION_RANGE_DEG.1),
            azimuth: 360.0 * rng.random::<f64>(),
            distance: DISTANCE_RANGE.0 + (DISTANCE_RANGE.1 - DISTANCE_RANGE.0) * rng.random::<f64>(),
            vertical_fov: FOV_RANGE_DEG.0 + (FOV_RANGE_DEG.1 - FOV_RANGE_DEG.0) * rng.random::<f64>(),
        }
    })
}

/// Twelve conditions in category order: 3 point, 1 multi-point,
/// 3 environment, 2 monochrome environment, 3 area.
pub fn assign_lighting_slate(pool: &EnvPool, rng: &mut Rng) -> Result<Vec<LightingSpec>> {
    if pool.is_empty() {
        return Err(Error::EmptyEnvPool);
    }
    let mut slate = Vec::with_capacity(SLATE_SIZE);
    for (category, &n) in LightingCategory::ALL.iter().zip(&SLATE_COUNTS) {
        for _ in 0..n {
            slate.push(sample_lighting(*category, pool, rng)?);
        }
    }
    Ok(slate)
}

/// Category histogram of a slate.
pub fn slate_counts(categories: &[LightingCategory]) -> [usize; 5] {
    let mut counts = [0; 5];
    for c in categories {
        counts[c.index() as usize - 1] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePaths {
    pub input_render: String,
    pub output_render: String,
    pub hints: Vec<String>,
    pub mask: String,
}

/// One dynamically composed training pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub object_id: u32,
    pub view_id: u32,
    pub input_lighting: u32,
    pub output_lighting: u32,
    pub input_category: LightingCategory,
    pub output_category: LightingCategory,
    pub hint_variant: NormalMode,
    pub permutation: ColorPermutation,
    pub paths: SamplePaths,
}

pub fn lighting_dir(object: u32, view: u32, lighting: u32) -> String {
    format!("objects/{object:04}/views/{view}/lighting/{lighting:02}")
}

pub fn hint_file(k: usize, variant: NormalMode) -> String {
    match variant {
        NormalMode::Geometric => format!("hint{k}.pfm"),
        NormalMode::SmoothedDepth => format!("hint{k}.smoothed.pfm"),
    }
}

/// Draws a pair for one object view from its slate of categories.
pub fn compose_training_pair(
    object_id: u32,
    view_id: u32,
    slate: &[LightingCategory],
    hint_count: usize,
    rng: &mut Rng,
) -> Result<SampleRecord> {
    if slate.len() != SLATE_SIZE {
        return Err(Error::MissingRender(format!(
            "object {object_id} view {view_id} has {} of {SLATE_SIZE} renders",
            slate.len()
        )));
    }
    let eligible: Vec<usize> = (0..slate.len())
        .filter(|&i| !slate[i].is_colored_environment())
        .collect();
    if eligible.is_empty() {
        return Err(Error::MissingRender("no render is eligible as an input".into()));
    }
    let input = eligible[rng.random_range(0..eligible.len())];
    let output = rng.random_range(0..slate.len());
    let hint_variant = if rng.random::<f64>() < SMOOTHED_PROBABILITY {
        NormalMode::SmoothedDepth
    } else {
        NormalMode::Geometric
    };
    let permutation = ColorPermutation::ALL[rng.random_range(0..6)];

    let in_dir = lighting_dir(object_id, view_id, input as u32);
    let out_dir = lighting_dir(object_id, view_id, output as u32);
    Ok(SampleRecord {
        object_id,
        view_id,
        input_lighting: input as u32,
        output_lighting: output as u32,
        input_category: slate[input],
        output_category: slate[output],
        hint_variant,
        permutation,
        paths: SamplePaths {
            input_render: format!("{in_dir}/render.pfm"),
            output_render: format!("{out_dir}/render.pfm"),
            hints: (0..hint_count)
                .map(|k| format!("{out_dir}/{}", hint_file(k, hint_variant)))
                .collect(),
            mask: format!("{out_dir}/mask.png"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lighting::EnvMap;
    use crate::rng::rng_from;

    fn pool() -> EnvPool {
        let mut p = EnvPool::new();
        p.insert("e", EnvMap::uniform(8, [1.0, 0.8, 0.6]));
        p
    }

    #[test]
    fn views_in_range() {
        for s in 0..200 {
            let views = sample_viewpoints(&mut rng_from(s, &[]));
            assert_eq!(views.len(), 4);
            assert!(views.iter().all(ViewSpec::in_range));
        }
    }

    #[test]
    fn zenith_view_has_valid_camera() {
        let v = ViewSpec {
            elevation: 90.0,
            azimuth: 30.0,
            distance: 1.0,
            vertical_fov: 27.0,
        };
        v.camera(8, 8).validate().unwrap();
        assert!((v.eye() - DVec3::Y).length() < 1e-12);
    }

    #[test]
    fn default_eye_direction() {
        let v = ViewSpec {
            elevation: 0.0,
            azimuth: 90.0,
            distance: 2.0,
            vertical_fov: 27.0,
        };
        assert!((v.eye() - DVec3::new(0.0, 0.0, 2.0)).length() < 1e-12);
    }

    #[test]
    fn slate_has_exact_counts() {
        let slate = assign_lighting_slate(&pool(), &mut rng_from(4, &[])).unwrap();
        let cats: Vec<_> = slate.iter().map(|s| s.category.unwrap()).collect();
        assert_eq!(slate_counts(&cats), SLATE_COUNTS);
    }

    #[test]
    fn slate_needs_env_pool() {
        assert!(matches!(
            assign_lighting_slate(&EnvPool::new(), &mut rng_from(4, &[])),
            Err(Error::EmptyEnvPool)
        ));
    }

    #[test]
    fn pair_rejects_incomplete_slate() {
        let slate = [LightingCategory::Point; 5];
        assert!(matches!(
            compose_training_pair(0, 0, &slate, 4, &mut rng_from(1, &[])),
            Err(Error::MissingRender(_))
        ));
    }

    #[test]
    fn pair_paths_follow_layout() {
        let slate: Vec<_> = LightingCategory::ALL
            .iter()
            .zip(SLATE_COUNTS)
            .flat_map(|(&c, n)| std::iter::repeat_n(c, n))
            .collect();
        let r = compose_training_pair(3, 2, &slate, 4, &mut rng_from(5, &[])).unwrap();
        assert!(r.paths.output_render.starts_with("objects/0003/views/2/lighting/"));
        assert_eq!(r.paths.hints.len(), 4);
        assert!(!r.input_category.is_colored_environment());
        assert_eq!(r.output_category, slate[r.output_lighting as usize]);
    }
}
