//! Lighting descriptions: the five training lighting categories, their
//! samplers, and equirectangular environment maps.

mod envmap;
mod spec;

pub use envmap::{EnvMap, EnvSample};
pub use spec::{
    sample_lighting, EnvPool, Light, LightingCategory, LightingSpec, AMBIENT_RADIANCE_PER_WATT,
    AREA_EDGE_RANGE, LIGHT_MAX_POLAR_DEG, LIGHT_POWER_RANGE, LIGHT_RADIUS_RANGE,
};
