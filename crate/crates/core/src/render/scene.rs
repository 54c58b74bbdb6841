use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;

use crate::brdf::DisneyParams;
use crate::error::Result;
use crate::geometry::ProxyMesh;
use crate::lighting::{EnvMap, EnvPool, Light, LightingSpec};
use crate::math::{uniform_sphere, DVec2, DVec3, Frame, UNIFORM_SPHERE_PDF};
use crate::render::bvh::{Bvh, Ray, TriHit};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug)]
pub struct PointLight {
    pub position: DVec3,
    /// Radiant intensity, W/sr per channel.
    pub intensity: DVec3,
}

#[derive(Clone, Copy, Debug)]
pub struct AreaLight {
    pub center: DVec3,
    pub normal: DVec3,
    pub tangent: DVec3,
    pub bitangent: DVec3,
    pub half_edge: f64,
    pub area: f64,
    pub radiance: DVec3,
}

impl AreaLight {
    pub fn intersect(&self, ray: &Ray, tmax: f64) -> Option<(f64, bool)> {
        let denom = ray.dir.dot(self.normal);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = (self.center - ray.origin).dot(self.normal) / denom;
        if !(t > 0.0 && t < tmax) {
            return None;
        }
        let d = ray.origin + ray.dir * t - self.center;
        if d.dot(self.tangent).abs() > self.half_edge || d.dot(self.bitangent).abs() > self.half_edge {
            return None;
        }
        // front side faces along the normal
        Some((t, denom < 0.0))
    }

    pub fn sample_point(&self, rng: &mut Rng) -> DVec3 {
        let a = (2.0 * rng.random::<f64>() - 1.0) * self.half_edge;
        let b = (2.0 * rng.random::<f64>() - 1.0) * self.half_edge;
        self.center + self.tangent * a + self.bitangent * b
    }

    /// Solid-angle density of uniform area sampling, seen from a point at
    /// `dist` along a direction making `cos_light` with the emitter normal.
    pub fn solid_angle_pdf(&self, dist: f64, cos_light: f64) -> f64 {
        dist * dist / (self.area * cos_light)
    }
}

#[derive(Clone, Debug)]
pub enum InfiniteLight {
    Uniform(DVec3),
    Map {
        map: Arc<EnvMap>,
        rotation: f64,
        scale: f64,
    },
}

impl InfiniteLight {
    pub fn radiance(&self, dir: DVec3) -> DVec3 {
        match self {
            InfiniteLight::Uniform(l) => *l,
            InfiniteLight::Map { map, rotation, scale } => map.eval(dir, *rotation) * *scale,
        }
    }

    /// Constant radiance is already matched by BRDF sampling, so under MIS
    /// these lights are reached by BRDF rays alone.
    pub fn brdf_sampled_only(&self) -> bool {
        matches!(self, InfiniteLight::Uniform(_))
    }

    pub fn sample(&self, rng: &mut Rng) -> (DVec3, f64) {
        match self {
            InfiniteLight::Uniform(_) => (
                uniform_sphere(DVec2::new(rng.random(), rng.random())),
                UNIFORM_SPHERE_PDF,
            ),
            InfiniteLight::Map { map, rotation, .. } => {
                let s = map.sample(*rotation, rng);
                (s.direction, s.pdf)
            }
        }
    }

    pub fn pdf(&self, dir: DVec3) -> f64 {
        match self {
            InfiniteLight::Uniform(_) => UNIFORM_SPHERE_PDF,
            InfiniteLight::Map { map, rotation, .. } => map.pdf(dir, *rotation),
        }
    }
}

/// Lighting resolved against an environment pool, ready for rendering.
#[derive(Clone, Debug, Default)]
pub struct SceneLights {
    pub points: Vec<PointLight>,
    pub areas: Vec<AreaLight>,
    pub infinite: Vec<InfiniteLight>,
}

impl SceneLights {
    pub fn resolve(spec: &LightingSpec, pool: &EnvPool) -> Result<Self> {
        spec.validate()?;
        let mut out = SceneLights::default();
        let mut mono_cache: HashMap<&str, Arc<EnvMap>> = HashMap::new();
        for light in &spec.lights {
            match light {
                Light::Point { position, power, color } => out.points.push(PointLight {
                    position: *position,
                    intensity: *color * (*power / (4.0 * PI)),
                }),
                Light::Area {
                    center,
                    normal,
                    edge_length,
                    power,
                    color,
                } => {
                    let frame = Frame::from_normal(normal.normalize());
                    let area = edge_length * edge_length;
                    out.areas.push(AreaLight {
                        center: *center,
                        normal: frame.normal,
                        tangent: frame.tangent,
                        bitangent: frame.bitangent,
                        half_edge: 0.5 * edge_length,
                        area,
                        radiance: *color * (*power / (PI * area)),
                    });
                }
                Light::Environment {
                    map,
                    rotation,
                    monochrome,
                    scale,
                } => {
                    let base = pool.get(map)?;
                    let resolved = if *monochrome {
                        mono_cache
                            .entry(map.as_str())
                            .or_insert_with(|| Arc::new(base.to_monochrome()))
                            .clone()
                    } else {
                        base.clone()
                    };
                    out.infinite.push(InfiniteLight::Map {
                        map: resolved,
                        rotation: *rotation,
                        scale: *scale,
                    });
                }
                Light::UniformAmbient { radiance } => {
                    out.infinite.push(InfiniteLight::Uniform(*radiance))
                }
            }
        }
        Ok(out)
    }

    pub fn background(&self, dir: DVec3) -> DVec3 {
        self.infinite.iter().map(|l| l.radiance(dir)).sum()
    }
}

pub(crate) struct MeshGeometry<'a> {
    pub mesh: &'a ProxyMesh,
    pub bvh: Bvh,
}

/// Everything the integrator needs: geometry, one homogeneous material and
/// resolved lights. The mesh is optional so empty scenes can be traced.
pub struct Scene<'a> {
    pub(crate) geometry: Option<MeshGeometry<'a>>,
    pub material: DisneyParams,
    pub lights: SceneLights,
}

pub(crate) enum SceneHit {
    Surface(TriHit),
    Emitter { light: usize, t: f64, front: bool },
}

impl<'a> Scene<'a> {
    pub fn new(mesh: Option<&'a ProxyMesh>, material: DisneyParams, lights: SceneLights) -> Self {
        Scene {
            geometry: mesh.map(|mesh| MeshGeometry {
                mesh,
                bvh: Bvh::build(mesh),
            }),
            material,
            lights,
        }
    }

    pub(crate) fn intersect(&self, ray: &Ray) -> Option<SceneHit> {
        let mut tmax = f64::INFINITY;
        let mut hit = None;
        if let Some(g) = &self.geometry {
            if let Some(h) = g.bvh.intersect(ray, tmax) {
                tmax = h.t;
                hit = Some(SceneHit::Surface(h));
            }
        }
        for (i, a) in self.lights.areas.iter().enumerate() {
            if let Some((t, front)) = a.intersect(ray, tmax) {
                tmax = t;
                hit = Some(SceneHit::Emitter { light: i, t, front });
            }
        }
        hit
    }

    /// True if anything blocks the segment `[0, tmax)`; area emitter `skip`
    /// is ignored.
    pub(crate) fn occluded(&self, ray: &Ray, tmax: f64, skip: Option<usize>) -> bool {
        if let Some(g) = &self.geometry {
            if g.bvh.occluded(ray, tmax) {
                return true;
            }
        }
        self.lights
            .areas
            .iter()
            .enumerate()
            .any(|(i, a)| Some(i) != skip && a.intersect(ray, tmax).is_some())
    }
}
