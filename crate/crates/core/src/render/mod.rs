//! Deterministic tile-parallel path tracing of proxy meshes, radiance-hint
//! sets and environment backplates.
//!
//! Every pixel draws from its own generator streams derived from
//! `(seed, pixel index)`, so an image is bit-identical for a given seed no
//! matter how tiles are scheduled or how many threads run.

mod bvh;
mod integrator;
mod scene;

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bvh::{Bvh, Ray, TriHit};
pub use integrator::LightStrategy;
pub use scene::{AreaLight, InfiniteLight, PointLight, Scene, SceneLights};

use crate::brdf::{hint_materials, DisneyParams};
use crate::error::{Error, Result};
use crate::geometry::{CameraSpec, ProxyMesh};
use crate::image::HdrImage;
use crate::lighting::EnvMap;
use crate::math::to_rgb_f32;
use crate::packing::RadianceHintSet;
use crate::rng::rng_from;
use integrator::{PathStats, Tracer};

const MAX_NAN_RETRIES: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub samples_per_pixel: u32,
    pub max_bounces: usize,
    pub seed: u64,
    /// Cap on the largest channel of any indirect contribution.
    pub clamp_indirect: f64,
    pub tile_size: usize,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub strategy: LightStrategy,
    /// Whether camera rays that miss geometry see the lights behind it.
    #[serde(default)]
    pub show_background: bool,
    /// Box-filtered sub-pixel jitter; when off every sample goes through the
    /// pixel centre.
    #[serde(default = "yes")]
    pub jitter: bool,
}

fn yes() -> bool {
    true
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            samples_per_pixel: 4096,
            max_bounces: 6,
            seed: 0,
            clamp_indirect: 10.0,
            tile_size: 16,
            threads: None,
            strategy: LightStrategy::Mis,
            show_background: false,
            jitter: true,
        }
    }
}

impl RenderSettings {
    pub fn with_spp(mut self, spp: u32) -> Self {
        self.samples_per_pixel = spp;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_pixel == 0 {
            return Err(Error::InvalidParameter("samples per pixel must be ≥ 1".into()));
        }
        if self.max_bounces == 0 {
            return Err(Error::InvalidParameter("max bounces must be ≥ 1".into()));
        }
        if self.tile_size == 0 {
            return Err(Error::InvalidParameter("tile size must be ≥ 1".into()));
        }
        if !(self.clamp_indirect > 0.0) {
            return Err(Error::InvalidParameter("indirect clamp must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("thread count must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Render report written next to HDR outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub spp: u32,
    pub rejected_nan_samples: u64,
    pub clamped_samples: u64,
    pub render_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub image: HdrImage,
    pub diagnostics: Diagnostics,
}

struct PixelResult {
    rgb: [f32; 3],
    alpha: f32,
    rejected: u64,
    clamped: u64,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Renders a scene that may have no geometry.
pub fn render_scene(scene: &Scene, camera: &CameraSpec, settings: &RenderSettings) -> Result<RenderOutput> {
    camera.validate()?;
    settings.validate()?;
    let start = Instant::now();
    let tracer = Tracer {
        scene,
        max_bounces: settings.max_bounces,
        clamp_indirect: settings.clamp_indirect,
        strategy: settings.strategy,
        show_background: settings.show_background,
    };
    let (w, h) = (camera.width, camera.height);
    let ts = settings.tile_size;
    let tiles: Vec<(usize, usize)> = (0..h.div_ceil(ts))
        .flat_map(|ty| (0..w.div_ceil(ts)).map(move |tx| (tx * ts, ty * ts)))
        .collect();
    let eye = camera.eye;

    let render_pixel = |x: usize, y: usize| -> PixelResult {
        let index = (y * w + x) as u64;
        let mut jitter_rng = rng_from(settings.seed, &[index, 0]);
        let mut path_rng = rng_from(settings.seed, &[index, 1]);
        let mut sum = crate::math::DVec3::ZERO;
        let mut hits = 0u32;
        let mut stats = PathStats::default();
        let mut rejected = 0u64;
        for _ in 0..settings.samples_per_pixel {
            let (jx, jy) = if settings.jitter {
                (jitter_rng.random::<f64>(), jitter_rng.random::<f64>())
            } else {
                (0.5, 0.5)
            };
            let ray = Ray {
                origin: eye,
                dir: camera.world_ray(x as f64 + jx, y as f64 + jy),
            };
            let mut attempts = 0;
            loop {
                let mut s = PathStats::default();
                let (l, hit) = tracer.trace(ray, &mut path_rng, &mut s);
                if l.is_finite() {
                    sum += l;
                    hits += hit as u32;
                    stats.clamped += s.clamped;
                    break;
                }
                rejected += 1;
                attempts += 1;
                if attempts >= MAX_NAN_RETRIES {
                    hits += hit as u32;
                    break;
                }
            }
        }
        let n = settings.samples_per_pixel as f64;
        PixelResult {
            rgb: to_rgb_f32(sum / n),
            alpha: (hits as f64 / n) as f32,
            rejected,
            clamped: stats.clamped,
        }
    };

    let tile_results: Vec<Vec<PixelResult>> = with_pool(settings.threads, || {
        tiles
            .par_iter()
            .map(|&(x0, y0)| {
                let mut out = Vec::with_capacity(ts * ts);
                for y in y0..(y0 + ts).min(h) {
                    for x in x0..(x0 + ts).min(w) {
                        out.push(render_pixel(x, y));
                    }
                }
                out
            })
            .collect()
    });

    let mut image = HdrImage::new(w, h);
    let mut alpha = vec![0f32; w * h];
    let mut diagnostics = Diagnostics {
        spp: settings.samples_per_pixel,
        ..Default::default()
    };
    for (&(x0, y0), results) in tiles.iter().zip(tile_results) {
        let mut it = results.into_iter();
        for y in y0..(y0 + ts).min(h) {
            for x in x0..(x0 + ts).min(w) {
                let r = it.next().unwrap();
                image.set(x, y, r.rgb);
                alpha[y * w + x] = r.alpha;
                diagnostics.rejected_nan_samples += r.rejected;
                diagnostics.clamped_samples += r.clamped;
            }
        }
    }
    image.alpha = Some(alpha);
    diagnostics.render_seconds = start.elapsed().as_secs_f64();
    Ok(RenderOutput { image, diagnostics })
}

/// Path traces `mesh` with one homogeneous material.
pub fn render(
    mesh: &ProxyMesh,
    material: &DisneyParams,
    lights: &SceneLights,
    camera: &CameraSpec,
    settings: &RenderSettings,
) -> Result<RenderOutput> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh("nothing to render"));
    }
    material.validate()?;
    let scene = Scene::new(Some(mesh), *material, lights.clone());
    render_scene(&scene, camera, settings)
}

/// Renders one image per proxy material of `hint_materials(hint_count)` with
/// the same camera, lighting and seed.
pub fn render_radiance_hints(
    mesh: &ProxyMesh,
    lights: &SceneLights,
    camera: &CameraSpec,
    settings: &RenderSettings,
    hint_count: usize,
) -> Result<(RadianceHintSet, Vec<Diagnostics>)> {
    let materials = hint_materials(hint_count)?;
    let mut hints = Vec::with_capacity(materials.len());
    let mut diags = Vec::with_capacity(materials.len());
    for mat in &materials {
        let out = render(mesh, &mat.params, lights, camera, settings)?;
        hints.push(out.image);
        diags.push(out.diagnostics);
    }
    Ok((RadianceHintSet::new(hints)?, diags))
}

/// Backplate: the environment seen along each pixel-centre camera ray.
pub fn render_background(env: &EnvMap, camera: &CameraSpec, rotation: f64) -> Result<HdrImage> {
    camera.validate()?;
    let (w, h) = (camera.width, camera.height);
    let pixels: Vec<[f32; 3]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            to_rgb_f32(env.eval(camera.world_ray(x as f64 + 0.5, y as f64 + 0.5), rotation))
        })
        .collect();
    Ok(HdrImage {
        width: w,
        height: h,
        pixels,
        alpha: None,
    })
}
