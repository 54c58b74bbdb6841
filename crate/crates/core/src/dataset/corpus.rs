//! End-to-end corpus synthesis: procedural environments, per-view degraded
//! depth and transferred shading normals, slate renders, hint variants, and
//! on-demand materialization of augmented pairs.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::manifest::{compose_manifest, write_manifest, DatasetConfig, DatasetManifest};
use super::procedural::{build_object, ProceduralKind, Shape};
use super::protocol::{
    assign_lighting_slate, hint_file, lighting_dir, sample_viewpoints, SampleRecord, ViewSpec,
};
use crate::brdf::{sample_augmented_material, DisneyParams};
use crate::error::{Error, Result};
use crate::geometry::{
    attach_smoothed_normals, backproject, triangulate, CameraSpec, DepthMap, ForegroundMask,
    NormalMode, ProxyMesh, SmoothingParams, DEFAULT_DISCONTINUITY_RATIO,
};
use crate::image::HdrImage;
use crate::lighting::{EnvMap, EnvPool, LightingCategory, LightingSpec};
use crate::math::{spherical_y_up, DVec3};
use crate::packing::permute_color_channels;
use crate::render::{render, render_radiance_hints, RenderSettings, SceneLights};
use crate::rng::{derive_seed, rng_from, Rng};

const TAG_ENV: u64 = 0x0045_4e56;
const TAG_OBJECT: u64 = 0x004f_424a;
const TAG_MATERIAL: u64 = 0x004d_4154;
const TAG_SLATE: u64 = 0x0053_4c54;
const TAG_VIEW: u64 = 0x0056_4945;
const TAG_DEPTH: u64 = 0x0044_5054;
const TAG_RENDER: u64 = 0x0052_4e44;
const TAG_HINT: u64 = 0x0048_4e54;

pub const DEPTH_BLUR_SIGMA_PX: f64 = 2.0;
/// Warp amplitude as a fraction of the foreground depth range.
pub const DEPTH_WARP_FRACTION: f64 = 0.02;

/// Sky-and-sun environment: vertical gradient, a coloured ground and one
/// small bright disc.
pub fn procedural_env(width: usize, rng: &mut Rng) -> EnvMap {
    let height = width / 2;
    let tint = |rng: &mut Rng| {
        DVec3::new(
            rng.random_range(0.2..1.0),
            rng.random_range(0.2..1.0),
            rng.random_range(0.2..1.0),
        )
    };
    let zenith = tint(rng) * rng.random_range(0.3..1.0);
    let horizon = tint(rng) * rng.random_range(0.3..1.0);
    let ground = tint(rng) * rng.random_range(0.05..0.3);
    let sun_dir = spherical_y_up(
        rng.random_range(10f64..70.0).to_radians(),
        rng.random_range(0.0..2.0 * PI),
    );
    let sun = tint(rng) * rng.random_range(50.0..200.0);
    let sun_cos = 4f64.to_radians().cos();
    let mut texels = Vec::with_capacity(width * height);
    for j in 0..height {
        let polar = PI * (j as f64 + 0.5) / height as f64;
        for i in 0..width {
            let azimuth = 2.0 * PI * (i as f64 + 0.5) / width as f64;
            let d = spherical_y_up(polar, azimuth);
            let mut c = if d.y >= 0.0 {
                horizon.lerp(zenith, d.y.sqrt())
            } else {
                ground
            };
            if d.dot(sun_dir) > sun_cos {
                c += sun;
            }
            texels.push([c.x as f32, c.y as f32, c.z as f32]);
        }
    }
    EnvMap::new(width, height, texels).expect("procedural env is valid")
}

pub fn env_name(k: usize) -> String {
    format!("envs/env_{k:02}.pfm")
}

pub fn procedural_env_pool(seed: u64, count: usize, width: usize) -> EnvPool {
    let mut pool = EnvPool::new();
    for k in 0..count {
        pool.insert(env_name(k), procedural_env(width, &mut rng_from(seed, &[TAG_ENV, k as u64])));
    }
    pool
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Emulates monocular estimator error: a foreground-normalized Gaussian blur
/// plus a low-frequency sinusoidal warp. Background pixels stay untouched.
pub fn degrade_depth(depth: &DepthMap, mask: &ForegroundMask, rng: &mut Rng) -> Result<DepthMap> {
    let (w, h) = (depth.width, depth.height);
    if mask.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: mask.dims(),
        });
    }
    let fg: Vec<bool> = (0..w * h).map(|i| mask.is_foreground(i)).collect();
    let kernel = gaussian_kernel(DEPTH_BLUR_SIGMA_PX);
    let r = (kernel.len() / 2) as i64;
    let blur = |vals: &[f64], wts: &[f64], horizontal: bool| -> (Vec<f64>, Vec<f64>) {
        let mut v_out = vec![0.0; w * h];
        let mut w_out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (mut sv, mut sw) = (0.0, 0.0);
                for (k, kv) in kernel.iter().enumerate() {
                    let o = k as i64 - r;
                    let (sx, sy) = if horizontal {
                        (x as i64 + o, y as i64)
                    } else {
                        (x as i64, y as i64 + o)
                    };
                    if sx < 0 || sy < 0 || sx >= w as i64 || sy >= h as i64 {
                        continue;
                    }
                    let j = sy as usize * w + sx as usize;
                    sv += kv * vals[j];
                    sw += kv * wts[j];
                }
                v_out[y * w + x] = sv;
                w_out[y * w + x] = sw;
            }
        }
        (v_out, w_out)
    };
    let wts: Vec<f64> = fg.iter().map(|&f| f as u8 as f64).collect();
    let vals: Vec<f64> = (0..w * h).map(|i| if fg[i] { depth.values[i] as f64 } else { 0.0 }).collect();
    let (v1, w1) = blur(&vals, &wts, true);
    let (v2, w2) = blur(&v1, &w1, false);

    let fg_depths = (0..w * h).filter(|&i| fg[i]).map(|i| depth.values[i] as f64);
    let (lo, hi) = fg_depths.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
    let range = if hi > lo { hi - lo } else { 0.0 };
    let fx = rng.random_range(0.5..1.5);
    let fy = rng.random_range(0.5..1.5);
    let phase = rng.random_range(0.0..2.0 * PI);
    let amp = DEPTH_WARP_FRACTION * range;

    let mut out = depth.values.clone();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !fg[i] || w2[i] <= 0.0 {
                continue;
            }
            let warp = amp * (2.0 * PI * (fx * x as f64 / w as f64 + fy * y as f64 / h as f64) + phase).sin();
            out[i] = (v2[i] / w2[i] + warp) as f32;
        }
    }
    Ok(DepthMap::new(w, h, out))
}

/// Copies smoothed normals from a depth-derived mesh onto the visible
/// vertices of the ground-truth mesh; hidden vertices keep their geometric
/// normal. The result shades with [`NormalMode::SmoothedDepth`].
pub fn transfer_depth_normals(
    target: &ProxyMesh,
    depth_mesh: &ProxyMesh,
    camera: &CameraSpec,
    visible_depth: &DepthMap,
) -> Result<ProxyMesh> {
    let alt = depth_mesh.alt_normals.as_ref().ok_or(Error::MissingAltNormals)?;
    let pixels = depth_mesh
        .vertex_pixels
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("depth mesh lacks vertex pixels".into()))?;
    let (w, h) = (camera.width, camera.height);
    let mut per_pixel: Vec<Option<DVec3>> = vec![None; w * h];
    for (n, p) in alt.iter().zip(pixels) {
        per_pixel[p[1] as usize * w + p[0] as usize] = Some(*n);
    }
    let tolerance = 5e-3;
    let normals = target
        .positions
        .iter()
        .zip(&target.geometric_normals)
        .map(|(p, ng)| {
            if ng.dot(camera.eye - *p) <= 0.0 {
                return *ng;
            }
            let Some((x, y, z)) = camera.project(*p) else {
                return *ng;
            };
            let (px, py) = (x.floor(), y.floor());
            if px < 0.0 || py < 0.0 || px >= w as f64 || py >= h as f64 {
                return *ng;
            }
            let i = py as usize * w + px as usize;
            match per_pixel[i] {
                Some(n) if visible_depth.is_valid(i) && z <= visible_depth.values[i] as f64 + tolerance => n,
                _ => *ng,
            }
        })
        .collect();
    let mut out = target.clone();
    out.alt_normals = Some(normals);
    out.shading = NormalMode::SmoothedDepth;
    Ok(out)
}

/// Smoothed-depth shading variant of `mesh` for one view.
pub fn smoothed_variant(
    mesh: &ProxyMesh,
    depth: &DepthMap,
    mask: &ForegroundMask,
    camera: &CameraSpec,
    rng: &mut Rng,
) -> Result<ProxyMesh> {
    let degraded = degrade_depth(depth, mask, rng)?;
    let grid = backproject(&degraded, mask, camera)?;
    let tri = triangulate(&grid, DEFAULT_DISCONTINUITY_RATIO)?;
    let smooth = attach_smoothed_normals(&tri, SmoothingParams::default())?;
    transfer_depth_normals(mesh, &smooth, camera, depth)
}

#[derive(Serialize, Deserialize)]
struct ObjectMeta {
    object_id: u32,
    kind: ProceduralKind,
    shape: Shape,
    center: DVec3,
    scale: f64,
    material: DisneyParams,
    views: Vec<ViewSpec>,
}

#[derive(Serialize, Deserialize)]
struct RenderCounts {
    spp: u32,
    rejected_nan_samples: u64,
    clamped_samples: u64,
}

#[derive(Serialize, Deserialize)]
struct ItemMeta {
    object_id: u32,
    view_id: u32,
    lighting_id: u32,
    category: Option<LightingCategory>,
    lighting: LightingSpec,
    view: ViewSpec,
    camera: CameraSpec,
    material: DisneyParams,
    settings: RenderSettings,
    hint_count: usize,
    render: RenderCounts,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Renders the whole corpus under `root` and writes `manifest.json`
/// (+ `manifest.jsonl`). Output bytes depend only on the configuration.
pub fn render_corpus(config: &DatasetConfig, root: impl AsRef<Path>) -> Result<DatasetManifest> {
    config.validate()?;
    let root = root.as_ref();
    let seed = config.seed;
    create_dir(&root.join("envs"))?;
    let pool = procedural_env_pool(seed, config.env_maps, config.env_width);
    for name in pool.names() {
        pool.get(name)?.to_image().write_pfm(root.join(name))?;
    }
    let res = config.resolution;

    for o in 0..config.objects {
        let oid = o as u64;
        let kind = ProceduralKind::ALL[o as usize % ProceduralKind::ALL.len()];
        let object = build_object(kind, &mut rng_from(seed, &[TAG_OBJECT, oid]), config.object_detail)?;
        let material = sample_augmented_material(&mut rng_from(seed, &[TAG_MATERIAL, oid]));
        let slate = assign_lighting_slate(&pool, &mut rng_from(seed, &[TAG_SLATE, oid]))?;
        let views = sample_viewpoints(&mut rng_from(seed, &[TAG_VIEW, oid]));
        let lights: Vec<SceneLights> = slate
            .iter()
            .map(|spec| SceneLights::resolve(spec, &pool))
            .collect::<Result<_>>()?;

        let object_dir = root.join(format!("objects/{o:04}"));
        create_dir(&object_dir)?;
        write_json(
            &object_dir.join("object.json"),
            &ObjectMeta {
                object_id: o,
                kind,
                shape: object.shape,
                center: object.center,
                scale: object.scale,
                material,
                views: views.to_vec(),
            },
        )?;

        for (v, view) in views.iter().enumerate() {
            let vid = v as u64;
            let camera = view.camera(res, res);
            let (depth, mask) = object.analytic_depth(&camera)?;
            let smoothed = smoothed_variant(
                &object.mesh,
                &depth,
                &mask,
                &camera,
                &mut rng_from(seed, &[TAG_DEPTH, oid, vid]),
            )?;
            for (l, (spec, scene_lights)) in slate.iter().zip(&lights).enumerate() {
                let lid = l as u64;
                let dir = root.join(lighting_dir(o, v as u32, l as u32));
                create_dir(&dir)?;
                let base = RenderSettings {
                    samples_per_pixel: config.samples_per_pixel,
                    max_bounces: config.max_bounces,
                    ..Default::default()
                };
                let settings = base.with_seed(derive_seed(seed, &[TAG_RENDER, oid, vid, lid]));
                let out = render(&object.mesh, &material, scene_lights, &camera, &settings)?;
                out.image.write_pfm(dir.join("render.pfm"))?;

                let hint_settings = base.with_seed(derive_seed(seed, &[TAG_HINT, oid, vid, lid]));
                for (variant, mesh) in [(NormalMode::Geometric, &object.mesh), (NormalMode::SmoothedDepth, &smoothed)] {
                    let (set, _) = render_radiance_hints(mesh, scene_lights, &camera, &hint_settings, config.hint_count)?;
                    for (k, img) in set.hints.iter().enumerate() {
                        img.write_pfm(dir.join(hint_file(k, variant)))?;
                    }
                }
                mask.write_png(dir.join("mask.png"))?;
                write_json(
                    &dir.join("meta.json"),
                    &ItemMeta {
                        object_id: o,
                        view_id: v as u32,
                        lighting_id: l as u32,
                        category: spec.category,
                        lighting: spec.clone(),
                        view: *view,
                        camera,
                        material,
                        settings,
                        hint_count: config.hint_count,
                        render: RenderCounts {
                            spp: out.diagnostics.spp,
                            rejected_nan_samples: out.diagnostics.rejected_nan_samples,
                            clamped_samples: out.diagnostics.clamped_samples,
                        },
                    },
                )?;
                log::info!("rendered object {o} view {v} lighting {l}");
            }
        }
    }

    let manifest = compose_manifest(config)?;
    write_manifest(&manifest, root.join("manifest.json"))?;
    Ok(manifest)
}

/// Writes the augmented pair of `record` into `out`: the input render as
/// stored, the output render and its hints under the record's permutation.
pub fn materialize_pair(root: impl AsRef<Path>, record: &SampleRecord, out: impl AsRef<Path>) -> Result<()> {
    let (root, out) = (root.as_ref(), out.as_ref());
    create_dir(out)?;
    let load = |rel: &str| {
        let p = root.join(rel);
        if !p.exists() {
            return Err(Error::MissingRender(p.display().to_string()));
        }
        HdrImage::read_pfm(p)
    };
    let input = load(&record.paths.input_render)?;
    let mut targets = vec![load(&record.paths.output_render)?];
    for h in &record.paths.hints {
        targets.push(load(h)?);
    }
    let permuted = permute_color_channels(&targets, record.permutation);
    input.write_pfm(out.join("input.pfm"))?;
    permuted[0].write_pfm(out.join("output.pfm"))?;
    for (k, img) in permuted[1..].iter().enumerate() {
        img.write_pfm(out.join(format!("hint{k}.pfm")))?;
    }
    let mask = root.join(&record.paths.mask);
    fs::copy(&mask, out.join("mask.png")).map_err(|e| Error::io(&mask, e))?;
    write_json(&out.join("record.json"), record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_procedural_object;

    #[test]
    fn gaussian_kernel_normalized() {
        let k = gaussian_kernel(2.0);
        assert_eq!(k.len(), 13);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(k[6] > k[5] && (k[5] - k[7]).abs() < 1e-15);
    }

    #[test]
    fn degrade_keeps_background_and_bounds_warp() {
        let (w, h) = (32, 32);
        let mut vals = vec![0.0f32; w * h];
        let mut cover = vec![0.0f32; w * h];
        for y in 8..24 {
            for x in 8..24 {
                vals[y * w + x] = 1.0 + 0.01 * x as f32;
                cover[y * w + x] = 1.0;
            }
        }
        let depth = DepthMap::new(w, h, vals.clone());
        let mask = ForegroundMask::new(w, h, cover);
        let d = degrade_depth(&depth, &mask, &mut rng_from(3, &[])).unwrap();
        let range = 0.15;
        for i in 0..w * h {
            if mask.is_foreground(i) {
                assert!((d.values[i] - vals[i]).abs() as f64 <= DEPTH_WARP_FRACTION * range + 0.031);
            } else {
                assert_eq!(d.values[i], vals[i]);
            }
        }
    }

    #[test]
    fn procedural_env_is_valid_and_colored() {
        let env = procedural_env(32, &mut rng_from(1, &[]));
        assert_eq!((env.width(), env.height()), (32, 16));
        let first = env.texels()[0];
        assert!(env.texels().iter().any(|t| t != &first));
    }

    #[test]
    fn transferred_normals_face_camera() {
        let obj = gen_procedural_object(ProceduralKind::Sphere, &mut rng_from(5, &[])).unwrap();
        let view = ViewSpec {
            elevation: 30.0,
            azimuth: 40.0,
            distance: 1.0,
            vertical_fov: 28.0,
        };
        let cam = view.camera(64, 64);
        let (depth, mask) = obj.analytic_depth(&cam).unwrap();
        let sm = smoothed_variant(&obj.mesh, &depth, &mask, &cam, &mut rng_from(6, &[])).unwrap();
        let alt = sm.alt_normals.as_ref().unwrap();
        let mut changed = 0;
        for ((p, ng), na) in sm.positions.iter().zip(&sm.geometric_normals).zip(alt) {
            assert!((na.length() - 1.0).abs() < 1e-9);
            if na != ng {
                changed += 1;
                assert!(na.dot(cam.eye - *p) > 0.0);
            }
        }
        assert!(changed > 100);
        assert_eq!(sm.shading, NormalMode::SmoothedDepth);
        assert_eq!(sm.positions, obj.mesh.positions);
    }
}
