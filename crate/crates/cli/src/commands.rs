use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use hintkit::brdf::{hint_materials, DisneyParams};
use hintkit::dataset::{
    build_object, compose_manifest, procedural_env_pool, render_corpus, write_manifest, DatasetConfig,
    ProceduralKind, DEFAULT_OBJECT_DETAIL,
};
use hintkit::geometry::{
    attach_smoothed_normals, backproject, set_shading_normals, triangulate, CameraSpec, DepthMap,
    ForegroundMask, NormalMode, ProxyMesh, SmoothingParams,
};
use hintkit::image::{HdrImage, Pfm};
use hintkit::lighting::{sample_lighting, EnvMap, EnvPool, LightingCategory, LightingSpec};
use hintkit::math::DVec3;
use hintkit::packing::{
    composite, pack_direct, pack_multiplied, tile_provisional_features, ControlPacket, FeatureMap,
    PackOptions, RadianceHintSet,
};
use hintkit::render::{
    render, render_background, render_radiance_hints, Diagnostics, LightStrategy, RenderSettings,
    SceneLights,
};
use hintkit::rng::rng_from;
use hintkit::{Error, Result};

use crate::args::{
    BackplateArgs, CameraArgs, DatasetArgs, HintsArgs, Layout, LightingArgs, MaterialArgs, Normals,
    ObjectKind, PackArgs, RenderArgs, RenderFlags, Strategy,
};

const PROCEDURAL_POOL_SIZE: usize = 8;
const PROCEDURAL_POOL_WIDTH: usize = 128;
const TAG_LIGHTING: u64 = 0x4c49_4748;

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn vec3(v: [f64; 3]) -> DVec3 {
    DVec3::from_array(v)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn camera_from(args: &CameraArgs, width: usize, height: usize, fixed_size: bool) -> Result<CameraSpec> {
    let camera = match &args.camera {
        Some(path) => {
            let cam: CameraSpec = read_json(path)?;
            if fixed_size && (cam.width, cam.height) != (width, height) {
                return Err(Error::DimensionMismatch {
                    expected: (width, height),
                    found: (cam.width, cam.height),
                });
            }
            cam
        }
        None => CameraSpec {
            eye: vec3(args.eye),
            look_at: vec3(args.look_at),
            up: vec3(args.up),
            vertical_fov: args.fov,
            width,
            height,
        },
    };
    camera.validate()?;
    Ok(camera)
}

/// The lighting condition plus every environment map it references. Sampled
/// conditions over the procedural pool also save the maps they use under
/// `out` so the written lighting file is self-contained.
fn load_lighting(args: &LightingArgs, seed: u64, out: &Path) -> Result<(LightingSpec, EnvPool)> {
    if let Some(path) = &args.lighting {
        let spec = LightingSpec::read_json(path)?;
        let base = args
            .env_dir
            .clone()
            .or_else(|| path.parent().map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."));
        let pool = EnvPool::load_for(&spec, &base)?;
        return Ok((spec, pool));
    }
    let category = LightingCategory::from_index(args.sample_category.expect("clap enforces one source"))?;
    let procedural = args.env_pool.is_empty();
    let pool = if procedural {
        procedural_env_pool(seed, PROCEDURAL_POOL_SIZE, PROCEDURAL_POOL_WIDTH)
    } else {
        let mut pool = EnvPool::new();
        for p in &args.env_pool {
            pool.insert(p.display().to_string(), EnvMap::load(p)?);
        }
        pool
    };
    let spec = sample_lighting(category, &pool, &mut rng_from(seed, &[TAG_LIGHTING]))?;
    if procedural {
        for name in spec.env_names() {
            let target = out.join(name);
            if let Some(parent) = target.parent() {
                create_dir(parent)?;
            }
            pool.get(name)?.to_image().write_pfm(&target)?;
        }
    }
    Ok((spec, pool))
}

fn settings_from(flags: &RenderFlags) -> RenderSettings {
    RenderSettings {
        samples_per_pixel: flags.spp,
        max_bounces: flags.max_bounces as usize,
        seed: flags.seed,
        clamp_indirect: flags.clamp,
        tile_size: flags.tile as usize,
        threads: None,
        strategy: match flags.strategy {
            Strategy::Mis => LightStrategy::Mis,
            Strategy::Nee => LightStrategy::NeeOnly,
            Strategy::Brdf => LightStrategy::BrdfOnly,
        },
        show_background: false,
        jitter: true,
    }
}

fn write_alpha(path: &Path, img: &HdrImage) -> Result<()> {
    let data = img
        .alpha
        .clone()
        .unwrap_or_else(|| vec![1.0; img.width * img.height]);
    Pfm {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
    .write(path)
}

fn write_image(dir: &Path, stem: &str, img: &HdrImage, previews: bool) -> Result<()> {
    img.write_pfm(dir.join(format!("{stem}.pfm")))?;
    if previews {
        img.write_hdr(dir.join(format!("{stem}.hdr")))?;
        img.write_png_preview(dir.join(format!("{stem}.png")))?;
    }
    Ok(())
}

/// Diagnostics minus wall-clock time, so metadata stays reproducible.
fn counts(d: &Diagnostics) -> serde_json::Value {
    json!({
        "spp": d.spp,
        "rejected_nan_samples": d.rejected_nan_samples,
        "clamped_samples": d.clamped_samples,
    })
}

fn meta(command: &str, flags: &impl Serialize) -> Result<serde_json::Value> {
    Ok(json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "flags": serde_json::to_value(flags)?,
    }))
}

fn depth_mesh(
    depth: &DepthMap,
    mask: &ForegroundMask,
    camera: &CameraSpec,
    ratio: f64,
    smoothing: SmoothingParams,
    normals: Normals,
) -> Result<ProxyMesh> {
    let grid = backproject(depth, mask, camera)?;
    let mesh = triangulate(&grid, ratio)?;
    let mesh = attach_smoothed_normals(&mesh, smoothing)?;
    let mode = match normals {
        Normals::Geometric => NormalMode::Geometric,
        Normals::Smoothed => NormalMode::SmoothedDepth,
    };
    set_shading_normals(&mesh, mode)
}

pub fn hints(args: &HintsArgs) -> Result<()> {
    let depth = DepthMap::read_pfm(&args.mesh.depth)?;
    let mask = ForegroundMask::read_png(&args.mesh.mask)?;
    if mask.dims() != (depth.width, depth.height) {
        return Err(Error::DimensionMismatch {
            expected: (depth.width, depth.height),
            found: mask.dims(),
        });
    }
    let camera = camera_from(&args.camera, depth.width, depth.height, true)?;
    create_dir(&args.out)?;
    let (spec, pool) = load_lighting(&args.lighting, args.render.seed, &args.out)?;
    let lights = SceneLights::resolve(&spec, &pool)?;
    let mesh = depth_mesh(
        &depth,
        &mask,
        &camera,
        args.mesh.discontinuity_ratio,
        SmoothingParams {
            lambda: args.mesh.smooth_lambda,
            iterations: args.mesh.smooth_iterations as usize,
        },
        args.mesh.normals,
    )?;
    let settings = settings_from(&args.render);
    let count = args.count as usize;
    let (set, diags) = render_radiance_hints(&mesh, &lights, &camera, &settings, count)?;

    for (k, img) in set.hints.iter().enumerate() {
        write_image(&args.out, &format!("hint{k}"), img, args.render.previews)?;
    }
    write_alpha(&args.out.join("alpha.pfm"), &set.hints[0])?;
    mask.write_png(args.out.join("mask.png"))?;
    spec.write_json(args.out.join("lighting.json"))?;
    write_json(&args.out.join("camera.json"), &camera)?;
    write_json(&args.out.join("diagnostics.json"), &diags)?;
    let mut m = meta("hints", args)?;
    m["camera"] = serde_json::to_value(camera)?;
    m["lighting"] = serde_json::to_value(&spec)?;
    m["settings"] = serde_json::to_value(settings)?;
    m["materials"] = serde_json::to_value(
        hint_materials(count)?.iter().map(|p| p.params).collect::<Vec<_>>(),
    )?;
    m["mesh"] = json!({
        "vertices": mesh.vertex_count(),
        "triangles": mesh.triangles.len(),
    });
    m["render"] = diags.iter().map(counts).collect();
    write_json(&args.out.join("meta.json"), &m)
}

fn material_from(args: &MaterialArgs) -> Result<DisneyParams> {
    let m = match &args.material {
        Some(path) => read_json(path)?,
        None => DisneyParams {
            base_color: vec3(args.base_color),
            roughness: args.roughness,
            metallic: args.metallic,
            specular: args.specular,
            specular_tint: args.specular_tint,
        },
    };
    m.validate()?;
    Ok(m)
}

pub fn render_cmd(args: &RenderArgs) -> Result<()> {
    let material = material_from(&args.material)?;
    let camera = camera_from(&args.camera, args.width as usize, args.height as usize, false)?;
    let mesh = match (args.object, &args.depth, &args.mask) {
        (Some(kind), _, _) => {
            let kind = match kind {
                ObjectKind::Sphere => ProceduralKind::Sphere,
                ObjectKind::RoundedBox => ProceduralKind::RoundedBox,
                ObjectKind::Torus => ProceduralKind::Torus,
                ObjectKind::BumpySphere => ProceduralKind::BumpySphere,
            };
            build_object(kind, &mut rng_from(args.object_seed, &[]), DEFAULT_OBJECT_DETAIL)?.mesh
        }
        (None, Some(depth), Some(mask)) => {
            let depth = DepthMap::read_pfm(depth)?;
            let mask = ForegroundMask::read_png(mask)?;
            let depth_camera = CameraSpec {
                width: depth.width,
                height: depth.height,
                ..camera
            };
            depth_mesh(
                &depth,
                &mask,
                &depth_camera,
                hintkit::geometry::DEFAULT_DISCONTINUITY_RATIO,
                SmoothingParams::default(),
                Normals::Smoothed,
            )?
        }
        _ => unreachable!("clap enforces an object or a depth map"),
    };
    create_dir(&args.out)?;
    let (spec, pool) = load_lighting(&args.lighting, args.render.seed, &args.out)?;
    let lights = SceneLights::resolve(&spec, &pool)?;
    let settings = RenderSettings {
        show_background: args.show_background,
        ..settings_from(&args.render)
    };
    let out = render(&mesh, &material, &lights, &camera, &settings)?;
    write_image(&args.out, "render", &out.image, args.render.previews)?;
    write_alpha(&args.out.join("alpha.pfm"), &out.image)?;
    spec.write_json(args.out.join("lighting.json"))?;
    write_json(&args.out.join("camera.json"), &camera)?;
    write_json(&args.out.join("diagnostics.json"), &out.diagnostics)?;
    let mut m = meta("render", args)?;
    m["camera"] = serde_json::to_value(camera)?;
    m["lighting"] = serde_json::to_value(&spec)?;
    m["material"] = serde_json::to_value(material)?;
    m["settings"] = serde_json::to_value(settings)?;
    m["render"] = counts(&out.diagnostics);
    write_json(&args.out.join("meta.json"), &m)
}

pub fn dataset(args: &DatasetArgs) -> Result<()> {
    let config = DatasetConfig {
        seed: args.seed,
        objects: args.objects,
        resolution: args.resolution as usize,
        samples_per_pixel: args.spp,
        max_bounces: args.max_bounces as usize,
        hint_count: args.hint_count as usize,
        records: args.records,
        env_maps: args.env_maps as usize,
        env_width: args.env_width as usize,
        object_detail: args.object_detail,
    };
    config.validate()?;
    create_dir(&args.out)?;
    let manifest = if args.manifest_only {
        let m = compose_manifest(&config)?;
        write_manifest(&m, args.out.join("manifest.json"))?;
        m
    } else {
        render_corpus(&config, &args.out)?
    };
    let mut m = meta("dataset", args)?;
    m["config"] = serde_json::to_value(config)?;
    m["records"] = json!(manifest.records.len());
    write_json(&args.out.join("meta.json"), &m)
}

fn read_hints(dir: &Path, count: usize) -> Result<RadianceHintSet> {
    let hints = (0..count)
        .map(|k| HdrImage::read_pfm(dir.join(format!("hint{k}.pfm"))))
        .collect::<Result<Vec<_>>>()?;
    RadianceHintSet::new(hints)
}

pub fn pack(args: &PackArgs) -> Result<()> {
    let mut hints = read_hints(&args.hints, args.count as usize)?;
    hints.lighting_id = args.lighting_id.clone();
    hints.camera_id = args.camera_id.clone();
    let mask = ForegroundMask::read_png(&args.mask)?;
    let provisional = args.provisional.as_ref().map(HdrImage::read_pfm).transpose()?;
    let opts = PackOptions {
        include_mask: !args.no_mask,
    };
    let packet = match args.layout {
        Layout::Direct => {
            let p = provisional.as_ref().expect("clap requires --provisional for direct");
            pack_direct(p, &hints, &mask, opts)?
        }
        Layout::Multiplied => {
            let features = match (&args.features, &provisional) {
                (Some(path), _) => {
                    let f = ControlPacket::read(path)?;
                    FeatureMap::new(f.width, f.height, f.channels)?
                }
                (None, Some(p)) => tile_provisional_features(p, hints.hint_count()),
                (None, None) => {
                    let (w, h) = hints.dims();
                    FeatureMap::constant(w, h, 3 * hints.hint_count(), 1.0)
                }
            };
            pack_multiplied(&features, &hints, &mask, opts)?
        }
    };
    create_dir(&args.out)?;
    packet.write(args.out.join("packet.dlcp"))?;
    let mut m = meta("pack", args)?;
    m["channels"] = json!(packet.channel_count());
    m["width"] = json!(packet.width);
    m["height"] = json!(packet.height);
    write_json(&args.out.join("meta.json"), &m)
}

pub fn backplate(args: &BackplateArgs) -> Result<()> {
    let env = EnvMap::load(&args.env)?;
    let camera = camera_from(&args.camera, args.width as usize, args.height as usize, false)?;
    let bg = render_background(&env, &camera, args.rotation)?;
    create_dir(&args.out)?;
    write_image(&args.out, "background", &bg, args.previews)?;
    if let (Some(fg), Some(mask)) = (&args.foreground, &args.mask) {
        let fg = HdrImage::read_pfm(fg)?;
        let mask = ForegroundMask::read_png(mask)?;
        let out = composite(&fg, &bg, &mask)?;
        write_image(&args.out, "composite", &out, args.previews)?;
    }
    write_json(&args.out.join("camera.json"), &camera)?;
    let mut m = meta("backplate", args)?;
    m["camera"] = serde_json::to_value(camera)?;
    write_json(&args.out.join("meta.json"), &m)
}
