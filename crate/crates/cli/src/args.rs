use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z but got `{s}`"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(v)
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_fov(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v > 0.0 && v < 90.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 90) degrees"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hintkit",
    version,
    about = "Render radiance hints, synthesize relighting corpora and pack control tensors"
)]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, display_order = 1000, env = "HINTKIT_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate a depth map and render its radiance hints
    Hints(HintsArgs),
    /// Path trace a procedural object or a depth-derived mesh
    Render(RenderArgs),
    /// Generate a synthetic training corpus
    Dataset(DatasetArgs),
    /// Pack hints and a mask into a DLCP control packet
    Pack(PackArgs),
    /// Render an environment backplate and optionally composite a foreground
    Backplate(BackplateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CameraArgs {
    /// Camera JSON file; overrides the individual camera flags
    #[arg(long, value_name = "FILE")]
    pub camera: Option<PathBuf>,
    /// Eye position x,y,z [meters]
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,1")]
    pub eye: [f64; 3],
    /// Look-at point x,y,z [meters]
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    pub look_at: [f64; 3],
    /// World up vector x,y,z [unitless]
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,1,0")]
    pub up: [f64; 3],
    /// Vertical field of view [degrees]
    #[arg(long, value_name = "DEG", value_parser = parse_fov, default_value_t = 28.0)]
    pub fov: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LightingArgs {
    /// Lighting JSON file
    #[arg(long, value_name = "FILE", conflicts_with = "sample_category", required_unless_present = "sample_category")]
    pub lighting: Option<PathBuf>,
    /// Sample a lighting condition of category 1-5 (point, multi-point, environment, monochrome environment, area) with --seed
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u8).range(1..=5))]
    pub sample_category: Option<u8>,
    /// Directory environment-map names resolve against (default: the lighting file's directory)
    #[arg(long, value_name = "DIR")]
    pub env_dir: Option<PathBuf>,
    /// Environment maps (.hdr/.pfm) to sample from for categories 3-4 (default: procedural)
    #[arg(long = "env-pool", value_name = "FILE", num_args = 1..)]
    pub env_pool: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mis,
    Nee,
    Brdf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderFlags {
    /// Samples per pixel [count]
    #[arg(long, value_name = "N", default_value_t = 4096, value_parser = clap::value_parser!(u32).range(1..))]
    pub spp: u32,
    /// Maximum path vertices [count]
    #[arg(long, value_name = "N", default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_bounces: u32,
    /// Cap on the largest channel of indirect contributions [W/(sr·m²)]
    #[arg(long, value_name = "L", default_value_t = 10.0, value_parser = parse_positive)]
    pub clamp: f64,
    /// Render tile edge [pixels]
    #[arg(long, value_name = "PX", default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub tile: u32,
    /// Light-transport estimator
    #[arg(long, value_enum, default_value_t = Strategy::Mis)]
    pub strategy: Strategy,
    /// Global seed [integer]
    #[arg(long, value_name = "S", default_value_t = 0)]
    pub seed: u64,
    /// Also write Radiance .hdr copies and sRGB .png previews
    #[arg(long)]
    pub previews: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normals {
    Geometric,
    Smoothed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DepthMeshArgs {
    /// Depth map (PFM, z-depth) [meters]
    #[arg(long, value_name = "FILE")]
    pub depth: PathBuf,
    /// Foreground mask (8-bit PNG; ≥ 50% is foreground)
    #[arg(long, value_name = "FILE")]
    pub mask: PathBuf,
    /// Drop triangles whose longest edge exceeds this multiple of the median edge [ratio]
    #[arg(long, value_name = "R", default_value_t = 4.0, value_parser = parse_positive)]
    pub discontinuity_ratio: f64,
    /// Laplace smoothing step [0-1]
    #[arg(long, value_name = "L", default_value_t = 0.5, value_parser = parse_unit)]
    pub smooth_lambda: f64,
    /// Laplace smoothing iterations [count]
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub smooth_iterations: u32,
    /// Shading normals of the proxy mesh
    #[arg(long, value_enum, default_value_t = Normals::Smoothed)]
    pub normals: Normals,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HintsArgs {
    #[command(flatten)]
    pub mesh: DepthMeshArgs,
    #[command(flatten)]
    pub lighting: LightingArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub render: RenderFlags,
    /// Number of radiance hints (3, 4 or 5)
    #[arg(long, value_name = "N", default_value_t = 4, value_parser = clap::value_parser!(u8).range(3..=5))]
    pub count: u8,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Sphere,
    RoundedBox,
    Torus,
    BumpySphere,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MaterialArgs {
    /// Material JSON file; overrides the individual material flags
    #[arg(long, value_name = "FILE")]
    pub material: Option<PathBuf>,
    /// Base color r,g,b [0-1 linear]
    #[arg(long, value_name = "R,G,B", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0.8,0.8,0.8")]
    pub base_color: [f64; 3],
    /// Microfacet roughness [0-1]
    #[arg(long, value_name = "V", default_value_t = 0.5, value_parser = parse_unit)]
    pub roughness: f64,
    /// Metalness [0-1]
    #[arg(long, value_name = "V", default_value_t = 0.0, value_parser = parse_unit)]
    pub metallic: f64,
    /// Dielectric specular level [0-1]
    #[arg(long, value_name = "V", default_value_t = 0.5, value_parser = parse_unit)]
    pub specular: f64,
    /// Tint of the dielectric specular towards the base color [0-1]
    #[arg(long, value_name = "V", default_value_t = 0.0, value_parser = parse_unit)]
    pub specular_tint: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    /// Procedural object to render
    #[arg(long, value_enum, conflicts_with = "depth", required_unless_present = "depth")]
    pub object: Option<ObjectKind>,
    /// Seed for the procedural object's shape parameters [integer]
    #[arg(long, value_name = "S", default_value_t = 0)]
    pub object_seed: u64,
    /// Render a depth-derived mesh from this depth map instead (needs --mask)
    #[arg(long, value_name = "FILE", requires = "mask")]
    pub depth: Option<PathBuf>,
    /// Foreground mask for --depth
    #[arg(long, value_name = "FILE", requires = "depth")]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    pub lighting: LightingArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Image width [pixels]
    #[arg(long, value_name = "PX", default_value_t = 512, value_parser = clap::value_parser!(u32).range(2..))]
    pub width: u32,
    /// Image height [pixels]
    #[arg(long, value_name = "PX", default_value_t = 512, value_parser = clap::value_parser!(u32).range(2..))]
    pub height: u32,
    #[command(flatten)]
    pub render: RenderFlags,
    /// Show lights and environment behind the object
    #[arg(long)]
    pub show_background: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DatasetArgs {
    /// Global seed [integer]
    #[arg(long, value_name = "S", default_value_t = 0)]
    pub seed: u64,
    /// Procedural objects [count]
    #[arg(long, value_name = "N", default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub objects: u32,
    /// Square render resolution [pixels]
    #[arg(long, value_name = "PX", default_value_t = 256, value_parser = clap::value_parser!(u32).range(2..))]
    pub resolution: u32,
    /// Samples per pixel [count]
    #[arg(long, value_name = "N", default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub spp: u32,
    /// Maximum path vertices [count]
    #[arg(long, value_name = "N", default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_bounces: u32,
    /// Radiance hints per render (3, 4 or 5)
    #[arg(long, value_name = "N", default_value_t = 4, value_parser = clap::value_parser!(u8).range(3..=5))]
    pub hint_count: u8,
    /// Training pairs in the manifest [count] (default: one per render)
    #[arg(long, value_name = "N")]
    pub records: Option<usize>,
    /// Procedural environment maps in the pool [count]
    #[arg(long, value_name = "N", default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub env_maps: u32,
    /// Width of each environment map [texels]
    #[arg(long, value_name = "PX", default_value_t = 128, value_parser = clap::value_parser!(u32).range(2..))]
    pub env_width: u32,
    /// Icosphere subdivision level of the objects [count]
    #[arg(long, value_name = "N", default_value_t = 5, value_parser = clap::value_parser!(u32).range(0..=7))]
    pub object_detail: u32,
    /// Write only the manifest, skipping all rendering
    #[arg(long)]
    pub manifest_only: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Multiplied,
    Direct,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PackArgs {
    /// Directory holding hint0.pfm, hint1.pfm, ...
    #[arg(long, value_name = "DIR")]
    pub hints: PathBuf,
    /// Number of hints to read (3, 4 or 5)
    #[arg(long, value_name = "N", default_value_t = 4, value_parser = clap::value_parser!(u8).range(3..=5))]
    pub count: u8,
    /// Foreground mask (8-bit PNG)
    #[arg(long, value_name = "FILE")]
    pub mask: PathBuf,
    /// Channel layout of the packet
    #[arg(long, value_enum, default_value_t = Layout::Multiplied)]
    pub layout: Layout,
    /// Provisional image (PFM); required for the direct layout
    #[arg(long, value_name = "FILE", required_if_eq("layout", "direct"))]
    pub provisional: Option<PathBuf>,
    /// Feature map as a DLCP file with 3 channels per hint (multiplied layout; default: provisional RGB tiled per hint)
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    /// Leave the mask channel out (ablation)
    #[arg(long)]
    pub no_mask: bool,
    /// Lighting id recorded in the sidecar
    #[arg(long, value_name = "ID")]
    pub lighting_id: Option<String>,
    /// Camera id recorded in the sidecar
    #[arg(long, value_name = "ID")]
    pub camera_id: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackplateArgs {
    /// Environment map (.hdr or .pfm, 2:1 equirectangular)
    #[arg(long, value_name = "FILE")]
    pub env: PathBuf,
    /// Rotation of the environment about +Y [radians]
    #[arg(long, value_name = "RAD", default_value_t = 0.0, allow_negative_numbers = true)]
    pub rotation: f64,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Image width [pixels]
    #[arg(long, value_name = "PX", default_value_t = 512, value_parser = clap::value_parser!(u32).range(2..))]
    pub width: u32,
    /// Image height [pixels]
    #[arg(long, value_name = "PX", default_value_t = 512, value_parser = clap::value_parser!(u32).range(2..))]
    pub height: u32,
    /// Foreground render (PFM) to composite over the backplate (needs --mask)
    #[arg(long, value_name = "FILE", requires = "mask")]
    pub foreground: Option<PathBuf>,
    /// Foreground mask (8-bit PNG), box-filtered 3×3 before blending
    #[arg(long, value_name = "FILE", requires = "foreground")]
    pub mask: Option<PathBuf>,
    /// Also write an sRGB .png preview
    #[arg(long)]
    pub previews: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec3_parsing() {
        assert_eq!(parse_vec3("1, -2.5,3").unwrap(), [1.0, -2.5, 3.0]);
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,2,x").is_err());
        assert!(parse_vec3("1,2,inf").is_err());
    }

    #[test]
    fn range_parsers() {
        assert!(parse_unit("1.5").is_err());
        assert!(parse_positive("0").is_err());
        assert!(parse_fov("90").is_err());
        assert_eq!(parse_fov("27.5").unwrap(), 27.5);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
