//! Disney BRDF subset: Lambertian diffuse plus a GGX (Trowbridge-Reitz)
//! specular lobe with height-correlated Smith masking-shadowing and Schlick
//! Fresnel. Roughness maps to the GGX width as `alpha = roughness²`.

use std::f64::consts::{FRAC_1_PI, PI};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{cosine_hemisphere, cosine_hemisphere_pdf, luminance, reflect, DVec2, DVec3, Frame};
use crate::rng::Rng;

pub const MIN_ROUGHNESS: f64 = 0.02;

/// Roughness of the specular hints, in hint order.
pub const HINT_ROUGHNESS: [f64; 4] = [0.34, 0.13, 0.05, 0.02];

/// Augmentation roughness range (log-uniform).
pub const AUGMENT_ROUGHNESS: (f64, f64) = (0.02, 0.5);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisneyParams {
    pub base_color: DVec3,
    pub roughness: f64,
    /// 0 (dielectric) or 1 (conductor).
    pub metallic: f64,
    /// Dielectric specular level; 0 disables the dielectric specular lobe.
    #[serde(default = "default_specular")]
    pub specular: f64,
    pub specular_tint: f64,
}

fn default_specular() -> f64 {
    0.5
}

impl DisneyParams {
    /// Pure Lambertian reflector.
    pub fn diffuse(albedo: DVec3) -> Self {
        DisneyParams {
            base_color: albedo,
            roughness: 1.0,
            metallic: 0.0,
            specular: 0.0,
            specular_tint: 0.0,
        }
    }

    /// White metallic GGX reflector.
    pub fn white_metal(roughness: f64) -> Self {
        DisneyParams {
            base_color: DVec3::ONE,
            roughness,
            metallic: 1.0,
            specular: 0.5,
            specular_tint: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.base_color.to_array().into_iter().all(unit) {
            return Err(Error::InvalidParameter(format!(
                "base color {} outside [0, 1]",
                self.base_color
            )));
        }
        if !(MIN_ROUGHNESS..=1.0).contains(&self.roughness) {
            return Err(Error::InvalidParameter(format!(
                "roughness {} outside [{MIN_ROUGHNESS}, 1]",
                self.roughness
            )));
        }
        if self.metallic != 0.0 && self.metallic != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "metallic {} must be 0 or 1",
                self.metallic
            )));
        }
        if !unit(self.specular) || !unit(self.specular_tint) {
            return Err(Error::InvalidParameter("specular / specular tint outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.roughness * self.roughness
    }

    /// Normal-incidence specular reflectance color.
    pub fn specular_f0(&self) -> DVec3 {
        let lum = luminance(self.base_color);
        let tint = if lum > 0.0 {
            self.base_color / lum
        } else {
            DVec3::ONE
        };
        let dielectric = 0.08 * self.specular * DVec3::ONE.lerp(tint, self.specular_tint);
        dielectric.lerp(self.base_color, self.metallic)
    }

    fn diffuse_weight(&self) -> DVec3 {
        self.base_color * (1.0 - self.metallic)
    }

    fn has_specular(&self) -> bool {
        self.specular_f0().max_element() > 0.0
    }

    /// Probability of picking the specular lobe when sampling.
    fn specular_probability(&self) -> f64 {
        let wd = luminance(self.diffuse_weight());
        let ws = if self.has_specular() {
            luminance(self.specular_f0()).max(1e-4)
        } else {
            0.0
        };
        match (wd > 0.0, ws > 0.0) {
            (false, false) => 0.0,
            (true, false) => 0.0,
            (false, true) => 1.0,
            (true, true) => (ws / (ws + wd)).clamp(0.25, 0.75),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintKind {
    DiffuseHint,
    SpecularHint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyMaterial {
    pub kind: HintKind,
    pub params: DisneyParams,
    pub hint_index: usize,
}

/// Proxy materials for `count` radiance hints: one gray diffuse hint followed
/// by white metallic GGX hints of decreasing roughness.
pub fn hint_materials(count: usize) -> Result<Vec<ProxyMaterial>> {
    if !(3..=5).contains(&count) {
        return Err(Error::UnsupportedHintCount(count));
    }
    let mut out = vec![ProxyMaterial {
        kind: HintKind::DiffuseHint,
        params: DisneyParams::diffuse(DVec3::splat(0.8)),
        hint_index: 0,
    }];
    out.extend(HINT_ROUGHNESS[..count - 1].iter().enumerate().map(|(i, &r)| ProxyMaterial {
        kind: HintKind::SpecularHint,
        params: DisneyParams::white_metal(r),
        hint_index: i + 1,
    }));
    Ok(out)
}

/// Homogeneous training material: uniform diffuse albedo, log-uniform
/// roughness and fully tinted dielectric specular.
pub fn sample_augmented_material(rng: &mut Rng) -> DisneyParams {
    let (lo, hi) = AUGMENT_ROUGHNESS;
    let roughness = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    DisneyParams {
        base_color: DVec3::new(rng.random(), rng.random(), rng.random()),
        roughness: roughness.clamp(lo, hi),
        metallic: 0.0,
        specular: 0.5,
        specular_tint: 1.0,
    }
}

// ---- GGX pieces, all in the local shading frame (normal = +Z) ----

pub fn ggx_d(alpha: f64, cos_h: f64) -> f64 {
    if cos_h <= 0.0 {
        return 0.0;
    }
    let a2 = alpha * alpha;
    let c2 = cos_h * cos_h;
    let t = c2 * (a2 - 1.0) + 1.0;
    a2 / (PI * t * t)
}

fn smith_lambda(alpha: f64, w: DVec3) -> f64 {
    let c2 = w.z * w.z;
    let s2 = (1.0 - c2).max(0.0);
    if s2 == 0.0 {
        return 0.0;
    }
    let tan2 = s2 / c2;
    0.5 * (-1.0 + (1.0 + alpha * alpha * tan2).sqrt())
}

fn smith_g1(alpha: f64, w: DVec3) -> f64 {
    1.0 / (1.0 + smith_lambda(alpha, w))
}

fn smith_g2(alpha: f64, wi: DVec3, wo: DVec3) -> f64 {
    1.0 / (1.0 + smith_lambda(alpha, wi) + smith_lambda(alpha, wo))
}

fn schlick(f0: DVec3, cos: f64) -> DVec3 {
    let m = (1.0 - cos).clamp(0.0, 1.0);
    let m5 = m * m * m * m * m;
    f0 + (DVec3::ONE - f0) * m5
}

/// Heitz's visible-normal sampling for an isotropic GGX.
fn sample_vndf(alpha: f64, wo: DVec3, u: DVec2) -> DVec3 {
    let vh = DVec3::new(alpha * wo.x, alpha * wo.y, wo.z).normalize();
    let lensq = vh.x * vh.x + vh.y * vh.y;
    let t1 = if lensq > 0.0 {
        DVec3::new(-vh.y, vh.x, 0.0) / lensq.sqrt()
    } else {
        DVec3::X
    };
    let t2 = vh.cross(t1);
    let r = u.x.sqrt();
    let phi = 2.0 * PI * u.y;
    let p1 = r * phi.cos();
    let mut p2 = r * phi.sin();
    let s = 0.5 * (1.0 + vh.z);
    p2 = (1.0 - s) * (1.0 - p1 * p1).max(0.0).sqrt() + s * p2;
    let nh = p1 * t1 + p2 * t2 + (1.0 - p1 * p1 - p2 * p2).max(0.0).sqrt() * vh;
    DVec3::new(alpha * nh.x, alpha * nh.y, nh.z.max(0.0)).normalize()
}

fn eval_local(m: &DisneyParams, wi: DVec3, wo: DVec3) -> DVec3 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return DVec3::ZERO;
    }
    let mut f = m.diffuse_weight() * FRAC_1_PI;
    if m.has_specular() {
        let h = (wi + wo).normalize();
        let alpha = m.alpha();
        let d = ggx_d(alpha, h.z);
        let g = smith_g2(alpha, wi, wo);
        let fr = schlick(m.specular_f0(), wi.dot(h));
        f += fr * (d * g / (4.0 * wi.z * wo.z));
    }
    f
}

fn pdf_local(m: &DisneyParams, wi: DVec3, wo: DVec3) -> f64 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    let ps = m.specular_probability();
    let mut pdf = (1.0 - ps) * cosine_hemisphere_pdf(wi.z);
    if ps > 0.0 {
        let h = (wi + wo).normalize();
        let alpha = m.alpha();
        pdf += ps * smith_g1(alpha, wo) * ggx_d(alpha, h.z) / (4.0 * wo.z);
    }
    pdf
}

/// BRDF value (per steradian) for light arriving from `incoming` and leaving
/// towards `outgoing`. Zero below the horizon of `normal`.
pub fn eval_brdf(m: &DisneyParams, incoming: DVec3, outgoing: DVec3, normal: DVec3) -> DVec3 {
    let frame = Frame::from_normal(normal);
    eval_local(m, frame.to_local(incoming), frame.to_local(outgoing))
}

/// Solid-angle density of [`sample_brdf`].
pub fn pdf_brdf(m: &DisneyParams, incoming: DVec3, outgoing: DVec3, normal: DVec3) -> f64 {
    let frame = Frame::from_normal(normal);
    pdf_local(m, frame.to_local(incoming), frame.to_local(outgoing))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrdfSample {
    pub incoming: DVec3,
    pub pdf: f64,
    /// `eval · cosθ / pdf`
    pub weight: DVec3,
}

/// Draws an incoming direction from the lobe mixture. Returns `None` when the
/// sampled direction falls below the horizon.
pub fn sample_brdf(m: &DisneyParams, outgoing: DVec3, normal: DVec3, rng: &mut Rng) -> Option<BrdfSample> {
    let frame = Frame::from_normal(normal);
    let wo = frame.to_local(outgoing);
    if wo.z <= 0.0 {
        return None;
    }
    let ps = m.specular_probability();
    let u = DVec2::new(rng.random(), rng.random());
    let wi = if rng.random::<f64>() < ps {
        let h = sample_vndf(m.alpha(), wo, u);
        reflect(wo, h)
    } else {
        cosine_hemisphere(u)
    };
    if wi.z <= 0.0 {
        return None;
    }
    let pdf = pdf_local(m, wi, wo);
    if !(pdf > 0.0) {
        return None;
    }
    let f = eval_local(m, wi, wo);
    Some(BrdfSample {
        incoming: frame.to_world(wi),
        pdf,
        weight: f * (wi.z / pdf),
    })
}
