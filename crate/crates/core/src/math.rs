//! Small vector helpers shared by the geometry, shading and sampling code.

use std::f64::consts::{FRAC_1_PI, PI};

pub use glam::{DVec2, DVec3};

/// Rec.709 luminance weights for linear RGB.
pub const REC709: [f64; 3] = [0.2126, 0.7152, 0.0722];

pub fn luminance(rgb: DVec3) -> f64 {
    REC709[0] * rgb.x + REC709[1] * rgb.y + REC709[2] * rgb.z
}

pub fn luminance_f32(rgb: [f32; 3]) -> f32 {
    REC709[0] as f32 * rgb[0] + REC709[1] as f32 * rgb[1] + REC709[2] as f32 * rgb[2]
}

pub fn reflect(v: DVec3, n: DVec3) -> DVec3 {
    2.0 * v.dot(n) * n - v
}

/// Orthonormal basis around a unit normal; local +Z maps to the normal.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub tangent: DVec3,
    pub bitangent: DVec3,
    pub normal: DVec3,
}

impl Frame {
    pub fn from_normal(n: DVec3) -> Self {
        // Duff et al. branchless ONB
        let sign = 1f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let tangent = DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let bitangent = DVec3::new(b, sign + n.y * n.y * a, -n.y);
        Frame {
            tangent,
            bitangent,
            normal: n,
        }
    }

    pub fn to_local(&self, v: DVec3) -> DVec3 {
        DVec3::new(v.dot(self.tangent), v.dot(self.bitangent), v.dot(self.normal))
    }

    pub fn to_world(&self, v: DVec3) -> DVec3 {
        self.tangent * v.x + self.bitangent * v.y + self.normal * v.z
    }
}

pub fn cosine_hemisphere(u: DVec2) -> DVec3 {
    let r = u.x.sqrt();
    let phi = 2.0 * PI * u.y;
    DVec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u.x).max(0.0).sqrt())
}

pub fn cosine_hemisphere_pdf(cos_theta: f64) -> f64 {
    cos_theta.max(0.0) * FRAC_1_PI
}

pub fn uniform_sphere(u: DVec2) -> DVec3 {
    let z = 1.0 - 2.0 * u.x;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u.y;
    DVec3::new(r * phi.cos(), r * phi.sin(), z)
}

pub const UNIFORM_SPHERE_PDF: f64 = 1.0 / (4.0 * PI);

/// Unit direction for a polar angle measured from +Y and an azimuth measured
/// from +X towards +Z.
pub fn spherical_y_up(polar: f64, azimuth: f64) -> DVec3 {
    let s = polar.sin();
    DVec3::new(s * azimuth.cos(), polar.cos(), s * azimuth.sin())
}

/// Inverse of [`spherical_y_up`]: returns (polar in [0, π], azimuth in [0, 2π)).
pub fn to_spherical_y_up(d: DVec3) -> (f64, f64) {
    let polar = d.y.clamp(-1.0, 1.0).acos();
    let mut azimuth = d.z.atan2(d.x);
    if azimuth < 0.0 {
        azimuth += 2.0 * PI;
    }
    (polar, azimuth)
}

pub fn rotate_y(v: DVec3, angle: f64) -> DVec3 {
    // positive angle moves +X towards +Z, matching the azimuth convention above
    let (s, c) = angle.sin_cos();
    DVec3::new(c * v.x - s * v.z, v.y, s * v.x + c * v.z)
}

pub fn dvec3_from(rgb: [f32; 3]) -> DVec3 {
    DVec3::new(rgb[0] as f64, rgb[1] as f64, rgb[2] as f64)
}

pub fn to_rgb_f32(v: DVec3) -> [f32; 3] {
    [v.x as f32, v.y as f32, v.z as f32]
}
