use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::image::HdrImage;
use crate::math::{luminance, rotate_y, spherical_y_up, to_spherical_y_up, DVec3};
use crate::rng::Rng;

/// Equirectangular (2:1) radiance map with +Y up: `u = azimuth / 2π`,
/// `v = polar / π`, azimuth measured from +X towards +Z.
///
/// Importance sampling is piecewise constant per texel in solid angle, with
/// texel weight `luminance × texel solid angle`.
#[derive(Clone, Debug)]
pub struct EnvMap {
    width: usize,
    height: usize,
    texels: Vec<[f32; 3]>,
    /// Unnormalized texel weights, row-major.
    weights: Vec<f64>,
    /// Marginal CDF over rows, `height + 1` entries from 0 to 1.
    marginal: Vec<f64>,
    /// Per-row conditional CDFs, `(width + 1) × height` entries.
    conditional: Vec<f64>,
    total_weight: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EnvSample {
    pub direction: DVec3,
    pub pdf: f64,
}

impl EnvMap {
    pub fn from_image(image: &HdrImage) -> Result<Self> {
        Self::new(image.width, image.height, image.pixels.clone())
    }

    pub fn new(width: usize, height: usize, texels: Vec<[f32; 3]>) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::InvalidEnvMap(format!(
                "{width}x{height} is not a 2:1 equirectangular map"
            )));
        }
        if texels.len() != width * height {
            return Err(Error::InvalidEnvMap("texel count does not match size".into()));
        }
        if texels
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidEnvMap("texels must be finite and non-negative".into()));
        }
        let mut map = EnvMap {
            width,
            height,
            texels,
            weights: Vec::new(),
            marginal: Vec::new(),
            conditional: Vec::new(),
            total_weight: 0.0,
        };
        map.build_tables();
        Ok(map)
    }

    pub fn uniform(width: usize, radiance: [f32; 3]) -> Self {
        Self::new(width, width / 2, vec![radiance; width * (width / 2)])
            .expect("uniform map is valid")
    }

    /// Loads a Radiance `.hdr` or `.pfm` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        let image = match ext.as_deref() {
            Some("pfm") => HdrImage::read_pfm(path)?,
            Some("hdr") => HdrImage::read_hdr(path)?,
            _ => {
                return Err(Error::format(path, "expected a .hdr or .pfm environment map"));
            }
        };
        Self::from_image(&image)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texels(&self) -> &[[f32; 3]] {
        &self.texels
    }

    pub fn to_image(&self) -> HdrImage {
        HdrImage {
            width: self.width,
            height: self.height,
            pixels: self.texels.clone(),
            alpha: None,
        }
    }

    fn row_cos_bounds(&self, row: usize) -> (f64, f64) {
        let t0 = PI * row as f64 / self.height as f64;
        let t1 = PI * (row + 1) as f64 / self.height as f64;
        (t0.cos(), t1.cos())
    }

    /// Solid angle of one texel in `row`.
    pub fn texel_solid_angle(&self, row: usize) -> f64 {
        let (c0, c1) = self.row_cos_bounds(row);
        2.0 * PI / self.width as f64 * (c0 - c1)
    }

    fn build_tables(&mut self) {
        let (w, h) = (self.width, self.height);
        let lum: Vec<f64> = self
            .texels
            .iter()
            .map(|t| luminance(DVec3::new(t[0] as f64, t[1] as f64, t[2] as f64)).max(0.0))
            .collect();
        let all_dark = lum.iter().all(|&l| l == 0.0);
        let mut weights = vec![0.0; w * h];
        for row in 0..h {
            let omega = self.texel_solid_angle(row);
            for col in 0..w {
                let l = if all_dark { 1.0 } else { lum[row * w + col] };
                weights[row * w + col] = l * omega;
            }
        }
        let mut conditional = vec![0.0; (w + 1) * h];
        let mut row_sums = vec![0.0; h];
        for row in 0..h {
            let cdf = &mut conditional[row * (w + 1)..(row + 1) * (w + 1)];
            for col in 0..w {
                cdf[col + 1] = cdf[col] + weights[row * w + col];
            }
            let sum = cdf[w];
            row_sums[row] = sum;
            if sum > 0.0 {
                cdf.iter_mut().for_each(|c| *c /= sum);
            } else {
                for (col, c) in cdf.iter_mut().enumerate() {
                    *c = col as f64 / w as f64;
                }
            }
            cdf[w] = 1.0;
        }
        let mut marginal = vec![0.0; h + 1];
        for row in 0..h {
            marginal[row + 1] = marginal[row] + row_sums[row];
        }
        let total = marginal[h];
        marginal.iter_mut().for_each(|m| *m /= total);
        marginal[h] = 1.0;
        self.weights = weights;
        self.conditional = conditional;
        self.marginal = marginal;
        self.total_weight = total;
    }

    pub fn marginal_cdf(&self) -> &[f64] {
        &self.marginal
    }

    pub fn conditional_cdf(&self, row: usize) -> &[f64] {
        &self.conditional[row * (self.width + 1)..(row + 1) * (self.width + 1)]
    }

    /// Texel containing a map-space direction.
    pub fn texel_of(&self, direction: DVec3) -> (usize, usize) {
        let (polar, azimuth) = to_spherical_y_up(direction);
        let col = ((azimuth / (2.0 * PI) * self.width as f64) as usize).min(self.width - 1);
        let row = ((polar / PI * self.height as f64) as usize).min(self.height - 1);
        (col, row)
    }

    /// Bilinear radiance lookup along `direction`, with the map rotated by
    /// `rotation` radians about +Y.
    pub fn eval(&self, direction: DVec3, rotation: f64) -> DVec3 {
        let d = rotate_y(direction, -rotation);
        let (polar, azimuth) = to_spherical_y_up(d);
        let x = azimuth / (2.0 * PI) * self.width as f64 - 0.5;
        let y = (polar / PI * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor();
        let fx = x - x0;
        let y0 = y.floor();
        let fy = y - y0;
        let w = self.width as i64;
        let c0 = (x0 as i64).rem_euclid(w) as usize;
        let c1 = (x0 as i64 + 1).rem_euclid(w) as usize;
        let r0 = y0 as usize;
        let r1 = (r0 + 1).min(self.height - 1);
        let t = |c: usize, r: usize| {
            let v = self.texels[r * self.width + c];
            DVec3::new(v[0] as f64, v[1] as f64, v[2] as f64)
        };
        let top = t(c0, r0) * (1.0 - fx) + t(c1, r0) * fx;
        let bottom = t(c0, r1) * (1.0 - fx) + t(c1, r1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Nearest-texel radiance (the piecewise-constant reading used by the
    /// importance sampler).
    pub fn texel_radiance(&self, direction: DVec3, rotation: f64) -> DVec3 {
        let (c, r) = self.texel_of(rotate_y(direction, -rotation));
        let v = self.texels[r * self.width + c];
        DVec3::new(v[0] as f64, v[1] as f64, v[2] as f64)
    }

    pub fn sample(&self, rotation: f64, rng: &mut Rng) -> EnvSample {
        let row = pick(&self.marginal, rng.random());
        let col = pick(self.conditional_cdf(row), rng.random());
        let (c0, c1) = self.row_cos_bounds(row);
        let cos_t = c0 + (c1 - c0) * rng.random::<f64>();
        let azimuth = 2.0 * PI * (col as f64 + rng.random::<f64>()) / self.width as f64;
        let mut d = spherical_y_up(cos_t.clamp(-1.0, 1.0).acos(), azimuth);
        // keep the sample inside its texel despite rounding at the seams
        if self.texel_of(d) != (col, row) {
            d = spherical_y_up(
                PI * (row as f64 + 0.5) / self.height as f64,
                2.0 * PI * (col as f64 + 0.5) / self.width as f64,
            );
        }
        EnvSample {
            direction: rotate_y(d, rotation),
            pdf: self.texel_pdf(col, row),
        }
    }

    fn texel_pdf(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.width + col] / self.total_weight / self.texel_solid_angle(row)
    }

    /// Solid-angle density of [`EnvMap::sample`].
    pub fn pdf(&self, direction: DVec3, rotation: f64) -> f64 {
        let (c, r) = self.texel_of(rotate_y(direction, -rotation));
        self.texel_pdf(c, r)
    }

    /// Replaces every texel by its Rec.709 luminance.
    pub fn to_monochrome(&self) -> EnvMap {
        let texels = self
            .texels
            .iter()
            .map(|t| {
                let y = luminance(DVec3::new(t[0] as f64, t[1] as f64, t[2] as f64)) as f32;
                [y, y, y]
            })
            .collect();
        EnvMap::new(self.width, self.height, texels).expect("luminance map is valid")
    }
}

/// Index of the CDF bin containing `u ∈ [0, 1)`; such a bin always has
/// non-zero width.
fn pick(cdf: &[f64], u: f64) -> usize {
    let n = cdf.len() - 1;
    cdf.partition_point(|&c| c <= u).saturating_sub(1).min(n - 1)
}
