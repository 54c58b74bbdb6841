//! Conditioning layouts built from radiance hints: the multiplied stack
//! (feature map × hints, then mask), the direct stack (provisional RGB, hints,
//! mask), joint RGB permutation, backplate compositing and the DLCP container.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::brdf::hint_materials;
use crate::error::{Error, Result};
use crate::geometry::ForegroundMask;
use crate::image::HdrImage;

pub const DLCP_MAGIC: [u8; 4] = *b"DLCP";
pub const DLCP_VERSION: u32 = 1;
const DLCP_HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4 + 4;

/// Hint images in material order: diffuse first, then descending roughness.
#[derive(Clone, Debug, PartialEq)]
pub struct RadianceHintSet {
    pub hints: Vec<HdrImage>,
    pub alpha: Option<Vec<f32>>,
    pub lighting_id: Option<String>,
    pub camera_id: Option<String>,
}

impl RadianceHintSet {
    pub fn new(hints: Vec<HdrImage>) -> Result<Self> {
        hint_materials(hints.len())?;
        let (w, h) = hints[0].dims();
        for img in &hints[1..] {
            if img.dims() != (w, h) {
                return Err(Error::DimensionMismatch {
                    expected: (w, h),
                    found: img.dims(),
                });
            }
            if img.alpha != hints[0].alpha {
                return Err(Error::InvalidParameter("hints must share one alpha channel".into()));
            }
        }
        Ok(RadianceHintSet {
            alpha: hints[0].alpha.clone(),
            hints,
            lighting_id: None,
            camera_id: None,
        })
    }

    pub fn with_ids(mut self, lighting_id: impl Into<String>, camera_id: impl Into<String>) -> Self {
        self.lighting_id = Some(lighting_id.into());
        self.camera_id = Some(camera_id.into());
        self
    }

    pub fn hint_count(&self) -> usize {
        self.hints.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.hints[0].dims()
    }

    /// Channel `c` of the flattened stack (hint 0 R, G, B, hint 1 R, ...).
    pub fn flat_channel(&self, c: usize) -> Vec<f32> {
        self.hints[c / 3].channel(c % 3)
    }
}

/// One of the six orderings of the RGB channels. Output channel `i` takes
/// input channel `order()[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ColorPermutation {
    Rgb,
    Rbg,
    Grb,
    Gbr,
    Brg,
    Bgr,
}

impl ColorPermutation {
    pub const ALL: [ColorPermutation; 6] = [
        ColorPermutation::Rgb,
        ColorPermutation::Rbg,
        ColorPermutation::Grb,
        ColorPermutation::Gbr,
        ColorPermutation::Brg,
        ColorPermutation::Bgr,
    ];

    pub fn order(self) -> [usize; 3] {
        match self {
            ColorPermutation::Rgb => [0, 1, 2],
            ColorPermutation::Rbg => [0, 2, 1],
            ColorPermutation::Grb => [1, 0, 2],
            ColorPermutation::Gbr => [1, 2, 0],
            ColorPermutation::Brg => [2, 0, 1],
            ColorPermutation::Bgr => [2, 1, 0],
        }
    }

    pub fn id(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).unwrap()
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn from_order(order: [usize; 3]) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.order() == order)
    }

    pub fn inverse(self) -> Self {
        let o = self.order();
        let mut inv = [0; 3];
        for (i, &src) in o.iter().enumerate() {
            inv[src] = i;
        }
        Self::from_order(inv).unwrap()
    }

    pub fn apply(self, rgb: [f32; 3]) -> [f32; 3] {
        let o = self.order();
        [rgb[o[0]], rgb[o[1]], rgb[o[2]]]
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorPermutation::Rgb => "RGB",
            ColorPermutation::Rbg => "RBG",
            ColorPermutation::Grb => "GRB",
            ColorPermutation::Gbr => "GBR",
            ColorPermutation::Brg => "BRG",
            ColorPermutation::Bgr => "BGR",
        }
    }
}

impl std::str::FromStr for ColorPermutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown color permutation `{s}`")))
    }
}

/// Applies the same permutation to every image; alpha is left alone.
pub fn permute_color_channels(images: &[HdrImage], perm: ColorPermutation) -> Vec<HdrImage> {
    images
        .iter()
        .map(|img| HdrImage {
            pixels: img.pixels.iter().map(|&p| perm.apply(p)).collect(),
            ..img.clone()
        })
        .collect()
}

pub fn permute_hint_set(set: &RadianceHintSet, perm: ColorPermutation) -> RadianceHintSet {
    RadianceHintSet {
        hints: permute_color_channels(&set.hints, perm),
        ..set.clone()
    }
}

/// Planar multi-channel float map, e.g. an encoded provisional image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f32>>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: Vec<Vec<f32>>) -> Result<Self> {
        for c in &channels {
            if c.len() != width * height {
                return Err(Error::InvalidParameter(format!(
                    "feature channel holds {} values, expected {}",
                    c.len(),
                    width * height
                )));
            }
        }
        Ok(FeatureMap { width, height, channels })
    }

    pub fn constant(width: usize, height: usize, count: usize, value: f32) -> Self {
        FeatureMap {
            width,
            height,
            channels: vec![vec![value; width * height]; count],
        }
    }
}

/// Repeats the provisional RGB once per hint; stands in for a learned
/// encoder in the non-encoded ablation.
pub fn tile_provisional_features(provisional: &HdrImage, hint_count: usize) -> FeatureMap {
    let rgb: Vec<Vec<f32>> = (0..3).map(|c| provisional.channel(c)).collect();
    FeatureMap {
        width: provisional.width,
        height: provisional.height,
        channels: (0..3 * hint_count).map(|c| rgb[c % 3].clone()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketLayout {
    Multiplied,
    Direct,
}

impl PacketLayout {
    pub fn code(self) -> u8 {
        match self {
            PacketLayout::Multiplied => 0,
            PacketLayout::Direct => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PacketLayout::Multiplied),
            1 => Some(PacketLayout::Direct),
            _ => None,
        }
    }

    /// Channels for `hint_count` hints, with or without the trailing mask.
    pub fn channel_count(self, hint_count: usize, with_mask: bool) -> usize {
        let base = match self {
            PacketLayout::Multiplied => 3 * hint_count,
            PacketLayout::Direct => 3 + 3 * hint_count,
        };
        base + with_mask as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lighting_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_id: Option<String>,
    pub hint_count: usize,
    pub has_mask: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlPacket {
    pub layout: PacketLayout,
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f32>>,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackOptions {
    pub include_mask: bool,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions { include_mask: true }
    }
}

impl ControlPacket {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn mask_channel(&self) -> Option<&[f32]> {
        self.provenance
            .has_mask
            .then(|| self.channels.last().map(Vec::as_slice))
            .flatten()
    }

    fn provenance_for(hints: &RadianceHintSet, has_mask: bool) -> Provenance {
        Provenance {
            object_id: None,
            lighting_id: hints.lighting_id.clone(),
            camera_id: hints.camera_id.clone(),
            hint_count: hints.hint_count(),
            has_mask,
        }
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes the binary container and its JSON provenance sidecar.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut header = Vec::with_capacity(DLCP_HEADER_LEN);
        header.extend_from_slice(&DLCP_MAGIC);
        header.extend_from_slice(&DLCP_VERSION.to_le_bytes());
        header.push(self.layout.code());
        header.extend_from_slice(&(self.width as u32).to_le_bytes());
        header.extend_from_slice(&(self.height as u32).to_le_bytes());
        header.extend_from_slice(&(self.channels.len() as u32).to_le_bytes());
        w.write_all(&header).map_err(|e| Error::io(path, e))?;
        for channel in &self.channels {
            let bytes: Vec<u8> = channel.iter().flat_map(|v| v.to_le_bytes()).collect();
            w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let sidecar = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&Sidecar {
            layout: self.layout,
            provenance: self.provenance.clone(),
        })?;
        fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
    }

    /// Reads a container; the sidecar is optional and only supplies ids.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < DLCP_HEADER_LEN {
            return Err(Error::format(path, "truncated DLCP header"));
        }
        if bytes[..4] != DLCP_MAGIC {
            return Err(Error::format(path, "bad DLCP magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != DLCP_VERSION {
            return Err(Error::format(path, format!("unsupported DLCP version {version}")));
        }
        let layout = PacketLayout::from_code(bytes[8])
            .ok_or_else(|| Error::format(path, format!("unknown layout code {}", bytes[8])))?;
        let width = u32_at(9) as usize;
        let height = u32_at(13) as usize;
        let count = u32_at(17) as usize;
        let plane = width * height;
        let expected = DLCP_HEADER_LEN + 4 * plane * count;
        if bytes.len() != expected {
            return Err(Error::format(
                path,
                format!("payload is {} bytes, header implies {expected}", bytes.len()),
            ));
        }
        let channels: Vec<Vec<f32>> = bytes[DLCP_HEADER_LEN..]
            .chunks_exact(4 * plane.max(1))
            .take(count)
            .map(|chunk| {
                chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect()
            })
            .collect();
        let sidecar = Self::sidecar_path(path);
        let provenance = match fs::read_to_string(&sidecar) {
            Ok(text) => {
                let s: Sidecar = serde_json::from_str(&text)?;
                if s.layout != layout {
                    return Err(Error::format(&sidecar, "sidecar layout disagrees with header"));
                }
                s.provenance
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => infer_provenance(layout, count),
            Err(e) => return Err(Error::io(&sidecar, e)),
        };
        if layout.channel_count(provenance.hint_count, provenance.has_mask) != count {
            return Err(Error::ChannelMismatch {
                expected: layout.channel_count(provenance.hint_count, provenance.has_mask),
                found: count,
            });
        }
        Ok(ControlPacket {
            layout,
            width,
            height,
            channels,
            provenance,
        })
    }
}

fn infer_provenance(layout: PacketLayout, count: usize) -> Provenance {
    let body = match layout {
        PacketLayout::Multiplied => count,
        PacketLayout::Direct => count.saturating_sub(3),
    };
    Provenance {
        hint_count: body / 3,
        has_mask: body % 3 == 1,
        ..Default::default()
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    layout: PacketLayout,
    provenance: Provenance,
}

fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Provisional RGB, then every hint's RGB, then the mask.
pub fn pack_direct(
    provisional: &HdrImage,
    hints: &RadianceHintSet,
    mask: &ForegroundMask,
    opts: PackOptions,
) -> Result<ControlPacket> {
    let dims = hints.dims();
    check_dims(dims, provisional.dims())?;
    check_dims(dims, mask.dims())?;
    let mut channels: Vec<Vec<f32>> = (0..3).map(|c| provisional.channel(c)).collect();
    channels.extend((0..3 * hints.hint_count()).map(|c| hints.flat_channel(c)));
    if opts.include_mask {
        channels.push(mask.coverage.clone());
    }
    Ok(ControlPacket {
        layout: PacketLayout::Direct,
        width: dims.0,
        height: dims.1,
        channels,
        provenance: ControlPacket::provenance_for(hints, opts.include_mask),
    })
}

/// Channel-wise product of the feature map with the flattened hints, then
/// the mask.
pub fn pack_multiplied(
    features: &FeatureMap,
    hints: &RadianceHintSet,
    mask: &ForegroundMask,
    opts: PackOptions,
) -> Result<ControlPacket> {
    let dims = hints.dims();
    check_dims(dims, (features.width, features.height))?;
    check_dims(dims, mask.dims())?;
    let expected = 3 * hints.hint_count();
    if features.channels.len() != expected {
        return Err(Error::ChannelMismatch {
            expected,
            found: features.channels.len(),
        });
    }
    let mut channels: Vec<Vec<f32>> = features
        .channels
        .iter()
        .enumerate()
        .map(|(c, f)| {
            let h = hints.flat_channel(c);
            f.iter().zip(&h).map(|(a, b)| a * b).collect()
        })
        .collect();
    if opts.include_mask {
        channels.push(mask.coverage.clone());
    }
    Ok(ControlPacket {
        layout: PacketLayout::Multiplied,
        width: dims.0,
        height: dims.1,
        channels,
        provenance: ControlPacket::provenance_for(hints, opts.include_mask),
    })
}

/// 3×3 box filter with clamp-to-edge addressing.
pub fn box_filter_3x3(width: usize, height: usize, values: &[f32]) -> Vec<f32> {
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0.0f64;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let sx = (x as i64 + dx).clamp(0, width as i64 - 1) as usize;
                    let sy = (y as i64 + dy).clamp(0, height as i64 - 1) as usize;
                    sum += values[sy * width + sx] as f64;
                }
            }
            out[y * width + x] = (sum / 9.0) as f32;
        }
    }
    out
}

/// Blends a foreground render over a backplate with the box-filtered mask.
pub fn composite(foreground: &HdrImage, background: &HdrImage, mask: &ForegroundMask) -> Result<HdrImage> {
    let dims = foreground.dims();
    check_dims(dims, background.dims())?;
    check_dims(dims, mask.dims())?;
    let m = box_filter_3x3(dims.0, dims.1, &mask.coverage);
    let pixels = foreground
        .pixels
        .iter()
        .zip(&background.pixels)
        .zip(&m)
        .map(|((fg, bg), &w)| {
            let w = w as f64;
            let mut out = [0f32; 3];
            for c in 0..3 {
                let (f, b) = (fg[c] as f64, bg[c] as f64);
                let v = (w * f + (1.0 - w) * b) as f32;
                out[c] = v.clamp(fg[c].min(bg[c]), fg[c].max(bg[c]));
            }
            out
        })
        .collect();
    Ok(HdrImage {
        width: dims.0,
        height: dims.1,
        pixels,
        alpha: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, k: f32) -> HdrImage {
        let mut img = HdrImage::new(w, h);
        for (i, p) in img.pixels.iter_mut().enumerate() {
            let t = i as f32 * k;
            *p = [t, 2.0 * t + 0.25, 1.0 - t];
        }
        img
    }

    fn hint_set(n: usize) -> RadianceHintSet {
        RadianceHintSet::new((0..n).map(|k| ramp(4, 3, 0.01 * (k + 1) as f32)).collect()).unwrap()
    }

    #[test]
    fn permutation_gbr_oracle() {
        let img = HdrImage::filled(1, 1, [0.1, 0.5, 0.9]);
        let out = permute_color_channels(&[img], ColorPermutation::Gbr);
        assert_eq!(out[0].pixels[0], [0.5, 0.9, 0.1]);
    }

    #[test]
    fn every_permutation_inverts() {
        let img = ramp(5, 2, 0.07);
        for p in ColorPermutation::ALL {
            let there = permute_color_channels(std::slice::from_ref(&img), p);
            let back = permute_color_channels(&there, p.inverse());
            assert_eq!(back[0], img);
            assert_eq!(ColorPermutation::from_id(p.id()), Some(p));
            assert_eq!(p.name().parse::<ColorPermutation>().unwrap(), p);
        }
        assert_eq!(ColorPermutation::Brg.inverse(), ColorPermutation::Gbr);
    }

    #[test]
    fn permutation_keeps_alpha() {
        let mut img = ramp(2, 2, 0.1);
        img.alpha = Some(vec![0.0, 0.25, 0.5, 1.0]);
        let out = permute_color_channels(std::slice::from_ref(&img), ColorPermutation::Bgr);
        assert_eq!(out[0].alpha, img.alpha);
    }

    #[test]
    fn direct_zero_inputs() {
        let hints = RadianceHintSet::new(vec![HdrImage::new(3, 2); 4]).unwrap();
        let p = pack_direct(&HdrImage::new(3, 2), &hints, &ForegroundMask::full(3, 2), PackOptions::default()).unwrap();
        assert_eq!(p.channel_count(), 16);
        assert!(p.channels[..15].iter().all(|c| c.iter().all(|&v| v == 0.0)));
        assert!(p.channels[15].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn direct_layout_recovers_hint0() {
        let hints = hint_set(4);
        let p = pack_direct(&ramp(4, 3, 0.3), &hints, &ForegroundMask::full(4, 3), PackOptions::default()).unwrap();
        for c in 0..3 {
            assert_eq!(p.channels[3 + c], hints.hints[0].channel(c));
        }
    }

    #[test]
    fn ablation_channel_counts() {
        for n in [3, 4, 5] {
            let hints = hint_set(n);
            let mask = ForegroundMask::full(4, 3);
            for include_mask in [true, false] {
                let opts = PackOptions { include_mask };
                let d = pack_direct(&ramp(4, 3, 0.1), &hints, &mask, opts).unwrap();
                assert_eq!(d.channel_count(), 3 + 3 * n + include_mask as usize);
                let m = pack_multiplied(&FeatureMap::constant(4, 3, 3 * n, 1.0), &hints, &mask, opts).unwrap();
                assert_eq!(m.channel_count(), 3 * n + include_mask as usize);
            }
        }
    }

    #[test]
    fn multiplied_identity_and_annihilator() {
        let hints = hint_set(4);
        let mask = ForegroundMask::full(4, 3);
        let p = pack_multiplied(&FeatureMap::constant(4, 3, 12, 1.0), &hints, &mask, PackOptions::default()).unwrap();
        assert_eq!(p.channel_count(), 13);
        for c in 0..12 {
            assert_eq!(p.channels[c], hints.flat_channel(c));
        }
        let zero = RadianceHintSet::new(vec![HdrImage::new(4, 3); 4]).unwrap();
        let feats = tile_provisional_features(&ramp(4, 3, 0.5), 4);
        let p = pack_multiplied(&feats, &zero, &mask, PackOptions::default()).unwrap();
        assert!(p.channels[..12].iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn multiplied_rejects_wrong_feature_count() {
        let hints = hint_set(4);
        let err = pack_multiplied(&FeatureMap::constant(4, 3, 9, 1.0), &hints, &ForegroundMask::full(4, 3), PackOptions::default());
        assert!(matches!(err, Err(Error::ChannelMismatch { expected: 12, found: 9 })));
    }

    #[test]
    fn hint_set_rejects_bad_inputs() {
        assert!(matches!(RadianceHintSet::new(vec![HdrImage::new(2, 2); 2]), Err(Error::UnsupportedHintCount(2))));
        let mut v = vec![HdrImage::new(2, 2); 4];
        v[2] = HdrImage::new(2, 3);
        assert!(matches!(RadianceHintSet::new(v), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let hints = hint_set(4);
        let err = pack_direct(&HdrImage::new(5, 3), &hints, &ForegroundMask::full(4, 3), PackOptions::default());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dlcp_round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dlcp");
        let hints = hint_set(4).with_ids("light7", "cam2");
        let mut feats = FeatureMap::constant(4, 3, 12, 1.0);
        feats.channels[5][1] = f32::from_bits(0x0000_0001);
        feats.channels[6][2] = -0.0;
        let p = pack_multiplied(&feats, &hints, &ForegroundMask::full(4, 3), PackOptions::default()).unwrap();
        p.write(&path).unwrap();
        let q = ControlPacket::read(&path).unwrap();
        assert_eq!(q.layout, p.layout);
        assert_eq!(q.provenance, p.provenance);
        for (a, b) in p.channels.iter().zip(&q.channels) {
            let ab: Vec<u32> = a.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u32> = b.iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn dlcp_header_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dlcp");
        let hints = hint_set(3);
        let p = pack_direct(&ramp(4, 3, 0.2), &hints, &ForegroundMask::full(4, 3), PackOptions::default()).unwrap();
        p.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"DLCP");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 1);
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[13..17].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[17..21].try_into().unwrap()), 13);
        assert_eq!(bytes.len(), 21 + 13 * 12 * 4);
        // first payload float is provisional R at pixel 0
        assert_eq!(f32::from_le_bytes(bytes[21..25].try_into().unwrap()), p.channels[0][0]);

        std::fs::remove_file(ControlPacket::sidecar_path(&path)).unwrap();
        let q = ControlPacket::read(&path).unwrap();
        assert_eq!(q.provenance.hint_count, 3);
        assert!(q.provenance.has_mask);
    }

    #[test]
    fn dlcp_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.dlcp");
        let p = pack_direct(&ramp(4, 3, 0.2), &hint_set(4), &ForegroundMask::full(4, 3), PackOptions::default()).unwrap();
        p.write(&path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(ControlPacket::read(&path), Err(Error::Format { .. })));

        std::fs::write(&path, &good[..good.len() - 4]).unwrap();
        assert!(matches!(ControlPacket::read(&path), Err(Error::Format { .. })));

        let mut bad = good.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(ControlPacket::read(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn box_filter_single_pixel() {
        let mut m = vec![0.0; 25];
        m[12] = 1.0;
        let f = box_filter_3x3(5, 5, &m);
        for y in 0..5 {
            for x in 0..5 {
                let near = (x as i32 - 2).abs() <= 1 && (y as i32 - 2).abs() <= 1;
                let want = if near { 1.0 / 9.0 } else { 0.0 };
                assert!((f[y * 5 + x] - want).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn box_filter_clamps_at_corner() {
        let mut m = vec![0.0; 9];
        m[0] = 1.0;
        let f = box_filter_3x3(3, 3, &m);
        // the corner sample is replicated into four taps of its own window
        assert!((f[0] - 4.0 / 9.0).abs() < 1e-7);
        assert!((f[1] - 2.0 / 9.0).abs() < 1e-7);
        assert!((f[4] - 1.0 / 9.0).abs() < 1e-7);
    }

    #[test]
    fn composite_extremes_are_exact() {
        let fg = ramp(4, 4, 0.03);
        let bg = ramp(4, 4, -0.02);
        assert_eq!(composite(&fg, &bg, &ForegroundMask::full(4, 4)).unwrap().pixels, fg.pixels);
        assert_eq!(composite(&fg, &bg, &ForegroundMask::empty(4, 4)).unwrap().pixels, bg.pixels);
    }
}
