//! HDR image container and the on-disk formats used across the pipeline:
//! PFM for linear float data, 8-bit PNG for masks and previews, and Radiance
//! HDR for environment maps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};

/// Linear RGB float image with an optional coverage channel.
#[derive(Clone, Debug, PartialEq)]
pub struct HdrImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f32; 3]>,
    pub alpha: Option<Vec<f32>>,
}

impl HdrImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, value: [f32; 3]) -> Self {
        HdrImage {
            width,
            height,
            pixels: vec![value; width * height],
            alpha: None,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f32; 3]) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn alpha_at(&self, x: usize, y: usize) -> Option<f32> {
        self.alpha.as_ref().map(|a| a[y * self.width + x])
    }

    /// Extracts channel `c` (0..3) as a plane.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.pixels.iter().map(|p| p[c]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Self> {
        let pfm = Pfm::read(path.as_ref())?;
        let pixels = match pfm.channels {
            3 => pfm.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            _ => pfm.data.iter().map(|&v| [v, v, v]).collect(),
        };
        Ok(HdrImage {
            width: pfm.width,
            height: pfm.height,
            pixels,
            alpha: None,
        })
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        let data: Vec<f32> = self.pixels.iter().flatten().copied().collect();
        Pfm {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
        .write(path.as_ref())
    }

    /// Writes the image as Radiance RGBE.
    pub fn write_hdr(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let buf: ImageBuffer<Rgb<f32>, Vec<f32>> = ImageBuffer::from_raw(
            self.width as u32,
            self.height as u32,
            self.pixels.iter().flatten().copied().collect(),
        )
        .expect("pixel buffer matches dimensions");
        DynamicImage::ImageRgb32F(buf)
            .save_with_format(path, ImageFormat::Hdr)
            .map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn read_hdr(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
        let rgb = img.to_rgb32f();
        let (w, h) = rgb.dimensions();
        Ok(HdrImage {
            width: w as usize,
            height: h as usize,
            pixels: rgb.pixels().map(|p| p.0).collect(),
            alpha: None,
        })
    }

    /// Clamped sRGB preview.
    pub fn write_png_preview(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .flatten()
            .map(|&v| (linear_to_srgb(v) * 255.0 + 0.5) as u8)
            .collect();
        let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, bytes)
                .expect("pixel buffer matches dimensions");
        buf.save_with_format(path, ImageFormat::Png)
            .map_err(|e| Error::format(path, e.to_string()))
    }
}

pub fn linear_to_srgb(v: f32) -> f32 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Raw portable float map, rows stored top to bottom in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Pfm {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut tokens = Vec::new();
        // header is three whitespace-separated tokens groups: id, dims, scale
        while tokens.len() < 4 {
            let mut line = String::new();
            let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
            if n == 0 {
                return Err(Error::format(path, "truncated PFM header"));
            }
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let channels = match tokens[0].as_str() {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(Error::format(path, format!("bad PFM magic `{other}`"))),
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(path, format!("bad PFM dimension `{s}`")))
        };
        let width = parse(&tokens[1])?;
        let height = parse(&tokens[2])?;
        let scale: f32 = tokens[3]
            .parse()
            .map_err(|_| Error::format(path, "bad PFM scale"))?;
        if width == 0 || height == 0 || scale == 0.0 || !scale.is_finite() {
            return Err(Error::format(path, "bad PFM header values"));
        }
        let little = scale < 0.0;
        let count = width * height * channels;
        let mut raw = vec![0u8; count * 4];
        reader
            .read_exact(&mut raw)
            .map_err(|_| Error::format(path, "truncated PFM payload"))?;
        let mut data = vec![0f32; count];
        let row = width * channels;
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
            // file rows run bottom to top
            let file_row = i / row;
            let col = i % row;
            data[(height - 1 - file_row) * row + col] = v;
        }
        Ok(Pfm {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        assert!(self.channels == 1 || self.channels == 3);
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let magic = if self.channels == 3 { "PF" } else { "Pf" };
        let io = |e| Error::io(path, e);
        write!(w, "{magic}\n{} {}\n-1.0\n", self.width, self.height).map_err(io)?;
        let row = self.width * self.channels;
        for y in (0..self.height).rev() {
            for v in &self.data[y * row..(y + 1) * row] {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

pub fn read_gray_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    Ok((w as usize, h as usize, gray.into_raw()))
}

pub fn write_gray_png(path: impl AsRef<Path>, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, data.to_vec())
            .ok_or_else(|| Error::format(path, "buffer does not match dimensions"))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}
