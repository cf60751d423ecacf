//! Linear RGB images and their on-disk formats.
//!
//! - PPM: `P6\n<w> <h>\n255\n`, then rows top to bottom, 8-bit RGB after
//!   clamping to `[0, 1]` and gamma 2.2 encoding (`round(255 * v^(1/2.2))`).
//! - PFM: `PF\n<w> <h>\n-1.0\n`, then rows bottom to top, little-endian `f32`
//!   RGB, linear.
//! - Sample-id maps: row-major little-endian `u64`, top row first, no header;
//!   `u64::MAX` marks a pixel without a sample.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Marker for pixels without a sample in id maps.
pub const NO_SAMPLE: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub data: Vec<Vec3>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![Vec3::ZERO; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<Vec3>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(width, height, data.len(), 1));
        }
        Ok(Image { width, height, data })
    }

    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: Vec3) {
        self.data[y * self.width + x] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_size(&self, o: &Image) -> Result<()> {
        if self.width != o.width || self.height != o.height {
            return Err(Error::DimensionMismatch(self.width, self.height, o.width, o.height));
        }
        Ok(())
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for v in &self.data {
            for c in v.to_array() {
                out.push(encode_gamma(c));
            }
        }
        out
    }

    pub fn to_pfm(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                for c in self.get(x, y).to_array() {
                    out.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_pfm(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::ImageFormat {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not text"))?);
        }
        pos += 1;
        if fields[0] != "PF" {
            return Err(bad("not a color PFM"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
        let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
        if scale >= 0.0 {
            return Err(bad("only little-endian PFM is supported"));
        }
        let body = bytes.get(pos..).ok_or_else(|| bad("truncated data"))?;
        if body.len() != width * height * 12 {
            return Err(bad("pixel data has the wrong length"));
        }
        let mut img = Image::new(width, height);
        for (i, px) in body.chunks_exact(12).enumerate() {
            let f = |k: usize| f32::from_le_bytes(px[4 * k..4 * k + 4].try_into().unwrap()) as f64;
            let (x, row) = (i % width, i / width);
            img.set(x, height - 1 - row, Vec3::new(f(0), f(1), f(2)));
        }
        Ok(img)
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_ppm())
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_pfm())
    }

    pub fn read_pfm(path: &Path) -> Result<Self> {
        Image::from_pfm(&std::fs::read(path)?, path)
    }
}

fn encode_gamma(c: f64) -> u8 {
    let c = if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.0 };
    (255.0 * c.powf(1.0 / 2.2)).round() as u8
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn write_ids(path: &Path, ids: &[u64]) -> Result<()> {
    let bytes: Vec<u8> = ids.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_file(path, &bytes)
}

pub fn read_ids(path: &Path) -> Result<Vec<u64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::ImageFormat {
            path: path.to_path_buf(),
            reason: "id map length is not a multiple of 8".into(),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Grayscale PPM of nonnegative counts, scaled so `max` maps to white.
pub fn heatmap_ppm(counts: &[u32], width: usize, height: usize, max: u32) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    let max = max.max(1) as f64;
    for &c in counts {
        let v = (255.0 * (c as f64 / max).min(1.0)).round() as u8;
        out.extend_from_slice(&[v, v, v]);
    }
    out
}
