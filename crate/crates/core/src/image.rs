//! Unit-interval RGB raster images and the pixel-space projections used by
//! every signal generator.
//!
//! Values live in `[0, 1]`. PNG round-trips use `v = byte / 255` on load and
//! round-half-up `round(v * 255)` on save.

use std::path::Path;

use crate::error::{Error, Result};

/// An H×W×3 raster with every channel value in `[0, 1]`.
///
/// Layout is row-major, channel-last: `data[(row * width + col) * 3 + ch]`.
/// Output shape always equals input shape across perturbation operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// All-zeros (black) image.
    pub fn zeros(height: usize, width: usize) -> Self {
        Image {
            height,
            width,
            data: vec![0.0; height * width * 3],
        }
    }

    /// Constant-color image.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        for v in rgb {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("fill value {v} outside [0,1]")));
            }
        }
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    /// Build from raw values; rejects wrong lengths and out-of-range entries.
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Dimension(format!(
                "expected {} values for {}x{}x3, got {}",
                height * width * 3,
                height,
                width,
                data.len()
            )));
        }
        for &v in &data {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("pixel value {v} outside [0,1]")));
            }
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    /// Build from raw values, clamping each entry into `[0, 1]`.
    pub fn from_vec_clipped(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Dimension(format!(
                "expected {} values for {}x{}x3, got {}",
                height * width * 3,
                height,
                width,
                data.len()
            )));
        }
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + ch]
    }

    /// Write one channel value, clamped into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        self.data[(row * self.width + col) * 3 + ch] = v.clamp(0.0, 1.0);
    }

    /// Apply `f` to every value, clamping results into `[0, 1]`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect(),
        }
    }

    /// Largest absolute per-value difference to another image of the same shape.
    pub fn linf_distance(&self, other: &Image) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "linf_distance: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Load an 8-bit PNG; channel values become `byte / 255`.
    pub fn load_png(path: &Path) -> Result<Image> {
        let img = image::open(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut data = Vec::with_capacity(h * w * 3);
        for px in img.pixels() {
            for c in 0..3 {
                data.push(f64::from(px.0[c]) / 255.0);
            }
        }
        Ok(Image {
            height: h,
            width: w,
            data,
        })
    }

    /// Save as 8-bit PNG with round-half-up quantization.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::RgbImage::new(self.width as u32, self.height as u32);
        for r in 0..self.height {
            for c in 0..self.width {
                let px = [
                    quantize(self.get(r, c, 0)),
                    quantize(self.get(r, c, 1)),
                    quantize(self.get(r, c, 2)),
                ];
                buf.put_pixel(c as u32, r as u32, image::Rgb(px));
            }
        }
        buf.save(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

#[inline]
fn quantize(v: f64) -> u8 {
    // round-half-up on [0,1] inputs
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Clamp every value into `[0, 1]`. Idempotent.
pub fn clip_unit(image: &Image) -> Image {
    image.map_values(|v| v)
}

/// Clamp each value of `image` into `[origin - epsilon, origin + epsilon] ∩ [0, 1]`.
pub fn project_linf(image: &Image, origin: &Image, epsilon: f64) -> Result<Image> {
    if image.shape() != origin.shape() {
        return Err(Error::Dimension(format!(
            "project_linf: {:?} vs {:?}",
            image.shape(),
            origin.shape()
        )));
    }
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon {epsilon} must be >= 0")));
    }
    let data = image
        .values()
        .iter()
        .zip(origin.values())
        .map(|(&v, &o)| v.clamp(o - epsilon, o + epsilon).clamp(0.0, 1.0))
        .collect();
    Image::from_vec_clipped(image.height(), image.width(), data)
}

/// A per-pixel gradient with the same layout as [`Image`] but unrestricted values.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrad {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl PixelGrad {
    pub fn zeros(height: usize, width: usize) -> Self {
        PixelGrad {
            height,
            width,
            data: vec![0.0; height * width * 3],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + ch]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        self.data[(row * self.width + col) * 3 + ch] += v;
    }

    pub fn scaled(&self, k: f64) -> PixelGrad {
        PixelGrad {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// `sign(0) = 0` convention shared by all sign-gradient steps.
#[inline]
pub fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
