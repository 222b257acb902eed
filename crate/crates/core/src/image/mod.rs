//! Real-valued grayscale images and the file formats used to move them around.
//!
//! Pixels are kept as `f64` gray levels with a nominal range of `[0, 255]`.
//! Quantization to 8 bits happens only when an image is written to disk.

mod io;
pub mod pnm;

pub use io::{load_image, save_image, ImageFormat, LoadedImage};

use crate::error::{Error, Result};

/// Largest representable gray level.
pub const MAX_GRAY: f64 = 255.0;

/// Dense row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::dims(
                format!("{} pixels ({height}x{width})", height * width),
                format!("{} pixels", pixels.len()),
            ));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self::from_fn(height, width, |_, _| value)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::dims(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Clamps every pixel into `[0, 255]`.
    pub fn clip_to_range(&self) -> Image {
        self.map(clip_gray)
    }

    pub fn transpose(&self) -> Image {
        Image::from_fn(self.width, self.height, |row, col| self.get(col, row))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Clamps a single gray level into `[0, 255]`. NaN maps to 0.
pub fn clip_gray(value: f64) -> f64 {
    if value.is_nan() {
        0.0
    } else {
        value.clamp(0.0, MAX_GRAY)
    }
}

/// Free-function form of [`Image::clip_to_range`].
pub fn clip_to_range(img: &Image) -> Image {
    img.clip_to_range()
}

/// Three-plane color image, planes in R, G, B order.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    channels: [Vec<f64>; 3],
}

impl RgbImage {
    pub fn new(height: usize, width: usize, channels: [Vec<f64>; 3]) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        for plane in &channels {
            if plane.len() != height * width {
                return Err(Error::dims(
                    format!("{} values per plane", height * width),
                    format!("{} values", plane.len()),
                ));
            }
        }
        Ok(Self {
            height,
            width,
            channels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    /// Unweighted mean of the three channels at every pixel.
    pub fn to_grayscale(&self) -> Image {
        let [r, g, b] = &self.channels;
        let pixels = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&r, &g), &b)| (r + g + b) / 3.0)
            .collect();
        Image {
            height: self.height,
            width: self.width,
            pixels,
        }
    }
}

pub fn to_grayscale(img: &RgbImage) -> Image {
    img.to_grayscale()
}
