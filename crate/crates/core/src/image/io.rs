use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::{pnm, Image, RgbImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    /// Guesses the format from a file extension (`.pgm`, `.pnm`, `.png`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" | "pnm" => Some(ImageFormat::Pgm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }
}

/// Result of reading an image file: PGM and single-channel PNG give `Gray`,
/// color PNG gives `Rgb`.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedImage {
    Gray(Image),
    Rgb(RgbImage),
}

impl LoadedImage {
    /// Collapses to grayscale, averaging channels when needed.
    pub fn into_gray(self) -> Image {
        match self {
            LoadedImage::Gray(img) => img,
            LoadedImage::Rgb(rgb) => rgb.to_grayscale(),
        }
    }
}

pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<LoadedImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    match format {
        ImageFormat::Pgm => {
            let bytes = std::fs::read(path)?;
            pnm::decode_pgm(&bytes).map(LoadedImage::Gray)
        }
        ImageFormat::Png => decode_png(BufReader::new(File::open(path)?)),
    }
}

/// Writes a binary PGM. Values must be within `[0, 255]`; they are rounded
/// half away from zero.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let bytes = pnm::encode_pgm(img)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

fn png_error(err: png::DecodingError) -> Error {
    match err {
        png::DecodingError::IoError(e) => Error::Io(e),
        png::DecodingError::Format(e) => Error::MalformedHeader(e.to_string()),
        other => Error::MalformedData(other.to_string()),
    }
}

pub(crate) fn decode_png<R: std::io::BufRead + std::io::Seek>(reader: R) -> Result<LoadedImage> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_error)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedBitDepth(
            "16-bit PNG samples are not supported".into(),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedHeader("PNG dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(png_error)?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!(
            "{:?} after expansion",
            frame.bit_depth
        )));
    }
    let (height, width) = (frame.height as usize, frame.width as usize);
    let samples = frame.color_type.samples();
    let rows = buf[..frame.buffer_size()]
        .chunks(frame.line_size)
        .take(height);
    let mut planes: Vec<Vec<f64>> = vec![Vec::with_capacity(height * width); samples.min(3)];
    for row in rows {
        for px in row[..width * samples].chunks(samples) {
            match frame.color_type {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => {
                    planes[0].push(px[0] as f64)
                }
                png::ColorType::Rgb | png::ColorType::Rgba => {
                    for c in 0..3 {
                        planes[c].push(px[c] as f64);
                    }
                }
                png::ColorType::Indexed => unreachable!("EXPAND removes palettes"),
            }
        }
    }
    match frame.color_type {
        png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => {
            Image::new(height, width, planes.swap_remove(0)).map(LoadedImage::Gray)
        }
        _ => {
            let b = planes.pop().unwrap_or_default();
            let g = planes.pop().unwrap_or_default();
            let r = planes.pop().unwrap_or_default();
            RgbImage::new(height, width, [r, g, b]).map(LoadedImage::Rgb)
        }
    }
}
