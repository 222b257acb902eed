//! PGM (portable graymap) codec.
//!
//! Reads ASCII (`P2`) and binary (`P5`) graymaps with `maxval <= 255`, with
//! `#` comments allowed anywhere in the header. Always writes binary `P5`
//! with `maxval = 255`.

use std::io::Write;

use super::{Image, MAX_GRAY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    Binary,
}

struct Header {
    encoding: Encoding,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first payload byte.
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u64> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "{what} is not a non-negative integer: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let encoding = match bytes.get(..2) {
        Some(b"P2") => Encoding::Ascii,
        Some(b"P5") => Encoding::Binary,
        _ => {
            return Err(Error::MalformedHeader(
                "expected magic number P2 or P5".into(),
            ))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "maxval {maxval} needs more than 8 bits per sample"
        )));
    }
    // Exactly one whitespace byte separates the header from a binary payload.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ if encoding == Encoding::Ascii => {}
        _ => {
            return Err(Error::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    Ok(Header {
        encoding,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: cur.pos,
    })
}

/// Decodes a P2 or P5 graymap. Samples are rescaled so that `maxval` maps to 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let header = parse_header(bytes)?;
    let count = header.width * header.height;
    let maxval = header.maxval;
    let raw: Vec<u32> = match header.encoding {
        Encoding::Binary => {
            let payload = &bytes[header.data_start..];
            if payload.len() < count {
                return Err(Error::MalformedData(format!(
                    "expected {count} payload bytes, found {}",
                    payload.len()
                )));
            }
            payload[..count].iter().map(|&b| b as u32).collect()
        }
        Encoding::Ascii => {
            let mut cur = Cursor {
                bytes,
                pos: header.data_start,
            };
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let tok = cur.token().ok_or_else(|| {
                    Error::MalformedData(format!(
                        "expected {count} samples, found {}",
                        out.len()
                    ))
                })?;
                let v = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::MalformedData(format!(
                            "bad sample {:?}",
                            String::from_utf8_lossy(tok)
                        ))
                    })?;
                out.push(v);
            }
            out
        }
    };
    if let Some(bad) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::MalformedData(format!(
            "sample {bad} exceeds maxval {maxval}"
        )));
    }
    let scale = MAX_GRAY / maxval as f64;
    let pixels = raw
        .into_iter()
        .map(|v| if maxval == 255 { v as f64 } else { v as f64 * scale })
        .collect();
    Image::new(header.height, header.width, pixels)
}

/// Quantizes one in-range gray level, rounding half away from zero.
pub fn quantize(value: f64) -> u8 {
    value.round() as u8
}

/// Encodes an image as binary P5 with `maxval = 255`.
///
/// Every pixel must already lie in `[0, 255]`.
pub fn encode_pgm(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(img.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    for (index, &value) in img.pixels().iter().enumerate() {
        if !(0.0..=MAX_GRAY).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
        out.push(quantize(value));
    }
    Ok(out)
}

/// Encodes an image as ASCII P2 with `maxval = 255`.
pub fn encode_pgm_ascii(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write!(out, "P2\n{} {}\n255\n", img.width(), img.height())?;
    for (row, chunk) in img.pixels().chunks(img.width()).enumerate() {
        let mut line = String::new();
        for (col, &value) in chunk.iter().enumerate() {
            if !(0.0..=MAX_GRAY).contains(&value) {
                return Err(Error::OutOfRange {
                    index: row * img.width() + col,
                    value,
                });
            }
            if col > 0 {
                line.push(' ');
            }
            line.push_str(&quantize(value).to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(out)
}
