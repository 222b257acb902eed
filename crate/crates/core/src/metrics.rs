//! Image quality scores: PSNR and single-window SSIM.

use crate::error::{Error, Result};
use crate::image::{Image, MAX_GRAY};

const C1: f64 = (0.01 * MAX_GRAY) * (0.01 * MAX_GRAY);
const C2: f64 = (0.03 * MAX_GRAY) * (0.03 * MAX_GRAY);
const C3: f64 = C2 / 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// `f64::INFINITY` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
    pub rmse: f64,
}

impl MetricsReport {
    pub fn compare(reference: &Image, test: &Image) -> Result<Self> {
        Ok(Self {
            psnr_db: psnr(reference, test)?,
            ssim: ssim(reference, test)?,
            rmse: rmse(reference, test)?,
        })
    }
}

pub fn rmse(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_shape(test)?;
    let sq: f64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq / reference.len() as f64).sqrt())
}

/// `20 log10(255 / RMSE)`, with a peak of 255 regardless of content.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    let e = rmse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (MAX_GRAY / e).log10())
}

/// Luminance, contrast and structure terms computed once over the whole
/// image, with population statistics.
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_shape(test)?;
    let n = reference.len();
    if n < 2 {
        return Err(Error::InvalidParameter("ssim needs at least 2 pixels".into()));
    }
    let (x, y) = (reference.pixels(), test.pixels());
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cov += da * db;
    }
    let (vx, vy, cov) = (vx / nf, vy / nf, cov / nf);
    let (sx, sy) = (vx.sqrt(), vy.sqrt());

    let luminance = (2.0 * mx * my + C1) / (mx * mx + my * my + C1);
    let contrast = (2.0 * sx * sy + C2) / (vx + vy + C2);
    let structure = (cov + C3) / (sx * sy + C3);
    Ok((luminance * contrast * structure).clamp(-1.0, 1.0))
}
