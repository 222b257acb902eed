//! Noise models: sampling, contamination, and the relative noise level.
//!
//! Five families are supported. Speckle is applied multiplicatively,
//! Gaussian, Poisson and uniform additively, and salt & pepper replaces
//! pixels with black or white. Every contaminated image is clipped to
//! `[0, 255]`.

mod calibrate;
mod record;

pub use calibrate::{calibrate_noise, mean_realized_k, Calibration, CALIBRATION_TOLERANCE};
pub(crate) use record::parse_key_values;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::image::{clip_gray, Image, MAX_GRAY};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseFamily {
    Gaussian,
    SaltPepper,
    Speckle,
    Poisson,
    Uniform,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 5] = [
        NoiseFamily::Gaussian,
        NoiseFamily::SaltPepper,
        NoiseFamily::Speckle,
        NoiseFamily::Poisson,
        NoiseFamily::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::SaltPepper => "salt_pepper",
            NoiseFamily::Speckle => "speckle",
            NoiseFamily::Poisson => "poisson",
            NoiseFamily::Uniform => "uniform",
        }
    }

    /// The only contamination rule legal for this family.
    pub fn rule(self) -> NoiseRule {
        match self {
            NoiseFamily::Speckle => NoiseRule::Multiplicative,
            NoiseFamily::SaltPepper => NoiseRule::Replacement,
            NoiseFamily::Gaussian | NoiseFamily::Poisson | NoiseFamily::Uniform => {
                NoiseRule::Additive
            }
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "salt_pepper" | "salt_and_pepper" => Ok(NoiseFamily::SaltPepper),
            "speckle" => Ok(NoiseFamily::Speckle),
            "poisson" => Ok(NoiseFamily::Poisson),
            "uniform" => Ok(NoiseFamily::Uniform),
            other => Err(Error::Parse(format!("unknown noise family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseRule {
    /// `U = clip(I + N)`
    Additive,
    /// `U = clip(I ⊙ N)`
    Multiplicative,
    /// Pixels flagged pepper become 0, salt become 255.
    Replacement,
}

impl NoiseRule {
    pub fn name(self) -> &'static str {
        match self {
            NoiseRule::Additive => "additive",
            NoiseRule::Multiplicative => "multiplicative",
            NoiseRule::Replacement => "replacement",
        }
    }
}

impl FromStr for NoiseRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "additive" => Ok(NoiseRule::Additive),
            "multiplicative" => Ok(NoiseRule::Multiplicative),
            "replacement" => Ok(NoiseRule::Replacement),
            other => Err(Error::Parse(format!("unknown noise rule {other:?}"))),
        }
    }
}

/// Family-specific distribution parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseParams {
    Gaussian { mean: f64, std_dev: f64 },
    /// Probability `density` of pepper and, separately, of salt.
    SaltPepper { density: f64 },
    /// Gamma distribution with shape `shape` and scale `scale`.
    Speckle { shape: f64, scale: f64 },
    /// Poisson counts with mean `rate`; `centered` subtracts the mean.
    Poisson { rate: f64, centered: bool },
    Uniform { low: f64, high: f64 },
}

impl NoiseParams {
    pub fn family(&self) -> NoiseFamily {
        match self {
            NoiseParams::Gaussian { .. } => NoiseFamily::Gaussian,
            NoiseParams::SaltPepper { .. } => NoiseFamily::SaltPepper,
            NoiseParams::Speckle { .. } => NoiseFamily::Speckle,
            NoiseParams::Poisson { .. } => NoiseFamily::Poisson,
            NoiseParams::Uniform { .. } => NoiseFamily::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            NoiseParams::Gaussian { mean, std_dev } => {
                if !mean.is_finite() || !std_dev.is_finite() || std_dev < 0.0 {
                    return bad(format!(
                        "gaussian needs finite mean and std_dev >= 0, got mean={mean}, std_dev={std_dev}"
                    ));
                }
            }
            NoiseParams::SaltPepper { density } => {
                if !(0.0..0.5).contains(&density) {
                    return bad(format!("salt & pepper density must lie in [0, 0.5), got {density}"));
                }
            }
            NoiseParams::Speckle { shape, scale } => {
                if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
                    return bad(format!(
                        "speckle needs shape > 0 and scale > 0, got shape={shape}, scale={scale}"
                    ));
                }
            }
            NoiseParams::Poisson { rate, .. } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("poisson rate must be > 0, got {rate}"));
                }
            }
            NoiseParams::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform needs low < high, got [{low}, {high}]"));
                }
            }
        }
        Ok(())
    }
}

/// A fully determined noise model: distribution, parameters, and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub params: NoiseParams,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(params: NoiseParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, seed })
    }

    pub fn family(&self) -> NoiseFamily {
        self.params.family()
    }

    pub fn rule(&self) -> NoiseRule {
        self.family().rule()
    }

    /// The scalar that calibration tunes for this family.
    pub fn calibration_parameter(&self) -> f64 {
        match self.params {
            NoiseParams::Gaussian { std_dev, .. } => std_dev,
            NoiseParams::SaltPepper { density } => density,
            NoiseParams::Speckle { shape, .. } => shape,
            NoiseParams::Poisson { rate, .. } => rate,
            NoiseParams::Uniform { high, .. } => high,
        }
    }
}

/// Per-pixel decision for salt & pepper noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impulse {
    Keep,
    Pepper,
    Salt,
}

/// A sampled noise realization, sized like the image it will contaminate.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseField {
    Values {
        height: usize,
        width: usize,
        values: Vec<f64>,
    },
    Impulses {
        height: usize,
        width: usize,
        mask: Vec<Impulse>,
    },
}

impl NoiseField {
    pub fn height(&self) -> usize {
        match self {
            NoiseField::Values { height, .. } | NoiseField::Impulses { height, .. } => *height,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            NoiseField::Values { width, .. } | NoiseField::Impulses { width, .. } => *width,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            NoiseField::Values { values, .. } => Some(values),
            NoiseField::Impulses { .. } => None,
        }
    }

    pub fn mask(&self) -> Option<&[Impulse]> {
        match self {
            NoiseField::Impulses { mask, .. } => Some(mask),
            NoiseField::Values { .. } => None,
        }
    }
}

/// Samples stream 0 of `spec`. Identical inputs always give identical fields.
pub fn sample_noise(spec: &NoiseSpec, height: usize, width: usize) -> Result<NoiseField> {
    sample_noise_stream(spec, height, width, 0)
}

/// Samples an independent realization of `spec` identified by `stream`.
pub fn sample_noise_stream(
    spec: &NoiseSpec,
    height: usize,
    width: usize,
    stream: u64,
) -> Result<NoiseField> {
    spec.params.validate()?;
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("noise field must be non-empty".into()));
    }
    let n = height * width;
    let mut rng = stream_rng(spec.seed, stream);
    let values: Vec<f64> = match spec.params {
        NoiseParams::Gaussian { mean, std_dev } => (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + std_dev * z
            })
            .collect(),
        NoiseParams::Uniform { low, high } => (0..n)
            .map(|_| low + (high - low) * rng.random::<f64>())
            .collect(),
        NoiseParams::Speckle { shape, scale } => {
            let gamma = Gamma::new(shape, scale)
                .map_err(|e| Error::InvalidParameter(format!("speckle: {e}")))?;
            (0..n).map(|_| gamma.sample(&mut rng)).collect()
        }
        NoiseParams::Poisson { rate, centered } => {
            let poisson = Poisson::new(rate)
                .map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?;
            let offset = if centered { rate } else { 0.0 };
            (0..n).map(|_| poisson.sample(&mut rng) - offset).collect()
        }
        NoiseParams::SaltPepper { density } => {
            // Two draws per pixel regardless of outcome: one decides whether the
            // pixel flips (probability 2d), one picks salt or pepper. Raising d
            // therefore only ever adds flipped pixels for a fixed stream.
            let mask = (0..n)
                .map(|_| {
                    let flip: f64 = rng.random();
                    let side: f64 = rng.random();
                    if flip < 2.0 * density {
                        if side < 0.5 {
                            Impulse::Pepper
                        } else {
                            Impulse::Salt
                        }
                    } else {
                        Impulse::Keep
                    }
                })
                .collect();
            return Ok(NoiseField::Impulses {
                height,
                width,
                mask,
            });
        }
    };
    Ok(NoiseField::Values {
        height,
        width,
        values,
    })
}

/// Contaminates `img` with `field` under `rule`, then clips to `[0, 255]`.
pub fn apply_noise(img: &Image, field: &NoiseField, rule: NoiseRule) -> Result<Image> {
    if field.height() != img.height() || field.width() != img.width() {
        return Err(Error::dims(
            format!("{}x{}", img.height(), img.width()),
            format!("noise field {}x{}", field.height(), field.width()),
        ));
    }
    let pixels: Vec<f64> = match (rule, field) {
        (NoiseRule::Additive, NoiseField::Values { values, .. }) => img
            .pixels()
            .iter()
            .zip(values)
            .map(|(&p, &n)| clip_gray(p + n))
            .collect(),
        (NoiseRule::Multiplicative, NoiseField::Values { values, .. }) => img
            .pixels()
            .iter()
            .zip(values)
            .map(|(&p, &n)| clip_gray(p * n))
            .collect(),
        (NoiseRule::Replacement, NoiseField::Impulses { mask, .. }) => img
            .pixels()
            .iter()
            .zip(mask)
            .map(|(&p, m)| match m {
                Impulse::Keep => clip_gray(p),
                Impulse::Pepper => 0.0,
                Impulse::Salt => MAX_GRAY,
            })
            .collect(),
        (rule, _) => {
            return Err(Error::InvalidParameter(format!(
                "{} rule does not match the kind of noise field supplied",
                rule.name()
            )))
        }
    };
    Image::new(img.height(), img.width(), pixels)
}

/// Samples stream `stream` of `spec` and applies it with the family's rule.
pub fn contaminate(img: &Image, spec: &NoiseSpec, stream: u64) -> Result<Image> {
    let field = sample_noise_stream(spec, img.height(), img.width(), stream)?;
    apply_noise(img, &field, spec.rule())
}

/// `‖noisy − clean‖₂ / ‖clean‖₂ × 100`, Frobenius norms over all pixels.
pub fn relative_noise_level(clean: &Image, noisy: &Image) -> Result<f64> {
    clean.ensure_same_shape(noisy)?;
    let (mut residual, mut norm) = (0.0f64, 0.0f64);
    for (&c, &u) in clean.pixels().iter().zip(noisy.pixels()) {
        residual += (u - c) * (u - c);
        norm += c * c;
    }
    if norm == 0.0 {
        return Err(Error::ZeroNormImage);
    }
    Ok((residual / norm).sqrt() * 100.0)
}
