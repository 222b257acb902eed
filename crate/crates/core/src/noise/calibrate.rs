//! Tuning a family's scale parameter until contamination reaches a target
//! relative noise level.
//!
//! The realized level is the mean of [`relative_noise_level`] over `draws`
//! seeded contaminations (streams `0..draws`), measured after clipping.
//! Every bisection step reuses the same streams, so the objective is a
//! deterministic function of the parameter.

use super::{contaminate, relative_noise_level, NoiseFamily, NoiseParams, NoiseSpec};
use crate::error::{Error, Result};
use crate::image::{Image, MAX_GRAY};

/// Maximum distance, in percentage points, between the target and the mean
/// realized level of a successful calibration.
pub const CALIBRATION_TOLERANCE: f64 = 0.5;

const MAX_ITERATIONS: usize = 40;
const SCALE_CEILING: f64 = 4.0 * MAX_GRAY;
const FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub spec: NoiseSpec,
    pub target_k: f64,
    /// Mean realized level over the calibration draws.
    pub realized_k: f64,
    pub iterations: usize,
}

/// Search interval of the scalar knob. Realized `k` grows with the knob.
fn knob_range(family: NoiseFamily) -> (f64, f64) {
    match family {
        NoiseFamily::Gaussian => (0.0, SCALE_CEILING),
        NoiseFamily::SaltPepper => (0.0, 0.5 - FLOOR),
        // knob = 1/shape, so shape ranges over [1, 1e9]
        NoiseFamily::Speckle => (FLOOR, 1.0),
        NoiseFamily::Poisson => (FLOOR, SCALE_CEILING),
        NoiseFamily::Uniform => (FLOOR, SCALE_CEILING * 3f64.sqrt()),
    }
}

fn params_for(family: NoiseFamily, knob: f64) -> NoiseParams {
    match family {
        NoiseFamily::Gaussian => NoiseParams::Gaussian {
            mean: 0.0,
            std_dev: knob,
        },
        NoiseFamily::SaltPepper => NoiseParams::SaltPepper { density: knob },
        NoiseFamily::Speckle => NoiseParams::Speckle {
            shape: 1.0 / knob,
            scale: knob,
        },
        NoiseFamily::Poisson => NoiseParams::Poisson {
            rate: knob,
            centered: false,
        },
        NoiseFamily::Uniform => NoiseParams::Uniform {
            low: -knob,
            high: knob,
        },
    }
}

/// Mean relative noise level of `spec` over streams `0..draws`.
pub fn mean_realized_k(clean: &Image, spec: &NoiseSpec, draws: usize) -> Result<f64> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be at least 1".into()));
    }
    let mut total = 0.0;
    for stream in 0..draws as u64 {
        let noisy = contaminate(clean, spec, stream)?;
        total += relative_noise_level(clean, &noisy)?;
    }
    Ok(total / draws as f64)
}

/// Finds the family parameter whose mean realized level over `draws`
/// seeded contaminations is within [`CALIBRATION_TOLERANCE`] of `target_k`.
///
/// Gaussian tunes `σ` (mean 0), salt & pepper tunes `d`, speckle tunes the
/// shape `α ≥ 1` with scale `1/α`, Poisson tunes `λ`, uniform tunes `b` on
/// `[−b, b]`.
pub fn calibrate_noise(
    clean: &Image,
    family: NoiseFamily,
    target_k: f64,
    seed: u64,
    draws: usize,
) -> Result<Calibration> {
    if !(target_k > 0.0 && target_k <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "target noise level must lie in (0, 100], got {target_k}"
        )));
    }
    if let Some((index, &value)) = clean
        .pixels()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=MAX_GRAY).contains(*v))
    {
        return Err(Error::OutOfRange { index, value });
    }

    let eval = |knob: f64| -> Result<(NoiseSpec, f64)> {
        let spec = NoiseSpec::new(params_for(family, knob), seed)?;
        let k = mean_realized_k(clean, &spec, draws)?;
        Ok((spec, k))
    };

    let (mut lo, mut hi) = knob_range(family);
    let (hi_spec, hi_k) = eval(hi)?;
    if hi_k < target_k - CALIBRATION_TOLERANCE {
        return Err(Error::UnreachableNoiseLevel {
            target_k,
            best_k: hi_k,
            best_param: hi_spec.calibration_parameter(),
        });
    }

    let stop = (0.01 * target_k).min(0.01);
    let mut best = (hi_spec, hi_k);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (spec, k) = eval(mid)?;
        if (k - target_k).abs() < (best.1 - target_k).abs() {
            best = (spec, k);
        }
        if (k - target_k).abs() <= stop {
            break;
        }
        if k < target_k {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (spec, realized_k) = best;
    if (realized_k - target_k).abs() > CALIBRATION_TOLERANCE {
        return Err(Error::UnreachableNoiseLevel {
            target_k,
            best_k: realized_k,
            best_param: spec.calibration_parameter(),
        });
    }
    Ok(Calibration {
        spec,
        target_k,
        realized_k,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ramp(n: usize) -> Image {
        Image::from_fn(n, n, |r, c| 40.0 + 170.0 * ((r + c) as f64) / (2 * n - 2) as f64)
    }

    #[test]
    fn every_family_hits_target() {
        let img = ramp(32);
        for family in NoiseFamily::ALL {
            let cal = calibrate_noise(&img, family, 30.0, 5, 5).unwrap();
            assert!((cal.realized_k - 30.0).abs() <= CALIBRATION_TOLERANCE, "{family}: {cal:?}");
            assert_eq!(cal.spec.family(), family);
            let check = mean_realized_k(&img, &cal.spec, 5).unwrap();
            assert_eq!(check, cal.realized_k);
        }
    }

    #[test]
    fn salt_pepper_on_constant_image_matches_simulation_oracle() {
        // Flipping a 128 pixel to 0 costs 128², to 255 costs 127², each with
        // probability d, so k(d)² = d (128² + 127²) / 128². Cross-check the
        // closed form against a direct simulation before trusting it.
        let closed_form = (0.3f64 * 128.0).powi(2) / (128.0f64.powi(2) + 127.0f64.powi(2));
        let mut rng = crate::rng::stream_rng(99, 0);
        let trials = 100_000;
        let d = closed_form;
        let mut sq = 0.0;
        for _ in 0..trials {
            let u: f64 = rng.random();
            sq += if u < d {
                128.0f64.powi(2)
            } else if u < 2.0 * d {
                127.0f64.powi(2)
            } else {
                0.0
            };
        }
        let simulated_k = (sq / trials as f64).sqrt() / 128.0 * 100.0;
        assert!((simulated_k - 30.0).abs() < 0.5, "simulated {simulated_k}");
        assert!((closed_form - 0.04535).abs() < 1e-4);

        let img = Image::filled(128, 128, 128.0);
        let cal = calibrate_noise(&img, NoiseFamily::SaltPepper, 30.0, 3, 5).unwrap();
        let density = cal.spec.calibration_parameter();
        assert!((density - closed_form).abs() < 0.005, "density {density}");
    }

    #[test]
    fn tiny_target_drives_parameter_to_lower_bound() {
        let img = ramp(16);
        let cal = calibrate_noise(&img, NoiseFamily::Gaussian, 1e-6, 1, 3).unwrap();
        assert!(cal.spec.calibration_parameter() < 1e-4);
        let cal = calibrate_noise(&img, NoiseFamily::Uniform, 1e-6, 1, 3).unwrap();
        assert!(cal.spec.calibration_parameter() < 1e-4);
    }

    #[test]
    fn unreachable_target_reports_best_level() {
        // On white, salt is a no-op and pepper costs 255, so k tops out at
        // sqrt(0.5) = 70.7%.
        let img = Image::filled(16, 16, 255.0);
        match calibrate_noise(&img, NoiseFamily::SaltPepper, 90.0, 1, 2) {
            Err(Error::UnreachableNoiseLevel { best_k, .. }) => assert!(best_k < 75.0),
            other => panic!("expected unreachable, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let img = ramp(8);
        assert!(calibrate_noise(&img, NoiseFamily::Gaussian, 0.0, 1, 5).is_err());
        assert!(calibrate_noise(&img, NoiseFamily::Gaussian, 120.0, 1, 5).is_err());
        assert!(calibrate_noise(&img, NoiseFamily::Gaussian, 30.0, 1, 0).is_err());
        let hot = img.map(|v| v + 100.0);
        assert!(matches!(
            calibrate_noise(&hot, NoiseFamily::Gaussian, 30.0, 1, 5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn realized_level_grows_with_additive_scale() {
        let img = ramp(32);
        for family in [NoiseFamily::Gaussian, NoiseFamily::Uniform] {
            let ks: Vec<f64> = [10.0, 30.0, 60.0]
                .iter()
                .map(|&t| mean_realized_k(&img, &NoiseSpec::new(params_for(family, t), 8).unwrap(), 5).unwrap())
                .collect();
            assert!(ks[0] <= ks[1] && ks[1] <= ks[2], "{family}: {ks:?}");
        }
    }
}
