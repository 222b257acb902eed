//! Geodesic Gramian denoising of grayscale images.
//!
//! Every pixel's `ρ×ρ` patch becomes a vertex of a nearest-neighbor graph.
//! Shortest-path distances on that graph are double-centered into a
//! Gramian whose leading eigenvectors span the denoised patch cloud, and the
//! projected patches are merged back into an image.
//!
//! ```no_run
//! use ggd_core::{calibrate_noise, contaminate, default_params, ggd_denoise, psnr, NoiseFamily};
//! use ggd_core::pipeline::smooth_synthetic;
//!
//! let clean = smooth_synthetic(64, 64);
//! let cal = calibrate_noise(&clean, NoiseFamily::Gaussian, 30.0, 7, 5)?;
//! let noisy = contaminate(&clean, &cal.spec, 0)?;
//! let denoised = ggd_denoise(&noisy, &default_params(30.0))?;
//! println!("{:.2} dB -> {:.2} dB", psnr(&clean, &noisy)?, psnr(&clean, &denoised)?);
//! # Ok::<(), ggd_core::Error>(())
//! ```

pub mod error;
pub mod geodesic;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod patch;
pub mod pipeline;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use geodesic::{all_pairs_geodesics, build_knn_graph, GeodesicDistanceMatrix, GeodesicMethod, NeighborGraph};
pub use image::{load_image, save_image, Image, ImageFormat, LoadedImage, RgbImage};
pub use metrics::{psnr, rmse, ssim, MetricsReport};
pub use noise::{
    calibrate_noise, contaminate, relative_noise_level, Calibration, NoiseFamily, NoiseParams, NoiseRule,
    NoiseSpec,
};
pub use patch::{extract_patches, merge_patches, PatchSet};
pub use pipeline::{
    default_params, ggd_denoise, ggd_denoise_detailed, run_benchmark, ExperimentConfig, GgdParams, Projection,
};
pub use spectral::{double_center, top_eigenpairs, DistanceMode, EigenSolver, Gramian, GramianSpectrum};
