use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ggd_core::geodesic::GeodesicMethod;
use ggd_core::image::{load_image, save_image, Image, ImageFormat};
use ggd_core::metrics::MetricsReport;
use ggd_core::noise::{calibrate_noise, contaminate, relative_noise_level, NoiseFamily, NoiseSpec};
use ggd_core::pipeline::{ggd_denoise_detailed, run_benchmark, ExperimentConfig, GgdParams, Projection};
use ggd_core::spectral::{DistanceMode, EigenSolver};

#[derive(Parser)]
#[command(name = "ggd", version, about = "Geodesic Gramian denoising of grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Contaminate an image with noise calibrated to a relative level.
    Noise(NoiseArgs),
    /// Denoise an image.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        /// Odd patch side.
        #[arg(long)]
        rho: usize,
        /// Nearest neighbors per patch.
        #[arg(long)]
        delta: usize,
        /// Leading eigenvectors kept.
        #[arg(long)]
        eigvecs: usize,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        #[arg(long, value_enum, default_value_t = GeodesicArg::Dijkstra)]
        geodesic: GeodesicArg,
        #[arg(long, value_enum, default_value_t = GramArg::Squared)]
        gram: GramArg,
        #[arg(long, value_enum, default_value_t = ProjectionArg::Vertex)]
        projection: ProjectionArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a test image against a reference.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricsFormat::Keyvalue)]
        format: MetricsFormat,
    },
    /// Run the benchmark grid described by a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Record per-cell wall-clock time (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// gaussian, salt_pepper, speckle, poisson or uniform.
    #[arg(long, required_unless_present = "spec")]
    family: Option<NoiseFamily>,
    /// Target relative noise level in percent.
    #[arg(long, required_unless_present = "spec")]
    k: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeded draws averaged during calibration.
    #[arg(long, default_value_t = 5)]
    draws: usize,
    /// Reuse a recorded noise spec instead of calibrating.
    #[arg(long, conflicts_with_all = ["family", "k"])]
    spec: Option<PathBuf>,
    /// Write the noise spec that was applied.
    #[arg(long)]
    emit_spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeodesicArg {
    Dijkstra,
    Floyd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GramArg {
    Squared,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectionArg {
    Vertex,
    Lifted,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricsFormat {
    Csv,
    Keyvalue,
}

fn read_gray(path: &Path) -> Result<Image> {
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Pgm);
    let img = load_image(path, format).with_context(|| format!("reading {}", path.display()))?;
    Ok(img.into_gray())
}

fn noise(args: &NoiseArgs) -> Result<()> {
    let clean = read_gray(&args.input)?;
    let spec = match (&args.spec, args.family, args.k) {
        (Some(p), _, _) => fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .parse::<NoiseSpec>()?,
        (None, Some(family), Some(k)) => calibrate_noise(&clean, family, k, args.seed, args.draws)?.spec,
        _ => bail!("either --spec or both --family and --k are required"),
    };
    let noisy = contaminate(&clean, &spec, 0)?;
    save_image(&noisy, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(p) = &args.emit_spec {
        fs::write(p, spec.to_string()).with_context(|| format!("writing {}", p.display()))?;
    }
    println!(
        "family={} parameter={} k_realized_pct={:.3}",
        spec.family(),
        spec.calibration_parameter(),
        relative_noise_level(&clean, &noisy)?
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Noise(args) => noise(&args),
        Command::Denoise {
            input,
            rho,
            delta,
            eigvecs,
            solver,
            geodesic,
            gram,
            projection,
            out,
        } => {
            let noisy = read_gray(&input)?;
            let params = GgdParams {
                solver: match solver {
                    SolverArg::Auto => EigenSolver::Auto,
                    SolverArg::Dense => EigenSolver::Dense,
                    SolverArg::Krylov => EigenSolver::Krylov,
                },
                geodesic: match geodesic {
                    GeodesicArg::Dijkstra => GeodesicMethod::Dijkstra,
                    GeodesicArg::Floyd => GeodesicMethod::Floyd,
                },
                gram: match gram {
                    GramArg::Squared => DistanceMode::Squared,
                    GramArg::Literal => DistanceMode::Literal,
                },
                projection: match projection {
                    ProjectionArg::Vertex => Projection::Vertex,
                    ProjectionArg::Lifted => Projection::Lifted,
                },
                ..GgdParams::new(rho, delta, eigvecs)
            };
            let result = ggd_denoise_detailed(&noisy, &params)?;
            save_image(&result.image, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "L_requested={} L_effective={}",
                result.eigvecs_requested, result.eigvecs_effective
            );
            Ok(())
        }
        Command::Metrics {
            reference,
            test,
            format,
        } => {
            let r = MetricsReport::compare(&read_gray(&reference)?, &read_gray(&test)?)?;
            let psnr = if r.psnr_db.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:.4}", r.psnr_db)
            };
            match format {
                MetricsFormat::Csv => println!("{psnr},{:.6},{:.4}", r.ssim, r.rmse),
                MetricsFormat::Keyvalue => println!("psnr_db={psnr} ssim={:.6} rmse={:.4}", r.ssim, r.rmse),
            }
            Ok(())
        }
        Command::Bench {
            config,
            out,
            workers,
            timing,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                if w == 0 {
                    bail!("--workers must be at least 1");
                }
                cfg.workers = w;
            }
            cfg.record_runtime |= timing;
            let out = out
                .or_else(|| cfg.output.as_ref().map(|p| cfg.base_dir.join(p)))
                .context("no output path: pass --out or set `output` in the config")?;
            let result = run_benchmark(&cfg, &out)?;
            let failed = result.rows.iter().filter(|r| r.status.starts_with("error")).count();
            println!(
                "{} rows ({failed} failed) -> {} and {}",
                result.rows.len(),
                result.csv_path.display(),
                result.markdown_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
