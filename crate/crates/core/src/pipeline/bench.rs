//! The image × family × level benchmark grid.
//!
//! Configuration is flat `key = value` text:
//!
//! ```text
//! images = cat.pgm, coffee.pgm
//! families = gaussian, salt_pepper, speckle, poisson, uniform
//! k_levels = 30, 40, 50
//! seed = 7
//! draws = 5
//! params.30 = 5, 7, 200     # delta, rho, L
//! projection = vertex
//! workers = 2
//! ```
//!
//! Relative image paths resolve against the configuration file's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::{default_params, ggd_denoise_detailed, GgdParams, Projection};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicMethod;
use crate::image::{load_image, Image, ImageFormat};
use crate::metrics::{psnr, ssim};
use crate::noise::{calibrate_noise, contaminate, parse_key_values, relative_noise_level, NoiseFamily};
use crate::rng::derive_seed;
use crate::spectral::{DistanceMode, EigenSolver};

pub const CSV_HEADER: [&str; 13] = [
    "image",
    "family",
    "k_target_pct",
    "k_realized_pct",
    "rho",
    "delta",
    "L_requested",
    "L_effective",
    "psnr_db",
    "ssim",
    "runtime_ms",
    "seed",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Labels as written in the configuration.
    pub images: Vec<String>,
    /// Directory that relative image paths are resolved against.
    pub base_dir: PathBuf,
    pub families: Vec<NoiseFamily>,
    pub k_levels: Vec<f64>,
    /// `(δ, ρ, L)` overrides keyed by the level as written.
    pub overrides: BTreeMap<String, (usize, usize, usize)>,
    pub seed: u64,
    pub draws: usize,
    pub solver: EigenSolver,
    pub geodesic: GeodesicMethod,
    pub gram: DistanceMode,
    pub projection: Projection,
    pub output: Option<PathBuf>,
    pub workers: usize,
    /// Wall-clock time per cell; off by default so reruns are byte-identical.
    pub record_runtime: bool,
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse {raw:?}")))
}

fn level_key(k: f64) -> String {
    format!("{k}")
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg = Self {
            images: Vec::new(),
            base_dir: base_dir.into(),
            families: NoiseFamily::ALL.to_vec(),
            k_levels: vec![30.0, 40.0, 50.0],
            overrides: BTreeMap::new(),
            seed: 0,
            draws: 5,
            solver: EigenSolver::Auto,
            geodesic: GeodesicMethod::Dijkstra,
            gram: DistanceMode::Squared,
            projection: Projection::Vertex,
            output: None,
            workers: 1,
            record_runtime: false,
        };
        for (key, value) in parse_key_values(text)? {
            match key.as_str() {
                "images" => cfg.images = list(&value).map(String::from).collect(),
                "families" => cfg.families = list(&value).map(str::parse).collect::<Result<_>>()?,
                "k_levels" => {
                    cfg.k_levels = list(&value).map(|v| number(&key, v)).collect::<Result<_>>()?
                }
                "seed" => cfg.seed = number(&key, &value)?,
                "draws" => cfg.draws = number(&key, &value)?,
                "solver" => cfg.solver = value.parse()?,
                "geodesic" => cfg.geodesic = value.parse()?,
                "gram" => cfg.gram = value.parse()?,
                "projection" => cfg.projection = value.parse()?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "workers" => cfg.workers = number(&key, &value)?,
                "record_runtime" => cfg.record_runtime = number(&key, &value)?,
                _ => {
                    let Some(level) = key.strip_prefix("params.") else {
                        return Err(Error::Parse(format!("unknown config key {key:?}")));
                    };
                    let level: f64 = number(&key, level)?;
                    let parts: Vec<usize> = list(&value).map(|v| number(&key, v)).collect::<Result<_>>()?;
                    let [delta, rho, l] = parts[..] else {
                        return Err(Error::Parse(format!("{key}: expected `delta, rho, L`")));
                    };
                    cfg.overrides.insert(level_key(level), (delta, rho, l));
                }
            }
        }
        if cfg.images.is_empty() || cfg.families.is_empty() || cfg.k_levels.is_empty() {
            return Err(Error::Parse("images, families and k_levels must be nonempty".into()));
        }
        if cfg.draws == 0 || cfg.workers == 0 {
            return Err(Error::Parse("draws and workers must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn image_path(&self, label: &str) -> PathBuf {
        let p = Path::new(label);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Denoiser settings for level `k`: an override if one matches,
    /// otherwise the tuned schedule, with the configured selectors.
    pub fn params_for(&self, k: f64) -> GgdParams {
        let base = match self.overrides.get(&level_key(k)) {
            Some(&(delta, rho, l)) => GgdParams::new(rho, delta, l),
            None => default_params(k),
        };
        GgdParams {
            solver: self.solver,
            geodesic: self.geodesic,
            gram: self.gram,
            projection: self.projection,
            ..base
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub family: NoiseFamily,
    pub k_target: f64,
    pub k_realized: Option<f64>,
    pub params: GgdParams,
    pub eigvecs_effective: Option<usize>,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub runtime_ms: Option<u128>,
    pub seed: u64,
    pub status: String,
}

impl BenchRow {
    fn record(&self) -> [String; 13] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.image.clone(),
            self.family.to_string(),
            format!("{}", self.k_target),
            opt(self.k_realized.map(|k| format!("{k:.3}"))),
            self.params.patch_len.to_string(),
            self.params.neighbors.to_string(),
            self.params.eigvecs.to_string(),
            opt(self.eigvecs_effective.map(|l| l.to_string())),
            opt(self.psnr_db.map(|p| if p.is_infinite() { "inf".into() } else { format!("{p:.4}") })),
            opt(self.ssim.map(|s| format!("{s:.6}"))),
            opt(self.runtime_ms.map(|t| t.to_string())),
            self.seed.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub rows: Vec<BenchRow>,
    pub csv_path: PathBuf,
    pub markdown_path: PathBuf,
}

struct Cell<'a> {
    image: &'a str,
    clean: &'a Result<Image, String>,
    family: NoiseFamily,
    k: f64,
    seed: u64,
}

fn denoise_cell(
    cfg: &ExperimentConfig,
    cell: &Cell<'_>,
    clean: &Image,
    params: &GgdParams,
    row: &mut BenchRow,
) -> Result<Vec<String>> {
    let cal = calibrate_noise(clean, cell.family, cell.k, cell.seed, cfg.draws)?;
    let noisy = contaminate(clean, &cal.spec, 0)?;
    row.k_realized = Some(relative_noise_level(clean, &noisy)?);
    let out = ggd_denoise_detailed(&noisy, params)?;
    row.eigvecs_effective = Some(out.eigvecs_effective);
    row.psnr_db = Some(psnr(clean, &out.image)?);
    row.ssim = Some(ssim(clean, &out.image)?);
    Ok(out.warnings)
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell<'_>) -> BenchRow {
    let params = cfg.params_for(cell.k);
    let mut row = BenchRow {
        image: cell.image.to_string(),
        family: cell.family,
        k_target: cell.k,
        k_realized: None,
        params,
        eigvecs_effective: None,
        psnr_db: None,
        ssim: None,
        runtime_ms: None,
        seed: cell.seed,
        status: String::new(),
    };
    let started = Instant::now();
    let outcome = match cell.clean {
        Ok(clean) => denoise_cell(cfg, cell, clean, &params, &mut row).map_err(|e| e.to_string()),
        Err(why) => Err(why.clone()),
    };
    if cfg.record_runtime {
        row.runtime_ms = Some(started.elapsed().as_millis());
    }
    row.status = match outcome {
        Ok(w) if w.is_empty() => "ok".into(),
        Ok(w) => format!("warning: {}", w.join("; ")),
        Err(e) => {
            log::error!("{} / {} / {}%: {e}", cell.image, cell.family, cell.k);
            format!("error: {e}")
        }
    };
    row
}

fn markdown_table(cfg: &ExperimentConfig, rows: &[BenchRow]) -> String {
    let mut md = String::new();
    md.push_str("PSNR in dB, SSIM in parentheses.\n\n| noise | method |");
    for image in &cfg.images {
        for k in &cfg.k_levels {
            let _ = write!(md, " {image} k={k}% |");
        }
    }
    md.push_str("\n|---|---|");
    md.push_str(&"---|".repeat(cfg.images.len() * cfg.k_levels.len()));
    md.push('\n');
    for family in &cfg.families {
        let _ = write!(md, "| {family} | GGD |");
        for image in &cfg.images {
            for k in &cfg.k_levels {
                let row = rows
                    .iter()
                    .find(|r| &r.image == image && r.family == *family && r.k_target == *k);
                match row.and_then(|r| r.psnr_db.zip(r.ssim)) {
                    Some((p, s)) => {
                        let _ = write!(md, " {p:.2} ({s:.3}) |");
                    }
                    None => md.push_str(" n/a |"),
                }
            }
        }
        md.push('\n');
    }
    md
}

/// Runs every (image, family, level) cell and writes the CSV to `csv_path`
/// plus a Markdown pivot table next to it (same name, `.md`). Rows are
/// written in grid order whatever order the cells finish in; a failing
/// cell is reported in its status column and the run continues.
pub fn run_benchmark(cfg: &ExperimentConfig, csv_path: impl AsRef<Path>) -> Result<BenchmarkOutput> {
    let csv_path = csv_path.as_ref().to_path_buf();
    let images: Vec<Result<Image, String>> = cfg
        .images
        .iter()
        .map(|label| {
            let path = cfg.image_path(label);
            let format = ImageFormat::from_path(&path).unwrap_or(ImageFormat::Pgm);
            load_image(&path, format)
                .map(|img| img.into_gray())
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut cells = Vec::new();
    for (i, label) in cfg.images.iter().enumerate() {
        for (f, &family) in cfg.families.iter().enumerate() {
            for (l, &k) in cfg.k_levels.iter().enumerate() {
                cells.push(Cell {
                    image: label,
                    clean: &images[i],
                    family,
                    k,
                    seed: derive_seed(cfg.seed, &[i as u64, f as u64, l as u64]),
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows: Vec<BenchRow> = pool.install(|| cells.par_iter().map(|c| run_cell(cfg, c)).collect());

    let mut writer = csv::Writer::from_path(&csv_path)?;
    writer.write_record(CSV_HEADER)?;
    for row in &rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;

    let markdown_path = csv_path.with_extension("md");
    fs::write(&markdown_path, markdown_table(cfg, &rows))?;
    Ok(BenchmarkOutput {
        rows,
        csv_path,
        markdown_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "images = a.pgm, /abs/b.png\nfamilies = gaussian, speckle\nk_levels = 30, 45\nseed = 9\n\
                    draws = 3\nparams.45 = 8, 5, 20\nsolver = krylov\ngeodesic = floyd\ngram = literal\n\
                    projection = lifted\nworkers = 4\nrecord_runtime = true\noutput = out.csv\n";
        let cfg = ExperimentConfig::parse(text, "/data").unwrap();
        assert_eq!(cfg.images, vec!["a.pgm", "/abs/b.png"]);
        assert_eq!(cfg.image_path("a.pgm"), PathBuf::from("/data/a.pgm"));
        assert_eq!(cfg.image_path("/abs/b.png"), PathBuf::from("/abs/b.png"));
        assert_eq!(cfg.families, vec![NoiseFamily::Gaussian, NoiseFamily::Speckle]);
        assert_eq!(cfg.k_levels, vec![30.0, 45.0]);
        assert_eq!((cfg.seed, cfg.draws, cfg.workers), (9, 3, 4));
        assert!(cfg.record_runtime);
        let p = cfg.params_for(45.0);
        assert_eq!((p.neighbors, p.patch_len, p.eigvecs), (8, 5, 20));
        assert_eq!(p.solver, EigenSolver::Krylov);
        assert_eq!(p.geodesic, GeodesicMethod::Floyd);
        assert_eq!(p.gram, DistanceMode::Literal);
        assert_eq!(p.projection, Projection::Lifted);
        let p = cfg.params_for(30.0);
        assert_eq!((p.neighbors, p.patch_len, p.eigvecs), (5, 7, 200));
    }

    #[test]
    fn defaults_cover_the_full_grid() {
        let cfg = ExperimentConfig::parse("images = x.pgm", ".").unwrap();
        assert_eq!(cfg.families.len(), 5);
        assert_eq!(cfg.k_levels, vec![30.0, 40.0, 50.0]);
        assert_eq!(cfg.draws, 5);
        assert!(!cfg.record_runtime);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("families = gaussian", ".").is_err());
        assert!(ExperimentConfig::parse("images = a\nk_levels = ", ".").is_err());
        assert!(ExperimentConfig::parse("images = a\ncolour = red", ".").is_err());
        assert!(ExperimentConfig::parse("images = a\nparams.30 = 1, 2", ".").is_err());
        assert!(ExperimentConfig::parse("images = a\nfamilies = pink", ".").is_err());
        assert!(ExperimentConfig::parse("images = a\nworkers = 0", ".").is_err());
    }

    #[test]
    fn row_formatting() {
        let row = BenchRow {
            image: "a.pgm".into(),
            family: NoiseFamily::SaltPepper,
            k_target: 30.0,
            k_realized: Some(30.12345),
            params: GgdParams::new(7, 5, 200),
            eigvecs_effective: Some(49),
            psnr_db: Some(f64::INFINITY),
            ssim: Some(0.5),
            runtime_ms: None,
            seed: 11,
            status: "ok".into(),
        };
        assert_eq!(
            row.record(),
            ["a.pgm", "salt_pepper", "30", "30.123", "7", "5", "200", "49", "inf", "0.500000", "", "11", "ok"]
        );
    }
}
