//! Overlapping square patches: one `ρ×ρ` window centered at every pixel, and
//! the weighted merge that turns a patch set back into an image.
//!
//! Pixel `(row, col)` owns patch index `row * width + col`. Windows are
//! flattened row-major. Extraction replicates edge pixels outward; merging
//! only averages over patch centers that lie inside the image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    patch_len: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl PatchSet {
    /// Wraps `height * width` flattened patches of `patch_len²` values each.
    pub fn from_flat(patch_len: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_patch_len(patch_len)?;
        let dim = patch_len * patch_len;
        if height == 0 || width == 0 || data.len() != height * width * dim {
            return Err(Error::dims(
                format!("{} values ({height}x{width} patches of {dim})", height * width * dim),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self {
            patch_len,
            height,
            width,
            data,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }

    /// Length of one flattened patch, `ρ²`.
    pub fn dim(&self) -> usize {
        self.patch_len * self.patch_len
    }

    pub fn image_height(&self) -> usize {
        self.height
    }

    pub fn image_width(&self) -> usize {
        self.width
    }

    /// Number of patches (one per pixel).
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn patch(&self, k: usize) -> &[f64] {
        let dim = self.dim();
        &self.data[k * dim..(k + 1) * dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim())
    }

    /// All patches back to back; patch `k` starts at `k * dim()`.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn index_of(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords_of(&self, k: usize) -> (usize, usize) {
        (k / self.width, k % self.width)
    }

    /// Same geometry, new patch contents.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.patch_len, self.height, self.width, data)
    }
}

fn check_patch_len(patch_len: usize) -> Result<()> {
    if patch_len < 3 || patch_len % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "patch length must be odd and at least 3, got {patch_len}"
        )));
    }
    Ok(())
}

/// Extracts the `ρ×ρ` window centered at every pixel, replicating edge pixels
/// for windows that overhang the border.
pub fn extract_patches(img: &Image, patch_len: usize) -> Result<PatchSet> {
    check_patch_len(patch_len)?;
    let (height, width) = (img.height(), img.width());
    if patch_len > height.min(width) {
        return Err(Error::InvalidParameter(format!(
            "patch length {patch_len} exceeds image size {height}x{width}"
        )));
    }
    let half = (patch_len / 2) as isize;
    let dim = patch_len * patch_len;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut data = vec![0.0; height * width * dim];
    data.par_chunks_mut(width * dim)
        .enumerate()
        .for_each(|(row, out)| {
            for col in 0..width {
                let patch = &mut out[col * dim..(col + 1) * dim];
                for a in 0..patch_len {
                    let r = clamp(row as isize + a as isize - half, height);
                    for b in 0..patch_len {
                        let c = clamp(col as isize + b as isize - half, width);
                        patch[a * patch_len + b] = img.get(r, c);
                    }
                }
            }
        });
    Ok(PatchSet {
        patch_len,
        height,
        width,
        data,
    })
}

fn shepard_kernel(center: (usize, usize), other: (usize, usize)) -> f64 {
    let dr = center.0 as f64 - other.0 as f64;
    let dc = center.1 as f64 - other.1 as f64;
    (-(dr * dr + dc * dc)).exp()
}

/// Normalized Gaussian-of-distance weight of `neighbor` among `neighborhood`,
/// `exp(−‖c−t‖²) / Σ exp(−‖c−t'‖²)`, coordinates in pixel units.
pub fn shepard_weight(
    center: (usize, usize),
    neighbor: (usize, usize),
    neighborhood: &[(usize, usize)],
) -> Result<f64> {
    if neighborhood.is_empty() {
        return Err(Error::InvalidParameter("empty Shepard neighborhood".into()));
    }
    if !neighborhood.contains(&neighbor) {
        return Err(Error::InvalidParameter(format!(
            "{neighbor:?} is not in the neighborhood"
        )));
    }
    let total: f64 = neighborhood.iter().map(|&t| shepard_kernel(center, t)).sum();
    Ok(shepard_kernel(center, neighbor) / total)
}

/// Patch centers within `⌊ρ/2⌋` (Chebyshev) of `center`, clipped to the grid.
pub fn merge_neighborhood(
    center: (usize, usize),
    patch_len: usize,
    height: usize,
    width: usize,
) -> Vec<(usize, usize)> {
    let half = patch_len / 2;
    let rows = center.0.saturating_sub(half)..=(center.0 + half).min(height - 1);
    rows.flat_map(|r| {
        let cols = center.1.saturating_sub(half)..=(center.1 + half).min(width - 1);
        cols.map(move |c| (r, c))
    })
    .collect()
}

/// Shepard merge without the final clip. Each pixel is a convex combination
/// of the entries that overlapping patches hold for that location.
pub fn merge_patches_unclipped(patches: &PatchSet) -> Image {
    let (height, width, rho) = (patches.height, patches.width, patches.patch_len);
    let half = (rho / 2) as isize;
    // kernel[(a + h) * ρ + (b + h)] = exp(−(a² + b²))
    let kernel: Vec<f64> = (0..rho * rho)
        .map(|i| {
            let a = (i / rho) as f64 - half as f64;
            let b = (i % rho) as f64 - half as f64;
            (-(a * a + b * b)).exp()
        })
        .collect();
    let mut pixels = vec![0.0; height * width];
    pixels
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, px) in out.iter_mut().enumerate() {
                let (mut acc, mut norm) = (0.0, 0.0);
                for a in -half..=half {
                    let tr = row as isize + a;
                    if tr < 0 || tr >= height as isize {
                        continue;
                    }
                    for b in -half..=half {
                        let tc = col as isize + b;
                        if tc < 0 || tc >= width as isize {
                            continue;
                        }
                        let w = kernel[((a + half) as usize) * rho + (b + half) as usize];
                        let t = tr as usize * width + tc as usize;
                        // this pixel sits at offset (−a, −b) from the center of patch t
                        let entry = ((half - a) as usize) * rho + (half - b) as usize;
                        acc += w * patches.patch(t)[entry];
                        norm += w;
                    }
                }
                *px = acc / norm;
            }
        });
    Image::new(height, width, pixels).expect("patch set geometry is valid")
}

/// Shepard merge followed by clipping to `[0, 255]`.
pub fn merge_patches(patches: &PatchSet) -> Image {
    merge_patches_unclipped(patches).clip_to_range()
}
