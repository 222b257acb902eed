//! Patch-space bases and projections built from Gramian eigenvectors.

use rayon::prelude::*;

use super::{axpy, dot, norm, GramianSpectrum};
use crate::error::{Error, Result};
use crate::patch::PatchSet;

/// Candidates whose residual after orthogonalization is at most this
/// fraction of the largest candidate norm (or of 1, if larger) are dropped.
pub const DROP_TOLERANCE: f64 = 1e-10;

/// Orthonormal vectors of patch length `ρ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl PatchBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Orthonormalizes `candidates` in order, dropping near-dependent ones.
    /// Falls back to the normalized constant vector when nothing survives.
    pub fn orthonormalize(dim: usize, candidates: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = candidates.iter().find(|c| c.len() != dim) {
            return Err(Error::dims(dim, bad.len()));
        }
        let largest = candidates.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let threshold = DROP_TOLERANCE * largest.max(1.0);
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for c in candidates {
            if vectors.len() == dim {
                break;
            }
            let mut v = c.clone();
            for _ in 0..2 {
                for b in &vectors {
                    axpy(-dot(b, &v), b, &mut v);
                }
            }
            let nv = norm(&v);
            if nv > threshold {
                v.iter_mut().for_each(|x| *x /= nv);
                vectors.push(v);
            }
        }
        if vectors.is_empty() {
            vectors.push(vec![1.0 / (dim as f64).sqrt(); dim]);
        }
        Ok(Self { dim, vectors })
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for b in &self.vectors {
            axpy(dot(b, x), b, &mut out);
        }
        out
    }
}

fn check_same_set(patches: &PatchSet, spectrum: &GramianSpectrum) -> Result<()> {
    match spectrum.vertex_eigenvectors().first() {
        Some(v) if v.len() != patches.len() => Err(Error::dims(
            format!("eigenvectors over {} patches", patches.len()),
            format!("length {}", v.len()),
        )),
        _ => Ok(()),
    }
}

/// Maps each vertex eigenvector `φ` through the patch matrix,
/// `b = Σ_k φ[k] u_k`, and orthonormalizes the results in order.
pub fn build_patch_basis(patches: &PatchSet, spectrum: GramianSpectrum) -> Result<GramianSpectrum> {
    check_same_set(patches, &spectrum)?;
    let dim = patches.dim();
    let candidates: Vec<Vec<f64>> = spectrum
        .vertex_eigenvectors()
        .par_iter()
        .map(|phi| {
            let mut b = vec![0.0; dim];
            for (p, &w) in patches.iter().zip(phi) {
                axpy(w, p, &mut b);
            }
            b
        })
        .collect();
    let basis = PatchBasis::orthonormalize(dim, &candidates)?;
    Ok(GramianSpectrum {
        patch_basis: Some(basis),
        ..spectrum
    })
}

/// Replaces every patch by its orthogonal projection onto the patch basis.
pub fn project_patches(patches: &PatchSet, spectrum: &GramianSpectrum) -> Result<PatchSet> {
    let basis = spectrum.patch_basis().ok_or(Error::MissingBasis)?;
    if basis.dim() != patches.dim() {
        return Err(Error::dims(patches.dim(), basis.dim()));
    }
    let dim = patches.dim();
    let mut data = vec![0.0; patches.len() * dim];
    data.par_chunks_mut(dim)
        .zip(patches.as_flat().par_chunks(dim))
        .for_each(|(out, p)| out.copy_from_slice(&basis.project(p)));
    patches.with_data(data)
}

/// Projects the mean-centered patch cloud onto the span of the vertex
/// eigenvectors: `U ↦ 1 mᵀ + Φ Φᵀ (U − 1 mᵀ)`, where `m` is the mean patch.
/// Each patch becomes the mean plus a combination of the embedding
/// coordinates, which smooths along the graph rather than within one patch.
pub fn project_onto_eigenvectors(patches: &PatchSet, spectrum: &GramianSpectrum) -> Result<PatchSet> {
    check_same_set(patches, spectrum)?;
    let dim = patches.dim();
    let n = patches.len();
    let mut mean = vec![0.0; dim];
    for p in patches.iter() {
        axpy(1.0, p, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    // C = Φᵀ (U − 1 mᵀ), one row of length dim per eigenvector
    let coeffs: Vec<Vec<f64>> = spectrum
        .vertex_eigenvectors()
        .par_iter()
        .map(|phi| {
            let mut c = vec![0.0; dim];
            for (p, &w) in patches.iter().zip(phi) {
                for ((ci, pi), mi) in c.iter_mut().zip(p).zip(&mean) {
                    *ci += w * (pi - mi);
                }
            }
            c
        })
        .collect();

    let phis = spectrum.vertex_eigenvectors();
    let mut data = vec![0.0; n * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(k, out)| {
        out.copy_from_slice(&mean);
        for (phi, c) in phis.iter().zip(&coeffs) {
            axpy(phi[k], c, out);
        }
    });
    patches.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use crate::patch::extract_patches;
    use crate::spectral::{top_eigenpairs, EigenSolver, Gramian, SquareMatrix};
    use proptest::prelude::*;
    use rand::Rng;

    fn spectrum_from(vectors: Vec<Vec<f64>>) -> GramianSpectrum {
        GramianSpectrum {
            eigenvalues: (0..vectors.len()).map(|i| -(i as f64)).collect(),
            vertex_eigenvectors: vectors,
            norm_estimate: 1.0,
            patch_basis: None,
        }
    }

    /// 3x3 patches of a random `side x side` image.
    fn random_patches(side: usize, seed: u64) -> PatchSet {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let img = Image::from_fn(side, side, |_, _| rng.random_range(0.0..255.0));
        extract_patches(&img, 3).unwrap()
    }

    fn coordinate(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn max_gram_error(basis: &PatchBasis) -> f64 {
        let vs = basis.vectors();
        let mut worst = 0.0f64;
        for a in 0..vs.len() {
            for b in 0..vs.len() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(&vs[a], &vs[b]) - want).abs());
            }
        }
        worst
    }

    #[test]
    fn coordinate_patches_give_coordinate_basis() {
        let axes: Vec<Vec<f64>> = (0..4).map(|i| coordinate(4, i)).collect();
        let basis = PatchBasis::orthonormalize(4, &axes).unwrap();
        assert_eq!(basis.vectors(), axes.as_slice());
    }

    #[test]
    fn collinear_candidate_is_dropped() {
        let u = vec![1.0, 2.0, 3.0, 4.0];
        let phi1 = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let phi2 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let cands: Vec<Vec<f64>> = [phi1, phi2]
            .iter()
            .map(|phi| u.iter().map(|x| (phi[0] + phi[1]) * x).collect())
            .collect();
        let basis = PatchBasis::orthonormalize(4, &cands).unwrap();
        assert_eq!(basis.len(), 1);

        let scaled = vec![u.clone(), u.iter().map(|x| 3.0 * x).collect()];
        assert_eq!(PatchBasis::orthonormalize(4, &scaled).unwrap().len(), 1);
    }

    #[test]
    fn all_degenerate_candidates_fall_back_to_constant() {
        let basis = PatchBasis::orthonormalize(4, &[vec![0.0; 4], vec![0.0; 4]]).unwrap();
        assert_eq!(basis.vectors(), &[vec![0.5; 4]]);
    }

    #[test]
    fn random_six_in_four_dimensions_is_orthonormal() {
        let mut rng = crate::rng::stream_rng(6, 0);
        let cands: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let basis = PatchBasis::orthonormalize(4, &cands).unwrap();
        assert_eq!(basis.len(), 4);
        assert!(max_gram_error(&basis) < 1e-10);
    }

    #[test]
    fn coordinate_projection() {
        let basis = PatchBasis::orthonormalize(4, &[coordinate(4, 0), coordinate(4, 1)]).unwrap();
        assert_eq!(basis.project(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(basis.project(&[0.0, 0.0, 5.0, -1.0]), vec![0.0; 4]);
    }

    #[test]
    fn projection_requires_basis() {
        let patches = random_patches(3, 1);
        let spec = spectrum_from(vec![vec![1.0 / 3.0; 9]]);
        assert!(matches!(project_patches(&patches, &spec), Err(Error::MissingBasis)));
    }

    #[test]
    fn mismatched_spectrum_is_rejected() {
        let patches = random_patches(3, 1);
        let spec = spectrum_from(vec![vec![0.5; 4]]);
        assert!(build_patch_basis(&patches, spec.clone()).is_err());
        assert!(project_onto_eigenvectors(&patches, &spec).is_err());
    }

    #[test]
    fn full_rank_basis_projection_is_identity() {
        let patches = random_patches(5, 3);
        let n = patches.len();
        let spec = spectrum_from((0..n).map(|i| coordinate(n, i)).collect());
        let spec = build_patch_basis(&patches, spec).unwrap();
        assert_eq!(spec.effective_rank(), 9);
        let out = project_patches(&patches, &spec).unwrap();
        for (a, b) in out.as_flat().iter().zip(patches.as_flat()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn complete_vertex_basis_projection_is_identity() {
        let patches = random_patches(4, 4);
        let n = patches.len();
        let spec = spectrum_from((0..n).map(|i| coordinate(n, i)).collect());
        let out = project_onto_eigenvectors(&patches, &spec).unwrap();
        for (a, b) in out.as_flat().iter().zip(patches.as_flat()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_eigenvector_alone_collapses_to_mean_patch() {
        // the centered cloud is orthogonal to the constant vector
        let patches = random_patches(4, 5);
        let n = patches.len();
        let spec = spectrum_from(vec![vec![1.0 / (n as f64).sqrt(); n]]);
        let out = project_onto_eigenvectors(&patches, &spec).unwrap();
        let dim = patches.dim();
        for e in 0..dim {
            let mean: f64 = patches.iter().map(|p| p[e]).sum::<f64>() / n as f64;
            for p in out.iter() {
                assert!((p[e] - mean).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reconstruction_error_shrinks_with_more_vectors() {
        let patches = random_patches(6, 9);
        let n = patches.len();
        let mut rng = crate::rng::stream_rng(9, 1);
        let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = SquareMatrix::from_fn(n, |i, j| raw[i * n + j] + raw[j * n + i]);
        let g = Gramian::from_matrix(m).unwrap();
        let full = top_eigenpairs(&g, 20, EigenSolver::Dense).unwrap();
        let mut prev = f64::INFINITY;
        for l in 1..=20 {
            let spec = spectrum_from(full.vertex_eigenvectors()[..l].to_vec());
            let spec = build_patch_basis(&patches, spec).unwrap();
            let out = project_patches(&patches, &spec).unwrap();
            let err: f64 = out
                .as_flat()
                .iter()
                .zip(patches.as_flat())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            assert!(err <= prev + 1e-9, "l={l}: {err} > {prev}");
            prev = err;
        }
        assert!(prev < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_shrinks_norms(seed in any::<u64>(), l in 1usize..9) {
            let patches = random_patches(4, seed);
            let n = patches.len();
            let mut rng = crate::rng::stream_rng(seed, 2);
            let vectors: Vec<Vec<f64>> = (0..l).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let spec = build_patch_basis(&patches, spectrum_from(vectors)).unwrap();
            prop_assert!(max_gram_error(spec.patch_basis().unwrap()) < 1e-10);
            let once = project_patches(&patches, &spec).unwrap();
            let twice = project_patches(&once, &spec).unwrap();
            for (a, b) in once.as_flat().iter().zip(twice.as_flat()) {
                prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
            for (p, q) in patches.iter().zip(once.iter()) {
                prop_assert!(norm(q) <= norm(p) + 1e-10);
            }
        }
    }
}
