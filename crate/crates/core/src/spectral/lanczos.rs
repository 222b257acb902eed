//! Thick-restart Lanczos for the algebraically largest eigenpairs of a
//! symmetric operator.
//!
//! Each cycle grows an orthonormal Krylov basis to `m` vectors with full
//! (twice repeated) reorthogonalization, solves the projected problem
//! densely, and restarts from the best Ritz vectors plus the residual
//! direction. The Ritz residual of pair `i` is `‖f‖ · |y_i[m−1]|`.

use rand::Rng;

use super::{axpy, dense_eigen, dot, norm, SquareMatrix, SymmetricOperator};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Convergence when every wanted residual is below `tolerance · ‖A‖`.
    pub tolerance: f64,
    /// Operator applications before giving up; defaults to `10·L·√order`.
    pub max_matvecs: Option<usize>,
    /// Krylov basis size per cycle; defaults to `2L + 20`.
    pub subspace: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_matvecs: None,
            subspace: None,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Relative Ritz residuals of the returned pairs.
    pub residuals: Vec<f64>,
    pub norm_estimate: f64,
    pub matvecs: usize,
}

fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64], coeffs: Option<&mut [f64]>) {
    let mut local = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let c = dot(v, w);
            axpy(-c, v, w);
            local[i] += c;
        }
    }
    if let Some(out) = coeffs {
        out.copy_from_slice(&local);
    }
}

fn random_direction(rng: &mut impl Rng, basis: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(basis, &mut v, None);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Ok(v);
        }
    }
    Err(Error::Eigen("could not extend the Krylov basis".into()))
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (v, c) in basis.iter().zip(coeffs) {
        axpy(c, v, &mut out);
    }
    out
}

/// The `count` algebraically largest eigenpairs of `op`.
pub fn lanczos_top(op: &dyn SymmetricOperator, count: usize, opts: &LanczosOptions) -> Result<LanczosOutput> {
    let n = op.order();
    if count == 0 || count > n {
        return Err(Error::InvalidParameter(format!(
            "eigenpair count must satisfy 1 <= L <= {n}, got {count}"
        )));
    }
    let m = opts.subspace.unwrap_or(2 * count + 20).max(count + 1).min(n);
    let keep = (count + (m - count) / 2).min(m - 1);
    let max_matvecs = opts
        .max_matvecs
        .unwrap_or_else(|| (10.0 * count as f64 * (n as f64).sqrt()).ceil() as usize)
        .max(m);

    let mut rng = stream_rng(opts.seed, 0);
    let mut basis: Vec<Vec<f64>> = vec![random_direction(&mut rng, &[], n)?];
    let mut h = vec![0.0; m * m];
    let mut w = vec![0.0; n];
    let mut coeffs = vec![0.0; m];
    let mut anorm = 0.0f64;
    let mut matvecs = 0;
    let mut start = 0;

    loop {
        let mut f = Vec::new();
        let mut fnorm = 0.0;
        for j in start..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            anorm = anorm.max(norm(&w));
            orthogonalize(&basis, &mut w, Some(&mut coeffs[..=j]));
            for i in 0..=j {
                h[i * m + j] = coeffs[i];
                h[j * m + i] = coeffs[i];
            }
            let beta = norm(&w);
            if j + 1 == m {
                fnorm = beta;
                f = w.clone();
                break;
            }
            if beta <= 1e-12 * anorm || beta == 0.0 {
                // invariant subspace; continue in a fresh direction
                let v = random_direction(&mut rng, &basis, n)?;
                basis.push(v);
            } else {
                basis.push(w.iter().map(|x| x / beta).collect());
            }
        }

        let (thetas, ys) = dense_eigen(&SquareMatrix::new(m, h.clone())?)?;
        anorm = anorm.max(thetas[0].abs()).max(thetas[m - 1].abs());
        let residual = |i: usize| fnorm * ys[i][m - 1].abs();
        let scale = if anorm > 0.0 { anorm } else { 1.0 };
        let converged = (0..count).all(|i| residual(i) <= opts.tolerance * anorm);

        if converged || m == n {
            let vectors: Vec<Vec<f64>> = (0..count)
                .map(|i| {
                    let mut x = combine(&basis, ys[i].iter().copied(), n);
                    let nx = norm(&x);
                    x.iter_mut().for_each(|v| *v /= nx);
                    x
                })
                .collect();
            return Ok(LanczosOutput {
                values: thetas[..count].to_vec(),
                vectors,
                residuals: (0..count).map(|i| residual(i) / scale).collect(),
                norm_estimate: anorm,
                matvecs,
            });
        }
        if matvecs >= max_matvecs {
            let residuals: Vec<f64> = (0..count).map(|i| residual(i) / scale).collect();
            return Err(Error::NoConvergence {
                iterations: matvecs,
                worst_residual: residuals.iter().cloned().fold(0.0, f64::max),
                residuals,
            });
        }

        let mut restarted: Vec<Vec<f64>> = (0..keep)
            .map(|i| combine(&basis, ys[i].iter().copied(), n))
            .collect();
        f.iter_mut().for_each(|x| *x /= fnorm);
        restarted.push(f);
        basis = restarted;
        h.iter_mut().for_each(|x| *x = 0.0);
        for (i, &t) in thetas.iter().enumerate().take(keep) {
            h[i * m + i] = t;
        }
        start = keep;
    }
}
