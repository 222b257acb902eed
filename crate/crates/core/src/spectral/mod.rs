//! Double-centered Gramians of distance matrices and their leading
//! eigenpairs.

mod basis;
mod lanczos;

pub use basis::{
    build_patch_basis, project_onto_eigenvectors, project_patches, PatchBasis, DROP_TOLERANCE,
};
pub use lanczos::{lanczos_top, LanczosOptions};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicDistanceMatrix;

/// Largest order for which the Gramian is stored densely.
pub const MATERIALIZE_MAX_ORDER: usize = 16384;

/// Largest order handled by the dense solver under [`EigenSolver::Auto`].
pub const DENSE_MAX_ORDER: usize = 4096;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::dims(order * order, data.len()));
        }
        Ok(Self { order, data })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                data.push(f(i, j));
            }
        }
        Self { order, data }
    }

    /// Builds a matrix from rows; every row must be as long as there are rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != order) {
            return Err(Error::dims(
                format!("square matrix with rows of {order}"),
                format!("row of {}", bad.len()),
            ));
        }
        Ok(Self {
            order,
            data: rows.concat(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether `|a_ij − a_ji| ≤ tol · max(max|a|, 1)` for all entries.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (0..self.order)
            .all(|i| (i + 1..self.order).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol * scale))
    }
}

/// Source of pairwise distances for [`double_center`].
pub trait DistanceMatrix: Send + Sync {
    fn order(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.entry(i, j);
        }
    }
}

impl DistanceMatrix for SquareMatrix {
    fn order(&self) -> usize {
        self.order
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

impl DistanceMatrix for GeodesicDistanceMatrix {
    fn order(&self) -> usize {
        GeodesicDistanceMatrix::order(self)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(self.row(i)) {
            *o = v as f64;
        }
    }
}

/// Whether distances are squared before centering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Center `D ⊙ D`, the classical scaling transform.
    #[default]
    Squared,
    /// Center `D` as given.
    Literal,
}

impl DistanceMode {
    fn apply(self, d: f64) -> f64 {
        match self {
            DistanceMode::Squared => d * d,
            DistanceMode::Literal => d,
        }
    }
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMode::Squared => "squared",
            DistanceMode::Literal => "literal",
        })
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "squared" => Ok(DistanceMode::Squared),
            "literal" => Ok(DistanceMode::Literal),
            other => Err(Error::Parse(format!("unknown gram mode {other:?}"))),
        }
    }
}

/// Symmetric linear map, applied as `y = A x`.
pub trait SymmetricOperator: Sync {
    fn order(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for SquareMatrix {
    fn order(&self) -> usize {
        self.order
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut()
            .enumerate()
            .for_each(|(i, yi)| *yi = dot(self.row(i), x));
    }
}

/// Centered Gramian evaluated from the distances on demand.
#[derive(Clone)]
pub struct ImplicitGramian {
    distances: Arc<dyn DistanceMatrix>,
    mode: DistanceMode,
    row_means: Vec<f64>,
    grand_mean: f64,
}

impl fmt::Debug for ImplicitGramian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitGramian")
            .field("order", &self.row_means.len())
            .field("mode", &self.mode)
            .finish()
    }
}

impl ImplicitGramian {
    fn get(&self, i: usize, j: usize) -> f64 {
        let m = self.mode.apply(self.distances.entry(i, j));
        -0.5 * (m - self.row_means[i] - self.row_means[j] + self.grand_mean)
    }
}

impl SymmetricOperator for ImplicitGramian {
    fn order(&self) -> usize {
        self.row_means.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.row_means.len();
        let sum_x: f64 = x.iter().sum();
        let r_dot_x = dot(&self.row_means, x);
        y.par_iter_mut().enumerate().for_each_init(
            || vec![0.0; n],
            |row, (i, yi)| {
                self.distances.fill_row(i, row);
                let mx: f64 = row.iter().zip(x).map(|(&d, &xj)| self.mode.apply(d) * xj).sum();
                *yi = -0.5 * (mx - self.row_means[i] * sum_x - r_dot_x + self.grand_mean * sum_x);
            },
        );
    }
}

#[derive(Debug, Clone)]
enum GramRepr {
    Dense(SquareMatrix),
    Implicit(ImplicitGramian),
}

/// Symmetric Gramian, either stored or evaluated from distances on demand.
#[derive(Debug, Clone)]
pub struct Gramian {
    repr: GramRepr,
}

impl Gramian {
    /// Wraps an arbitrary symmetric matrix.
    pub fn from_matrix(m: SquareMatrix) -> Result<Self> {
        if !m.is_symmetric(1e-12) {
            return Err(Error::InvalidParameter("gramian must be symmetric".into()));
        }
        Ok(Self {
            repr: GramRepr::Dense(m),
        })
    }

    pub fn order(&self) -> usize {
        match &self.repr {
            GramRepr::Dense(m) => m.order(),
            GramRepr::Implicit(g) => g.row_means.len(),
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.repr, GramRepr::Dense(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            GramRepr::Dense(m) => m.get(i, j),
            GramRepr::Implicit(g) => g.get(i, j),
        }
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        match &self.repr {
            GramRepr::Dense(m) => m.clone(),
            GramRepr::Implicit(g) => {
                let n = g.row_means.len();
                let mut data = vec![0.0; n * n];
                data.par_chunks_mut(n.max(1))
                    .enumerate()
                    .for_each(|(i, row)| {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = g.get(i, j);
                        }
                    });
                SquareMatrix { order: n, data }
            }
        }
    }
}

impl SymmetricOperator for Gramian {
    fn order(&self) -> usize {
        Gramian::order(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.repr {
            GramRepr::Dense(m) => m.apply(x, y),
            GramRepr::Implicit(g) => g.apply(x, y),
        }
    }
}

fn check_distances(d: &dyn DistanceMatrix, mode: DistanceMode) -> Result<(Vec<f64>, f64)> {
    let n = d.order();
    if n == 0 {
        return Err(Error::InvalidParameter("distance matrix is empty".into()));
    }
    let rows: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |row, i| {
                d.fill_row(i, row);
                let mut sum = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "distance ({i}, {j}) = {v} is not a finite nonnegative number"
                        )));
                    }
                    if j > i {
                        let t = d.entry(j, i);
                        if (v - t).abs() > 1e-12 * v.abs().max(t.abs()).max(1.0) {
                            return Err(Error::InvalidParameter(format!(
                                "distance matrix is not symmetric at ({i}, {j})"
                            )));
                        }
                    }
                    sum += mode.apply(v);
                }
                Ok(sum / n as f64)
            },
        )
        .collect();
    let row_means = rows.into_iter().collect::<Result<Vec<f64>>>()?;
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    Ok((row_means, grand_mean))
}

/// `G = −½ (M − r 1ᵀ − 1 rᵀ + m̄ 1 1ᵀ)` with `M = D ⊙ D` or `M = D`, `r` the
/// row means of `M` and `m̄` its grand mean. Stored densely up to
/// [`MATERIALIZE_MAX_ORDER`]; larger orders evaluate products on the fly.
pub fn double_center(d: Arc<dyn DistanceMatrix>, mode: DistanceMode) -> Result<Gramian> {
    if d.order() <= MATERIALIZE_MAX_ORDER {
        double_center_dense(d.as_ref(), mode)
    } else {
        double_center_implicit(d, mode)
    }
}

pub fn double_center_dense(d: &dyn DistanceMatrix, mode: DistanceMode) -> Result<Gramian> {
    let (row_means, grand_mean) = check_distances(d, mode)?;
    let n = d.order();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        d.fill_row(i, row);
        for (j, v) in row.iter_mut().enumerate() {
            *v = -0.5 * (mode.apply(*v) - row_means[i] - row_means[j] + grand_mean);
        }
    });
    // (i, j) and (j, i) can round differently
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = avg;
            data[j * n + i] = avg;
        }
    }
    Ok(Gramian {
        repr: GramRepr::Dense(SquareMatrix { order: n, data }),
    })
}

pub fn double_center_implicit(d: Arc<dyn DistanceMatrix>, mode: DistanceMode) -> Result<Gramian> {
    let (row_means, grand_mean) = check_distances(d.as_ref(), mode)?;
    Ok(Gramian {
        repr: GramRepr::Implicit(ImplicitGramian {
            distances: d,
            mode,
            row_means,
            grand_mean,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense up to [`DENSE_MAX_ORDER`], Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

impl fmt::Display for EigenSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EigenSolver::Auto => "auto",
            EigenSolver::Dense => "dense",
            EigenSolver::Krylov => "krylov",
        })
    }
}

impl FromStr for EigenSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(EigenSolver::Auto),
            "dense" => Ok(EigenSolver::Dense),
            "krylov" | "iterative" => Ok(EigenSolver::Krylov),
            other => Err(Error::Parse(format!("unknown eigensolver {other:?}"))),
        }
    }
}

/// Leading eigenpairs of a Gramian, plus the patch-space basis once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianSpectrum {
    eigenvalues: Vec<f64>,
    vertex_eigenvectors: Vec<Vec<f64>>,
    norm_estimate: f64,
    patch_basis: Option<PatchBasis>,
}

impl GramianSpectrum {
    /// Number of eigenpairs held.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vertex_eigenvectors(&self) -> &[Vec<f64>] {
        &self.vertex_eigenvectors
    }

    /// Estimate of the operator's spectral norm.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    pub fn patch_basis(&self) -> Option<&PatchBasis> {
        self.patch_basis.as_ref()
    }

    /// Basis size when a basis is present, otherwise the number of pairs.
    pub fn effective_rank(&self) -> usize {
        self.patch_basis
            .as_ref()
            .map_or(self.eigenvalues.len(), PatchBasis::len)
    }

    /// `‖A v − λ v‖` for each held pair.
    pub fn residual_norms(&self, op: &dyn SymmetricOperator) -> Vec<f64> {
        let mut av = vec![0.0; op.order()];
        self.eigenvalues
            .iter()
            .zip(&self.vertex_eigenvectors)
            .map(|(&lambda, v)| {
                op.apply(v, &mut av);
                av.iter()
                    .zip(v)
                    .map(|(a, x)| (a - lambda * x).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0.0f64;
    for &x in v.iter() {
        if x.abs() > pivot.abs() {
            pivot = x;
        }
    }
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Dense eigendecomposition; returns all eigenvalues descending with their
/// eigenvectors.
pub(crate) fn dense_eigen(m: &SquareMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.order();
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m.get(i, j));
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).rev().map(|i| s[i]).collect();
    let vectors = (0..n)
        .rev()
        .map(|c| (0..n).map(|r| u[(r, c)]).collect())
        .collect();
    Ok((values, vectors))
}

/// The `count` algebraically largest eigenpairs of `g`, eigenvalues
/// descending, each eigenvector signed so its largest entry is positive.
pub fn top_eigenpairs(g: &Gramian, count: usize, solver: EigenSolver) -> Result<GramianSpectrum> {
    let n = g.order();
    if count == 0 || count > n {
        return Err(Error::InvalidParameter(format!(
            "eigenpair count must satisfy 1 <= L <= {n}, got {count}"
        )));
    }
    let solver = match solver {
        EigenSolver::Auto if n <= DENSE_MAX_ORDER => EigenSolver::Dense,
        EigenSolver::Auto => EigenSolver::Krylov,
        s => s,
    };
    let (eigenvalues, mut vectors, norm_estimate) = match solver {
        EigenSolver::Dense => {
            let owned;
            let m = match &g.repr {
                GramRepr::Dense(m) => m,
                GramRepr::Implicit(_) => {
                    owned = g.to_matrix();
                    &owned
                }
            };
            let (mut values, mut vectors) = dense_eigen(m)?;
            let norm = values[0].abs().max(values[n - 1].abs());
            values.truncate(count);
            vectors.truncate(count);
            (values, vectors, norm)
        }
        _ => {
            let out = lanczos_top(g, count, &LanczosOptions::default())?;
            (out.values, out.vectors, out.norm_estimate)
        }
    };
    vectors.iter_mut().for_each(|v| fix_sign(v));
    Ok(GramianSpectrum {
        eigenvalues,
        vertex_eigenvectors: vectors,
        norm_estimate,
        patch_basis: None,
    })
}
