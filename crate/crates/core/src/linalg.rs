//! Dense spectral helpers: symmetric eigen-summaries with explicit rank
//! tolerances, SVD-based rank and norms, and subspace comparison.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Maximum `|M - M^T|` entry, relative to `max(1, |M|_max)`, accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    AsymmetricInput { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// How the numeric-rank threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTolerance {
    /// `order * 2^-52 * largest magnitude`.
    #[default]
    Auto,
    Absolute(f64),
}

impl RankTolerance {
    pub fn resolve(self, order: usize, largest: f64) -> f64 {
        match self {
            RankTolerance::Auto => order as f64 * f64::EPSILON * largest.max(0.0),
            RankTolerance::Absolute(t) => t,
        }
    }
}

/// Eigen-summary of a symmetric positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// Orthonormal columns spanning the eigenvectors with eigenvalue at or
    /// below `tolerance`.
    pub null_basis: DMatrix<f64>,
    pub tolerance: f64,
}

impl SpectralSummary {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn nullity(&self) -> usize {
        self.order() - self.rank
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax() / m.amax().max(1.0)
}

/// Sorted eigen-decomposition, numeric rank and null-space basis of a
/// symmetric matrix.
pub fn spectral_summary(m: &DMatrix<f64>, policy: RankTolerance) -> Result<SpectralSummary, LinalgError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOLERANCE {
        return Err(LinalgError::AsymmetricInput { asymmetry: asym });
    }
    if rows == 0 {
        return Ok(SpectralSummary {
            eigenvalues: Vec::new(),
            rank: 0,
            null_basis: DMatrix::zeros(0, 0),
            tolerance: 0.0,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let largest = eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let tolerance = policy.resolve(rows, largest);
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| eig.eigenvalues[k] <= tolerance)
        .collect();
    let mut null_basis = DMatrix::zeros(rows, null.len());
    for (c, &k) in null.iter().enumerate() {
        null_basis.set_column(c, &eig.eigenvectors.column(k));
    }
    Ok(SpectralSummary {
        rank: rows - null.len(),
        eigenvalues,
        null_basis,
        tolerance,
    })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numeric rank of a general matrix; `Auto` uses `max(rows, cols) * eps * sigma_max`.
pub fn numeric_rank(m: &DMatrix<f64>, policy: RankTolerance) -> (usize, f64) {
    let s = singular_values(m);
    let largest = s.first().copied().unwrap_or(0.0);
    let tol = policy.resolve(m.nrows().max(m.ncols()), largest);
    (s.iter().filter(|&&x| x > tol).count(), tol)
}

/// Largest sine of the principal angles between the column spans of two
/// matrices with orthonormal columns. Returns `1.0` when dimensions differ.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let residual_b = b - a * (a.transpose() * b);
    let residual_a = a - b * (b.transpose() * a);
    spectral_norm(&residual_b).max(spectral_norm(&residual_a))
}

/// Orthonormal basis of the column span of `m` via thin SVD, dropping
/// directions with singular value at or below `tol`.
pub fn orthonormal_span(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &u.column(k));
    }
    out
}
