//! Cholesky factorization of symmetric positive definite matrices.

use super::{DenseMatrix, MatError, SymmetricMatrix};

/// Outcome of a failed Cholesky factorization. Encountering it is a
/// legitimate answer to "is this matrix positive definite?", not a failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    /// Index of the first non-positive pivot.
    pub index: usize,
    /// Value of that pivot.
    pub pivot: f64,
}

impl From<NotPositiveDefinite> for MatError {
    fn from(e: NotPositiveDefinite) -> Self {
        MatError::NotPositiveDefinite {
            index: e.index,
            pivot: e.pivot,
        }
    }
}

/// Lower-triangular factor `L` with `L L^T = S`, or [`NotPositiveDefinite`]
/// as soon as a pivot `<= 0` is encountered.
pub fn cholesky(s: &SymmetricMatrix) -> Result<DenseMatrix, NotPositiveDefinite> {
    let n = s.dim();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return Err(NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Forward substitution `L x = b` for lower-triangular `L`.
pub(crate) fn forward_substitute(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Back substitution `L^T x = b` for lower-triangular `L`.
pub(crate) fn back_substitute_lt(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Inverse of a lower-triangular matrix.
pub(crate) fn invert_lower(l: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut acc = 0.0;
            for k in j..i {
                acc += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc / l[(i, i)];
        }
    }
    inv
}
