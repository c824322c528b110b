//! Self-contained dense real linear algebra: matrix types, factorizations,
//! eigenvalue computation, least squares and Lyapunov equations.
//!
//! Everything operates on row-major `f64` storage. All routines are pure
//! functions of their inputs; values are immutable after construction.

mod cholesky;
mod jacobi;
mod lstsq;
mod lyapunov;
mod schur;

pub use cholesky::{cholesky, NotPositiveDefinite};
pub(crate) use cholesky::{back_substitute_lt, forward_substitute, invert_lower};
pub(crate) use lstsq::{qr_rank, Cpqr};
pub use lstsq::least_squares;
pub use lyapunov::solve_lyapunov;
pub use schur::{eig_general, real_schur, spectral_abscissa, RealSchur};

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use thiserror::Error;

/// Errors produced by the linear algebra layer.
#[derive(Debug, Clone, Error)]
pub enum MatError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("eigenvalue iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not Hurwitz: spectral abscissa {abscissa:.6e} >= 0")]
    NotHurwitz { abscissa: f64 },
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("solution residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
}

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested row slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatError::DimensionMismatch(
                "ragged rows in matrix literal".into(),
            ));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut c = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let crow = &mut c.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                if a_ik == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += a_ik * bv;
                }
            }
        }
        c
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn scale(&self, a: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise inner product `trace(self^T other)`.
    pub fn inner(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&DenseMatrix> for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{:>13.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Symmetric real matrix. Entries `(i,j)` and `(j,i)` are bitwise identical
/// after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    m: DenseMatrix,
}

impl SymmetricMatrix {
    /// Wraps a square matrix, rejecting it if any entry pair differs by more
    /// than `1e-12 * max|entry|`. The stored entries are mirrored exactly.
    pub fn new(m: DenseMatrix) -> Result<Self, MatError> {
        if !m.is_square() {
            return Err(MatError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        let scale = m.max_abs().max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asym > 1e-12 * scale {
            return Err(MatError::NotSymmetric {
                max_asymmetry: max_asym,
            });
        }
        Ok(Self::mirror(m))
    }

    /// Averages the off-diagonal pairs so the stored matrix is exactly
    /// symmetric, regardless of how far the input was from symmetric.
    pub(crate) fn mirror(mut m: DenseMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        Self { m }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DenseMatrix::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DenseMatrix::zeros(n, n),
        }
    }

    pub fn diag(entries: &[f64]) -> Self {
        Self {
            m: DenseMatrix::diag(entries),
        }
    }

    /// Rank-one outer product `z z^T`.
    pub fn outer(z: &[f64]) -> Self {
        let n = z.len();
        Self {
            m: DenseMatrix::from_fn(n, n, |i, j| z[i] * z[j]),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.rows
    }

    #[inline]
    pub fn dense(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.frobenius_norm()
    }

    /// `<self, other>` Frobenius inner product.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        self.m.inner(&other.m)
    }

    /// Quadratic form `z^T M z`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim(), "quad_form dimension mismatch");
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += z[i] * self.m.row(i).iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    pub fn scale(&self, a: f64) -> SymmetricMatrix {
        Self {
            m: self.m.scale(a),
        }
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        Self {
            m: &self.m - &other.m,
        }
    }

    /// `self + a * other`, exploiting that both operands are symmetric.
    pub fn add_scaled(&self, a: f64, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim(), other.dim());
        let data = self
            .m
            .data
            .iter()
            .zip(&other.m.data)
            .map(|(x, y)| x + a * y)
            .collect();
        Self {
            m: DenseMatrix {
                rows: self.dim(),
                cols: self.dim(),
                data,
            },
        }
    }

    /// Congruence `G M G^T` (exactly symmetrized).
    pub fn congruence(&self, g: &DenseMatrix) -> SymmetricMatrix {
        let gm = g.matmul(&self.m);
        let gmgt = gm.matmul(&g.transpose());
        SymmetricMatrix::mirror(gmgt)
    }
}

/// Symmetric component `(M + M^T) / 2` of a square matrix.
pub fn symmetrize(m: &DenseMatrix) -> Result<SymmetricMatrix, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(SymmetricMatrix::mirror(m.clone()))
}

/// One eigenvalue of a real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues sorted by descending real part; for symmetric input an
/// orthonormal eigenvector matrix is attached (column `k` pairs with
/// eigenvalue `k`).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub eigenvectors: Option<DenseMatrix>,
}

impl Spectrum {
    /// Largest real part over the spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NEG_INFINITY, |e| e.re)
    }

    /// Real parts in sorted (descending) order.
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }
}

pub(crate) fn sort_eigenvalues(vals: &mut [Eigenvalue]) {
    vals.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Symmetric eigendecomposition via cyclic Jacobi rotations.
pub fn eig_sym(s: &SymmetricMatrix) -> Result<Spectrum, MatError> {
    jacobi::eig_sym_jacobi(s)
}

/// Number of eigenvalues strictly greater than `tol`.
///
/// The threshold is absolute; callers normalize the matrix scale (all ranked
/// matrices here have unit trace).
pub fn numerical_rank(s: &SymmetricMatrix, tol: f64) -> Result<usize, MatError> {
    let spec = eig_sym(s)?;
    Ok(spec.eigenvalues.iter().filter(|e| e.re > tol).count())
}

/// Euclidean norm of a vector.
pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dot product.
pub fn vec_dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_dense(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn symmetrize_matches_definition() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let s = symmetrize(&m).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 1.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn symmetrize_fixed_point_on_symmetric_input() {
        let s = SymmetricMatrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 3.0]]).unwrap();
        let again = symmetrize(s.dense()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn symmetrize_result_is_exactly_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = random_dense(5, &mut rng);
        let s = symmetrize(&m).unwrap();
        let diff = s.dense() - &s.dense().transpose();
        assert_eq!(diff.frobenius_norm(), 0.0);
    }

    #[test]
    fn symmetrize_rejects_non_square() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            symmetrize(&m),
            Err(MatError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn symmetrize_is_idempotent_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_dense(4, &mut rng);
            let n = random_dense(4, &mut rng);
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let s1 = symmetrize(&m).unwrap();
            let s2 = symmetrize(s1.dense()).unwrap();
            assert!((s1.dense() - s2.dense()).frobenius_norm() == 0.0);

            let combo = &m.scale(a) + &n.scale(b);
            let lhs = symmetrize(&combo).unwrap();
            let rhs = symmetrize(&m)
                .unwrap()
                .scale(a)
                .add(&symmetrize(&n).unwrap().scale(b));
            assert!((lhs.dense() - rhs.dense()).frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn quad_form_sees_only_symmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_dense(5, &mut rng);
            let s = symmetrize(&m).unwrap();
            let z: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mz = m.matvec(&z);
            let full: f64 = vec_dot(&z, &mz);
            let sym = s.quad_form(&z);
            let scale = 1.0 + full.abs();
            assert!((full - sym).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn constructors_reject_non_finite() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn symmetric_constructor_rejects_asymmetry() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            SymmetricMatrix::new(m),
            Err(MatError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn numerical_rank_counts_eigenvalues_above_tol() {
        let z = vec![0.6, 0.8];
        let rank1 = SymmetricMatrix::outer(&z);
        assert_eq!(numerical_rank(&rank1, 1e-7).unwrap(), 1);

        let scaled_identity = SymmetricMatrix::identity(10).scale(0.1);
        assert_eq!(numerical_rank(&scaled_identity, 1e-7).unwrap(), 10);

        // 1/2 (z1 z1^T + z2 z2^T) with orthonormal z1, z2: eigenvalues 1/2, 1/2, 0, 0.
        let z1 = vec![1.0, 0.0, 0.0, 0.0];
        let z2 = vec![0.0, 1.0, 0.0, 0.0];
        let mix = SymmetricMatrix::outer(&z1)
            .scale(0.5)
            .add(&SymmetricMatrix::outer(&z2).scale(0.5));
        assert_eq!(numerical_rank(&mix, 1e-7).unwrap(), 2);
    }
}
