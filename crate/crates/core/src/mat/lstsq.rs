//! Minimum-norm least squares via column-pivoted QR.
//!
//! Rank-deficient systems get the minimum-Frobenius-norm solution through a
//! complete orthogonal decomposition: a second (unpivoted) QR of the
//! trapezoidal factor's transpose. Deterministic for fixed inputs.

use super::{DenseMatrix, MatError};

/// Relative diagonal threshold deciding the numerical rank of the factor.
fn rank_tolerance(m: usize, n: usize) -> f64 {
    f64::EPSILON * (m.max(n) as f64) * 16.0
}

/// Returns the matrix `M` minimizing `||Y - M X||_F`; among minimizers, the
/// one with minimum Frobenius norm.
///
/// `X` is `n_x x J`, `Y` is `n_y x J` (sample columns), the result is
/// `n_y x n_x`.
pub fn least_squares(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix, MatError> {
    if x.cols() != y.cols() {
        return Err(MatError::DimensionMismatch(format!(
            "sample counts differ: X has {} columns, Y has {}",
            x.cols(),
            y.cols()
        )));
    }
    // Minimize over each row of M: X^T m_r = y_r in the least-squares sense.
    let design = x.transpose(); // J x n_x
    let rhs = y.transpose(); // J x n_y
    let qr = Cpqr::factor(&design);
    let sol = qr.solve_min_norm(&rhs); // n_x x n_y
    Ok(sol.transpose())
}

/// Column-pivoted Householder QR.
pub(crate) struct Cpqr {
    r: DenseMatrix,
    reflectors: Vec<(usize, Vec<f64>, f64)>, // (offset, v, beta)
    piv: Vec<usize>,
    rank: usize,
    rows: usize,
    cols: usize,
}

impl Cpqr {
    pub(crate) fn factor(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut r = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        let kmax = m.min(n);

        for k in 0..kmax {
            // Freshly computed column norms keep the pivot order deterministic
            // and avoid downdating cancellation.
            let mut best = k;
            let mut best_norm2 = -1.0;
            for j in k..n {
                let mut s = 0.0;
                for i in k..m {
                    s += r[(i, j)] * r[(i, j)];
                }
                if s > best_norm2 {
                    best_norm2 = s;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let tmp = r[(i, k)];
                    r[(i, k)] = r[(i, best)];
                    r[(i, best)] = tmp;
                }
                piv.swap(k, best);
            }
            if best_norm2 <= 0.0 {
                break;
            }
            let norm = best_norm2.sqrt();
            let alpha = -r[(k, k)].signum() * norm;
            let mut v = vec![0.0; m - k];
            for i in k..m {
                v[i - k] = r[(i, k)];
            }
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 == 0.0 {
                r[(k, k)] = alpha;
                continue;
            }
            let beta = 2.0 / vnorm2;
            for j in k..n {
                let mut dot = 0.0;
                for i in k..m {
                    dot += v[i - k] * r[(i, j)];
                }
                let f = beta * dot;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            r[(k, k)] = alpha;
            for i in k + 1..m {
                r[(i, k)] = 0.0;
            }
            reflectors.push((k, v, beta));
        }

        let tol = rank_tolerance(m, n) * r[(0, 0)].abs().max(f64::MIN_POSITIVE);
        let mut rank = 0;
        for k in 0..kmax {
            if r[(k, k)].abs() > tol {
                rank = k + 1;
            } else {
                break;
            }
        }
        if m == 0 || n == 0 {
            rank = 0;
        }

        Self {
            r,
            reflectors,
            piv,
            rank,
            rows: m,
            cols: n,
        }
    }

    /// Applies `Q^T` to a matrix in place (same row count as the factored one).
    fn apply_qt(&self, b: &mut DenseMatrix) {
        for (k, v, beta) in &self.reflectors {
            for j in 0..b.cols() {
                let mut dot = 0.0;
                for i in *k..self.rows {
                    dot += v[i - k] * b[(i, j)];
                }
                let f = beta * dot;
                for i in *k..self.rows {
                    b[(i, j)] -= f * v[i - k];
                }
            }
        }
    }

    /// Minimum-norm solution of `A X = B` in the least-squares sense,
    /// one column of `B` at a time. Returns `cols x q`.
    pub(crate) fn solve_min_norm(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.rows, "rhs row count mismatch");
        let q = b.cols();
        let n = self.cols;
        let r = self.rank;
        let mut c = b.clone();
        self.apply_qt(&mut c);

        let mut x = DenseMatrix::zeros(n, q);
        if r == 0 {
            return x;
        }

        if r == n {
            // Full column rank: plain back substitution.
            for col in 0..q {
                let mut y = vec![0.0; n];
                for i in (0..n).rev() {
                    let mut s = c[(i, col)];
                    for k in i + 1..n {
                        s -= self.r[(i, k)] * y[k];
                    }
                    y[i] = s / self.r[(i, i)];
                }
                for i in 0..n {
                    x[(self.piv[i], col)] = y[i];
                }
            }
            return x;
        }

        // Complete orthogonal decomposition: QR of the trapezoid transposed.
        // W = R[0..r, 0..n] = T^T U^T with U (n x r) orthonormal columns.
        let mut wt = DenseMatrix::zeros(n, r);
        for i in 0..r {
            for j in 0..n {
                wt[(j, i)] = self.r[(i, j)];
            }
        }
        let inner = Cpqr::factor_unpivoted(&wt);

        for col in 0..q {
            // Solve T^T w = c_head by forward substitution (T is upper).
            let mut w = vec![0.0; r];
            for i in 0..r {
                let mut s = c[(i, col)];
                for k in 0..i {
                    s -= inner.r[(k, i)] * w[k];
                }
                w[i] = s / inner.r[(i, i)];
            }
            // y = U w = Q_inner [w; 0]
            let mut y = vec![0.0; n];
            y[..r].copy_from_slice(&w);
            for (k, v, beta) in inner.reflectors.iter().rev() {
                let mut dot = 0.0;
                for i in *k..n {
                    dot += v[i - k] * y[i];
                }
                let f = beta * dot;
                for i in *k..n {
                    y[i] -= f * v[i - k];
                }
            }
            for i in 0..n {
                x[(self.piv[i], col)] = y[i];
            }
        }
        x
    }

    /// Plain Householder QR (no pivoting), used for the inner factorization.
    fn factor_unpivoted(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut r = a.clone();
        let mut reflectors = Vec::new();
        for k in 0..m.min(n) {
            let mut norm2 = 0.0;
            for i in k..m {
                norm2 += r[(i, k)] * r[(i, k)];
            }
            if norm2 == 0.0 {
                continue;
            }
            let alpha = -r[(k, k)].signum() * norm2.sqrt();
            let mut v = vec![0.0; m - k];
            for i in k..m {
                v[i - k] = r[(i, k)];
            }
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 == 0.0 {
                r[(k, k)] = alpha;
                continue;
            }
            let beta = 2.0 / vnorm2;
            for j in k..n {
                let mut dot = 0.0;
                for i in k..m {
                    dot += v[i - k] * r[(i, j)];
                }
                let f = beta * dot;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            r[(k, k)] = alpha;
            for i in k + 1..m {
                r[(i, k)] = 0.0;
            }
            reflectors.push((k, v, beta));
        }
        Self {
            r,
            reflectors,
            piv: (0..n).collect(),
            rank: m.min(n),
            rows: m,
            cols: n,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rank
    }

    pub(crate) fn r_factor(&self) -> &DenseMatrix {
        &self.r
    }

    /// Applies `Q` to a vector in place (`v <- Q v`).
    pub(crate) fn apply_q(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.rows);
        for (k, vec, beta) in self.reflectors.iter().rev() {
            let mut dot = 0.0;
            for i in *k..self.rows {
                dot += vec[i - k] * v[i];
            }
            let f = beta * dot;
            for i in *k..self.rows {
                v[i] -= f * vec[i - k];
            }
        }
    }
}

/// Numerical rank of a rectangular matrix from its pivoted QR diagonal.
pub(crate) fn qr_rank(a: &DenseMatrix) -> usize {
    Cpqr::factor(a).rank()
}
