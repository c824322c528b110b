//! Bartels-Stewart solver for the continuous Lyapunov equation
//! `A^T Q + Q A = -W`.
//!
//! One real Schur decomposition `A = U T U^T` turns the equation into
//! `T^T Y + Y T = -U^T W U`, solved column-block by column-block with
//! forward substitution over the quasi-triangular structure. 2x2 Schur
//! blocks produce small coupled systems solved by Gaussian elimination.

use super::cholesky::cholesky;
use super::schur::real_schur;
use super::{DenseMatrix, MatError, SymmetricMatrix};

/// Solves `A^T Q + Q A = -W` for Hurwitz `A` and positive definite `W`.
///
/// The returned `Q` is symmetric positive definite with residual
/// `||A^T Q + Q A + W||_F <= 1e-8 (1 + ||Q||_F ||A||_F)`.
pub fn solve_lyapunov(a: &DenseMatrix, w: &SymmetricMatrix) -> Result<SymmetricMatrix, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if w.dim() != n {
        return Err(MatError::DimensionMismatch(format!(
            "A is {n}x{n} but W is {0}x{0}",
            w.dim()
        )));
    }
    cholesky(w).map_err(MatError::from)?;

    let schur = real_schur(a)?;
    let abscissa = schur
        .eigenvalues()
        .first()
        .map_or(f64::NEG_INFINITY, |e| e.re);
    if abscissa >= 0.0 {
        return Err(MatError::NotHurwitz { abscissa });
    }

    let t = &schur.t;
    let u = &schur.u;
    let c_tilde = w.congruence(&u.transpose()).into_dense().scale(-1.0);

    let y = solve_quasi_sylvester(t, &c_tilde);
    let q = SymmetricMatrix::mirror(u.matmul(&y).matmul(&u.transpose()));

    // The residual is the oracle for the whole pipeline.
    let residual = lyapunov_residual(a, &q, w);
    let bound = 1e-8 * (1.0 + q.frobenius_norm() * a.frobenius_norm());
    if residual > bound {
        return Err(MatError::ResidualTooLarge { residual, bound });
    }
    cholesky(&q).map_err(MatError::from)?;
    Ok(q)
}

/// `||A^T Q + Q A + W||_F`.
pub fn lyapunov_residual(a: &DenseMatrix, q: &SymmetricMatrix, w: &SymmetricMatrix) -> f64 {
    let atq = a.transpose().matmul(q.dense());
    let qa = q.dense().matmul(a);
    (&(&atq + &qa) + w.dense()).frobenius_norm()
}

/// Solves `T^T Y + Y T = C` for quasi upper triangular `T`.
fn solve_quasi_sylvester(t: &DenseMatrix, c: &DenseMatrix) -> DenseMatrix {
    let n = t.rows();
    let mut y = DenseMatrix::zeros(n, n);
    let mut j = 0;
    while j < n {
        let col_block = if j + 1 < n && t[(j + 1, j)] != 0.0 { 2 } else { 1 };
        if col_block == 1 {
            // rhs_j = c_j - sum_{k<j} T[k][j] y_k
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                let mut v = c[(i, j)];
                for k in 0..j {
                    v -= t[(k, j)] * y[(i, k)];
                }
                rhs[i] = v;
            }
            let col = solve_shifted_lower(t, t[(j, j)], &rhs);
            for i in 0..n {
                y[(i, j)] = col[i];
            }
        } else {
            let b = [
                [t[(j, j)], t[(j, j + 1)]],
                [t[(j + 1, j)], t[(j + 1, j + 1)]],
            ];
            let mut rhs0 = vec![0.0; n];
            let mut rhs1 = vec![0.0; n];
            for i in 0..n {
                let mut v0 = c[(i, j)];
                let mut v1 = c[(i, j + 1)];
                for k in 0..j {
                    v0 -= t[(k, j)] * y[(i, k)];
                    v1 -= t[(k, j + 1)] * y[(i, k)];
                }
                rhs0[i] = v0;
                rhs1[i] = v1;
            }
            let (c0, c1) = solve_coupled_lower(t, &b, &rhs0, &rhs1);
            for i in 0..n {
                y[(i, j)] = c0[i];
                y[(i, j + 1)] = c1[i];
            }
        }
        j += col_block;
    }
    y
}

/// Forward substitution for `(T^T + sigma I) x = rhs`; `T^T` is lower quasi
/// triangular with 2x2 blocks wherever `T` has them.
fn solve_shifted_lower(t: &DenseMatrix, sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = t.rows();
    let mut x = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let row_block = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        if row_block == 1 {
            let mut r = rhs[i];
            for k in 0..i {
                r -= t[(k, i)] * x[k]; // T^T[i][k] = T[k][i]
            }
            x[i] = r / (t[(i, i)] + sigma);
        } else {
            let mut r0 = rhs[i];
            let mut r1 = rhs[i + 1];
            for k in 0..i {
                r0 -= t[(k, i)] * x[k];
                r1 -= t[(k, i + 1)] * x[k];
            }
            // [[T[i][i]+s, T[i+1][i]], [T[i][i+1], T[i+1][i+1]+s]]
            let m00 = t[(i, i)] + sigma;
            let m01 = t[(i + 1, i)];
            let m10 = t[(i, i + 1)];
            let m11 = t[(i + 1, i + 1)] + sigma;
            let det = m00 * m11 - m01 * m10;
            x[i] = (m11 * r0 - m01 * r1) / det;
            x[i + 1] = (-m10 * r0 + m00 * r1) / det;
        }
        i += row_block;
    }
    x
}

/// Forward substitution for a pair of columns coupled by a 2x2 block `B`:
/// `T^T x0 + B[0][0] x0 + B[1][0] x1 = rhs0`,
/// `T^T x1 + B[0][1] x0 + B[1][1] x1 = rhs1`.
fn solve_coupled_lower(
    t: &DenseMatrix,
    b: &[[f64; 2]; 2],
    rhs0: &[f64],
    rhs1: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = t.rows();
    let mut x0 = vec![0.0; n];
    let mut x1 = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let row_block = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        if row_block == 1 {
            let mut r0 = rhs0[i];
            let mut r1 = rhs1[i];
            for k in 0..i {
                r0 -= t[(k, i)] * x0[k];
                r1 -= t[(k, i)] * x1[k];
            }
            let tii = t[(i, i)];
            let m = [[tii + b[0][0], b[1][0]], [b[0][1], tii + b[1][1]]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            x0[i] = (m[1][1] * r0 - m[0][1] * r1) / det;
            x1[i] = (-m[1][0] * r0 + m[0][0] * r1) / det;
        } else {
            // Unknowns (x0[i], x0[i+1], x1[i], x1[i+1]).
            let mut r = [rhs0[i], rhs0[i + 1], rhs1[i], rhs1[i + 1]];
            for k in 0..i {
                r[0] -= t[(k, i)] * x0[k];
                r[1] -= t[(k, i + 1)] * x0[k];
                r[2] -= t[(k, i)] * x1[k];
                r[3] -= t[(k, i + 1)] * x1[k];
            }
            let tt = [[t[(i, i)], t[(i + 1, i)]], [t[(i, i + 1)], t[(i + 1, i + 1)]]];
            let mut m = [[0.0f64; 4]; 4];
            // Rows 0..1: column-j equation for block rows i, i+1.
            m[0][0] = tt[0][0] + b[0][0];
            m[0][1] = tt[0][1];
            m[0][2] = b[1][0];
            m[1][0] = tt[1][0];
            m[1][1] = tt[1][1] + b[0][0];
            m[1][3] = b[1][0];
            // Rows 2..3: column-(j+1) equation.
            m[2][0] = b[0][1];
            m[2][2] = tt[0][0] + b[1][1];
            m[2][3] = tt[0][1];
            m[3][1] = b[0][1];
            m[3][2] = tt[1][0];
            m[3][3] = tt[1][1] + b[1][1];
            let sol = solve4(&mut m, &mut r);
            x0[i] = sol[0];
            x0[i + 1] = sol[1];
            x1[i] = sol[2];
            x1[i + 1] = sol[3];
        }
        i += row_block;
    }
    (x0, x1)
}

/// Gaussian elimination with partial pivoting on a 4x4 system.
fn solve4(m: &mut [[f64; 4]; 4], r: &mut [f64; 4]) -> [f64; 4] {
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if piv != col {
            m.swap(col, piv);
            r.swap(col, piv);
        }
        let p = m[col][col];
        if p == 0.0 {
            continue;
        }
        for row in col + 1..4 {
            let f = m[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..4 {
                m[row][j] -= f * m[col][j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0f64; 4];
    for i in (0..4).rev() {
        let mut s = r[i];
        for j in i + 1..4 {
            s -= m[i][j] * x[j];
        }
        x[i] = if m[i][i] != 0.0 { s / m[i][i] } else { 0.0 };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{cholesky, spectral_abscissa};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hurwitz(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = spectral_abscissa(&g).unwrap() + rng.gen_range(0.2..1.0);
        &g - &DenseMatrix::identity(n).scale(shift)
    }

    #[test]
    fn negated_identity_gives_half_identity() {
        let a = DenseMatrix::identity(4).scale(-1.0);
        let q = solve_lyapunov(&a, &SymmetricMatrix::identity(4)).unwrap();
        assert!((q.dense() - &DenseMatrix::identity(4).scale(0.5)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn decoupled_diagonal_case() {
        let a = DenseMatrix::diag(&[-1.0, -2.0]);
        let q = solve_lyapunov(&a, &SymmetricMatrix::identity(2)).unwrap();
        assert!((q.get(0, 0) - 0.5).abs() < 1e-14);
        assert!((q.get(1, 1) - 0.25).abs() < 1e-14);
        assert!(q.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn non_hurwitz_rejected_with_abscissa() {
        let a = DenseMatrix::identity(3);
        match solve_lyapunov(&a, &SymmetricMatrix::identity(3)) {
            Err(MatError::NotHurwitz { abscissa }) => {
                assert!((abscissa - 1.0).abs() < 1e-12)
            }
            other => panic!("expected NotHurwitz, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_rhs_rejected() {
        let a = DenseMatrix::identity(2).scale(-1.0);
        let w = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_lyapunov(&a, &w),
            Err(MatError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn random_hurwitz_solution_is_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_hurwitz(6, &mut rng);
        let w = SymmetricMatrix::identity(6);
        let q = solve_lyapunov(&a, &w).unwrap();
        let res = lyapunov_residual(&a, &q, &w);
        assert!(res <= 1e-8 * (1.0 + q.frobenius_norm() * a.frobenius_norm()));
        assert!(cholesky(&q).is_ok());
    }

    #[test]
    fn residual_bound_holds_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let n = rng.gen_range(2..=30);
            let a = random_hurwitz(n, &mut rng);
            let w = SymmetricMatrix::identity(n);
            let q = solve_lyapunov(&a, &w).unwrap();
            let res = lyapunov_residual(&a, &q, &w);
            let bound = 1e-8 * (1.0 + q.frobenius_norm() * a.frobenius_norm());
            assert!(res <= bound, "residual {res:.3e} > bound {bound:.3e} at n={n}");
        }
    }
}
