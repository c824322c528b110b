//! Nesterov-Todd scaling for the PSD cone.
//!
//! Given strictly definite `X` and `S`, factor `X = Lx Lx^T`, `S = Ls Ls^T`
//! and take the SVD `Ls^T Lx = U diag(sigma) V^T`. With
//! `R = Lx V diag(sigma)^{-1/2}` the pair scales to a common diagonal:
//! `R^{-1} X R^{-T} = R^T S R = diag(sigma)`, which makes the linearized
//! complementarity system diagonal in this basis.

use crate::mat::{cholesky, DenseMatrix, SymmetricMatrix};

pub(crate) struct NtScaling {
    pub r: DenseMatrix,
    pub rinv: DenseMatrix,
    /// Common scaled eigenvalues sigma; `<X, S> = sum sigma_i^2`.
    pub lambda: Vec<f64>,
    pub w: DenseMatrix,
    pub winv: DenseMatrix,
}

impl NtScaling {
    pub(crate) fn compute(x: &SymmetricMatrix, s: &SymmetricMatrix) -> Option<Self> {
        let lx = cholesky(x).ok()?;
        let ls = cholesky(s).ok()?;
        let g = ls.transpose().matmul(&lx);
        let (u, sigma, v) = svd_one_sided_jacobi(&g)?;

        let n = x.dim();
        let mut v_scaled = v.clone();
        let mut ut_scaled = u.transpose();
        for j in 0..n {
            let inv_sqrt = 1.0 / sigma[j].sqrt();
            for i in 0..n {
                v_scaled[(i, j)] *= inv_sqrt;
            }
            for c in 0..n {
                ut_scaled[(j, c)] *= inv_sqrt;
            }
        }
        let r = lx.matmul(&v_scaled);
        let rinv = ut_scaled.matmul(&ls.transpose());
        let w = r.matmul(&r.transpose());
        let winv = rinv.transpose().matmul(&rinv);
        Some(Self {
            r,
            rinv,
            lambda: sigma,
            w,
            winv,
        })
    }
}

/// One-sided Jacobi SVD of a square nonsingular matrix: `G = U diag(s) V^T`.
///
/// Column pairs are rotated until mutually orthogonal; singular values come
/// out with high relative accuracy, which matters late in the interior-point
/// run when `sigma ~ sqrt(mu)` spans many orders of magnitude.
pub(crate) fn svd_one_sided_jacobi(
    g: &DenseMatrix,
) -> Option<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let n = g.rows();
    if n != g.cols() {
        return None;
    }
    // Column-major working copies for cache-friendly column rotations.
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| g[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    const MAX_SWEEPS: usize = 30;
    const ORTH_TOL: f64 = 1e-14;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    a += w[p][i] * w[p][i];
                    b += w[q][i] * w[q][i];
                    c += w[p][i] * w[q][i];
                }
                if c.abs() <= ORTH_TOL * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..n {
                    let wp = w[p][i];
                    let wq = w[q][i];
                    w[p][i] = cs * wp - sn * wq;
                    w[q][i] = sn * wp + cs * wq;
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = cs * vp - sn * vq;
                    v[q][i] = sn * vp + cs * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = vec![0.0; n];
    let mut u = DenseMatrix::zeros(n, n);
    let mut vm = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let norm = w[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        sigma[j] = norm;
        for i in 0..n {
            u[(i, j)] = w[j][i] / norm;
            vm[(i, j)] = v[j][i];
        }
    }
    Some((u, sigma, vm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::symmetrize;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut impl Rng) -> SymmetricMatrix {
        let p = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        symmetrize(&(&p.matmul(&p.transpose()) + &DenseMatrix::identity(n).scale(0.05))).unwrap()
    }

    #[test]
    fn svd_reconstructs_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for n in [2usize, 4, 9, 20] {
            let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let (u, s, v) = svd_one_sided_jacobi(&g).unwrap();
            let rebuilt = u.matmul(&DenseMatrix::diag(&s)).matmul(&v.transpose());
            assert!((&rebuilt - &g).frobenius_norm() < 1e-12 * (1.0 + g.frobenius_norm()));
            let orth_u = (&u.transpose().matmul(&u) - &DenseMatrix::identity(n)).frobenius_norm();
            let orth_v = (&v.transpose().matmul(&v) - &DenseMatrix::identity(n)).frobenius_norm();
            assert!(orth_u < 1e-12 && orth_v < 1e-12);
        }
    }

    #[test]
    fn svd_handles_wide_singular_value_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let n = 6;
        let d = DenseMatrix::diag(&[1e3, 1.0, 1e-3, 1e-6, 5.0, 2e-4]);
        let q1 = random_rotation(n, &mut rng);
        let q2 = random_rotation(n, &mut rng);
        let g = q1.matmul(&d).matmul(&q2);
        let (_, mut s, _) = svd_one_sided_jacobi(&g).unwrap();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expected = [1e3, 5.0, 1.0, 1e-3, 2e-4, 1e-6];
        for (got, want) in s.iter().zip(expected) {
            assert!(
                (got - want).abs() <= 1e-9 * want,
                "singular value {got:.6e} vs {want:.6e}"
            );
        }
    }

    fn random_rotation(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        // Orthonormalize a random matrix by Gram-Schmidt.
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for j in 0..n {
            for k in 0..j {
                let d: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
                for i in 0..n {
                    cols[j][i] -= d * cols[k][i];
                }
            }
            let nrm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in cols[j].iter_mut() {
                *x /= nrm;
            }
        }
        DenseMatrix::from_fn(n, n, |i, j| cols[j][i])
    }

    #[test]
    fn nt_scaling_diagonalizes_both_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for n in [2usize, 5, 12] {
            let x = random_spd(n, &mut rng);
            let s = random_spd(n, &mut rng);
            let nt = NtScaling::compute(&x, &s).unwrap();
            let lam = DenseMatrix::diag(&nt.lambda);
            // R^T S R = diag(sigma)
            let lhs1 = nt.r.transpose().matmul(s.dense()).matmul(&nt.r);
            assert!((&lhs1 - &lam).frobenius_norm() < 1e-10 * (1.0 + s.frobenius_norm()));
            // R^{-1} X R^{-T} = diag(sigma)
            let lhs2 = nt.rinv.matmul(x.dense()).matmul(&nt.rinv.transpose());
            assert!((&lhs2 - &lam).frobenius_norm() < 1e-10 * (1.0 + x.frobenius_norm()));
            // W S W = X with W = R R^T
            let wsw = nt.w.matmul(s.dense()).matmul(&nt.w);
            assert!((&wsw - x.dense()).frobenius_norm() < 1e-9 * (1.0 + x.frobenius_norm()));
            // R * Rinv = I
            let eye = nt.r.matmul(&nt.rinv);
            assert!((&eye - &DenseMatrix::identity(n)).frobenius_norm() < 1e-10);
            let _ = &nt.winv;
        }
    }
}
