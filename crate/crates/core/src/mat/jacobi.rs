//! Cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Plane rotations annihilate one off-diagonal element at a time; sweeps
//! repeat until the off-diagonal mass is negligible. Robust for every real
//! symmetric matrix, and fast enough for the dimensions used here (N <= 150).

use super::{sort_eigenvalues, DenseMatrix, Eigenvalue, MatError, Spectrum, SymmetricMatrix};

const MAX_SWEEPS: usize = 100;

pub(crate) fn eig_sym_jacobi(s: &SymmetricMatrix) -> Result<Spectrum, MatError> {
    let n = s.dim();
    let mut a = s.dense().clone();
    let mut v = DenseMatrix::identity(n);

    if n <= 1 {
        let vals = (0..n)
            .map(|i| Eigenvalue {
                re: a[(i, i)],
                im: 0.0,
            })
            .collect();
        return Ok(Spectrum {
            eigenvalues: vals,
            eigenvectors: Some(v),
        });
    }

    let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let stop = 1e-15 * norm;

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= stop {
            let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)], i)).collect();
            pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

            let mut vecs = DenseMatrix::zeros(n, n);
            for (col, &(_, src)) in pairs.iter().enumerate() {
                // Sign convention: largest-magnitude entry positive, so the
                // decomposition is deterministic up to eigenvalue ties.
                let mut lead = 0;
                for i in 1..n {
                    if v[(i, src)].abs() > v[(lead, src)].abs() {
                        lead = i;
                    }
                }
                let flip = if v[(lead, src)] < 0.0 { -1.0 } else { 1.0 };
                for i in 0..n {
                    vecs[(i, col)] = flip * v[(i, src)];
                }
            }
            let mut vals: Vec<Eigenvalue> = pairs
                .iter()
                .map(|&(re, _)| Eigenvalue { re, im: 0.0 })
                .collect();
            sort_eigenvalues(&mut vals);
            return Ok(Spectrum {
                eigenvalues: vals,
                eigenvectors: Some(vecs),
            });
        }

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                // Rotations on already-negligible entries only churn rounding noise.
                if sweep > 0 && apq.abs() < 1e-3 * stop / n as f64 {
                    continue;
                }
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (a[(q, q)] - a[(p, p)]) / apq;
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s_rot = t * c;
                let tau = s_rot / (1.0 + c);

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = a[(j, p)];
                    let ajq = a[(j, q)];
                    let new_p = ajp - s_rot * (ajq + tau * ajp);
                    let new_q = ajq + s_rot * (ajp - tau * ajq);
                    a[(j, p)] = new_p;
                    a[(p, j)] = new_p;
                    a[(j, q)] = new_q;
                    a[(q, j)] = new_q;
                }
                for j in 0..n {
                    let vjp = v[(j, p)];
                    let vjq = v[(j, q)];
                    v[(j, p)] = vjp - s_rot * (vjq + tau * vjp);
                    v[(j, q)] = vjq + s_rot * (vjp - tau * vjq);
                }
            }
        }
    }

    let mut off = 0.0f64;
    for p in 0..n - 1 {
        for q in p + 1..n {
            off += a[(p, q)] * a[(p, q)];
        }
    }
    Err(MatError::EigenNonConvergence {
        iterations: MAX_SWEEPS,
        residual: (2.0 * off).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use crate::mat::{eig_sym, DenseMatrix, SymmetricMatrix};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruction_error(s: &SymmetricMatrix) -> f64 {
        let spec = eig_sym(s).unwrap();
        let v = spec.eigenvectors.unwrap();
        let lambda = DenseMatrix::diag(&spec.eigenvalues.iter().map(|e| e.re).collect::<Vec<_>>());
        let rebuilt = v.matmul(&lambda).matmul(&v.transpose());
        (s.dense() - &rebuilt).frobenius_norm()
    }

    #[test]
    fn identity_spectrum() {
        let spec = eig_sym(&SymmetricMatrix::identity(3)).unwrap();
        for e in &spec.eigenvalues {
            assert_eq!(e.re, 1.0);
            assert_eq!(e.im, 0.0);
        }
    }

    #[test]
    fn diagonal_spectrum_sorted_with_axis_eigenvectors() {
        let s = SymmetricMatrix::diag(&[3.0, -1.0]);
        let spec = eig_sym(&s).unwrap();
        assert_eq!(spec.real_parts(), vec![3.0, -1.0]);
        let v = spec.eigenvectors.unwrap();
        // e1, e2 up to sign; the convention makes them exactly e1, e2.
        assert!((v[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(v[(1, 0)].abs() < 1e-14);
        assert!((v[(1, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DenseMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let s = crate::mat::symmetrize(&p.matmul(&p.transpose())).unwrap();
        let spec = eig_sym(&s).unwrap();
        for e in &spec.eigenvalues {
            assert!(e.re >= -1e-12, "PSD-by-construction eigenvalue {}", e.re);
        }
        // Cross-check PSD via a shifted Cholesky.
        let shifted = s.add(&SymmetricMatrix::identity(4).scale(1e-10));
        assert!(crate::mat::cholesky(&shifted).is_ok());
    }

    #[test]
    fn reconstruction_and_trace_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [2usize, 3, 5, 8, 20] {
            let m = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let s = crate::mat::symmetrize(&m).unwrap();
            let err = reconstruction_error(&s);
            assert!(
                err <= 1e-10 * (1.0 + s.frobenius_norm()),
                "reconstruction error {err:.3e} at n={n}"
            );
            let spec = eig_sym(&s).unwrap();
            let sum: f64 = spec.eigenvalues.iter().map(|e| e.re).sum();
            assert!((sum - s.trace()).abs() <= 1e-10 * (1.0 + s.trace().abs()));
        }
    }

    #[test]
    fn eigenvalue_product_matches_cofactor_determinant() {
        fn det(m: &DenseMatrix) -> f64 {
            let n = m.rows();
            if n == 1 {
                return m[(0, 0)];
            }
            let mut acc = 0.0;
            for j in 0..n {
                let mut minor = DenseMatrix::zeros(n - 1, n - 1);
                for i in 1..n {
                    let mut cj = 0;
                    for k in 0..n {
                        if k == j {
                            continue;
                        }
                        minor[(i - 1, cj)] = m[(i, k)];
                        cj += 1;
                    }
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * m[(0, j)] * det(&minor);
            }
            acc
        }

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 3, 4] {
            for _ in 0..20 {
                let m = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.5..1.5));
                let s = crate::mat::symmetrize(&m).unwrap();
                let spec = eig_sym(&s).unwrap();
                let prod: f64 = spec.eigenvalues.iter().map(|e| e.re).product();
                let d = det(s.dense());
                assert!(
                    (prod - d).abs() <= 1e-9 * (1.0 + d.abs()),
                    "det mismatch {prod} vs {d} at n={n}"
                );
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = DenseMatrix::from_fn(12, 12, |_, _| rng.gen_range(-1.0..1.0));
        let s = crate::mat::symmetrize(&m).unwrap();
        let v = eig_sym(&s).unwrap().eigenvectors.unwrap();
        let gram = v.transpose().matmul(&v);
        let eye = DenseMatrix::identity(12);
        assert!((&gram - &eye).frobenius_norm() < 1e-12);
    }
}
