//! Real Schur decomposition via Hessenberg reduction and Francis
//! double-shift QR, with exceptional shifts after stalled stretches.
//!
//! `A = U T U^T` with `U` orthogonal and `T` quasi upper triangular:
//! 1x1 blocks carry real eigenvalues, 2x2 blocks complex-conjugate pairs.
//! 2x2 blocks with real eigenvalues are split during post-processing so the
//! block structure is canonical.

use super::{sort_eigenvalues, DenseMatrix, Eigenvalue, MatError, Spectrum};

/// Real Schur form `A = U T U^T`.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: DenseMatrix,
    pub u: DenseMatrix,
}

impl RealSchur {
    /// Eigenvalues read off the quasi-triangular factor, sorted by
    /// descending real part.
    pub fn eigenvalues(&self) -> Vec<Eigenvalue> {
        let n = self.t.rows();
        let mut vals = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)] != 0.0 {
                let a = self.t[(i, i)];
                let b = self.t[(i, i + 1)];
                let c = self.t[(i + 1, i)];
                let d = self.t[(i + 1, i + 1)];
                let p = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc < 0.0 {
                    let w = (-disc).sqrt();
                    vals.push(Eigenvalue { re: p, im: w });
                    vals.push(Eigenvalue { re: p, im: -w });
                } else {
                    // Should have been split in standardization; fall back.
                    let s = disc.sqrt();
                    vals.push(Eigenvalue { re: p + s, im: 0.0 });
                    vals.push(Eigenvalue { re: p - s, im: 0.0 });
                }
                i += 2;
            } else {
                vals.push(Eigenvalue {
                    re: self.t[(i, i)],
                    im: 0.0,
                });
                i += 1;
            }
        }
        sort_eigenvalues(&mut vals);
        vals
    }
}

/// Eigenvalues of a general square matrix (nonsymmetric eigenproblem).
pub fn eig_general(m: &DenseMatrix) -> Result<Spectrum, MatError> {
    let schur = real_schur(m)?;
    Ok(Spectrum {
        eigenvalues: schur.eigenvalues(),
        eigenvectors: None,
    })
}

/// Maximum real part over the spectrum of a square matrix.
pub fn spectral_abscissa(m: &DenseMatrix) -> Result<f64, MatError> {
    Ok(eig_general(m)?.abscissa())
}

/// Computes the real Schur decomposition of a square matrix.
pub fn real_schur(a: &DenseMatrix) -> Result<RealSchur, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(RealSchur {
            t: DenseMatrix::zeros(0, 0),
            u: DenseMatrix::zeros(0, 0),
        });
    }
    let (mut h, mut u) = hessenberg(a);
    if n > 2 {
        francis_iterations(&mut h, &mut u)?;
    }
    standardize_blocks(&mut h, &mut u);
    Ok(RealSchur { t: h, u })
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal similarity.
fn hessenberg(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut u = DenseMatrix::identity(n);
    if n < 3 {
        return (h, u);
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += h[(i, k)] * h[(i, k)];
        }
        if norm2 == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = -x0.signum() * norm2.sqrt();
        let mut vnorm2 = 0.0;
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        for i in k + 1..n {
            vnorm2 += v[i] * v[i];
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // H <- P H, rows k+1..n
        for j in k..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i] * h[(i, j)];
            }
            let f = beta * dot;
            for i in k + 1..n {
                h[(i, j)] -= f * v[i];
            }
        }
        // H <- H P, columns k+1..n
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += h[(i, j)] * v[j];
            }
            let f = beta * dot;
            for j in k + 1..n {
                h[(i, j)] -= f * v[j];
            }
        }
        // U <- U P
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += u[(i, j)] * v[j];
            }
            let f = beta * dot;
            for j in k + 1..n {
                u[(i, j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
        h[(k + 1, k)] = alpha;
    }
    (h, u)
}

const EXCEPTIONAL_EVERY: usize = 30;

fn francis_iterations(h: &mut DenseMatrix, u: &mut DenseMatrix) -> Result<(), MatError> {
    let n = h.rows();
    let eps = f64::EPSILON;
    let hnorm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let max_total = 120 * n;
    let mut total = 0usize;
    let mut stall = 0usize;
    let mut hi = n - 1;

    loop {
        // Flush negligible subdiagonal entries.
        for i in 1..=hi {
            let mut tol = eps * (h[(i - 1, i - 1)].abs() + h[(i, i)].abs());
            if tol == 0.0 {
                tol = eps * hnorm;
            }
            if h[(i, i - 1)].abs() <= tol {
                h[(i, i - 1)] = 0.0;
            }
        }
        // Find the unreduced block [lo, hi] ending at hi.
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)] != 0.0 {
            lo -= 1;
        }
        if lo == hi {
            // 1x1 converged.
            if hi <= 1 {
                break;
            }
            hi -= 1;
            stall = 0;
            continue;
        }
        if lo + 1 == hi {
            // 2x2 block converged; standardization handles real pairs later.
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            stall = 0;
            continue;
        }

        total += 1;
        stall += 1;
        if total > max_total {
            return Err(MatError::EigenNonConvergence {
                iterations: total,
                residual: h[(hi, hi - 1)].abs(),
            });
        }

        // Shift polynomial (x - s1)(x - s2) described by its sum and product.
        let (sum, prod) = if stall % EXCEPTIONAL_EVERY == 0 {
            // Ad-hoc exceptional shift to break symmetric stalls.
            let s = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            let v = 0.75 * s + h[(hi, hi)];
            (2.0 * v, v * v + 0.4375 * s * s)
        } else {
            let tmm = h[(hi - 1, hi - 1)];
            let tnn = h[(hi, hi)];
            (
                tmm + tnn,
                tmm * tnn - h[(hi - 1, hi)] * h[(hi, hi - 1)],
            )
        };

        // First column of (H - s1 I)(H - s2 I) restricted to the block.
        let h00 = h[(lo, lo)];
        let h10 = h[(lo + 1, lo)];
        let mut x = h00 * h00 + h[(lo, lo + 1)] * h10 - sum * h00 + prod;
        let mut y = h10 * (h00 + h[(lo + 1, lo + 1)] - sum);
        let mut z = h10 * h[(lo + 2, lo + 1)];

        for k in lo..hi - 1 {
            let (v3, beta) = householder3(x, y, z);
            if beta != 0.0 {
                let first_col = if k == lo { lo } else { k - 1 };
                // Left application on rows k..k+2.
                for j in first_col..n {
                    let dot = v3[0] * h[(k, j)] + v3[1] * h[(k + 1, j)] + v3[2] * h[(k + 2, j)];
                    let f = beta * dot;
                    h[(k, j)] -= f * v3[0];
                    h[(k + 1, j)] -= f * v3[1];
                    h[(k + 2, j)] -= f * v3[2];
                }
                // Right application on columns k..k+2.
                let last_row = (k + 3).min(hi);
                for i in 0..=last_row {
                    let dot = v3[0] * h[(i, k)] + v3[1] * h[(i, k + 1)] + v3[2] * h[(i, k + 2)];
                    let f = beta * dot;
                    h[(i, k)] -= f * v3[0];
                    h[(i, k + 1)] -= f * v3[1];
                    h[(i, k + 2)] -= f * v3[2];
                }
                for i in 0..n {
                    let dot = v3[0] * u[(i, k)] + v3[1] * u[(i, k + 1)] + v3[2] * u[(i, k + 2)];
                    let f = beta * dot;
                    u[(i, k)] -= f * v3[0];
                    u[(i, k + 1)] -= f * v3[1];
                    u[(i, k + 2)] -= f * v3[2];
                }
                if k > lo {
                    // The reflector was built to annihilate these exactly.
                    h[(k + 1, k - 1)] = 0.0;
                    h[(k + 2, k - 1)] = 0.0;
                }
            }
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            z = if k + 3 <= hi { h[(k + 3, k)] } else { 0.0 };
        }

        // Final 2x2 reflector zeroing the last bulge entry.
        let (c, s) = givens(x, y);
        let k = hi - 1;
        for j in k - 1..n {
            let t1 = h[(k, j)];
            let t2 = h[(k + 1, j)];
            h[(k, j)] = c * t1 + s * t2;
            h[(k + 1, j)] = -s * t1 + c * t2;
        }
        for i in 0..=hi {
            let t1 = h[(i, k)];
            let t2 = h[(i, k + 1)];
            h[(i, k)] = c * t1 + s * t2;
            h[(i, k + 1)] = -s * t1 + c * t2;
        }
        for i in 0..n {
            let t1 = u[(i, k)];
            let t2 = u[(i, k + 1)];
            u[(i, k)] = c * t1 + s * t2;
            u[(i, k + 1)] = -s * t1 + c * t2;
        }
        if k > lo {
            h[(hi, hi - 2)] = 0.0;
        }
    }
    Ok(())
}

/// Householder reflector for a 3-vector: `(I - beta v v^T)(x,y,z)^T = r e1`.
fn householder3(x: f64, y: f64, z: f64) -> ([f64; 3], f64) {
    let norm = (x * x + y * y + z * z).sqrt();
    if norm == 0.0 {
        return ([0.0; 3], 0.0);
    }
    let alpha = -x.signum() * norm;
    let v = [x - alpha, y, z];
    let vnorm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if vnorm2 == 0.0 {
        return ([0.0; 3], 0.0);
    }
    ([v[0], v[1], v[2]], 2.0 / vnorm2)
}

/// Givens rotation with `c x + s y = r`, `-s x + c y = 0`.
fn givens(x: f64, y: f64) -> (f64, f64) {
    let r = (x * x + y * y).sqrt();
    if r == 0.0 {
        (1.0, 0.0)
    } else {
        (x / r, y / r)
    }
}

/// Splits 2x2 diagonal blocks that carry real eigenvalues, leaving only
/// genuine complex-pair blocks on the diagonal.
fn standardize_blocks(t: &mut DenseMatrix, u: &mut DenseMatrix) {
    let n = t.rows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let a = t[(i, i)];
        let b = t[(i, i + 1)];
        let c = t[(i + 1, i)];
        let d = t[(i + 1, i + 1)];
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc < 0.0 {
            i += 2;
            continue;
        }
        // Real eigenvalues: rotate so the block becomes upper triangular.
        let p = 0.5 * (a + d);
        let sq = disc.sqrt();
        let lambda = if p >= 0.0 { p + sq } else { p - sq };
        // Eigenvector for lambda, choosing the better conditioned expression.
        let v1 = [b, lambda - a];
        let v2 = [lambda - d, c];
        let n1 = v1[0] * v1[0] + v1[1] * v1[1];
        let n2 = v2[0] * v2[0] + v2[1] * v2[1];
        let v = if n1 >= n2 { v1 } else { v2 };
        let (cg, sg) = givens(v[0], v[1]);
        // T <- G^T T G with G = [[c, -s], [s, c]] acting on rows/cols i, i+1.
        for j in 0..n {
            let t1 = t[(i, j)];
            let t2 = t[(i + 1, j)];
            t[(i, j)] = cg * t1 + sg * t2;
            t[(i + 1, j)] = -sg * t1 + cg * t2;
        }
        for r in 0..n {
            let t1 = t[(r, i)];
            let t2 = t[(r, i + 1)];
            t[(r, i)] = cg * t1 + sg * t2;
            t[(r, i + 1)] = -sg * t1 + cg * t2;
        }
        for r in 0..n {
            let t1 = u[(r, i)];
            let t2 = u[(r, i + 1)];
            u[(r, i)] = cg * t1 + sg * t2;
            u[(r, i + 1)] = -sg * t1 + cg * t2;
        }
        t[(i + 1, i)] = 0.0;
        i += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::symmetrize;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schur_residual(a: &DenseMatrix) -> (f64, f64) {
        let s = real_schur(a).unwrap();
        let rebuilt = s.u.matmul(&s.t).matmul(&s.u.transpose());
        let res = (&rebuilt - a).frobenius_norm() / (1.0 + a.frobenius_norm());
        let orth = (&s.u.transpose().matmul(&s.u) - &DenseMatrix::identity(a.rows()))
            .frobenius_norm();
        (res, orth)
    }

    #[test]
    fn negated_identity_abscissa() {
        let a = DenseMatrix::identity(3).scale(-1.0);
        assert!((spectral_abscissa(&a).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_generator_has_zero_abscissa() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let spec = eig_general(&a).unwrap();
        assert_eq!(spec.abscissa(), 0.0);
        let ims: Vec<f64> = spec.eigenvalues.iter().map(|e| e.im).collect();
        assert!((ims[0] - 1.0).abs() < 1e-14);
        assert!((ims[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x - 2)(x + 3)(x + 1) = x^3 + 2x^2 - 5x - 6
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![6.0, 5.0, -2.0],
        ])
        .unwrap();
        let spec = eig_general(&a).unwrap();
        let mut roots = spec.real_parts();
        assert!((spec.abscissa() - 2.0).abs() < 1e-10);
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (r, expect) in roots.iter().zip([-3.0, -1.0, 2.0]) {
            assert!((r - expect).abs() < 1e-10, "root {r} vs {expect}");
        }
    }

    #[test]
    fn abscissa_shift_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let c: f64 = rng.gen_range(-2.0..2.0);
            let shifted = &a - &DenseMatrix::identity(n).scale(c);
            let lhs = spectral_abscissa(&shifted).unwrap();
            let rhs = spectral_abscissa(&a).unwrap() - c;
            assert!((lhs - rhs).abs() < 1e-8, "shift identity {lhs} vs {rhs}");
        }
    }

    #[test]
    fn schur_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [1usize, 2, 3, 5, 8, 13, 25, 40] {
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let (res, orth) = schur_residual(&a);
            assert!(res < 1e-12, "residual {res:.3e} at n={n}");
            assert!(orth < 1e-12, "orthogonality {orth:.3e} at n={n}");
        }
    }

    #[test]
    fn schur_blocks_are_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..30 {
            let n = rng.gen_range(2..12);
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let s = real_schur(&a).unwrap();
            // Strictly lower part vanishes except canonical 2x2 subdiagonals.
            let mut i = 0;
            while i < n {
                let block2 = i + 1 < n && s.t[(i + 1, i)] != 0.0;
                if block2 {
                    let tt = &s.t;
                    let disc = 0.25 * (tt[(i, i)] - tt[(i + 1, i + 1)]).powi(2)
                        + tt[(i, i + 1)] * tt[(i + 1, i)];
                    assert!(disc < 0.0, "real-eigenvalue 2x2 block not split");
                }
                for r in (i + if block2 { 2 } else { 1 })..n {
                    for c in i..(i + 1).min(r) {
                        assert_eq!(s.t[(r, c)], 0.0);
                    }
                }
                i += if block2 { 2 } else { 1 };
            }
        }
    }

    #[test]
    fn eigenvalue_sums_match_trace_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..40 {
            let n = rng.gen_range(2..20);
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
            let spec = eig_general(&a).unwrap();
            let sum: f64 = spec.eigenvalues.iter().map(|e| e.re).sum();
            let imsum: f64 = spec.eigenvalues.iter().map(|e| e.im).sum();
            assert!((sum - a.trace()).abs() < 1e-8 * (1.0 + a.trace().abs()));
            assert!(imsum.abs() < 1e-9);
        }
    }

    #[test]
    fn hard_cases_still_decompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // Jordan block: defective, single eigenvalue 2.
        let n = 8;
        let mut jordan = DenseMatrix::identity(n).scale(2.0);
        for i in 0..n - 1 {
            jordan[(i, i + 1)] = 1.0;
        }
        let spec = eig_general(&jordan).unwrap();
        for e in &spec.eigenvalues {
            assert!((e.re - 2.0).abs() < 1e-3, "Jordan eigenvalue {}", e.re);
        }

        // Clustered eigenvalues under a random similarity.
        let d = DenseMatrix::diag(&[1.0, 1.0 + 1e-8, 1.0 + 2e-8, -3.0, -3.0, 0.5]);
        let g = DenseMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let ginv = crate::mat::least_squares(&g, &DenseMatrix::identity(6)).unwrap();
        let a = g.matmul(&d).matmul(&ginv);
        let s = real_schur(&a).unwrap();
        let rebuilt = s.u.matmul(&s.t).matmul(&s.u.transpose());
        assert!((&rebuilt - &a).frobenius_norm() < 1e-9 * (1.0 + a.frobenius_norm()));

        // Larger random matrices keep tiny residuals.
        for n in [60usize, 100] {
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let s = real_schur(&a).unwrap();
            let res = (&s.u.matmul(&s.t).matmul(&s.u.transpose()) - &a).frobenius_norm();
            assert!(res < 1e-11 * (1.0 + a.frobenius_norm()), "res {res:.3e} at n={n}");
        }
    }

    #[test]
    fn symmetric_input_agrees_with_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let m = DenseMatrix::from_fn(7, 7, |_, _| rng.gen_range(-1.0..1.0));
        let s = symmetrize(&m).unwrap();
        let francis = eig_general(s.dense()).unwrap().real_parts();
        let jacobi = crate::mat::eig_sym(&s).unwrap().real_parts();
        for (a, b) in francis.iter().zip(&jacobi) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
