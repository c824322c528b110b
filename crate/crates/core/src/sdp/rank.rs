//! Extreme-point rank reduction and rank-one factor extraction.
//!
//! An optimal `X` is pushed to an extreme point of the optimal face: as long
//! as a nonzero direction `D = R F R^T` (with `X = R R^T` thin) satisfies
//! `<A_k, D> = 0` for every constraint and `<C, D> = 0`, stepping to the
//! eigenvalue boundary of `F` drops the rank while preserving feasibility
//! and the objective. When no direction remains, the rank `r` obeys
//! `r(r+1)/2 <= number of constraints`.

use super::{SdpError, SdpStandardForm, SolverConfig};
use crate::mat::{eig_sym, numerical_rank, Cpqr, DenseMatrix, SymmetricMatrix};

/// Reduces an optimal solution to an extreme point of the optimal face.
///
/// Feasibility and the objective value are preserved to `1e-8`-level
/// accuracy; the rank never increases. Input that is far from feasible is
/// rejected with residual diagnostics.
pub fn rank_reduce(
    p: &SdpStandardForm,
    x: &SymmetricMatrix,
    cfg: &SolverConfig,
) -> Result<SymmetricMatrix, SdpError> {
    cfg.validate()?;
    if x.dim() != p.dim() {
        return Err(SdpError::BadProblem(format!(
            "X has dimension {} but the problem has {}",
            x.dim(),
            p.dim()
        )));
    }
    check_near_feasible(p, x)?;

    let mut current = x.clone();
    for _pass in 0..p.dim() + 1 {
        let spec = eig_sym(&current).map_err(|e| SdpError::Numerics(e.to_string()))?;
        let kept: Vec<(f64, usize)> = spec
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, e)| e.re > cfg.rank_tol)
            .map(|(i, e)| (e.re, i))
            .collect();
        let r = kept.len();
        if r <= 1 {
            return Ok(current);
        }
        let vecs = spec.eigenvectors.as_ref().expect("symmetric spectrum");
        let n = p.dim();
        let mut thin = DenseMatrix::zeros(n, r);
        for (col, &(val, src)) in kept.iter().enumerate() {
            let scale = val.sqrt();
            for i in 0..n {
                thin[(i, col)] = scale * vecs[(i, src)];
            }
        }
        // The positive tail below the rank threshold is carried along
        // unchanged; dropping it would perturb the constraint values.
        let mut tail = SymmetricMatrix::zeros(n);
        for (i, e) in spec.eigenvalues.iter().enumerate() {
            if e.re > 0.0 && e.re <= cfg.rank_tol {
                let col: Vec<f64> = (0..n).map(|row| vecs[(row, i)]).collect();
                tail = tail.add_scaled(e.re, &SymmetricMatrix::outer(&col));
            }
        }

        let Some(f) = objective_preserving_direction(p, &thin, r) else {
            return Ok(current);
        };

        // Step to the boundary along the largest-magnitude eigenvalue of F:
        // X' = R (I - F / lambda_e) R^T annihilates that eigendirection.
        let fspec = eig_sym(&f).map_err(|e| SdpError::Numerics(e.to_string()))?;
        let lam_e = fspec
            .eigenvalues
            .iter()
            .map(|e| e.re)
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        if lam_e.abs() < 1e-14 {
            return Ok(current);
        }
        let mut core = DenseMatrix::identity(r);
        for i in 0..r {
            for j in 0..r {
                core[(i, j)] -= f.get(i, j) / lam_e;
            }
        }
        let reduced = SymmetricMatrix::mirror(thin.matmul(&core).matmul(&thin.transpose()));
        current = reduced.add(&tail);
    }
    Ok(current)
}

/// Finds a symmetric `F != 0` with `<A_k, R F R^T> = 0` for all constraints
/// and `<C, R F R^T> = 0`, or `None` when the compressed constraints span
/// the whole symmetric space (the extreme-point condition).
fn objective_preserving_direction(
    p: &SdpStandardForm,
    thin: &DenseMatrix,
    r: usize,
) -> Option<SymmetricMatrix> {
    let d = r * (r + 1) / 2;
    let np = p.num_constraints();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(np + 1);
    for (a, _) in p.constraints() {
        rows.push(svec(&a.congruence(&thin.transpose())));
    }
    rows.push(svec(&p.objective().congruence(&thin.transpose())));

    // Kernel of the (np+1) x d functional matrix via pivoted QR of its
    // transpose. At optimality the objective row is a combination of the
    // constraint rows, so its pivot is tiny and it does not cost a kernel
    // dimension.
    let mut tt = DenseMatrix::zeros(d, np + 1);
    for (j, row) in rows.iter().enumerate() {
        for i in 0..d {
            tt[(i, j)] = row[i];
        }
    }
    let qr = Cpqr::factor(&tt);
    let rd = qr.r_factor();
    let lead = rd[(0, 0)].abs();
    if lead == 0.0 {
        // All functionals vanish on the face; any direction works.
        let mut e = vec![0.0; d];
        e[d - 1] = 1.0;
        return Some(unsvec(&e, r));
    }
    let mut effective_rank = 0;
    for k in 0..d.min(np + 1) {
        if rd[(k, k)].abs() > 1e-7 * lead {
            effective_rank = k + 1;
        } else {
            break;
        }
    }
    if effective_rank >= d {
        return None;
    }
    // Q columns beyond the effective rank span the kernel; the last one is
    // the farthest from any near-dependent row's residual direction.
    let mut v = vec![0.0; d];
    v[d - 1] = 1.0;
    qr.apply_q(&mut v);

    // Deterministic sign: first significant coordinate positive.
    if let Some(first) = v.iter().find(|t| t.abs() > 1e-12) {
        if *first < 0.0 {
            for t in v.iter_mut() {
                *t = -*t;
            }
        }
    }
    let f = unsvec(&v, r);

    // Validate that the direction really preserves everything; the kernel is
    // orthogonal to the dropped near-dependent row only up to its pivot size.
    let dmat = SymmetricMatrix::mirror(thin.matmul(f.dense()).matmul(&thin.transpose()));
    let dnorm = dmat.frobenius_norm().max(1e-300);
    for (a, _) in p.constraints() {
        if a.inner(&dmat).abs() > 1e-7 * (1.0 + a.frobenius_norm()) * dnorm {
            return None;
        }
    }
    if p.objective().inner(&dmat).abs()
        > 1e-6 * (1.0 + p.objective().frobenius_norm()) * dnorm
    {
        return None;
    }
    Some(f)
}

fn check_near_feasible(p: &SdpStandardForm, x: &SymmetricMatrix) -> Result<(), SdpError> {
    let vals = p.apply(x);
    for ((_, b), v) in p.constraints().iter().zip(&vals) {
        let dev = (v - b).abs();
        if dev > 1e-6 * (1.0 + b.abs()) {
            return Err(SdpError::NotOptimalInput(format!(
                "constraint residual {dev:.3e} exceeds 1e-6 * (1 + |b|)"
            )));
        }
    }
    let min_eig = eig_sym(x)
        .map_err(|e| SdpError::Numerics(e.to_string()))?
        .eigenvalues
        .last()
        .map_or(0.0, |e| e.re);
    if min_eig < -1e-6 * (1.0 + x.trace().abs()) {
        return Err(SdpError::NotOptimalInput(format!(
            "minimum eigenvalue {min_eig:.3e} is too negative for a PSD iterate"
        )));
    }
    Ok(())
}

/// Packs a symmetric matrix into a vector preserving inner products:
/// off-diagonal entries are scaled by sqrt(2).
fn svec(m: &SymmetricMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i..n {
            if i == j {
                out.push(m.get(i, i));
            } else {
                out.push(sqrt2 * m.get(i, j));
            }
        }
    }
    out
}

fn unsvec(v: &[f64], n: usize) -> SymmetricMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                m[(i, i)] = v[idx];
            } else {
                m[(i, j)] = inv_sqrt2 * v[idx];
                m[(j, i)] = inv_sqrt2 * v[idx];
            }
            idx += 1;
        }
    }
    SymmetricMatrix::mirror(m)
}

/// Extracts the unit rank-one factor of `X` when its numerical rank at `tol`
/// is one; the sign convention makes the first significant coordinate
/// positive. Returns `None` for any other rank.
pub fn extract_rank_one(x: &SymmetricMatrix, tol: f64) -> Option<Vec<f64>> {
    if numerical_rank(x, tol).ok()? != 1 {
        return None;
    }
    let spec = eig_sym(x).ok()?;
    let top = spec.eigenvalues[0].re;
    let vecs = spec.eigenvectors?;
    let n = x.dim();
    let mut z: Vec<f64> = (0..n).map(|i| vecs[(i, 0)]).collect();
    let norm = crate::mat::vec_norm(&z);
    for v in z.iter_mut() {
        *v /= norm;
    }
    if let Some(first) = z.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            for v in z.iter_mut() {
                *v = -*v;
            }
        }
    }
    let residual = x
        .sub(&SymmetricMatrix::outer(&z).scale(top))
        .frobenius_norm();
    if residual <= 10.0 * tol {
        Some(z)
    } else {
        None
    }
}
