//! Homogeneous self-dual interior-point iteration.
//!
//! State `(X, y, S, tau, kappa)` follows the embedding
//!
//! ```text
//!   A(X) - b tau                =: rp  -> 0
//!   A*(y) + S - C tau           =: Rd  -> 0
//!   kappa + <C,X> - b^T y       =: rg  -> 0
//!   X S = mu I,  tau kappa = mu        (central path)
//! ```
//!
//! `tau -> positive` recovers an optimal pair `(X, y, S)/tau`; `tau -> 0`
//! with `kappa` bounded away produces an infeasibility certificate, which is
//! verified before being reported. Mehrotra predictor-corrector steps with
//! Nesterov-Todd scaling; the per-step Schur complement has one row per
//! constraint and is factored by dense Cholesky. Step lengths follow a
//! fraction-to-boundary rule (0.98) with Cholesky trial factorizations.

use super::scaling::NtScaling;
use super::{SdpResult, SdpStandardForm, SdpStatus, SolveDiagnostics, SolverConfig};
use crate::mat::{cholesky, eig_sym, DenseMatrix, SymmetricMatrix};

const STEP_FRACTION: f64 = 0.98;

struct State {
    x: SymmetricMatrix,
    y: Vec<f64>,
    s: SymmetricMatrix,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rd: SymmetricMatrix,
    rg: f64,
    mu: f64,
}

struct Candidate {
    pres: f64,
    dres: f64,
    gap_abs: f64,
    score: f64,
}

pub(crate) fn solve_hsde(p: &SdpStandardForm, cfg: &SolverConfig) -> SdpResult {
    let n = p.dim();
    let np = p.num_constraints();
    let b = p.rhs();
    let norm_b = crate::mat::vec_norm(&b);
    let norm_c = p.objective().frobenius_norm();

    // Scale the identity start so A(X0) fits b in least squares; for the
    // trace-normalized problems built here this makes the primal residual
    // start at zero, where the multiplicative residual updates keep it.
    let a_eye = p.apply(&SymmetricMatrix::identity(n));
    let fit = crate::mat::vec_dot(&a_eye, &b) / crate::mat::vec_dot(&a_eye, &a_eye).max(1e-300);
    let x_scale = fit.clamp(1e-3, 1e3).max(1e-3);
    let mut st = State {
        x: SymmetricMatrix::identity(n).scale(x_scale),
        y: vec![0.0; np],
        s: SymmetricMatrix::identity(n),
        tau: 1.0,
        kappa: 1.0,
    };

    let mut best: Option<(State, Candidate, usize)> = None;
    let mut iterations = 0usize;

    for iter in 0..cfg.max_iters {
        iterations = iter;
        let res = residuals(p, &st, &b);
        let cand = candidate_quality(p, &st, &b, norm_b, norm_c);

        let better = best
            .as_ref()
            .map_or(true, |(_, c, _)| cand.score < c.score);
        if better {
            best = Some((
                State {
                    x: st.x.clone(),
                    y: st.y.clone(),
                    s: st.s.clone(),
                    tau: st.tau,
                    kappa: st.kappa,
                },
                Candidate { ..cand },
                iter,
            ));
        }

        if cand.pres <= cfg.feas_tol && cand.dres <= cfg.feas_tol && cand.gap_abs <= cfg.gap_tol {
            let inv_tau = 1.0 / st.tau;
            return SdpResult {
                status: SdpStatus::Optimal,
                x: Some(st.x.scale(inv_tau)),
                y: Some(st.y.iter().map(|v| v * inv_tau).collect()),
                s: Some(st.s.scale(inv_tau)),
                gap: cand.gap_abs,
                iterations: iter,
                infeasibility_certificate: None,
                dual_ray: None,
                diagnostics: SolveDiagnostics {
                    primal_residual: cand.pres,
                    dual_residual: cand.dres,
                    gap_abs: cand.gap_abs,
                    mu: res.mu,
                    tau: st.tau,
                    kappa: st.kappa,
                    message: "converged".into(),
                },
            };
        }

        if st.tau < cfg.infeasibility_ratio_tol * st.kappa.max(1e-300) {
            if let Some(result) = try_certify_infeasibility(p, &st, &b, &res, iter) {
                return result;
            }
        }

        // Noise floor: once the candidate quality stops improving the
        // directions are dominated by rounding and tau starts to wander.
        if let Some((_, _, best_iter)) = &best {
            if iter > best_iter + 10 {
                break;
            }
        }

        let Some(nt) = NtScaling::compute(&st.x, &st.s) else {
            if std::env::var_os("QCLF_SDP_DEBUG").is_some() {
                eprintln!("iter {iter}: NT scaling failed (x chol {:?}, s chol {:?})",
                    cholesky(&st.x).is_ok(), cholesky(&st.s).is_ok());
            }
            break;
        };

        // Per-iteration shared quantities, all in the scaled basis where the
        // cone pair is jointly diagonal. Forming the Schur complement as a
        // Gram matrix of the scaled constraints keeps it numerically PSD.
        let ctil = p.objective().congruence(&nt.r.transpose());
        let atil: Vec<SymmetricMatrix> = p
            .constraints()
            .iter()
            .map(|(a, _)| a.congruence(&nt.r.transpose()))
            .collect();
        let mut schur = DenseMatrix::zeros(np, np);
        for j in 0..np {
            for k in j..np {
                let v = atil[j].inner(&atil[k]);
                schur[(j, k)] = v;
                schur[(k, j)] = v;
            }
        }
        let Some(schur_chol) = factor_with_bump(&schur) else {
            break;
        };
        let a_c: Vec<f64> = atil.iter().map(|a| a.inner(&ctil)).collect();
        let g_vec: Vec<f64> = a_c.iter().zip(&b).map(|(ac, bk)| ac + bk).collect();
        let u2 = chol_solve(&schur_chol, &g_vec);

        // tau-equation denominator, algebraically
        //   (a_c - b)^T u2 - <C~,C~> - kappa/tau
        //   = -( ||C~ - A~*(M^{-1} a_c)||^2 + ||L^{-1} b||^2 + kappa/tau ),
        // computed as the sum of squares to avoid the cancellation between
        // O(1/mu) terms whose difference is O(mu).
        let v_proj = chol_solve(&schur_chol, &a_c);
        let mut resid_c = ctil.clone();
        for (a, vk) in atil.iter().zip(&v_proj) {
            resid_c = resid_c.add_scaled(-vk, a);
        }
        let lb = crate::mat::forward_substitute(&schur_chol, &b);
        let denom = -(resid_c.inner(&resid_c)
            + crate::mat::vec_dot(&lb, &lb)
            + st.kappa / st.tau);

        let shared = KktShared {
            p,
            b: &b,
            nt: &nt,
            ctil: &ctil,
            atil: &atil,
            schur_chol: &schur_chol,
            a_c: &a_c,
            denom,
            u2: &u2,
            tau: st.tau,
            kappa: st.kappa,
        };

        // Predictor: pure Newton step toward mu = 0.
        let neg_rp: Vec<f64> = res.rp.iter().map(|v| -v).collect();
        let neg_rd = res.rd.scale(-1.0);
        let mut dcomp_aff = DenseMatrix::zeros(n, n);
        for i in 0..n {
            dcomp_aff[(i, i)] = -nt.lambda[i] * nt.lambda[i];
        }
        let aff = solve_kkt_refined(
            &shared,
            &neg_rp,
            &neg_rd,
            -res.rg,
            &dcomp_aff,
            -st.tau * st.kappa,
        );

        let alpha_aff = max_step(&st, &aff, 1.0);
        let mu_aff = {
            let xn = st.x.add_scaled(alpha_aff, &aff.dx);
            let sn = st.s.add_scaled(alpha_aff, &aff.ds);
            let tn = st.tau + alpha_aff * aff.dtau;
            let kn = st.kappa + alpha_aff * aff.dkappa;
            (xn.inner(&sn) + tn * kn) / (n as f64 + 1.0)
        };
        let sigma = (mu_aff / res.mu).powi(3).clamp(0.0, 1.0);
        let eta = 1.0 - sigma;

        // Corrector: recenter toward sigma*mu with a Mehrotra second-order term.
        let dx_tilde = sandwich(&nt.rinv, &aff.dx, false);
        let ds_tilde = sandwich(&nt.r, &aff.ds, true);
        let mut dcomp = DenseMatrix::zeros(n, n);
        {
            let prod = dx_tilde.matmul(&ds_tilde);
            for i in 0..n {
                for j in 0..n {
                    let corr = 0.5 * (prod[(i, j)] + prod[(j, i)]);
                    let mut v = -corr;
                    if i == j {
                        v += sigma * res.mu - nt.lambda[i] * nt.lambda[i];
                    }
                    dcomp[(i, j)] = v;
                }
            }
        }
        let scaled_rp: Vec<f64> = res.rp.iter().map(|v| -eta * v).collect();
        let scaled_rd = res.rd.scale(-eta);
        let dtk = sigma * res.mu - st.tau * st.kappa - aff.dtau * aff.dkappa;
        let dir = solve_kkt_refined(&shared, &scaled_rp, &scaled_rd, -eta * res.rg, &dcomp, dtk);

        let alpha = STEP_FRACTION * max_step(&st, &dir, 1.0 / STEP_FRACTION);
        let alpha = alpha.min(1.0);
        if std::env::var_os("QCLF_SDP_DEBUG").is_some() {
            eprintln!(
                "iter {iter}: mu {:.3e} sigma {sigma:.3e} a_aff {alpha_aff:.3e} alpha {alpha:.3e} tau {:.3e} kappa {:.3e} pres {:.3e} dres {:.3e} gap {:.3e}",
                res.mu, st.tau, st.kappa, cand.pres, cand.dres, cand.gap_abs
            );
        }
        if alpha <= 1e-14 {
            break;
        }

        st.x = st.x.add_scaled(alpha, &dir.dx);
        st.s = st.s.add_scaled(alpha, &dir.ds);
        for (yk, dk) in st.y.iter_mut().zip(&dir.dy) {
            *yk += alpha * dk;
        }
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;
    }

    // Iteration budget exhausted or a factorization broke down: report the
    // best iterate with diagnostics. One last certificate attempt first.
    let res = residuals(p, &st, &b);
    if st.tau < cfg.infeasibility_ratio_tol * st.kappa.max(1e-300) {
        if let Some(result) = try_certify_infeasibility(p, &st, &b, &res, iterations) {
            return result;
        }
    }
    let (bst, cand, _) = best.unwrap_or_else(|| {
        let cand = candidate_quality(p, &st, &b, norm_b, norm_c);
        (st, cand, iterations)
    });
    let inv_tau = 1.0 / bst.tau.max(1e-300);
    let res = residuals(p, &bst, &b);
    SdpResult {
        status: SdpStatus::NumericalFailure,
        x: Some(bst.x.scale(inv_tau)),
        y: Some(bst.y.iter().map(|v| v * inv_tau).collect()),
        s: Some(bst.s.scale(inv_tau)),
        gap: cand.gap_abs,
        iterations,
        infeasibility_certificate: None,
        dual_ray: None,
        diagnostics: SolveDiagnostics {
            primal_residual: cand.pres,
            dual_residual: cand.dres,
            gap_abs: cand.gap_abs,
            mu: res.mu,
            tau: bst.tau,
            kappa: bst.kappa,
            message: "tolerances not met within the iteration budget".into(),
        },
    }
}

fn residuals(p: &SdpStandardForm, st: &State, b: &[f64]) -> Residuals {
    let ax = p.apply(&st.x);
    let rp: Vec<f64> = ax.iter().zip(b).map(|(a, bk)| a - bk * st.tau).collect();
    let rd = p
        .adjoint(&st.y)
        .add(&st.s)
        .add_scaled(-st.tau, p.objective());
    let cx = p.objective().inner(&st.x);
    let by = crate::mat::vec_dot(&st.y, b);
    let rg = st.kappa + cx - by;
    let mu = (st.x.inner(&st.s) + st.tau * st.kappa) / (p.dim() as f64 + 1.0);
    Residuals { rp, rd, rg, mu }
}

fn candidate_quality(
    p: &SdpStandardForm,
    st: &State,
    b: &[f64],
    norm_b: f64,
    norm_c: f64,
) -> Candidate {
    let inv_tau = 1.0 / st.tau.max(1e-300);
    let xh = st.x.scale(inv_tau);
    let yh: Vec<f64> = st.y.iter().map(|v| v * inv_tau).collect();
    let sh = st.s.scale(inv_tau);
    let ax = p.apply(&xh);
    let pres_abs = crate::mat::vec_norm(
        &ax.iter().zip(b).map(|(a, bk)| a - bk).collect::<Vec<f64>>(),
    );
    let pres = pres_abs / (1.0 + norm_b);
    let dres = p
        .adjoint(&yh)
        .add(&sh)
        .sub(p.objective())
        .frobenius_norm()
        / (1.0 + norm_c);
    let pobj = p.objective().inner(&xh);
    let dobj = crate::mat::vec_dot(&yh, b);
    let gap_abs = (pobj - dobj).abs();
    let score = pres.max(dres).max(gap_abs);
    Candidate {
        pres,
        dres,
        gap_abs,
        score,
    }
}

fn try_certify_infeasibility(
    p: &SdpStandardForm,
    st: &State,
    b: &[f64],
    res: &Residuals,
    iter: usize,
) -> Option<SdpResult> {
    let by = crate::mat::vec_dot(&st.y, b);
    if by > 1e-12 {
        let y_cert: Vec<f64> = st.y.iter().map(|v| v / by).collect();
        let combo = p.adjoint(&y_cert);
        let lam_max = eig_sym(&combo).ok()?.abscissa();
        if lam_max <= 1e-7 {
            return Some(SdpResult {
                status: SdpStatus::PrimalInfeasible,
                x: None,
                y: None,
                s: None,
                gap: f64::INFINITY,
                iterations: iter,
                infeasibility_certificate: Some(y_cert),
                dual_ray: None,
                diagnostics: SolveDiagnostics {
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap_abs: f64::INFINITY,
                    mu: res.mu,
                    tau: st.tau,
                    kappa: st.kappa,
                    message: format!(
                        "primal infeasibility certified: max eig of A*(y) = {lam_max:.3e}"
                    ),
                },
            });
        }
    }
    let cx = p.objective().inner(&st.x);
    if cx < -1e-12 {
        let x_ray = st.x.scale(-1.0 / cx);
        let ax_norm = crate::mat::vec_norm(&p.apply(&x_ray));
        if ax_norm <= 1e-7 * (1.0 + crate::mat::vec_norm(b)) {
            return Some(SdpResult {
                status: SdpStatus::DualInfeasible,
                x: None,
                y: None,
                s: None,
                gap: f64::INFINITY,
                iterations: iter,
                infeasibility_certificate: None,
                dual_ray: Some(x_ray),
                diagnostics: SolveDiagnostics {
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap_abs: f64::INFINITY,
                    mu: res.mu,
                    tau: st.tau,
                    kappa: st.kappa,
                    message: format!(
                        "dual infeasibility certified: |A(X_ray)| = {ax_norm:.3e}"
                    ),
                },
            });
        }
    }
    None
}

struct KktShared<'a> {
    p: &'a SdpStandardForm,
    b: &'a [f64],
    nt: &'a NtScaling,
    /// `R^T C R`.
    ctil: &'a SymmetricMatrix,
    /// `R^T A_k R`.
    atil: &'a [SymmetricMatrix],
    schur_chol: &'a DenseMatrix,
    a_c: &'a [f64],
    /// Stable evaluation of `(a_c - b)^T u2 - <C~,C~> - kappa/tau`.
    denom: f64,
    u2: &'a [f64],
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: SymmetricMatrix,
    dy: Vec<f64>,
    ds: SymmetricMatrix,
    dtau: f64,
    dkappa: f64,
}

/// One Newton solve plus iterative refinement. The back-substitution for
/// `dX` passes through `W (..) W`, whose conditioning grows like `1/mu`, so
/// late iterations need the correction passes to keep the primal equation
/// satisfied to full precision.
fn solve_kkt_refined(
    kk: &KktShared,
    r1: &[f64],
    r2: &SymmetricMatrix,
    r3: f64,
    dcomp: &DenseMatrix,
    dtk: f64,
) -> Direction {
    let mut dir = solve_kkt(kk, r1, r2, r3, dcomp, dtk);
    for _ in 0..2 {
        let (e1, e2, e3, e4, e5) = kkt_residuals(kk, &dir, r1, r2, r3, dcomp, dtk);
        let scale = 1.0
            + crate::mat::vec_norm(r1)
            + r2.frobenius_norm()
            + r3.abs()
            + dcomp.frobenius_norm()
            + dtk.abs();
        let err = crate::mat::vec_norm(&e1)
            .max(e2.frobenius_norm())
            .max(e3.abs())
            .max(e4.frobenius_norm())
            .max(e5.abs());
        if err <= 1e-14 * scale {
            break;
        }
        let neg_e1: Vec<f64> = e1.iter().map(|v| -v).collect();
        let corr = solve_kkt(
            kk,
            &neg_e1,
            &e2.scale(-1.0),
            -e3,
            &e4.scale(-1.0),
            -e5,
        );
        dir.dx = dir.dx.add(&corr.dx);
        dir.ds = dir.ds.add(&corr.ds);
        for (a, b) in dir.dy.iter_mut().zip(&corr.dy) {
            *a += b;
        }
        dir.dtau += corr.dtau;
        dir.dkappa += corr.dkappa;
    }
    dir
}

/// Residuals of the five Newton equations for a candidate direction.
fn kkt_residuals(
    kk: &KktShared,
    dir: &Direction,
    r1: &[f64],
    r2: &SymmetricMatrix,
    r3: f64,
    dcomp: &DenseMatrix,
    dtk: f64,
) -> (Vec<f64>, SymmetricMatrix, f64, DenseMatrix, f64) {
    let n = kk.p.dim();
    let adx = kk.p.apply(&dir.dx);
    let e1: Vec<f64> = adx
        .iter()
        .zip(kk.b)
        .zip(r1)
        .map(|((a, bk), r)| a - bk * dir.dtau - r)
        .collect();
    let e2 = kk
        .p
        .adjoint(&dir.dy)
        .add(&dir.ds)
        .add_scaled(-dir.dtau, kk.p.objective())
        .sub(r2);
    let e3 = kk.p.objective().inner(&dir.dx) - crate::mat::vec_dot(kk.b, &dir.dy) + dir.dkappa
        - r3;
    let px = kk.nt.rinv.matmul(dir.dx.dense()).matmul(&kk.nt.rinv.transpose());
    let qs = kk.nt.r.transpose().matmul(dir.ds.dense()).matmul(&kk.nt.r);
    let mut e4 = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let m = px[(i, j)] + qs[(i, j)];
            e4[(i, j)] = 0.5 * (kk.nt.lambda[i] + kk.nt.lambda[j]) * m - dcomp[(i, j)];
        }
    }
    let e5 = kk.kappa * dir.dtau + kk.tau * dir.dkappa - dtk;
    (e1, e2, e3, e4, e5)
}

/// Solves one Newton system of the embedding for the given right-hand sides:
/// `A(dX) - b dtau = r1`, `A*(dy) + dS - C dtau = R2`,
/// `<C,dX> - b^T dy + dkappa = r3`,
/// `lambda o (R^{-1} dX R^{-T} + R^T dS R) = Dcomp`,
/// `kappa dtau + tau dkappa = dtk`.
fn solve_kkt(
    kk: &KktShared,
    r1: &[f64],
    r2: &SymmetricMatrix,
    r3: f64,
    dcomp: &DenseMatrix,
    dtk: f64,
) -> Direction {
    let n = kk.p.dim();
    let lam = &kk.nt.lambda;

    // E = (lambda o)^{-1} Dcomp, elementwise in the scaled basis.
    let mut e = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = 2.0 * dcomp[(i, j)] / (lam[i] + lam[j]);
        }
    }
    // In scaled coordinates dx~ + ds~ = E and the dual equation reads
    // A~*(dy) + ds~ - C~ dtau = R~2, so dx~ = H + A~*(dy) - C~ dtau with
    // H = E - R~2. Substituting into the primal equation leaves the Schur
    // system in dy and the scalar tau equation.
    let r2til = r2.congruence(&kk.nt.r.transpose());
    let h = SymmetricMatrix::mirror(e).sub(&r2til);
    let a_h: Vec<f64> = kk.atil.iter().map(|a| a.inner(&h)).collect();

    let rhs1: Vec<f64> = r1.iter().zip(&a_h).map(|(r, ah)| r - ah).collect();
    let u1 = chol_solve(kk.schur_chol, &rhs1);

    let acb: Vec<f64> = kk.a_c.iter().zip(kk.b).map(|(ac, bk)| ac - bk).collect();
    let c_h = kk.ctil.inner(&h);
    let numer = r3 - crate::mat::vec_dot(&acb, &u1) - c_h - dtk / kk.tau;
    let dtau = numer / kk.denom;

    let dy: Vec<f64> = u1.iter().zip(kk.u2).map(|(a, b)| a + dtau * b).collect();

    // dx~ = H + A~*(dy) - C~ dtau, mapped back through R.
    let mut xtil = h;
    for (a, yk) in kk.atil.iter().zip(&dy) {
        xtil = xtil.add_scaled(*yk, a);
    }
    xtil = xtil.add_scaled(-dtau, kk.ctil);
    let dx = xtil.congruence(&kk.nt.r);
    // dS from the dual equation keeps it satisfied exactly.
    let ds = r2
        .add_scaled(dtau, kk.p.objective())
        .sub(&kk.p.adjoint(&dy));
    let dkappa = (dtk - kk.kappa * dtau) / kk.tau;

    Direction {
        dx,
        dy,
        ds,
        dtau,
        dkappa,
    }
}

/// Largest step `alpha <= cap` keeping the cone variables strictly definite
/// and the scalars positive, located by Cholesky trials and bisection.
fn max_step(st: &State, dir: &Direction, cap: f64) -> f64 {
    let mut hi = cap;
    if dir.dtau < 0.0 {
        hi = hi.min(-st.tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        hi = hi.min(-st.kappa / dir.dkappa);
    }
    hi = hi.min(cap);

    let feasible = |alpha: f64| -> bool {
        let xt = st.x.add_scaled(alpha, &dir.dx);
        if cholesky(&xt).is_err() {
            return false;
        }
        let stt = st.s.add_scaled(alpha, &dir.ds);
        cholesky(&stt).is_ok()
    };

    if feasible(hi * 0.999) {
        return hi * 0.999;
    }
    let mut lo = 0.0;
    let mut hi_search = hi * 0.999;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi_search);
        if feasible(mid) {
            lo = mid;
        } else {
            hi_search = mid;
        }
        if hi_search - lo <= 1e-4 * hi {
            break;
        }
    }
    lo
}

/// `W M W`, exactly symmetrized.
fn congr(w: &DenseMatrix, m: &SymmetricMatrix) -> SymmetricMatrix {
    SymmetricMatrix::mirror(w.matmul(m.dense()).matmul(w))
}

/// `G M G^T` (transposed = false) or `G^T M G` (transposed = true).
fn sandwich(g: &DenseMatrix, m: &SymmetricMatrix, transposed: bool) -> DenseMatrix {
    if transposed {
        g.transpose().matmul(m.dense()).matmul(g)
    } else {
        g.matmul(m.dense()).matmul(&g.transpose())
    }
}

/// Cholesky of the Schur complement, retrying once with a diagonal bump when
/// near-dependent constraints make it semidefinite.
fn factor_with_bump(m: &DenseMatrix) -> Option<DenseMatrix> {
    let sym = SymmetricMatrix::mirror(m.clone());
    if let Ok(l) = cholesky(&sym) {
        return Some(l);
    }
    let bump = 1e-12 * (1.0 + m.trace().abs());
    let bumped = sym.add_scaled(bump, &SymmetricMatrix::identity(m.rows()));
    cholesky(&bumped).ok()
}

fn chol_solve(l: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
    let y = crate::mat::forward_substitute(l, rhs);
    crate::mat::back_substitute_lt(l, &y)
}
