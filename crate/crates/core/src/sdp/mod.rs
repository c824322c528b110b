//! Dense primal-dual interior-point solver for standard-form semidefinite
//! programs with few equality constraints, plus infeasibility certificates,
//! extreme-point rank reduction and rank-one factor extraction.
//!
//! Problems are
//! `minimize <C, X>  s.t.  <A_k, X> = b_k (k = 1..p),  X >= 0`,
//! solved in a homogeneous self-dual embedding with Nesterov-Todd scaling.
//! The Schur complement system has the size of the constraint count, which
//! is small for every problem built here, and is handled by dense Cholesky.

mod minmax;
mod rank;
mod scaling;
mod solver;

pub use minmax::{minimize_max_eigenvalue, MinMaxEig};
pub use rank::{extract_rank_one, rank_reduce};

use crate::mat::SymmetricMatrix;
use thiserror::Error;

/// Errors for malformed problems or operations that cannot produce a result.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    BadProblem(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("input is not a near-optimal feasible point: {0}")]
    NotOptimalInput(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("objective unbounded below (the spectraplex dual is infeasible)")]
    UnboundedBelow {
        /// Multiplier ray `d` with `sum_i d_i Ms_i >= I` up to tolerance.
        certificate: Vec<f64>,
    },
}

/// Standard-form SDP data.
#[derive(Debug, Clone)]
pub struct SdpStandardForm {
    dim: usize,
    c: SymmetricMatrix,
    constraints: Vec<(SymmetricMatrix, f64)>,
}

impl SdpStandardForm {
    /// Builds a problem, validating dimensions and requiring at least one
    /// constraint.
    pub fn new(
        c: SymmetricMatrix,
        constraints: Vec<(SymmetricMatrix, f64)>,
    ) -> Result<Self, SdpError> {
        let dim = c.dim();
        if constraints.is_empty() {
            return Err(SdpError::BadProblem(
                "at least one equality constraint is required".into(),
            ));
        }
        for (k, (a, b)) in constraints.iter().enumerate() {
            if a.dim() != dim {
                return Err(SdpError::BadProblem(format!(
                    "constraint {k} has dimension {} but the objective has {dim}",
                    a.dim()
                )));
            }
            if !b.is_finite() {
                return Err(SdpError::BadProblem(format!(
                    "constraint {k} has non-finite right-hand side"
                )));
            }
        }
        Ok(Self {
            dim,
            c,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &SymmetricMatrix {
        &self.c
    }

    pub fn constraints(&self) -> &[(SymmetricMatrix, f64)] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// `A(X)`: the vector of constraint values at `X`.
    pub fn apply(&self, x: &SymmetricMatrix) -> Vec<f64> {
        self.constraints.iter().map(|(a, _)| a.inner(x)).collect()
    }

    /// `A^*(y) = sum_k y_k A_k`.
    pub fn adjoint(&self, y: &[f64]) -> SymmetricMatrix {
        let mut acc = SymmetricMatrix::zeros(self.dim);
        for ((a, _), &yk) in self.constraints.iter().zip(y) {
            acc = acc.add_scaled(yk, a);
        }
        acc
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|(_, b)| *b).collect()
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
}

/// Numerical summary attached to every result.
#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap_abs: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub message: String,
}

/// Solver output. `Optimal` carries the primal/dual triple; infeasible
/// statuses carry verified certificates; `NumericalFailure` carries the
/// best iterate reached.
#[derive(Debug, Clone)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub x: Option<SymmetricMatrix>,
    pub y: Option<Vec<f64>>,
    pub s: Option<SymmetricMatrix>,
    /// Bound on `|<C,X> - b^T y|` for `Optimal` results.
    pub gap: f64,
    pub iterations: usize,
    /// Multipliers `y` with `sum_k y_k A_k <= 0` and `b^T y = 1`
    /// (up to 1e-7), present when `PrimalInfeasible`.
    pub infeasibility_certificate: Option<Vec<f64>>,
    /// Ray `X` with `A(X) ~ 0`, `X >= 0`, `<C, X> = -1`, present when
    /// `DualInfeasible`.
    pub dual_ray: Option<SymmetricMatrix>,
    pub diagnostics: SolveDiagnostics,
}

impl SdpResult {
    pub fn primal_objective(&self, p: &SdpStandardForm) -> Option<f64> {
        self.x.as_ref().map(|x| p.objective().inner(x))
    }

    pub fn dual_objective(&self, p: &SdpStandardForm) -> Option<f64> {
        self.y
            .as_ref()
            .map(|y| y.iter().zip(p.rhs()).map(|(a, b)| a * b).sum())
    }
}

/// Interior-point solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    pub infeasibility_ratio_tol: f64,
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            feas_tol: 1e-9,
            max_iters: 200,
            infeasibility_ratio_tol: 1e-8,
            rank_tol: 1e-7,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<(), SdpError> {
        let all_pos = self.gap_tol > 0.0
            && self.feas_tol > 0.0
            && self.infeasibility_ratio_tol > 0.0
            && self.rank_tol > 0.0
            && self.max_iters > 0;
        if all_pos {
            Ok(())
        } else {
            Err(SdpError::BadConfig(
                "all tolerances and the iteration budget must be positive".into(),
            ))
        }
    }
}

/// Solves the standard-form problem. Deterministic for fixed inputs.
pub fn solve(p: &SdpStandardForm, cfg: &SolverConfig) -> Result<SdpResult, SdpError> {
    cfg.validate()?;
    Ok(solver::solve_hsde(p, cfg))
}
