//! Minimization of the largest eigenvalue over an affine matrix family.
//!
//! `minimize t  s.t.  M0 - sum_i c_i Ms_i <= t I` is the dual side of a
//! standard-form SDP over the spectraplex: with `C = -M0`, `A_0 = -I`,
//! `A_i = -Ms_i` and `b = (-1, 0, ..., 0)`, the dual variable is exactly
//! `y = (t, c)` and the primal solution certifies the objective value.

use super::{solve, SdpError, SdpResult, SdpStandardForm, SdpStatus, SolverConfig};
use crate::mat::SymmetricMatrix;

/// Result of the eigenvalue minimization.
#[derive(Debug, Clone)]
pub struct MinMaxEig {
    /// Optimal multipliers `c`.
    pub c: Vec<f64>,
    /// Optimal bound `t = max eig (M0 - sum c_i Ms_i)`.
    pub t: f64,
    /// Primal spectraplex point certifying the value within the gap.
    pub witness: SymmetricMatrix,
    pub gap: f64,
    pub iterations: usize,
}

/// Minimizes `t` subject to `M0 - sum_i c_i Ms_i <= t I`.
///
/// Unboundedness (the spectraplex system admitting no solution) is reported
/// as [`SdpError::UnboundedBelow`] with a normalized multiplier ray
/// `d` satisfying `sum_i d_i Ms_i >= I` up to tolerance.
pub fn minimize_max_eigenvalue(
    m0: &SymmetricMatrix,
    ms: &[SymmetricMatrix],
    cfg: &SolverConfig,
) -> Result<MinMaxEig, SdpError> {
    let dim = m0.dim();
    for (i, m) in ms.iter().enumerate() {
        if m.dim() != dim {
            return Err(SdpError::BadProblem(format!(
                "family matrix {i} has dimension {} but M0 has {dim}",
                m.dim()
            )));
        }
    }
    let mut constraints = Vec::with_capacity(ms.len() + 1);
    constraints.push((SymmetricMatrix::identity(dim).scale(-1.0), -1.0));
    for m in ms {
        constraints.push((m.scale(-1.0), 0.0));
    }
    let p = SdpStandardForm::new(m0.scale(-1.0), constraints)?;
    let result = solve(&p, cfg)?;
    interpret(result, ms.len())
}

fn interpret(result: SdpResult, q: usize) -> Result<MinMaxEig, SdpError> {
    match result.status {
        SdpStatus::Optimal => {
            let y = result.y.expect("optimal result carries duals");
            let t = y[0];
            let c = y[1..=q].to_vec();
            Ok(MinMaxEig {
                c,
                t,
                witness: result.x.expect("optimal result carries a primal point"),
                gap: result.gap,
                iterations: result.iterations,
            })
        }
        SdpStatus::PrimalInfeasible => {
            // The embedded primal being infeasible means t is unbounded
            // below. The certificate y has A*(y) <= 0 and b^T y = 1; here
            // that reads I - sum_i y_i Ms_i <= 0, so y[1..] is the ray.
            let y = result
                .infeasibility_certificate
                .expect("infeasible status carries a certificate");
            Err(SdpError::UnboundedBelow {
                certificate: y[1..=q].to_vec(),
            })
        }
        SdpStatus::DualInfeasible => Err(SdpError::Numerics(
            "eigenvalue minimization reported an unbounded spectraplex, which cannot happen"
                .into(),
        )),
        SdpStatus::NumericalFailure => Err(SdpError::Numerics(format!(
            "eigenvalue minimization did not converge: {}",
            result.diagnostics.message
        ))),
    }
}
