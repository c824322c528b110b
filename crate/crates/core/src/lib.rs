//! Quadratic control Lyapunov function analysis for bilinear systems.
//!
//! The crate decides whether a quadratic candidate `V_Q(z) = 1/2 z^T Q z`
//! certifies stabilizability of a bilinear system
//! `zdot = A z + sum_i B_i z u_i`, by maximizing the autonomous term over
//! the manifold where no input can influence the derivative, relaxing that
//! program to a semidefinite program, and reading rank-one exactness off the
//! solution. Constant stabilizing controllers are extracted from the dual
//! side, and bilinear models can be identified from trajectory data.
//!
//! Modules:
//! - [`mat`]: dense linear algebra (eigensolvers, factorizations, Lyapunov).
//! - [`sdp`]: interior-point solver for small dense SDPs, rank machinery.
//! - [`clf`]: candidate verification, relaxation construction, brute oracle.
//! - [`stabilize`]: constant-control synthesis in both directions.
//! - [`koopman`]: bilinear system identification from trajectory batches.
//! - [`sim`]: fixed-step simulation and empirical decay checks.

pub mod clf;
pub mod koopman;
pub mod mat;
pub mod sdp;
pub mod sim;
pub mod stabilize;
