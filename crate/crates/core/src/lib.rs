//! Error exponents for lossy source coding.
//!
//! Computes Marton's error exponent `E_M(R, Δ, q)` and its inverse `R_M(E, Δ, q)` for
//! finite alphabets by a line search over the distortion slope combined with
//! alternating maximization over the source distribution and the dual
//! rate-distortion certificate. Blahut-Arimoto, brute-force oracles, a grid-search
//! baseline and the standard test sources are included.
//!
//! All information quantities are in nats.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod amcd;
pub mod baselines;
pub mod config;
pub mod error;
pub mod exponent;
pub mod inverse;
mod interior;
pub mod io;
pub mod prob;
pub mod rd;
pub mod report;
pub mod roots;
pub mod sources;
mod tilt;

pub use config::{SolverConfig, ZetaGrid};
pub use error::{Error, Result};
pub use exponent::{f_e, solve_exponent, solve_lambda, update_p_exponent, ExponentProblem};
pub use inverse::{f_r, solve_inverse, solve_xi, update_p_inverse, InverseProblem};
pub use prob::{
    binary_kl, delta_max, kl_divergence, log_sum_exp, validate_simplex, ConditionalMatrix,
    DistortionMatrix, ProbabilityVector,
};
pub use rd::{
    ba_fixed_slope, dual_certificate, rd_at_distortion, rd_at_distortion_with, BaFixedPoint,
    DualCertificate, InnerSolver, RdOptions,
};
pub use report::{IterationRecord, ProblemKind, SolveReport, SolveStatus, ZetaTrace};
pub use roots::{Multiplier, RootStatus};
