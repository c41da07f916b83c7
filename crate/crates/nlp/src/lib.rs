//! Sparse primal-dual interior-point solver for nonlinear programs.
//!
//! Solves problems of the form
//!
//! ```text
//!   min  f(x)
//!   s.t. cl <= c(x) <= cu      (rows with cl == cu are equalities)
//!        xl <=  x   <= xu
//! ```
//!
//! returning the primal point together with constraint and bound
//! multipliers, which downstream consumers turn into costate estimates.
//! The method is a line-search interior-point iteration with slacks for
//! inequalities, a monotone barrier schedule, an l1 exact-penalty merit
//! function, and an inertia-correcting sparse LDL^T factorization of the
//! reduced KKT system.

pub mod deriv;
pub mod ipm;
pub mod kkt;
pub mod sparse;

pub use deriv::{check_derivatives, DerivCheckReport};
pub use ipm::{solve, IterRecord, SolveOptions, SolveStatus, Solution};
pub use kkt::{kkt_residuals, KktResiduals};

use thiserror::Error;

/// A smooth nonlinear program with sparse first and second derivatives.
///
/// Jacobian and Hessian sparsity patterns are fixed for the lifetime of the
/// problem; value callbacks fill slots aligned with the structure slices.
/// The Hessian is the lower triangle of `sigma * grad^2 f + sum_i lambda_i
/// grad^2 c_i`.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_cons(&self) -> usize;

    /// Variable bounds; entries may be infinite, `lb == ub` fixes a variable.
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]);
    /// Constraint bounds; `lb == ub` marks an equality row.
    fn con_bounds(&self, lb: &mut [f64], ub: &mut [f64]);

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], c: &mut [f64]);

    /// Jacobian nonzeros as `(row, col)` pairs.
    fn jac_structure(&self) -> Vec<(usize, usize)>;
    fn jacobian(&self, x: &[f64], vals: &mut [f64]);

    /// Lagrangian Hessian nonzeros, lower triangle (`row >= col`).
    fn hess_structure(&self) -> Vec<(usize, usize)>;
    fn hessian(&self, x: &[f64], sigma: f64, lambda: &[f64], vals: &mut [f64]);

    /// Label recorded in solution reports.
    fn name(&self) -> &str {
        "nlp"
    }
}

#[derive(Debug, Error)]
pub enum NlpError {
    #[error("objective or constraints are not finite at the starting point")]
    NonFiniteAtStart,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
