//! Multi-phase Legendre-Gauss-Radau collocation for optimal control.
//!
//! Transcribes an [`ocp::Ocp`] description into a sparse NLP solved by
//! `rejoin-nlp`, estimates dynamics errors between collocation points, and
//! refines the mesh until the error tolerance holds. All derivatives are
//! computed by the in-crate forward-mode AD facility.

pub mod autodiff;
pub mod lgr;
pub mod ocp;
pub mod problems;
pub mod refine;
pub mod solution;
pub mod transcribe;

pub use autodiff::{Dual, Dual2, Scalar};
pub use lgr::{lgr_rule, LgrRule};
pub use ocp::{LinkRow, LinkVar, Mesh, Ocp, PhaseMesh, TimeSpec};
pub use refine::{
    estimate_error, refine_mesh, refine_mesh_with_history, solve_ocp, RefinementOptions,
    RefinementRecord, SolveError, SolveOutcome,
};
pub use solution::{extract_solution, initial_from_solution, CollocatedSolution, PhaseSolution};
pub use transcribe::{TimeRef, Transcription};
