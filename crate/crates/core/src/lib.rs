//! Two-phase formation-ring rejoin trajectory optimization toolkit.
//!
//! A follower aircraft, modeled with triple-integrator dynamics and a jerk
//! control, rejoins a ring of formation stations defined relative to a
//! maneuvering leader in minimum time, then holds the ring with minimum
//! squared deviation until a fixed final time. The problem is transcribed
//! by Legendre-Gauss-Radau collocation (`rejoin-colloc`) and solved with a
//! sparse interior-point method (`rejoin-nlp`); post-solve diagnostics
//! check feasibility and the constancy of the discrete Hamiltonian.

pub mod config;
pub mod formation;
pub mod guess;
pub mod leader;
pub mod output;
pub mod pipeline;
pub mod units;
pub mod validation;
