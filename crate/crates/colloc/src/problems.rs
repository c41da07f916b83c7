//! Small analytic optimal control problems used as transcription oracles.

use crate::autodiff::Scalar;
use crate::ocp::{Ocp, TimeSpec};
use crate::transcribe::{TimeRef, Transcription};

/// Minimum-time rest-to-rest transfer of a double integrator with bounded
/// acceleration: `min tf` s.t. `p' = v`, `v' = u`, `|u| <= a_max`,
/// `p(0) = v(0) = 0`, `p(tf) = d`, `v(tf) = 0`.
///
/// The optimal control is bang-bang with switch at `tf/2` and
/// `tf* = 2 sqrt(d / a_max)`.
pub struct DoubleIntegratorMinTime {
    pub distance: f64,
    pub accel_limit: f64,
}

impl DoubleIntegratorMinTime {
    pub fn analytic_final_time(&self) -> f64 {
        2.0 * (self.distance / self.accel_limit).sqrt()
    }
}

impl Ocp for DoubleIntegratorMinTime {
    fn num_phases(&self) -> usize {
        1
    }
    fn state_dim(&self, _: usize) -> usize {
        2
    }
    fn control_dim(&self, _: usize) -> usize {
        1
    }
    fn time_spec(&self, _: usize) -> (TimeSpec, TimeSpec) {
        (
            TimeSpec::Constant(0.0),
            TimeSpec::Variable {
                lb: 0.1,
                ub: 100.0,
                guess: 3.0,
            },
        )
    }
    fn state_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        let r = 10.0 * self.distance.abs().max(1.0);
        (vec![-r, -r], vec![r, r])
    }
    fn control_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.accel_limit], vec![self.accel_limit])
    }
    fn initial_state(&self, _: usize) -> Option<Vec<f64>> {
        Some(vec![0.0, 0.0])
    }
    fn final_state(&self, _: usize) -> Option<Vec<Option<f64>>> {
        Some(vec![Some(self.distance), Some(0.0)])
    }
    fn dynamics<T: Scalar>(&self, _: usize, x: &[T], u: &[T], _t: T, out: &mut [T]) {
        out[0] = x[1];
        out[1] = u[0];
    }
    fn dynamics_affine(&self, _: usize) -> bool {
        true
    }
    fn mayer<T: Scalar>(&self, times: &[(T, T)]) -> T {
        times[0].1
    }
    fn name(&self) -> &str {
        "double-integrator-min-time"
    }
}

/// Scalar linear-quadratic problem with an analytic adjoint:
/// `min int_0^1 (x^2 + u^2) dt` s.t. `x' = u`, `x(0) = 1`, `x(1)` free.
///
/// Optimality conditions give `x(t) = cosh(1 - t)/cosh(1)`,
/// `u = -lambda/2`, `lambda(t) = 2 sinh(1 - t)/cosh(1)`.
pub struct ScalarLq;

impl ScalarLq {
    pub fn analytic_state(&self, t: f64) -> f64 {
        (1.0 - t).cosh() / 1.0f64.cosh()
    }
    pub fn analytic_costate(&self, t: f64) -> f64 {
        2.0 * (1.0 - t).sinh() / 1.0f64.cosh()
    }
}

impl Ocp for ScalarLq {
    fn num_phases(&self) -> usize {
        1
    }
    fn state_dim(&self, _: usize) -> usize {
        1
    }
    fn control_dim(&self, _: usize) -> usize {
        1
    }
    fn time_spec(&self, _: usize) -> (TimeSpec, TimeSpec) {
        (TimeSpec::Constant(0.0), TimeSpec::Constant(1.0))
    }
    fn state_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-10.0], vec![10.0])
    }
    fn control_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-10.0], vec![10.0])
    }
    fn initial_state(&self, _: usize) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }
    fn dynamics<T: Scalar>(&self, _: usize, _x: &[T], u: &[T], _t: T, out: &mut [T]) {
        out[0] = u[0];
    }
    fn dynamics_affine(&self, _: usize) -> bool {
        true
    }
    fn has_lagrange(&self, _: usize) -> bool {
        true
    }
    fn lagrange<T: Scalar>(&self, _: usize, x: &[T], u: &[T], _t: T) -> T {
        x[0].sq() + u[0].sq()
    }
    fn name(&self) -> &str {
        "scalar-lq"
    }
}

/// Zero-cost variant of the LQ problem: free terminal state and a running
/// cost on the control only, so the adjoint vanishes identically.
pub struct ZeroAdjointLq;

impl Ocp for ZeroAdjointLq {
    fn num_phases(&self) -> usize {
        1
    }
    fn state_dim(&self, _: usize) -> usize {
        1
    }
    fn control_dim(&self, _: usize) -> usize {
        1
    }
    fn time_spec(&self, _: usize) -> (TimeSpec, TimeSpec) {
        (TimeSpec::Constant(0.0), TimeSpec::Constant(1.0))
    }
    fn state_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-10.0], vec![10.0])
    }
    fn control_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-10.0], vec![10.0])
    }
    fn initial_state(&self, _: usize) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }
    fn dynamics<T: Scalar>(&self, _: usize, _x: &[T], u: &[T], _t: T, out: &mut [T]) {
        out[0] = u[0];
    }
    fn dynamics_affine(&self, _: usize) -> bool {
        true
    }
    fn has_lagrange(&self, _: usize) -> bool {
        true
    }
    fn lagrange<T: Scalar>(&self, _: usize, _x: &[T], u: &[T], _t: T) -> T {
        u[0].sq()
    }
    fn name(&self) -> &str {
        "zero-adjoint-lq"
    }
}

/// Linear starting guess between fixed endpoints, suitable for the test
/// problems: states interpolate `x0 -> xf`, controls zero, variable times
/// at their guesses.
pub fn linear_guess<O: Ocp>(tr: &Transcription<'_, O>, x0: &[f64], xf: &[f64], tf_guess: f64) -> Vec<f64> {
    let mut x = vec![0.0; tr.num_vars()];
    let (xl, xu) = tr.var_bounds_ref();
    for (p, ph) in tr.phases.iter().enumerate() {
        for (s, sig) in tr.sigma_support(p).iter().enumerate() {
            for d in 0..ph.nx {
                let g = tr.state_index(p, s, d);
                let v = x0[d] + sig * (xf[d] - x0[d]);
                x[g] = v.clamp(xl[g], xu[g]);
            }
        }
        let (t0r, tfr) = tr.time_refs(p);
        if let TimeRef::Var(i) = t0r {
            x[i] = xl[i];
        }
        if let TimeRef::Var(i) = tfr {
            x[i] = tf_guess.clamp(xl[i], xu[i]);
        }
    }
    x
}
