//! Analytic KKT checks for the interior-point solver.

use rejoin_nlp::ipm::{solve, SolveOptions, SolveStatus};
use rejoin_nlp::{check_derivatives, kkt_residuals, NlpProblem};

/// min x^2 subject to x >= 1. Solution x* = 1, lower-bound multiplier 2.
struct BoundQp;

impl NlpProblem for BoundQp {
    fn num_vars(&self) -> usize {
        1
    }
    fn num_cons(&self) -> usize {
        0
    }
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb[0] = 1.0;
        ub[0] = f64::INFINITY;
    }
    fn con_bounds(&self, _lb: &mut [f64], _ub: &mut [f64]) {}
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] * x[0]
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad[0] = 2.0 * x[0];
    }
    fn constraints(&self, _x: &[f64], _c: &mut [f64]) {}
    fn jac_structure(&self) -> Vec<(usize, usize)> {
        vec![]
    }
    fn jacobian(&self, _x: &[f64], _vals: &mut [f64]) {}
    fn hess_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0)]
    }
    fn hessian(&self, _x: &[f64], sigma: f64, _lambda: &[f64], vals: &mut [f64]) {
        vals[0] = 2.0 * sigma;
    }
}

#[test]
fn bound_qp_has_unit_solution_and_multiplier_two() {
    let sol = solve(&BoundQp, &[3.0], &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.x[0] - 1.0).abs() < 1e-5, "x = {}", sol.x[0]);
    assert!((sol.z_lower[0] - 2.0).abs() < 1e-3, "z = {}", sol.z_lower[0]);
    assert!(sol.kkt.max() <= 1e-5);
}

/// min -x - y subject to x^2 + y^2 <= 1.
/// Solution (sqrt(2)/2, sqrt(2)/2), constraint multiplier sqrt(2)/2.
struct CircleProblem;

impl NlpProblem for CircleProblem {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_cons(&self) -> usize {
        1
    }
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb.fill(-10.0);
        ub.fill(10.0);
    }
    fn con_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb[0] = f64::NEG_INFINITY;
        ub[0] = 1.0;
    }
    fn objective(&self, x: &[f64]) -> f64 {
        -x[0] - x[1]
    }
    fn gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad[0] = -1.0;
        grad[1] = -1.0;
    }
    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        c[0] = x[0] * x[0] + x[1] * x[1];
    }
    fn jac_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (0, 1)]
    }
    fn jacobian(&self, x: &[f64], vals: &mut [f64]) {
        vals[0] = 2.0 * x[0];
        vals[1] = 2.0 * x[1];
    }
    fn hess_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (1, 1)]
    }
    fn hessian(&self, _x: &[f64], _sigma: f64, lambda: &[f64], vals: &mut [f64]) {
        vals[0] = 2.0 * lambda[0];
        vals[1] = 2.0 * lambda[0];
    }
}

#[test]
fn circle_problem_matches_lagrange_conditions() {
    let sol = solve(&CircleProblem, &[0.1, 0.0], &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    let r = (0.5f64).sqrt();
    assert!((sol.x[0] - r).abs() < 1e-4, "x0 = {}", sol.x[0]);
    assert!((sol.x[1] - r).abs() < 1e-4, "x1 = {}", sol.x[1]);
    assert!((sol.y[0] - r).abs() < 1e-3, "y = {}", sol.y[0]);
    assert!(sol.kkt.max() <= 1e-5);
}

/// Equality-constrained QP with a known KKT point:
/// min 0.5 (x1^2 + x2^2) s.t. x1 + x2 = 2. Solution (1, 1), y = -1.
struct EqualityQp;

impl NlpProblem for EqualityQp {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_cons(&self) -> usize {
        1
    }
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb.fill(-100.0);
        ub.fill(100.0);
    }
    fn con_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb[0] = 2.0;
        ub[0] = 2.0;
    }
    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1])
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(x);
    }
    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        c[0] = x[0] + x[1];
    }
    fn jac_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (0, 1)]
    }
    fn jacobian(&self, _x: &[f64], vals: &mut [f64]) {
        vals[0] = 1.0;
        vals[1] = 1.0;
    }
    fn hess_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (1, 1)]
    }
    fn hessian(&self, _x: &[f64], sigma: f64, _lambda: &[f64], vals: &mut [f64]) {
        vals[0] = sigma;
        vals[1] = sigma;
    }
}

#[test]
fn equality_qp_solution_and_residuals() {
    let sol = solve(&EqualityQp, &[5.0, -3.0], &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.x[0] - 1.0).abs() < 1e-6);
    assert!((sol.x[1] - 1.0).abs() < 1e-6);
    assert!((sol.y[0] + 1.0).abs() < 1e-5, "y = {}", sol.y[0]);
}

#[test]
fn kkt_residuals_vanish_at_analytic_qp_solution() {
    // Plug the exact primal-dual point in: residuals at roundoff level.
    let res = kkt_residuals(&EqualityQp, &[1.0, 1.0], &[-1.0], &[0.0, 0.0], &[0.0, 0.0]);
    assert!(res.max() <= 1e-10, "residuals {res:?}");
}

#[test]
fn kkt_residuals_flag_nonstationary_point() {
    // Feasible but not stationary: positive stationarity residual.
    let res = kkt_residuals(&EqualityQp, &[2.0, 0.0], &[0.0], &[0.0, 0.0], &[0.0, 0.0]);
    assert!(res.feasibility <= 1e-12);
    assert!(res.stationarity > 0.1);
}

#[test]
fn derivative_check_accepts_exact_linear_jacobian() {
    let report = check_derivatives(&EqualityQp, &[0.3, 0.7], 42, 10);
    assert!(report.max_rel_discrepancy <= 1e-9, "{report:?}");
}

/// Wrapper that corrupts one Jacobian entry, for the fault-injection gate.
struct CorruptedJac<'a> {
    inner: &'a EqualityQp,
}

impl NlpProblem for CorruptedJac<'_> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }
    fn num_cons(&self) -> usize {
        self.inner.num_cons()
    }
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        self.inner.var_bounds(lb, ub)
    }
    fn con_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        self.inner.con_bounds(lb, ub)
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.inner.gradient(x, grad)
    }
    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        self.inner.constraints(x, c)
    }
    fn jac_structure(&self) -> Vec<(usize, usize)> {
        self.inner.jac_structure()
    }
    fn jacobian(&self, x: &[f64], vals: &mut [f64]) {
        self.inner.jacobian(x, vals);
        vals[1] += 0.5;
    }
    fn hess_structure(&self) -> Vec<(usize, usize)> {
        self.inner.hess_structure()
    }
    fn hessian(&self, x: &[f64], sigma: f64, lambda: &[f64], vals: &mut [f64]) {
        self.inner.hessian(x, sigma, lambda, vals)
    }
}

#[test]
fn derivative_check_detects_corrupted_entry() {
    let corrupted = CorruptedJac { inner: &EqualityQp };
    let report = check_derivatives(&corrupted, &[0.3, 0.7], 42, 10);
    assert!(report.max_rel_discrepancy > 1e-3, "{report:?}");
}

#[test]
fn solver_is_deterministic() {
    let a = solve(&CircleProblem, &[0.1, 0.0], &SolveOptions::default()).unwrap();
    let b = solve(&CircleProblem, &[0.1, 0.0], &SolveOptions::default()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.x, b.x);
    for (ra, rb) in a.log.iter().zip(b.log.iter()) {
        assert_eq!(ra.objective.to_bits(), rb.objective.to_bits());
        assert_eq!(ra.merit_post.to_bits(), rb.merit_post.to_bits());
    }
}

#[test]
fn merit_is_monotone_across_accepted_steps() {
    let sol = solve(&CircleProblem, &[0.1, 0.0], &SolveOptions::default()).unwrap();
    // Within a fixed (mu, nu) stretch the accepted merit never increases.
    for w in sol.log.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.mu == b.mu && a.nu == b.nu && b.alpha_pr > 0.0 {
            assert!(
                b.merit_post <= b.merit_pre + 1e-12 * b.merit_pre.abs().max(1.0),
                "merit rose at iter {}: {} -> {}",
                b.iter,
                b.merit_pre,
                b.merit_post
            );
        }
    }
    // And each accepted step decreased the merit it was searched on.
    for r in &sol.log {
        if r.alpha_pr > 0.0 {
            assert!(r.merit_post <= r.merit_pre + 1e-12 * r.merit_pre.abs().max(1.0));
        }
    }
}

#[test]
fn clamped_start_is_flagged() {
    let sol = solve(&BoundQp, &[-5.0], &SolveOptions::default()).unwrap();
    assert!(sol.clamped_start);
    assert_eq!(sol.status, SolveStatus::Converged);
}
