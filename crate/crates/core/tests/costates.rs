//! Costate-estimation oracles on analytic problems.

use rejoin_colloc::problems::{linear_guess, ScalarLq, ZeroAdjointLq};
use rejoin_colloc::{solve_ocp, Mesh, PhaseMesh, RefinementOptions};
use rejoin_core::validation::{discrete_hamiltonian, estimate_costates};
use rejoin_nlp::ipm::SolveOptions;

fn tight() -> RefinementOptions {
    RefinementOptions {
        mesh_tol: 1e-4,
        max_mesh_iterations: 8,
        nlp: SolveOptions {
            tol: 1e-8,
            ..Default::default()
        },
    }
}

#[test]
fn lq_costates_match_analytic_adjoint() {
    let prob = ScalarLq;
    let outcome = solve_ocp(
        &prob,
        Mesh {
            phases: vec![PhaseMesh::uniform(8, 5)],
        },
        &|tr| linear_guess(tr, &[1.0], &[0.5], 1.0),
        &tight(),
    )
    .unwrap();
    assert!(outcome.converged);
    let costates = estimate_costates(&outcome.solution).unwrap();
    let ph = &costates.phases[0];
    let mut checked = 0;
    for (t, lam) in ph.times.iter().zip(&ph.values) {
        // Interior points only; the boundary values use different relations.
        if *t <= 1e-9 || *t >= 1.0 - 1e-9 {
            continue;
        }
        let exact = prob.analytic_costate(*t);
        assert!(
            ((lam[0] - exact) / exact.abs().max(1e-6)).abs() <= 1e-4,
            "costate at t={t}: {} vs analytic {exact}",
            lam[0]
        );
        checked += 1;
    }
    assert!(checked > 20, "only {checked} interior points checked");
    // Free terminal state: the endpoint costate vanishes.
    let end = ph.values.last().unwrap()[0];
    assert!(end.abs() <= 1e-4, "terminal costate {end}");
}

#[test]
fn zero_running_cost_gives_zero_costates() {
    // Control-energy-only cost with a free terminal state: the optimal
    // control is zero and the adjoint vanishes identically.
    let prob = ZeroAdjointLq;
    let outcome = solve_ocp(
        &prob,
        Mesh {
            phases: vec![PhaseMesh::uniform(4, 4)],
        },
        &|tr| linear_guess(tr, &[1.0], &[1.0], 1.0),
        &tight(),
    )
    .unwrap();
    assert!(outcome.converged);
    let costates = estimate_costates(&outcome.solution).unwrap();
    for (t, lam) in costates.phases[0]
        .times
        .iter()
        .zip(&costates.phases[0].values)
    {
        assert!(lam[0].abs() <= 1e-6, "costate at t={t}: {}", lam[0]);
    }
}

#[test]
fn lq_hamiltonian_is_constant() {
    let prob = ScalarLq;
    let outcome = solve_ocp(
        &prob,
        Mesh {
            phases: vec![PhaseMesh::uniform(8, 5)],
        },
        &|tr| linear_guess(tr, &[1.0], &[0.5], 1.0),
        &tight(),
    )
    .unwrap();
    let costates = estimate_costates(&outcome.solution).unwrap();
    let series = discrete_hamiltonian(&prob, &outcome.solution, &costates, 0.0).unwrap();
    let ph = &series.phases[0];
    // Analytic H = x^2 + u^2 + lambda u with u = -lambda/2:
    // H(0) = x(0)^2 + u0^2 + lambda0 u0.
    let lam0 = prob.analytic_costate(0.0);
    let u0 = -lam0 / 2.0;
    let h_exact = 1.0 + u0 * u0 + lam0 * u0;
    assert!(
        (ph.mean - h_exact).abs() <= 1e-3,
        "mean H {} vs analytic {h_exact}",
        ph.mean
    );
    assert!(
        ph.max_abs_dev <= 1e-2 * ph.mean.abs().max(1.0),
        "H deviation {} about mean {}",
        ph.max_abs_dev,
        ph.mean
    );
}
