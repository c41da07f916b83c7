//! Dynamics-error estimation at inter-node midpoints and the error-driven
//! h/p mesh refinement loop.

use crate::lgr::interp;
use crate::ocp::{Mesh, Ocp, PhaseMesh};
use crate::solution::{extract_solution, initial_from_solution, CollocatedSolution};
use crate::transcribe::{TranscribeError, Transcription};
use rejoin_nlp::ipm::{solve as nlp_solve, SolveOptions, SolveStatus};
use thiserror::Error;

/// Maximum order an interval is raised to before it is bisected instead.
const ORDER_CAP: usize = 10;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Transcribe(#[from] TranscribeError),
    #[error(transparent)]
    Nlp(#[from] rejoin_nlp::NlpError),
}

/// Relative dynamics-defect error per interval: states and controls are
/// interpolated to the midpoints between adjacent support points, the
/// interpolated state derivative is compared to the dynamics right-hand
/// side, and the worst mismatch is normalized by the interval's state
/// magnitude. The overall maximum is the refinement termination statistic.
pub fn estimate_error<O: Ocp>(ocp: &O, sol: &CollocatedSolution) -> Vec<Vec<f64>> {
    let mut all = Vec::with_capacity(sol.phases.len());
    for (p, ph) in sol.phases.iter().enumerate() {
        let mut errs = Vec::with_capacity(ph.intervals.len());
        for iv in &ph.intervals {
            let n = iv.order;
            let half_dt = 0.5 * (iv.t_end - iv.t_start);
            let bw_support = interp::bary_weights(&iv.support_taus);
            let bw_nodes = interp::bary_weights(&iv.node_taus);
            let sup_vals: Vec<Vec<f64>> = (0..ph.nx)
                .map(|d| (0..=n).map(|j| ph.states[iv.start_point + j][d]).collect())
                .collect();
            let ctl_vals: Vec<Vec<f64>> = (0..ph.nu)
                .map(|d| (0..n).map(|j| ph.controls[iv.start_point + j][d]).collect())
                .collect();
            let norms: Vec<f64> = (0..ph.nx)
                .map(|d| 1.0 + sup_vals[d].iter().fold(0.0f64, |a, v| a.max(v.abs())))
                .collect();
            let mut worst = 0.0f64;
            let mut f = vec![0.0; ph.nx];
            for m in 0..n {
                let tau = 0.5 * (iv.support_taus[m] + iv.support_taus[m + 1]);
                let x_m: Vec<f64> = (0..ph.nx)
                    .map(|d| interp::eval(&iv.support_taus, &bw_support, &sup_vals[d], tau))
                    .collect();
                let u_m: Vec<f64> = (0..ph.nu)
                    .map(|d| interp::eval(&iv.node_taus, &bw_nodes, &ctl_vals[d], tau))
                    .collect();
                let t_m = iv.t_start + (tau + 1.0) * half_dt;
                ocp.dynamics(p, &x_m, &u_m, t_m, &mut f);
                for d in 0..ph.nx {
                    let dxdtau = interp::eval_derivative(&iv.support_taus, &bw_support, &sup_vals[d], tau);
                    let err = (dxdtau - half_dt * f[d]).abs() / norms[d];
                    worst = worst.max(err);
                }
            }
            errs.push(worst);
        }
        all.push(errs);
    }
    all
}

/// Error-driven refinement: intervals above tolerance get their order
/// raised by `ceil(log10(err / tol))` up to [`ORDER_CAP`], beyond that they
/// are bisected (both halves keep the order). Intervals within tolerance
/// are unchanged.
pub fn refine_mesh(mesh: &Mesh, errors: &[Vec<f64>], tol: f64) -> Mesh {
    refine_mesh_with_history(mesh, errors, tol, None)
}

/// [`refine_mesh`] with stagnation detection: when the previous round
/// already raised an interval's order and its error failed to drop by at
/// least half, the interval is bisected instead (order raising cannot
/// resolve control discontinuities inside an interval).
pub fn refine_mesh_with_history(
    mesh: &Mesh,
    errors: &[Vec<f64>],
    tol: f64,
    previous: Option<(&Mesh, &[Vec<f64>])>,
) -> Mesh {
    let mut phases = Vec::with_capacity(mesh.phases.len());
    for (p, (pm, errs)) in mesh.phases.iter().zip(errors).enumerate() {
        // Interval start offsets for identity matching across rounds.
        let starts: Vec<f64> = pm
            .fractions
            .iter()
            .scan(0.0, |acc, f| {
                let s = *acc;
                *acc += f;
                Some(s)
            })
            .collect();
        let prev_lookup: Option<(Vec<f64>, &PhaseMesh, &Vec<f64>)> = previous.map(|(m, e)| {
            let ppm = &m.phases[p];
            let pstarts: Vec<f64> = ppm
                .fractions
                .iter()
                .scan(0.0, |acc, f| {
                    let s = *acc;
                    *acc += f;
                    Some(s)
                })
                .collect();
            (pstarts, ppm, &e[p])
        });

        let mut fractions = Vec::new();
        let mut orders = Vec::new();
        for (k, ((&f, &n), &err)) in pm.fractions.iter().zip(&pm.orders).zip(errs).enumerate() {
            if err <= tol {
                fractions.push(f);
                orders.push(n);
                continue;
            }
            let mut stagnated = false;
            if let Some((pstarts, ppm, perrs)) = &prev_lookup {
                if let Some(pk) = pstarts
                    .iter()
                    .position(|&s| (s - starts[k]).abs() < 1e-12)
                {
                    if pk < ppm.fractions.len()
                        && (ppm.fractions[pk] - f).abs() < 1e-12
                        && ppm.orders[pk] < n
                        && err > 0.5 * perrs[pk]
                    {
                        stagnated = true;
                    }
                }
            }
            let bump = ((err / tol).log10().ceil() as usize).max(1);
            let target = n + bump;
            if target <= ORDER_CAP && !stagnated {
                fractions.push(f);
                orders.push(target);
            } else {
                fractions.push(f / 2.0);
                orders.push(n.min(ORDER_CAP));
                fractions.push(f / 2.0);
                orders.push(n.min(ORDER_CAP));
            }
        }
        // Guard against drift in the fraction sum.
        let s: f64 = fractions.iter().sum();
        for f in fractions.iter_mut() {
            *f /= s;
        }
        phases.push(PhaseMesh { fractions, orders });
    }
    Mesh { phases }
}

#[derive(Debug, Clone)]
pub struct RefinementRecord {
    pub iteration: usize,
    pub intervals: Vec<usize>,
    /// Error of the solution computed at this iteration.
    pub max_error: f64,
    /// Error of the best (incumbent) solution up to this iteration; this is
    /// what the returned solution carries, non-increasing by construction.
    pub best_error: f64,
    pub nlp_status: SolveStatus,
    pub nlp_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RefinementOptions {
    pub mesh_tol: f64,
    pub max_mesh_iterations: usize,
    pub nlp: SolveOptions,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        RefinementOptions {
            mesh_tol: 1e-3,
            max_mesh_iterations: 15,
            nlp: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: CollocatedSolution,
    pub history: Vec<RefinementRecord>,
    /// Mesh error of the returned solution.
    pub mesh_error: f64,
    /// NLP converged and the mesh tolerance was met.
    pub converged: bool,
}

/// Transcribe, solve, estimate, refine until the mesh tolerance holds.
/// Later iterations warm-start from the interpolated previous solution.
/// On a failed NLP solve or an exhausted iteration cap the best effort is
/// still returned with `converged = false`.
pub fn solve_ocp<O: Ocp>(
    ocp: &O,
    initial_mesh: Mesh,
    first_guess: &dyn Fn(&Transcription<'_, O>) -> Vec<f64>,
    opts: &RefinementOptions,
) -> Result<SolveOutcome, SolveError> {
    let mut mesh = initial_mesh;
    let mut history = Vec::new();
    let mut best: Option<(CollocatedSolution, f64)> = None;
    let mut latest: Option<CollocatedSolution> = None;
    let mut last: Option<(Mesh, Vec<Vec<f64>>)> = None;

    for iteration in 0..opts.max_mesh_iterations {
        let tr = Transcription::new(ocp, mesh.clone())?;
        let x0 = match &latest {
            None => first_guess(&tr),
            Some(prev) => initial_from_solution(&tr, prev),
        };
        let nlp_sol = nlp_solve(&tr, &x0, &opts.nlp)?;
        let nlp_status = nlp_sol.status;
        let nlp_iterations = nlp_sol.iterations;
        let sol = extract_solution(&tr, nlp_sol);
        let errors = estimate_error(ocp, &sol);
        let max_error = errors
            .iter()
            .flat_map(|e| e.iter())
            .fold(0.0f64, |a, &v| a.max(v));
        // Prefer fully converged solves; among equals take the smaller error.
        let candidate_rank = (nlp_status.is_converged(), -max_error);
        let improved = match &best {
            None => true,
            Some((prev, e)) => candidate_rank > (prev.nlp.status.is_converged(), -*e),
        };
        if improved {
            best = Some((sol.clone(), max_error));
        }
        latest = Some(sol);
        history.push(RefinementRecord {
            iteration,
            intervals: mesh.phases.iter().map(|p| p.orders.len()).collect(),
            max_error,
            best_error: best.as_ref().map(|(_, e)| *e).unwrap_or(max_error),
            nlp_status,
            nlp_iterations,
        });
        if nlp_status.is_converged() && max_error <= opts.mesh_tol {
            break;
        }
        // A stalled NLP whose iterate is feasible and nearly stationary is
        // still a sound basis for refinement: coarse meshes often cannot
        // resolve the costate layers of stiff running costs, and the NLP
        // only converges fully once the mesh does.
        let usable = {
            let sol = latest.as_ref().expect("solution recorded");
            nlp_status.is_converged()
                || (sol.nlp.kkt.feasibility <= 1e-6 && sol.nlp.kkt.stationarity <= 0.5)
        };
        if !usable {
            break;
        }
        // Refine toward half the tolerance: intervals hovering just under
        // the target would otherwise drift back above it when the solution
        // shifts on the refined mesh.
        let refined = refine_mesh_with_history(
            &mesh,
            &errors,
            0.5 * opts.mesh_tol,
            last.as_ref().map(|(m, e)| (m, e.as_slice())),
        );
        last = Some((mesh, errors));
        mesh = refined;
    }

    let (solution, mesh_error) = best.expect("at least one refinement iteration runs");
    let converged = solution.nlp.status.is_converged() && mesh_error <= opts.mesh_tol;
    Ok(SolveOutcome {
        solution,
        history,
        mesh_error,
        converged,
    })
}
