//! Run orchestration: solve, guess export, initial-guess study, and
//! trajectory-file validation.

use crate::config::{config_hash, ConfigMap};
use crate::formation::{build_problem, FormationOcp, ScenarioConfig};
use crate::guess::{to_mesh_guess, track_point_guess, RingTarget};
use crate::output::{self, TrajRow};
use crate::validation::{
    discrete_hamiltonian, estimate_costates, feasibility_report, pairwise_separation,
    ring_deviation_trace, CostateEstimate, FeasibilityReport, GuessStudyReport, GuessStudyRow,
    HamiltonianSeries,
};
use rejoin_colloc::{solve_ocp, RefinementOptions, SolveOutcome, Transcription};
use rejoin_nlp::ipm::SolveOptions;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Extra interpolated samples per mesh interval in trajectory files.
pub const DENSE_SAMPLES_PER_INTERVAL: usize = 10;
/// Exclusion half-window around the phase switch for Hamiltonian statistics.
pub const SWITCH_WINDOW_S: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Build(#[from] crate::formation::BuildError),
    #[error(transparent)]
    Guess(#[from] crate::guess::GuessError),
    #[error(transparent)]
    Solve(#[from] rejoin_colloc::SolveError),
    #[error(transparent)]
    Output(#[from] crate::output::OutputError),
    #[error(transparent)]
    Validation(#[from] crate::validation::ValidationError),
    #[error("study worker panicked")]
    StudyWorker,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the config's guess target.
    pub target: Option<RingTarget>,
    pub mesh_tol: Option<f64>,
    pub nlp_tol: Option<f64>,
    /// Seed for the sampled derivative gate.
    pub seed: u64,
    /// File-name prefix inside the output directory.
    pub prefix: String,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> RunOptions {
        RunOptions {
            out_dir: out_dir.into(),
            target: None,
            mesh_tol: None,
            nlp_tol: None,
            seed: 0,
            prefix: String::new(),
        }
    }
}

pub struct RunArtifacts {
    pub ocp: FormationOcp,
    pub outcome: SolveOutcome,
    pub rows: Vec<TrajRow>,
    pub report: FeasibilityReport,
    pub costates: CostateEstimate,
    pub hamiltonian: HamiltonianSeries,
    pub deriv_gate_max_rel: f64,
    pub trajectory_path: PathBuf,
    pub diagnostics_path: PathBuf,
    pub manifest_path: PathBuf,
    pub iteration_log_path: PathBuf,
    pub wall_clock_s: f64,
}

impl RunArtifacts {
    pub fn converged(&self) -> bool {
        self.outcome.converged
    }
    pub fn rejoin_time_s(&self) -> f64 {
        self.outcome.solution.phases[0].tf
    }
}

fn refinement_options(cfg: &ScenarioConfig, opts: &RunOptions) -> RefinementOptions {
    RefinementOptions {
        mesh_tol: opts.mesh_tol.unwrap_or(cfg.solver.mesh_tol),
        max_mesh_iterations: cfg.solver.max_mesh_iterations,
        nlp: SolveOptions {
            tol: opts.nlp_tol.unwrap_or(cfg.solver.nlp_tol),
            max_iter: cfg.solver.max_nlp_iterations,
            mu_init: 0.1,
        },
    }
}

/// Full pipeline: guess, transcribe, derivative gate, solve with mesh
/// refinement, validate, write artifacts. Files are written (and the
/// manifest marked) even when the run does not converge.
pub fn run_solve(
    cfg: &ScenarioConfig,
    map: &ConfigMap,
    opts: &RunOptions,
) -> Result<RunArtifacts, PipelineError> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| crate::output::OutputError::Io {
        path: opts.out_dir.display().to_string(),
        source: e,
    })?;
    let ocp = build_problem(cfg)?;
    let target = opts.target.unwrap_or(cfg.guess.target);
    let guess = track_point_guess(cfg, &ocp.leader, target)?;
    let ropts = refinement_options(cfg, opts);

    // Derivative gate at the guess point on the initial mesh.
    let gate_tr = Transcription::new(&ocp, cfg.initial_mesh()).map_err(rejoin_colloc::SolveError::from)?;
    let x_gate = to_mesh_guess(&gate_tr, &guess);
    let gate = rejoin_nlp::check_derivatives(&gate_tr, &x_gate, opts.seed, 60);

    // Continuation on the deviation weight: the quartic station-keeping
    // cost is too stiff for a cold start, so two softened solves on the
    // initial mesh seed the full-weight refinement run.
    let mut warm: Option<rejoin_colloc::CollocatedSolution> = None;
    for weight in [1e-4, 1e-3, 1e-2, 1e-1] {
        let soft = ocp.with_deviation_weight(weight);
        let stage_opts = RefinementOptions {
            mesh_tol: f64::INFINITY,
            max_mesh_iterations: 1,
            nlp: SolveOptions {
                max_iter: ropts.nlp.max_iter.min(1000),
                ..ropts.nlp.clone()
            },
        };
        let stage = match &warm {
            None => solve_ocp(&soft, cfg.initial_mesh(), &|tr| to_mesh_guess(tr, &guess), &stage_opts)?,
            Some(prev) => solve_ocp(
                &soft,
                cfg.initial_mesh(),
                &|tr| rejoin_colloc::initial_from_solution(tr, prev),
                &stage_opts,
            )?,
        };
        warm = Some(stage.solution);
    }
    let warm = warm.expect("continuation stages ran");
    let outcome = solve_ocp(
        &ocp,
        cfg.initial_mesh(),
        &|tr| rejoin_colloc::initial_from_solution(tr, &warm),
        &ropts,
    )?;

    let rows = output::trajectory_rows(&ocp, &outcome.solution, DENSE_SAMPLES_PER_INTERVAL);
    let report = feasibility_report(cfg, &rows);
    let costates = estimate_costates(&outcome.solution)?;
    let mut hamiltonian = discrete_hamiltonian(&ocp, &outcome.solution, &costates, SWITCH_WINDOW_S)?;
    // Hamiltonian in reporting cost units.
    for ph in hamiltonian.phases.iter_mut() {
        for v in ph.values.iter_mut() {
            *v /= FormationOcp::OBJECTIVE_SCALE;
        }
        ph.mean /= FormationOcp::OBJECTIVE_SCALE;
        ph.max_abs_dev /= FormationOcp::OBJECTIVE_SCALE;
    }
    let trace = ring_deviation_trace(cfg, &rows);

    let stem = |name: &str| opts.out_dir.join(format!("{}{}", opts.prefix, name));
    let trajectory_path = stem("trajectory.txt");
    let diagnostics_path = stem("diagnostics.txt");
    let manifest_path = stem("manifest.txt");
    let iteration_log_path = stem("nlp_iterations.txt");

    output::write_trajectory(&trajectory_path, &rows, "solution", &cfg.name)?;
    output::write_diagnostics(
        &diagnostics_path,
        &cfg.name,
        outcome.converged,
        outcome.mesh_error,
        outcome.solution.phases[0].tf,
        ocp.report_cost(outcome.solution.objective),
        cfg.beta,
        &outcome.solution.nlp.kkt,
        Some(gate.max_rel_discrepancy),
        &report,
        &hamiltonian,
        &trace,
    )?;
    output::write_iteration_log(&iteration_log_path, &outcome.solution.nlp.log)?;
    let wall_clock_s = started.elapsed().as_secs_f64();
    output::write_manifest(
        &manifest_path,
        cfg,
        &config_hash(map),
        target.label(),
        ropts.mesh_tol,
        ropts.nlp.tol,
        outcome.converged,
        &outcome.history,
        wall_clock_s,
    )?;

    Ok(RunArtifacts {
        ocp,
        outcome,
        rows,
        report,
        costates,
        hamiltonian,
        deriv_gate_max_rel: gate.max_rel_discrepancy,
        trajectory_path,
        diagnostics_path,
        manifest_path,
        iteration_log_path,
        wall_clock_s,
    })
}

/// Export a forward-simulated guess in the trajectory file format.
pub fn run_guess(
    cfg: &ScenarioConfig,
    target: Option<RingTarget>,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| crate::output::OutputError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let ocp = build_problem(cfg)?;
    let target = target.unwrap_or(cfg.guess.target);
    let guess = track_point_guess(cfg, &ocp.leader, target)?;
    let rows = output::guess_rows(&ocp, &guess);
    let path = out_dir.join(format!("guess_{}.txt", target.label()));
    output::write_trajectory(&path, &rows, "guess", &cfg.name)?;
    Ok(path)
}

/// Solve once per ring target and compare outcomes; the solves are
/// independent and run on worker threads.
pub fn run_study(
    cfg: &ScenarioConfig,
    map: &ConfigMap,
    opts: &RunOptions,
) -> Result<(GuessStudyReport, Vec<RunArtifacts>), PipelineError> {
    let targets = RingTarget::all();
    let results: Vec<Result<RunArtifacts, PipelineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = targets
            .iter()
            .map(|&target| {
                let cfg = cfg.clone();
                let map = map.clone();
                let mut topts = opts.clone();
                topts.target = Some(target);
                topts.prefix = format!("{}{}_", opts.prefix, target.label());
                scope.spawn(move || run_solve(&cfg, &map, &topts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(Err(PipelineError::StudyWorker))).collect()
    });

    let mut artifacts = Vec::with_capacity(4);
    for r in results {
        artifacts.push(r?);
    }
    let rows: Vec<GuessStudyRow> = targets
        .iter()
        .zip(&artifacts)
        .map(|(&target, art)| GuessStudyRow {
            target,
            rejoin_time_s: art.rejoin_time_s(),
            cost: art.ocp.report_cost(art.outcome.solution.objective),
            converged: art.converged(),
        })
        .collect();
    let sols: Vec<&rejoin_colloc::CollocatedSolution> =
        artifacts.iter().map(|a| &a.outcome.solution).collect();
    let separation_ft = pairwise_separation(&sols);
    let report = GuessStudyReport {
        rows,
        separation_ft,
    };
    output::write_study_table(&opts.out_dir.join(format!("{}study.txt", opts.prefix)), &report)?;
    Ok((report, artifacts))
}

/// Recompute the feasibility report from a trajectory file. The deviation
/// columns are recomputed from the follower/leader geometry in the file, so
/// hand-edited state columns are caught.
pub fn run_validate(cfg: &ScenarioConfig, traj_path: &Path) -> Result<FeasibilityReport, PipelineError> {
    let mut rows = output::read_trajectory(traj_path)?;
    for row in rows.iter_mut() {
        let p_f = crate::units::Vec3::from_array(row.p).flip_vertical();
        let l_p = crate::units::Vec3::from_array(row.leader_p).flip_vertical();
        let (f1, f2, jw) = crate::validation::deviations_for(cfg, p_f, l_p, row.gamma, row.chi);
        row.f1 = f1;
        row.f2 = f2;
        row.jet_wash = jw;
    }
    Ok(feasibility_report(cfg, &rows))
}
