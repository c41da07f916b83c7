use rejoin_core::formation::{build_problem, ScenarioConfig};
use rejoin_core::guess::{to_mesh_guess, track_point_guess, RingTarget};
use rejoin_core::leader::{LeaderSpec, LoopParams};
use rejoin_colloc::{solve_ocp, RefinementOptions};
use rejoin_nlp::ipm::SolveOptions;

fn main() {
    let cfg = ScenarioConfig::with_leader(LeaderSpec::Loops(LoopParams::default()));
    let ocp = build_problem(&cfg).unwrap();
    let guess = track_point_guess(&cfg, &ocp.leader, RingTarget::RightWing).unwrap();
    println!("guess split time: {:.3} s, reached: {}", guess.split_time, guess.reached_ring);
    let t0 = std::time::Instant::now();
    let outcome = solve_ocp(
        &ocp,
        cfg.initial_mesh(),
        &|tr| to_mesh_guess(tr, &guess),
        &RefinementOptions {
            mesh_tol: 1e-3,
            max_mesh_iterations: 15,
            nlp: SolveOptions { tol: 1e-5, max_iter: 3000, mu_init: 0.1 },
        },
    )
    .unwrap();
    println!("elapsed: {:.1} s", t0.elapsed().as_secs_f64());
    println!("converged: {}, mesh_error: {:.3e}", outcome.converged, outcome.mesh_error);
    for rec in &outcome.history {
        println!(
            "  mesh iter {}: intervals {:?} err {:.3e} nlp {:?} in {} iters",
            rec.iteration, rec.intervals, rec.max_error, rec.nlp_status, rec.nlp_iterations
        );
    }
    println!("tf1 = {:.4} s", outcome.solution.phases[0].tf);
    println!("objective = {:.4}", outcome.solution.objective);
    println!("kkt: {:?}", outcome.solution.nlp.kkt);
}
