use rejoin_core::formation::{build_problem, ScenarioConfig};
use rejoin_core::guess::{to_mesh_guess, track_point_guess, RingTarget};
use rejoin_core::leader::{LeaderSpec, SpiralParams};
use rejoin_colloc::Transcription;
use rejoin_nlp::ipm::{solve, SolveOptions};

fn main() {
    let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
    let ocp = build_problem(&cfg).unwrap();
    let guess = track_point_guess(&cfg, &ocp.leader, RingTarget::RightWing).unwrap();
    let tr = Transcription::new(&ocp, cfg.initial_mesh()).unwrap();
    let x0 = to_mesh_guess(&tr, &guess);
    let sol = solve(&tr, &x0, &SolveOptions { tol: 1e-5, max_iter: 600, mu_init: 0.1 }).unwrap();
    println!("status {:?} iters {}", sol.status, sol.iterations);
    let log = &sol.log;
    for r in log.iter().take(10) {
        println!("{:4} obj {:10.4} pr {:9.2e} du {:9.2e} mu {:8.1e} apr {:8.1e} adu {:8.1e} nu {:8.1e} dx {:7.1e}",
            r.iter, r.objective, r.inf_pr, r.inf_du, r.mu, r.alpha_pr, r.alpha_du, r.nu, r.delta_x);
    }
    println!("...");
    for r in log.iter().skip(log.len().saturating_sub(30)) {
        println!("{:4} obj {:10.4} pr {:9.2e} du {:9.2e} mu {:8.1e} apr {:8.1e} adu {:8.1e} nu {:8.1e} dx {:7.1e}",
            r.iter, r.objective, r.inf_pr, r.inf_du, r.mu, r.alpha_pr, r.alpha_du, r.nu, r.delta_x);
    }
}
