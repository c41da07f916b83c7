use rejoin_core::formation::{build_problem, ScenarioConfig, FormationOcp};
use rejoin_core::guess::{to_mesh_guess, track_point_guess, RingTarget};
use rejoin_core::leader::{LeaderSpec, SpiralParams};
use rejoin_colloc::{extract_solution, initial_from_solution, Transcription};
use rejoin_nlp::ipm::{solve, SolveOptions};
use rejoin_nlp::NlpProblem;

fn main() {
    let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
    let ocp = build_problem(&cfg).unwrap();
    let guess = track_point_guess(&cfg, &ocp.leader, RingTarget::RightWing).unwrap();
    let opts = SolveOptions { tol: 1e-5, max_iter: 3000, mu_init: 0.1 };
    let mut warm: Option<rejoin_colloc::CollocatedSolution> = None;
    for w in [1e-4f64, 1e-3, 1e-2, 1e-1, 1.0] {
        let soft: FormationOcp = ocp.with_deviation_weight(w);
        let tr = Transcription::new(&soft, cfg.initial_mesh()).unwrap();
        let x0 = match &warm {
            None => to_mesh_guess(&tr, &guess),
            Some(prev) => initial_from_solution(&tr, prev),
        };
        let t0 = std::time::Instant::now();
        let sol = solve(&tr, &x0, &opts).unwrap();
        let tf1 = {
            let s = extract_solution(&tr, sol.clone());
            s.phases[0].tf
        };
        println!(
            "w={w:.0e}: {:?} in {} iters ({:.1}s) tf1={tf1:.3} obj={:.4} kkt=({:.1e},{:.1e},{:.1e})",
            sol.status, sol.iterations, t0.elapsed().as_secs_f64(), sol.objective,
            sol.kkt.stationarity, sol.kkt.feasibility, sol.kkt.complementarity
        );
        if w == 1.0 {
            for r in sol.log.iter().skip(sol.log.len().saturating_sub(8)) {
                println!("  {:4} obj {:12.6e} pr {:9.2e} du {:9.2e} mu {:8.1e} apr {:8.1e} nu {:8.1e} dx {:7.1e}",
                    r.iter, r.objective, r.inf_pr, r.inf_du, r.mu, r.alpha_pr, r.nu, r.delta_x);
            }
        }
        let s = extract_solution(&tr, sol);
        warm = Some(s);
        let _ = tr.num_vars();
    }
}
