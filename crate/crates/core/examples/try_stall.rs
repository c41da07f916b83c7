use rejoin_core::formation::{build_problem, ScenarioConfig};
use rejoin_core::guess::{to_mesh_guess, track_point_guess, RingTarget};
use rejoin_core::leader::{LeaderSpec, SpiralParams};
use rejoin_colloc::{extract_solution, initial_from_solution, Transcription};
use rejoin_nlp::ipm::{solve, SolveOptions};
use rejoin_nlp::NlpProblem;

fn main() {
    let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
    let ocp = build_problem(&cfg).unwrap();
    let guess = track_point_guess(&cfg, &ocp.leader, RingTarget::RightWing).unwrap();
    let opts = SolveOptions { tol: 1e-5, max_iter: 1500, mu_init: 0.1 };
    let mut warm = None;
    for w in [1e-4f64, 1e-3, 1e-2] {
        let soft = ocp.with_deviation_weight(w);
        let tr = Transcription::new(&soft, cfg.initial_mesh()).unwrap();
        let x0 = match &warm {
            None => to_mesh_guess(&tr, &guess),
            Some(prev) => initial_from_solution(&tr, prev),
        };
        let sol = solve(&tr, &x0, &opts).unwrap();
        println!("w={w:.0e}: {:?} iters {} kkt=({:.1e},{:.1e},{:.1e})", sol.status, sol.iterations, sol.kkt.stationarity, sol.kkt.feasibility, sol.kkt.complementarity);
        if w == 1e-2 {
            // dual residual by hand
            let n = tr.num_vars();
            let mut grad = vec![0.0; n];
            tr.gradient(&sol.x, &mut grad);
            let js = tr.jac_structure();
            let mut jv = vec![0.0; js.len()];
            tr.jacobian(&sol.x, &mut jv);
            let mut r = grad.clone();
            for (k, &(row, col)) in js.iter().enumerate() {
                r[col] += jv[k] * sol.y[row];
            }
            for i in 0..n {
                r[i] -= sol.z_lower[i];
                r[i] += sol.z_upper[i];
            }
            let mut xl = vec![f64::NEG_INFINITY; n];
            let mut xu = vec![f64::INFINITY; n];
            tr.var_bounds(&mut xl, &mut xu);
            let mut idx: Vec<usize> = (0..n)
                .filter(|&i| xu[i] - xl[i] > 1e-14 * xl[i].abs().max(1.0))
                .collect();
            idx.sort_by(|&a, &b| r[b].abs().total_cmp(&r[a].abs()));
            println!("worst dual-residual vars:");
            let ph0 = &tr.phases[0];
            let ph1 = &tr.phases[1];
            for &i in idx.iter().take(8) {
                let desc = if i >= ph1.state_offset && i < ph1.ctrl_offset {
                    let s = (i - ph1.state_offset) / 9; let d = (i - ph1.state_offset) % 9;
                    format!("phase2 state sup{} dim{}", s, d)
                } else if i >= ph1.ctrl_offset && i < n - 3 {
                    let c = (i - ph1.ctrl_offset) / 3; let d = (i - ph1.ctrl_offset) % 3;
                    format!("phase2 ctrl pt{} dim{}", c, d)
                } else if i < ph0.ctrl_offset {
                    let s = (i - ph0.state_offset) / 9; let d = (i - ph0.state_offset) % 9;
                    format!("phase1 state sup{} dim{}", s, d)
                } else if i >= n - 3 {
                    format!("time var {}", i - (n - 3))
                } else {
                    let c = (i - ph0.ctrl_offset) / 3; let d = (i - ph0.ctrl_offset) % 3;
                    format!("phase1 ctrl pt{} dim{}", c, d)
                };
                println!("  r[{i}] = {:+.3e}  ({desc})  x={:.4} zl={:.2e} zu={:.2e}", r[i], sol.x[i], sol.z_lower[i], sol.z_upper[i]);
            }
        }
        let tr2 = Transcription::new(&soft, cfg.initial_mesh()).unwrap();
        let _ = tr2;
        warm = Some(extract_solution(&tr, sol));
    }
}
