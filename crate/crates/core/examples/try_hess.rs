use rejoin_core::formation::{build_problem, ScenarioConfig};
use rejoin_core::guess::{to_mesh_guess, track_point_guess, RingTarget};
use rejoin_core::leader::{LeaderSpec, SpiralParams};
use rejoin_colloc::{Mesh, Transcription};
use rejoin_nlp::NlpProblem;

fn main() {
    let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
    let ocp = build_problem(&cfg).unwrap();
    let guess = track_point_guess(&cfg, &ocp.leader, RingTarget::RightWing).unwrap();
    let tr = Transcription::new(&ocp, Mesh::uniform(2, 3, 3)).unwrap();
    let n = tr.num_vars();
    let m = tr.num_rows();
    let mut x = to_mesh_guess(&tr, &guess);
    // keep strictly interior & wiggled
    for (i, v) in x.iter_mut().enumerate() {
        *v += 1e-3 * ((i as f64) * 1.7).sin();
    }
    // random-ish multipliers
    let lambda: Vec<f64> = (0..m).map(|r| ((r as f64) * 0.37).sin()).collect();
    let sigma = 0.7;
    let structure = tr.hess_structure();
    let mut hvals = vec![0.0; structure.len()];
    tr.hessian(&x, sigma, &lambda, &mut hvals);
    // dense lower-tri H, mirrored
    let mut h = vec![vec![0.0; n]; n];
    for (k, &(i, j)) in structure.iter().enumerate() {
        h[i][j] += hvals[k];
        if i != j {
            h[j][i] += hvals[k];
        }
    }
    // FD of the Lagrangian gradient: L = sigma f + lambda' c
    let eps = 1e-6;
    let lag_grad = |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        tr.gradient(x, &mut g);
        for gi in g.iter_mut() {
            *gi *= sigma;
        }
        let js = tr.jac_structure();
        let mut jv = vec![0.0; js.len()];
        tr.jacobian(x, &mut jv);
        for (k, &(r, c)) in js.iter().enumerate() {
            g[c] += lambda[r] * jv[k];
        }
        g
    };
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0);
    for j in 0..n {
        let h_j = eps * x[j].abs().max(1.0);
        let mut xp = x.clone();
        xp[j] += h_j;
        let mut xm = x.clone();
        xm[j] -= h_j;
        let gp = lag_grad(&xp);
        let gm = lag_grad(&xm);
        for i in 0..n {
            let fd = (gp[i] - gm[i]) / (2.0 * h_j);
            let denom = h[i][j].abs().max(fd.abs()).max(1.0);
            let rel = (h[i][j] - fd).abs() / denom;
            if rel > worst {
                worst = rel;
                worst_at = (i, j);
            }
        }
    }
    println!("worst Hessian mismatch: {:.3e} at {:?} (H={:.6e})", worst, worst_at, h[worst_at.0][worst_at.1]);
}
