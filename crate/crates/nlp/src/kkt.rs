//! Standalone KKT residual evaluation for reporting and testing.

use crate::NlpProblem;

/// Scaled KKT residuals: stationarity, primal feasibility, complementarity.
#[derive(Debug, Clone, Copy, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }
}

/// Evaluate the scaled KKT residuals at `(x, y, z_lower, z_upper)`.
///
/// Constraint multipliers follow the `f + y^T c` convention: `y >= 0` for an
/// active upper constraint bound, `y <= 0` for an active lower one. For
/// inequality rows complementarity is measured as multiplier times distance
/// to the bound the multiplier sign selects. The dual and complementarity
/// norms carry the multiplier-scaling safeguard so large multipliers do not
/// mask convergence.
pub fn kkt_residuals(
    problem: &dyn NlpProblem,
    x: &[f64],
    y: &[f64],
    z_lower: &[f64],
    z_upper: &[f64],
) -> KktResiduals {
    let n = problem.num_vars();
    let m = problem.num_cons();
    let mut xl = vec![f64::NEG_INFINITY; n];
    let mut xu = vec![f64::INFINITY; n];
    let mut cl = vec![0.0; m];
    let mut cu = vec![0.0; m];
    problem.var_bounds(&mut xl, &mut xu);
    problem.con_bounds(&mut cl, &mut cu);

    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    let mut c = vec![0.0; m];
    problem.constraints(x, &mut c);
    let structure = problem.jac_structure();
    let mut jac = vec![0.0; structure.len()];
    problem.jacobian(x, &mut jac);

    let fixed: Vec<bool> = (0..n)
        .map(|i| xu[i] - xl[i] <= 1e-14 * xl[i].abs().max(1.0))
        .collect();

    // Stationarity over free variables.
    let mut r = grad;
    for (k, &(row, col)) in structure.iter().enumerate() {
        r[col] += jac[k] * y[row];
    }
    for i in 0..n {
        if xl[i].is_finite() {
            r[i] -= z_lower[i];
        }
        if xu[i].is_finite() {
            r[i] += z_upper[i];
        }
    }
    let stationarity_raw = (0..n)
        .filter(|&i| !fixed[i])
        .fold(0.0f64, |a, i| a.max(r[i].abs()));

    // Feasibility: violations of constraint and variable bounds.
    let mut feasibility = 0.0f64;
    for rix in 0..m {
        feasibility = feasibility
            .max(cl[rix] - c[rix])
            .max(c[rix] - cu[rix]);
    }
    for i in 0..n {
        feasibility = feasibility.max(xl[i] - x[i]).max(x[i] - xu[i]);
    }
    feasibility = feasibility.max(0.0);

    // Complementarity at mu = 0.
    let mut comp = 0.0f64;
    let mut zsum = 0.0;
    let mut zcount = 0usize;
    for i in 0..n {
        if fixed[i] {
            continue;
        }
        if xl[i].is_finite() {
            comp = comp.max(((x[i] - xl[i]) * z_lower[i]).abs());
            zsum += z_lower[i].abs();
            zcount += 1;
        }
        if xu[i].is_finite() {
            comp = comp.max(((xu[i] - x[i]) * z_upper[i]).abs());
            zsum += z_upper[i].abs();
            zcount += 1;
        }
    }
    for rix in 0..m {
        if cu[rix] - cl[rix] > 0.0 {
            // Multiplier sign selects the side it presses against.
            if y[rix] > 0.0 && cu[rix].is_finite() {
                comp = comp.max((y[rix] * (cu[rix] - c[rix])).abs());
            }
            if y[rix] < 0.0 && cl[rix].is_finite() {
                comp = comp.max((y[rix] * (c[rix] - cl[rix])).abs());
            }
            zsum += y[rix].abs();
            zcount += 1;
        }
    }

    let ysum: f64 = y.iter().map(|v| v.abs()).sum();
    let sd = ((ysum + zsum) / ((m + zcount).max(1) as f64)).max(100.0) / 100.0;
    let sc = (zsum / (zcount.max(1) as f64)).max(100.0) / 100.0;

    KktResiduals {
        stationarity: stationarity_raw / sd,
        feasibility,
        complementarity: comp / sc,
    }
}
