//! Finite-difference gate for user-provided derivatives.

use crate::NlpProblem;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivKind {
    Gradient,
    Jacobian,
}

#[derive(Debug, Clone)]
pub struct DerivCheckReport {
    pub max_rel_discrepancy: f64,
    pub worst_kind: DerivKind,
    /// `(row, col)` of the worst entry; row is 0 for the gradient.
    pub worst_entry: (usize, usize),
    pub columns_checked: usize,
}

/// Compare the provided Jacobian and objective gradient against central
/// finite differences (step `1e-6`, scaled by coordinate magnitude) over a
/// seeded random sample of columns. Returns the worst relative discrepancy.
///
/// The point is nudged into the strict interior of the variable bounds so
/// both stencil legs stay evaluable; fixed variables are skipped.
pub fn check_derivatives(
    problem: &dyn NlpProblem,
    x: &[f64],
    seed: u64,
    max_columns: usize,
) -> DerivCheckReport {
    let n = problem.num_vars();
    let m = problem.num_cons();
    let mut xl = vec![f64::NEG_INFINITY; n];
    let mut xu = vec![f64::INFINITY; n];
    problem.var_bounds(&mut xl, &mut xu);

    let mut x = x.to_vec();
    let base_h = 1e-6;
    for i in 0..n {
        let h = base_h * x[i].abs().max(1.0);
        if xl[i].is_finite() && xu[i].is_finite() {
            if xu[i] - xl[i] > 4.0 * h {
                x[i] = x[i].clamp(xl[i] + 2.0 * h, xu[i] - 2.0 * h);
            }
        } else if xl[i].is_finite() {
            x[i] = x[i].max(xl[i] + 2.0 * h);
        } else if xu[i].is_finite() {
            x[i] = x[i].min(xu[i] - 2.0 * h);
        }
    }

    let structure = problem.jac_structure();
    let mut jac = vec![0.0; structure.len()];
    problem.jacobian(&x, &mut jac);
    let mut grad = vec![0.0; n];
    problem.gradient(&x, &mut grad);

    // Dense views per column for comparison.
    let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, &(r, c)) in structure.iter().enumerate() {
        col_entries[c].push((r, jac[k]));
    }

    let candidates: Vec<usize> = (0..n)
        .filter(|&i| xu[i] - xl[i] > 1e-12 * xl[i].abs().max(1.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = candidates;
    cols.shuffle(&mut rng);
    cols.truncate(max_columns.max(1));
    cols.sort_unstable();

    let mut worst = 0.0f64;
    let mut worst_kind = DerivKind::Gradient;
    let mut worst_entry = (0usize, 0usize);
    let mut cp = vec![0.0; m];
    let mut cm = vec![0.0; m];
    let mut fd_col = vec![0.0; m];

    for &j in &cols {
        let h = base_h * x[j].abs().max(1.0);
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        problem.constraints(&xp, &mut cp);
        problem.constraints(&xm, &mut cm);
        for r in 0..m {
            fd_col[r] = (cp[r] - cm[r]) / (2.0 * h);
        }
        // Provided column (zeros where no structure entry exists).
        let mut provided = vec![0.0; m];
        for &(r, v) in &col_entries[j] {
            provided[r] += v;
        }
        for r in 0..m {
            let denom = provided[r].abs().max(fd_col[r].abs()).max(1.0);
            let rel = (provided[r] - fd_col[r]).abs() / denom;
            if rel > worst {
                worst = rel;
                worst_kind = DerivKind::Jacobian;
                worst_entry = (r, j);
            }
        }
        let fp = problem.objective(&xp);
        let fm = problem.objective(&xm);
        let fd_g = (fp - fm) / (2.0 * h);
        let denom = grad[j].abs().max(fd_g.abs()).max(1.0);
        let rel = (grad[j] - fd_g).abs() / denom;
        if rel > worst {
            worst = rel;
            worst_kind = DerivKind::Gradient;
            worst_entry = (0, j);
        }
    }

    DerivCheckReport {
        max_rel_discrepancy: worst,
        worst_kind,
        worst_entry,
        columns_checked: cols.len(),
    }
}
