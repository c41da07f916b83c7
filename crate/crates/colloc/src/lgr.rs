//! Legendre-Gauss-Radau quadrature rules and differentiation matrices.
//!
//! The collocation points of order `n` are the `n` roots of
//! `P_{n-1} + P_n` on `[-1, 1)`, which include the left endpoint. States are
//! supported on the collocation points plus the non-collocated right
//! endpoint `+1`; the differentiation matrix maps the `n + 1` support values
//! to exact derivatives of degree-`n` polynomials at the collocation points.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LgrError {
    #[error("collocation order {0} outside supported range [2, 16]")]
    OrderOutOfRange(usize),
    #[error("root search failed for order {0}")]
    RootSearch(usize),
}

#[derive(Debug, Clone)]
pub struct LgrRule {
    pub order: usize,
    /// Collocation nodes, strictly increasing, `nodes[0] = -1`.
    pub nodes: Vec<f64>,
    /// Quadrature weights; positive, summing to 2.
    pub weights: Vec<f64>,
    /// Nodes plus the right endpoint `+1`.
    pub support: Vec<f64>,
    /// `order x (order + 1)` differentiation matrix on the support points.
    pub diff: Vec<Vec<f64>>,
}

/// Legendre values `(P_{n-1}(x), P_n(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (0.0, p0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p0, p1)
}

/// Radau polynomial `g = P_{n-1} + P_n` and its derivative.
fn radau_poly(n: usize, x: f64) -> (f64, f64) {
    let (pm, pn) = legendre_pair(n, x);
    let g = pm + pn;
    // P'_n = n (x P_n - P_{n-1}) / (x^2 - 1); combine for g'.
    let denom = x * x - 1.0;
    let dpn = (n as f64) * (x * pn - pm) / denom;
    let (pm2, _) = legendre_pair(n - 1, x);
    let dpm = ((n - 1) as f64) * (x * pm - pm2) / denom;
    (g, dpm + dpn)
}

pub fn lgr_rule(order: usize) -> Result<LgrRule, LgrError> {
    if !(2..=16).contains(&order) {
        return Err(LgrError::OrderOutOfRange(order));
    }
    let n = order;

    // Interior roots of g on (-1, 1): scan a Chebyshev-spaced grid for sign
    // changes (dense near the endpoints, matching the node clustering), then
    // polish with safeguarded Newton.
    let m = 200 * n;
    let grid: Vec<f64> = (0..=m)
        .map(|j| -(std::f64::consts::PI * j as f64 / m as f64).cos())
        .collect();
    let eps = 1e-9;
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid.iter() {
        if x <= -1.0 + eps || x >= 1.0 - 1e-14 {
            continue;
        }
        let (g, _) = radau_poly(n, x);
        if let Some((xp, gp)) = prev {
            if gp == 0.0 {
                brackets.push((xp, xp));
            } else if g.signum() != gp.signum() {
                brackets.push((xp, x));
            }
        }
        prev = Some((x, g));
    }
    if brackets.len() != n - 1 {
        return Err(LgrError::RootSearch(n));
    }

    let mut nodes = vec![-1.0];
    for &(mut lo, mut hi) in &brackets {
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (g, dg) = radau_poly(n, x);
            if g == 0.0 {
                break;
            }
            let step = g / dg;
            let xn = x - step;
            if xn > lo && xn < hi && step.is_finite() {
                if g.signum() == radau_poly(n, lo).0.signum() {
                    lo = x;
                } else {
                    hi = x;
                }
                if (xn - x).abs() < 1e-16 {
                    x = xn;
                    break;
                }
                x = xn;
            } else {
                // Bisection fallback.
                if g.signum() == radau_poly(n, lo).0.signum() {
                    lo = x;
                } else {
                    hi = x;
                }
                x = 0.5 * (lo + hi);
            }
        }
        nodes.push(x);
    }

    // w_i = (1 - tau_i) / (n^2 P_{n-1}(tau_i)^2); at tau = -1 this is 2/n^2.
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            let (pm, _) = legendre_pair(n, t);
            (1.0 - t) / ((n * n) as f64 * pm * pm)
        })
        .collect();

    let mut support = nodes.clone();
    support.push(1.0);
    let diff = differentiation_matrix(&support, n);

    Ok(LgrRule {
        order,
        nodes,
        weights,
        support,
        diff,
    })
}

/// Lagrange differentiation matrix: rows are the first `rows` support
/// points, columns all support points.
fn differentiation_matrix(support: &[f64], rows: usize) -> Vec<Vec<f64>> {
    let m = support.len();
    let mut bary = vec![1.0f64; m];
    for j in 0..m {
        for k in 0..m {
            if k != j {
                bary[j] *= support[j] - support[k];
            }
        }
        bary[j] = 1.0 / bary[j];
    }
    let mut d = vec![vec![0.0; m]; rows];
    for i in 0..rows {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                let v = (bary[j] / bary[i]) / (support[i] - support[j]);
                d[i][j] = v;
                diag -= v;
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Interpolation helpers shared by error estimation and dense sampling.
pub mod interp {
    /// Barycentric weights for the given nodes.
    pub fn bary_weights(nodes: &[f64]) -> Vec<f64> {
        let m = nodes.len();
        let mut w = vec![1.0f64; m];
        for j in 0..m {
            for k in 0..m {
                if k != j {
                    w[j] *= nodes[j] - nodes[k];
                }
            }
            w[j] = 1.0 / w[j];
        }
        w
    }

    /// Evaluate the interpolating polynomial at `tau`.
    pub fn eval(nodes: &[f64], weights: &[f64], values: &[f64], tau: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &w), &v) in nodes.iter().zip(weights).zip(values) {
            let d = tau - x;
            if d.abs() < 1e-14 {
                return v;
            }
            let c = w / d;
            num += c * v;
            den += c;
        }
        num / den
    }

    /// Derivative of the interpolating polynomial at `tau` (off-node).
    pub fn eval_derivative(nodes: &[f64], weights: &[f64], values: &[f64], tau: f64) -> f64 {
        // l_j'(tau) = l_j(tau) * sum_{k != j} 1/(tau - x_k); safe off nodes.
        let m = nodes.len();
        let mut ell = vec![0.0f64; m];
        let mut den = 0.0;
        for j in 0..m {
            let d = tau - nodes[j];
            if d.abs() < 1e-13 {
                // Nudge off the node; callers only use inter-node points.
                return eval_derivative(nodes, weights, values, tau + 3e-13);
            }
            ell[j] = weights[j] / d;
            den += ell[j];
        }
        let total: f64 = (0..m).map(|j| ell[j] / den).zip(values).map(|(l, &v)| l * v).sum::<f64>();
        let mut deriv = 0.0;
        let sum_inv: Vec<f64> = (0..m).map(|j| 1.0 / (tau - nodes[j])).collect();
        let s_all: f64 = sum_inv.iter().sum();
        for j in 0..m {
            let lj = ell[j] / den;
            deriv += values[j] * lj * (s_all - sum_inv[j]);
        }
        let _ = total;
        deriv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_rule_is_exact() {
        let r = lgr_rule(2).unwrap();
        assert!((r.nodes[0] + 1.0).abs() < 1e-15);
        assert!((r.nodes[1] - 1.0 / 3.0).abs() < 1e-13);
        assert!((r.weights[0] - 0.5).abs() < 1e-13);
        assert!((r.weights[1] - 1.5).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_two_and_kill_odd_monomial() {
        for n in 2..=16 {
            let r = lgr_rule(n).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n}: sum {s}");
            let m1: f64 = r.weights.iter().zip(&r.nodes).map(|(w, t)| w * t).sum();
            assert!(m1.abs() < 1e-13, "n={n}: first moment {m1}");
        }
    }

    #[test]
    fn quadrature_exact_to_degree_2n_minus_2() {
        for n in 2..=16usize {
            let r = lgr_rule(n).unwrap();
            for deg in 0..=(2 * n - 2) {
                let q: f64 = r
                    .weights
                    .iter()
                    .zip(&r.nodes)
                    .map(|(w, t)| w * t.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!(
                    (q - exact).abs() < 1e-12,
                    "n={n} deg={deg}: {q} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn differentiation_exact_to_degree_n() {
        for n in 2..=16usize {
            let r = lgr_rule(n).unwrap();
            for deg in 0..=n {
                for (i, &tau) in r.nodes.iter().enumerate() {
                    let d: f64 = (0..=n)
                        .map(|j| r.diff[i][j] * r.support[j].powi(deg as i32))
                        .sum();
                    let exact = if deg == 0 {
                        0.0
                    } else {
                        deg as f64 * tau.powi(deg as i32 - 1)
                    };
                    assert!(
                        (d - exact).abs() < 1e-10,
                        "n={n} deg={deg} node {i}: {d} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range_order() {
        assert!(lgr_rule(1).is_err());
        assert!(lgr_rule(17).is_err());
    }
}
