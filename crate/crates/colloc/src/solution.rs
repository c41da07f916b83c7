//! Collocated solutions: extraction from the NLP primal vector,
//! polynomial interpolation, and dense sampling.

use crate::lgr::interp;
use crate::ocp::{Mesh, Ocp};
use crate::transcribe::{TimeRef, Transcription};

#[derive(Debug, Clone)]
pub struct IntervalSol {
    pub t_start: f64,
    pub t_end: f64,
    pub order: usize,
    /// First collocation point of the interval (phase-local).
    pub start_point: usize,
    pub node_taus: Vec<f64>,
    pub support_taus: Vec<f64>,
    /// Differentiation-matrix column at the right endpoint, used by the
    /// phase-end costate relation.
    pub end_diff_col: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub nx: usize,
    pub nu: usize,
    pub t0: f64,
    pub tf: f64,
    pub colloc_times: Vec<f64>,
    pub support_times: Vec<f64>,
    /// States at support points, scaled units, `[support][dim]`.
    pub states: Vec<Vec<f64>>,
    /// Controls at collocation points, scaled units, `[point][dim]`.
    pub controls: Vec<Vec<f64>>,
    /// Control interpolated to the non-collocated phase end.
    pub control_end: Vec<f64>,
    /// LGR quadrature weight of each collocation point.
    pub weights: Vec<f64>,
    pub interval_of_point: Vec<usize>,
    /// Defect-constraint multipliers, `[point][dim]`.
    pub defect_multipliers: Vec<Vec<f64>>,
    pub intervals: Vec<IntervalSol>,
    /// Multiplicative factors from scaled to physical units.
    pub state_scale: Vec<f64>,
    pub control_scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CollocatedSolution {
    pub mesh: Mesh,
    pub phases: Vec<PhaseSolution>,
    pub objective: f64,
    pub nlp: rejoin_nlp::Solution,
}

impl PhaseSolution {
    fn interval_at(&self, t: f64) -> usize {
        let mut k = self
            .intervals
            .partition_point(|iv| iv.t_end < t - 1e-12);
        if k >= self.intervals.len() {
            k = self.intervals.len() - 1;
        }
        k
    }

    fn local_tau(&self, k: usize, t: f64) -> f64 {
        let iv = &self.intervals[k];
        let w = iv.t_end - iv.t_start;
        (2.0 * (t - iv.t_start) / w - 1.0).clamp(-1.0, 1.0)
    }

    /// State at time `t` (scaled units) by per-interval polynomial
    /// interpolation over the support points.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let k = self.interval_at(t);
        let iv = &self.intervals[k];
        let tau = self.local_tau(k, t);
        let bw = interp::bary_weights(&iv.support_taus);
        let n = iv.order;
        (0..self.nx)
            .map(|d| {
                let vals: Vec<f64> = (0..=n)
                    .map(|j| self.states[iv.start_point + j][d])
                    .collect();
                interp::eval(&iv.support_taus, &bw, &vals, tau)
            })
            .collect()
    }

    /// Control at time `t` (scaled units), degree `N - 1` interpolation over
    /// the collocation nodes; extrapolates to the non-collocated endpoint.
    pub fn control_at(&self, t: f64) -> Vec<f64> {
        let k = self.interval_at(t);
        let iv = &self.intervals[k];
        let tau = self.local_tau(k, t);
        let bw = interp::bary_weights(&iv.node_taus);
        let n = iv.order;
        (0..self.nu)
            .map(|d| {
                let vals: Vec<f64> = (0..n)
                    .map(|j| self.controls[iv.start_point + j][d])
                    .collect();
                interp::eval(&iv.node_taus, &bw, &vals, tau)
            })
            .collect()
    }

    /// Dense sample times: collocation points plus `extra` equispaced points
    /// per interval, sorted and deduplicated.
    pub fn dense_times(&self, extra: usize) -> Vec<f64> {
        let mut ts: Vec<f64> = self.colloc_times.clone();
        ts.push(self.tf);
        for iv in &self.intervals {
            for j in 1..=extra {
                let f = j as f64 / (extra as f64 + 1.0);
                ts.push(iv.t_start + f * (iv.t_end - iv.t_start));
            }
        }
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ts
    }
}

/// Extract a structured solution from the NLP primal/dual vectors.
pub fn extract_solution<O: Ocp>(
    tr: &Transcription<'_, O>,
    nlp: rejoin_nlp::Solution,
) -> CollocatedSolution {
    let x = &nlp.x;
    let mut phases = Vec::new();
    for (p, ph) in tr.phases.iter().enumerate() {
        let (t0r, tfr) = tr.time_refs(p);
        let t0 = tr.time_value(x, t0r);
        let tf = tr.time_value(x, tfr);
        let span = tf - t0;
        let sigma_support = tr.sigma_support(p);
        let support_times: Vec<f64> = sigma_support.iter().map(|s| t0 + s * span).collect();
        let colloc_times: Vec<f64> = ph.sigma_colloc.iter().map(|s| t0 + s * span).collect();
        let states: Vec<Vec<f64>> = (0..ph.n_support)
            .map(|s| (0..ph.nx).map(|d| x[tr.state_index(p, s, d)]).collect())
            .collect();
        let controls: Vec<Vec<f64>> = (0..ph.n_colloc)
            .map(|c| (0..ph.nu).map(|d| x[tr.control_index(p, c, d)]).collect())
            .collect();
        let defect_multipliers: Vec<Vec<f64>> = (0..ph.n_colloc)
            .map(|c| {
                (0..ph.nx)
                    .map(|d| nlp.y[tr.defect_row_index(p, c, d)])
                    .collect()
            })
            .collect();
        let weights: Vec<f64> = (0..ph.n_colloc)
            .map(|c| {
                let iv = &ph.intervals[ph.point_interval[c]];
                tr.rule(iv.order).weights[c - iv.start_point]
            })
            .collect();
        let intervals: Vec<IntervalSol> = ph
            .intervals
            .iter()
            .map(|iv| {
                let rule = tr.rule(iv.order);
                IntervalSol {
                    t_start: t0 + iv.alpha * span,
                    t_end: t0 + (iv.alpha + iv.fraction) * span,
                    order: iv.order,
                    start_point: iv.start_point,
                    node_taus: rule.nodes.clone(),
                    support_taus: rule.support.clone(),
                    end_diff_col: rule.diff.iter().map(|row| row[iv.order]).collect(),
                }
            })
            .collect();
        // Extrapolate the control polynomial of the last interval to tau = 1.
        let control_end: Vec<f64> = {
            let iv = intervals.last().unwrap();
            let bw = interp::bary_weights(&iv.node_taus);
            (0..ph.nu)
                .map(|d| {
                    let vals: Vec<f64> = (0..iv.order)
                        .map(|j| controls[iv.start_point + j][d])
                        .collect();
                    interp::eval(&iv.node_taus, &bw, &vals, 1.0)
                })
                .collect()
        };
        phases.push(PhaseSolution {
            nx: ph.nx,
            nu: ph.nu,
            t0,
            tf,
            colloc_times,
            support_times,
            states,
            controls,
            control_end,
            weights,
            interval_of_point: ph.point_interval.clone(),
            defect_multipliers,
            intervals,
            state_scale: tr.ocp.state_scale(p),
            control_scale: tr.ocp.control_scale(p),
        });
    }
    CollocatedSolution {
        mesh: tr.mesh.clone(),
        phases,
        objective: nlp.objective,
        nlp,
    }
}

/// Build an NLP starting point for `tr` by interpolating a previous
/// solution (used across mesh-refinement iterations).
pub fn initial_from_solution<O: Ocp>(tr: &Transcription<'_, O>, prev: &CollocatedSolution) -> Vec<f64> {
    let (xl, xu) = tr.var_bounds_ref();
    let mut x = vec![0.0; tr.num_vars()];
    for (p, ph) in tr.phases.iter().enumerate() {
        let prev_ph = &prev.phases[p];
        let (t0r, tfr) = tr.time_refs(p);
        if let TimeRef::Var(i) = t0r {
            x[i] = prev_ph.t0.clamp(xl[i], xu[i]);
        }
        if let TimeRef::Var(i) = tfr {
            x[i] = prev_ph.tf.clamp(xl[i], xu[i]);
        }
        let t0 = prev_ph.t0;
        let span = prev_ph.tf - prev_ph.t0;
        for (s, sig) in tr.sigma_support(p).iter().enumerate() {
            let t = t0 + sig * span;
            let xs = prev_ph.state_at(t);
            for d in 0..ph.nx {
                let g = tr.state_index(p, s, d);
                x[g] = xs[d].clamp(xl[g], xu[g]);
            }
        }
        for (c, sig) in ph.sigma_colloc.iter().enumerate() {
            let t = t0 + sig * span;
            let us = prev_ph.control_at(t);
            for d in 0..ph.nu {
                let g = tr.control_index(p, c, d);
                x[g] = us[d].clamp(xl[g], xu[g]);
            }
        }
    }
    x
}
