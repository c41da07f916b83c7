//! Line-search primal-dual interior-point iteration.

use crate::sparse::{
    invert_permutation, ldl_numeric, ldl_symbolic, rcm_ordering, LdlSymbolic, SymCsc, SymTriplets,
};
use crate::{NlpError, NlpProblem};

const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const TAU_MIN: f64 = 0.99;
const S_MAX: f64 = 100.0;
const KAPPA_SIGMA: f64 = 1e10;
const ETA_ARMIJO: f64 = 1e-4;
const RHO_NU: f64 = 0.1;
const ALPHA_MIN: f64 = 1e-11;
const BOUND_PUSH: f64 = 1e-2;
const PIVOT_ZERO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// All scaled KKT residuals at or below the requested tolerance.
    Converged,
    IterationLimit,
    /// The feasibility restoration fallback could not make progress.
    RestorationFailure,
    /// Factorization or function evaluations broke down irrecoverably.
    NumericalError,
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::RestorationFailure => "restoration-failure",
            SolveStatus::NumericalError => "numerical-error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Convergence tolerance on the scaled KKT residuals.
    pub tol: f64,
    pub max_iter: usize,
    pub mu_init: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-5,
            max_iter: 3000,
            mu_init: 0.1,
        }
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub inf_pr: f64,
    pub inf_du: f64,
    pub mu: f64,
    pub alpha_pr: f64,
    pub alpha_du: f64,
    /// Merit function value before/after the accepted step, under the
    /// barrier and penalty parameters current at this iteration.
    pub merit_pre: f64,
    pub merit_post: f64,
    pub nu: f64,
    pub delta_x: f64,
}

/// Text form of the iteration log; one line per iteration.
pub fn format_iteration_log(records: &[IterRecord]) -> String {
    let mut out = String::from(
        "# iter objective inf_pr inf_du mu alpha_pr alpha_du merit_pre merit_post nu delta_x\n",
    );
    for r in records {
        out.push_str(&format!(
            "{} {:.11e} {:.5e} {:.5e} {:.3e} {:.3e} {:.3e} {:.11e} {:.11e} {:.3e} {:.1e}\n",
            r.iter,
            r.objective,
            r.inf_pr,
            r.inf_du,
            r.mu,
            r.alpha_pr,
            r.alpha_du,
            r.merit_pre,
            r.merit_post,
            r.nu,
            r.delta_x
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Constraint multipliers (Lagrangian `f + y^T c`).
    pub y: Vec<f64>,
    /// Lower/upper bound multipliers, both nonnegative.
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub kkt: crate::kkt::KktResiduals,
    pub iterations: usize,
    /// Set when the supplied starting point violated its bounds.
    pub clamped_start: bool,
    /// Provenance of second derivatives, recorded for the report.
    pub hessian_mode: &'static str,
    pub log: Vec<IterRecord>,
}

struct Bounds {
    xl: Vec<f64>,
    xu: Vec<f64>,
    cl: Vec<f64>,
    cu: Vec<f64>,
}

/// Index bookkeeping that is fixed across iterations.
struct Layout {
    n: usize,
    m: usize,
    free: Vec<usize>,
    free_of_var: Vec<Option<usize>>,
    /// Inequality rows (cl < cu) in row order; `slack_of_row[r]` indexes them.
    ineq: Vec<usize>,
    slack_of_row: Vec<Option<usize>>,
    jac_structure: Vec<(usize, usize)>,
    hess_structure: Vec<(usize, usize)>,
}

impl Layout {
    fn is_fixed(xl: f64, xu: f64) -> bool {
        xu - xl <= 0.0 || (xu - xl) <= 1e-14 * xl.abs().max(1.0)
    }

    fn new(p: &dyn NlpProblem, b: &Bounds) -> Layout {
        let n = p.num_vars();
        let m = p.num_cons();
        let mut free = Vec::new();
        let mut free_of_var = vec![None; n];
        for i in 0..n {
            if !Self::is_fixed(b.xl[i], b.xu[i]) {
                free_of_var[i] = Some(free.len());
                free.push(i);
            }
        }
        let mut ineq = Vec::new();
        let mut slack_of_row = vec![None; m];
        for r in 0..m {
            if b.cu[r] - b.cl[r] > 0.0 {
                slack_of_row[r] = Some(ineq.len());
                ineq.push(r);
            }
        }
        Layout {
            n,
            m,
            free,
            free_of_var,
            ineq,
            slack_of_row,
            jac_structure: p.jac_structure(),
            hess_structure: p.hess_structure(),
        }
    }
}

/// KKT matrix assembly with a fixed symbolic factorization.
struct KktSystem {
    dim: usize,
    nf: usize,
    hess_slots: Vec<Option<usize>>, // per hess structure entry
    sigma_slots: Vec<usize>,        // per free var
    jac_slots: Vec<Option<usize>>,  // per jac structure entry
    con_diag_slots: Vec<usize>,     // per constraint row
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    csc: SymCsc,
    symbolic: LdlSymbolic,
    entry_vals: Vec<f64>,
    merged_vals: Vec<f64>,
    /// Symmetric Ruiz equilibration of the permuted matrix.
    equil: Vec<f64>,
    scaled_vals: Vec<f64>,
}

impl KktSystem {
    fn new(layout: &Layout) -> KktSystem {
        let nf = layout.free.len();
        let dim = nf + layout.m;
        let mut triplets = SymTriplets::new(dim);
        let mut hess_slots = Vec::with_capacity(layout.hess_structure.len());
        for &(i, j) in &layout.hess_structure {
            match (layout.free_of_var[i], layout.free_of_var[j]) {
                (Some(fi), Some(fj)) => hess_slots.push(Some(triplets.push(fj, fi))),
                _ => hess_slots.push(None),
            }
        }
        let sigma_slots: Vec<usize> = (0..nf).map(|f| triplets.push(f, f)).collect();
        let mut jac_slots = Vec::with_capacity(layout.jac_structure.len());
        for &(r, c) in &layout.jac_structure {
            match layout.free_of_var[c] {
                Some(fc) => jac_slots.push(Some(triplets.push(fc, nf + r))),
                None => jac_slots.push(None),
            }
        }
        let con_diag_slots: Vec<usize> = (0..layout.m).map(|r| triplets.push(nf + r, nf + r)).collect();
        let perm = rcm_ordering(&triplets);
        let inv_perm = invert_permutation(&perm);
        let csc = SymCsc::from_triplets(&triplets, &inv_perm);
        let symbolic = ldl_symbolic(&csc);
        let entry_vals = vec![0.0; triplets.len()];
        let merged_vals = vec![0.0; csc.nnz()];
        let scaled_vals = vec![0.0; csc.nnz()];
        KktSystem {
            dim,
            nf,
            hess_slots,
            sigma_slots,
            jac_slots,
            con_diag_slots,
            perm,
            inv_perm,
            csc,
            symbolic,
            entry_vals,
            merged_vals,
            equil: vec![1.0; dim],
            scaled_vals,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &mut self,
        hess_vals: &[f64],
        sigma_x: &[f64],
        jac_vals: &[f64],
        con_diag: &[f64],
        delta_x: f64,
        delta_c: f64,
    ) {
        for v in self.entry_vals.iter_mut() {
            *v = 0.0;
        }
        for (k, slot) in self.hess_slots.iter().enumerate() {
            if let Some(s) = slot {
                self.entry_vals[*s] += hess_vals[k];
            }
        }
        for (f, &s) in self.sigma_slots.iter().enumerate() {
            self.entry_vals[s] += sigma_x[f] + delta_x;
        }
        for (k, slot) in self.jac_slots.iter().enumerate() {
            if let Some(s) = slot {
                self.entry_vals[*s] += jac_vals[k];
            }
        }
        for (r, &s) in self.con_diag_slots.iter().enumerate() {
            self.entry_vals[s] += -(con_diag[r] + delta_c);
        }
        self.csc.fill_values(&self.entry_vals, &mut self.merged_vals);
    }

    /// Factor the assembled matrix after symmetric Ruiz equilibration;
    /// the inertia is invariant under the congruence.
    fn factor(&mut self) -> Option<crate::sparse::LdlFactors> {
        let dim = self.dim;
        for e in self.equil.iter_mut() {
            *e = 1.0;
        }
        // Two equilibration sweeps flatten the worst row norms.
        for _ in 0..2 {
            let mut norms = vec![0.0f64; dim];
            for c in 0..dim {
                for p in self.csc.col_ptr[c]..self.csc.col_ptr[c + 1] {
                    let r = self.csc.row_idx[p];
                    let v = (self.merged_vals[p] * self.equil[r] * self.equil[c]).abs();
                    norms[r] = norms[r].max(v);
                    norms[c] = norms[c].max(v);
                }
            }
            for (e, &n) in self.equil.iter_mut().zip(&norms) {
                if n > 0.0 && n.is_finite() {
                    *e /= n.sqrt();
                }
            }
        }
        for c in 0..dim {
            for p in self.csc.col_ptr[c]..self.csc.col_ptr[c + 1] {
                let r = self.csc.row_idx[p];
                self.scaled_vals[p] = self.merged_vals[p] * self.equil[r] * self.equil[c];
            }
        }
        ldl_numeric(&self.csc, &self.scaled_vals, &self.symbolic)
    }

    fn solve_refined(&self, factors: &crate::sparse::LdlFactors, rhs: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        // Permute and scale the right-hand side, solve, then undo both.
        let mut px = vec![0.0; dim];
        let solve_scaled = |b: &[f64], out: &mut Vec<f64>| {
            out.clear();
            out.extend((0..dim).map(|k| b[k] * self.equil[k]));
            factors.solve_in_place(out);
            for (o, &e) in out.iter_mut().zip(&self.equil) {
                *o *= e;
            }
        };
        let pb: Vec<f64> = (0..dim).map(|k| rhs[self.perm[k]]).collect();
        solve_scaled(&pb, &mut px);
        // Residual-controlled refinement against the unscaled matrix.
        let norm_b = pb.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
        let mut corr = Vec::new();
        for _ in 0..4 {
            let mut resid = vec![0.0; dim];
            self.csc.sym_mul_add(&self.merged_vals, &px, &mut resid);
            for k in 0..dim {
                resid[k] = pb[k] - resid[k];
            }
            let norm_r = resid.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if norm_r <= 1e-12 * norm_b {
                break;
            }
            solve_scaled(&resid, &mut corr);
            for k in 0..dim {
                px[k] += corr[k];
            }
        }
        (0..dim).map(|i| px[self.inv_perm[i]]).collect()
    }

    /// d^T (W + Sigma + delta I) d over the free variables.
    fn quad_form(&self, hess_vals: &[f64], sigma_x: &[f64], delta_x: f64, layout: &Layout, dx: &[f64]) -> f64 {
        let mut q = 0.0;
        for (k, &(i, j)) in layout.hess_structure.iter().enumerate() {
            if let (Some(fi), Some(fj)) = (layout.free_of_var[i], layout.free_of_var[j]) {
                let v = hess_vals[k];
                q += if fi == fj { v * dx[fi] * dx[fi] } else { 2.0 * v * dx[fi] * dx[fj] };
            }
        }
        for f in 0..self.nf {
            q += (sigma_x[f] + delta_x) * dx[f] * dx[f];
        }
        q
    }
}

/// Mutable iterate state.
struct State {
    x: Vec<f64>,
    s: Vec<f64>, // per inequality row
    y: Vec<f64>,
    zl: Vec<f64>, // per var, 0 when no finite lower bound or fixed
    zu: Vec<f64>,
    vl: Vec<f64>, // per inequality row
    vu: Vec<f64>,
}

fn push_interior(lo: f64, hi: f64, x: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let pl = (BOUND_PUSH * lo.abs().max(1.0)).min(BOUND_PUSH * (hi - lo));
            let pu = (BOUND_PUSH * hi.abs().max(1.0)).min(BOUND_PUSH * (hi - lo));
            x.clamp(lo + pl, hi - pu)
        }
        (true, false) => x.max(lo + BOUND_PUSH * lo.abs().max(1.0)),
        (false, true) => x.min(hi - BOUND_PUSH * hi.abs().max(1.0)),
        (false, false) => x,
    }
}

pub fn solve(problem: &dyn NlpProblem, x0: &[f64], opts: &SolveOptions) -> Result<Solution, NlpError> {
    let n = problem.num_vars();
    let m = problem.num_cons();
    if x0.len() != n {
        return Err(NlpError::Dimension(format!(
            "starting point has length {}, expected {}",
            x0.len(),
            n
        )));
    }
    let mut bounds = Bounds {
        xl: vec![f64::NEG_INFINITY; n],
        xu: vec![f64::INFINITY; n],
        cl: vec![0.0; m],
        cu: vec![0.0; m],
    };
    problem.var_bounds(&mut bounds.xl, &mut bounds.xu);
    problem.con_bounds(&mut bounds.cl, &mut bounds.cu);
    let layout = Layout::new(problem, &bounds);
    let nf = layout.free.len();

    // Starting point: clamp out-of-bounds components (flagged), then push
    // strictly inside so the barrier is finite.
    let mut clamped_start = false;
    let mut x = x0.to_vec();
    for i in 0..n {
        if layout.free_of_var[i].is_none() {
            x[i] = bounds.xl[i];
            continue;
        }
        if x[i] < bounds.xl[i] || x[i] > bounds.xu[i] {
            clamped_start = true;
        }
        x[i] = push_interior(bounds.xl[i], bounds.xu[i], x[i]);
    }

    let f0 = problem.objective(&x);
    let mut c = vec![0.0; m];
    problem.constraints(&x, &mut c);
    if !f0.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return Err(NlpError::NonFiniteAtStart);
    }

    let mut st = State {
        x,
        s: layout
            .ineq
            .iter()
            .map(|&r| push_interior(bounds.cl[r], bounds.cu[r], c[r]))
            .collect(),
        y: vec![0.0; m],
        zl: (0..n)
            .map(|i| if layout.free_of_var[i].is_some() && bounds.xl[i].is_finite() { 1.0 } else { 0.0 })
            .collect(),
        zu: (0..n)
            .map(|i| if layout.free_of_var[i].is_some() && bounds.xu[i].is_finite() { 1.0 } else { 0.0 })
            .collect(),
        vl: layout.ineq.iter().map(|&r| if bounds.cl[r].is_finite() { 1.0 } else { 0.0 }).collect(),
        vu: layout.ineq.iter().map(|&r| if bounds.cu[r].is_finite() { 1.0 } else { 0.0 }).collect(),
    };

    let mut kkt = KktSystem::new(&layout);
    let mut hess_vals = vec![0.0; layout.hess_structure.len()];
    let mut jac_vals = vec![0.0; layout.jac_structure.len()];
    let mut grad = vec![0.0; n];

    let mut mu = opts.mu_init;
    let mut tau = TAU_MIN.max(1.0 - mu);
    let mut nu = 1.0;
    let mut delta_last = 0.0;
    // Levenberg-style primal regularization grown on line-search trouble and
    // decayed, with hysteresis, after a run of full steps; tames the huge
    // Newton steps that flat cost valleys produce. Starts warm and decays
    // quickly on well-behaved problems.
    let mut delta_ls = 1e-2f64;
    let mut full_steps = 0usize;
    let mut log: Vec<IterRecord> = Vec::new();
    let mut restorations = 0usize;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = opts.max_iter;

    problem.constraints(&st.x, &mut c);

    'outer: for iter in 0..opts.max_iter {
        problem.gradient(&st.x, &mut grad);
        problem.jacobian(&st.x, &mut jac_vals);

        // --- residuals and convergence measures ---
        let rd = dual_residual(&layout, &bounds, &grad, &jac_vals, &st);
        let theta_vec = primal_residual(&layout, &bounds, &c, &st);
        let inf_du = rd.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let inf_pr = theta_vec.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let (sd, sc) = multiplier_scalings(&layout, &st);
        let comp0 = complementarity(&layout, &bounds, &st, 0.0);
        let e0 = (inf_du / sd).max(inf_pr).max(comp0 / sc);
        let obj = problem.objective(&st.x);

        if e0 <= opts.tol {
            status = SolveStatus::Converged;
            iterations = iter;
            log.push(IterRecord {
                iter,
                objective: obj,
                inf_pr,
                inf_du,
                mu,
                alpha_pr: 0.0,
                alpha_du: 0.0,
                merit_pre: merit(&layout, &bounds, obj, &c, &st, mu, nu),
                merit_post: merit(&layout, &bounds, obj, &c, &st, mu, nu),
                nu,
                delta_x: 0.0,
            });
            break 'outer;
        }

        // Endgame multiplier refresh: with the primal essentially feasible,
        // replace y by its least-squares estimate when that lowers the dual
        // residual. Removes the bias the step regularization leaves behind.
        if e0 <= 1e3 * opts.tol && inf_pr <= opts.tol && iter % 3 == 0 {
            if let Some(y_ls) =
                least_squares_multipliers(&layout, &bounds, &mut kkt, &grad, &jac_vals, &st)
            {
                let mut trial = State { y: y_ls, ..clone_duals(&st) };
                trial.x = st.x.clone();
                trial.s = st.s.clone();
                let rd_new = dual_residual(&layout, &bounds, &grad, &jac_vals, &trial);
                let new_du = rd_new.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                if std::env::var_os("REJOIN_IPM_DEBUG").is_some() {
                    eprintln!("[refresh {iter}] inf_du {inf_du:.3e} -> {new_du:.3e} (e0 {e0:.3e} mu {mu:.1e})");
                }
                if new_du < 0.9 * inf_du {
                    st.y = trial.y;
                    let (sd2, sc2) = multiplier_scalings(&layout, &st);
                    let comp0 = complementarity(&layout, &bounds, &st, 0.0);
                    let e0_new = (new_du / sd2).max(inf_pr).max(comp0 / sc2);
                    if e0_new <= opts.tol {
                        status = SolveStatus::Converged;
                        iterations = iter;
                        log.push(IterRecord {
                            iter,
                            objective: obj,
                            inf_pr,
                            inf_du: new_du,
                            mu,
                            alpha_pr: 0.0,
                            alpha_du: 0.0,
                            merit_pre: merit(&layout, &bounds, obj, &c, &st, mu, nu),
                            merit_post: merit(&layout, &bounds, obj, &c, &st, mu, nu),
                            nu,
                            delta_x: 0.0,
                        });
                        break 'outer;
                    }
                }
            }
        }

        // Barrier update: monotone Fiacco-McCormick schedule.
        let comp_mu = complementarity(&layout, &bounds, &st, mu);
        let e_mu = (inf_du / sd).max(inf_pr).max(comp_mu / sc);
        if e_mu <= KAPPA_EPS * mu && mu > opts.tol / 10.0 {
            mu = (opts.tol / 10.0).max((KAPPA_MU * mu).min(mu.powf(THETA_MU)));
            tau = TAU_MIN.max(1.0 - mu);
        }

        // --- KKT assembly with inertia correction ---
        problem.hessian(&st.x, 1.0, &st.y, &mut hess_vals);
        let sigma_x = barrier_sigma_x(&layout, &bounds, &st);
        let (con_diag, sigma_s) = barrier_sigma_s(&layout, &bounds, &st);

        let mut delta_x = delta_ls;
        let mut delta_c = 0.0;
        let factors = loop {
            kkt.assemble(&hess_vals, &sigma_x, &jac_vals, &con_diag, delta_x, delta_c);
            let fact = kkt.factor();
            let ok = match &fact {
                Some(f) => {
                    let inertia = f.inertia(PIVOT_ZERO);
                    inertia.positive == nf && inertia.negative == m && inertia.zero == 0
                }
                None => false,
            };
            if ok {
                break fact.unwrap();
            }
            if fact.is_none() && delta_c == 0.0 {
                delta_c = 1e-8 * mu.max(1e-10).powf(0.25);
            }
            delta_x = if delta_x <= delta_ls {
                if delta_last == 0.0 {
                    f64::max(1e-4, delta_ls * 10.0)
                } else {
                    f64::max(delta_last / 3.0, 1e-8).max(delta_ls * 10.0)
                }
            } else {
                delta_x * 10.0
            };
            if delta_x > 1e14 {
                status = SolveStatus::NumericalError;
                iterations = iter;
                break 'outer;
            }
        };
        if delta_x > delta_ls {
            delta_last = delta_x;
        }

        // --- step computation ---
        let rhs = newton_rhs(&layout, &bounds, &grad, &jac_vals, &c, &st, mu, &sigma_s);
        let sol = kkt.solve_refined(&factors, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            status = SolveStatus::NumericalError;
            iterations = iter;
            break 'outer;
        }
        let dx = &sol[..nf];
        let dy = &sol[nf..];
        let step = recover_step(&layout, &bounds, &st, mu, &sigma_s, dx, dy);

        // --- merit penalty update ---
        let theta1 = theta_vec.iter().map(|v| v.abs()).sum::<f64>();
        let barrier_dir = barrier_directional(&layout, &bounds, &grad, &st, mu, dx, &step.ds);
        if theta1 > 1e-14 {
            let quad = kkt.quad_form(&hess_vals, &sigma_x, delta_x, &layout, dx).max(0.0);
            let nu_req = (barrier_dir + 0.5 * quad) / ((1.0 - RHO_NU) * theta1);
            if nu < nu_req {
                nu = nu_req * 1.5;
            } else {
                // Let an inflated penalty relax once large violations have
                // passed, so feasibility noise stops masking descent.
                nu = nu.min((nu * 0.5).max(nu_req * 1.5).max(1.0));
            }
        } else {
            nu = nu.min((nu * 0.5).max(1.0));
        }
        let merit_pre = merit(&layout, &bounds, obj, &c, &st, mu, nu);
        let dphi = barrier_dir - nu * theta1;

        // --- fraction-to-boundary limits ---
        let alpha_max = fraction_to_boundary_primal(&layout, &bounds, &st, dx, &step.ds, tau);
        let alpha_du = fraction_to_boundary_dual(&st, &step, tau);

        // --- Armijo backtracking on the l1 merit, with one SOC attempt ---
        let mut alpha = alpha_max;
        let mut accepted = None;
        let mut tried_soc = false;
        let mut c_trial = vec![0.0; m];
        while alpha >= ALPHA_MIN {
            let (x_t, s_t) = trial_point(&layout, &bounds, &st, dx, &step.ds, alpha);
            let f_t = problem.objective(&x_t);
            problem.constraints(&x_t, &mut c_trial);
            let finite = f_t.is_finite() && c_trial.iter().all(|v| v.is_finite());
            if finite {
                let st_t = State { x: x_t.clone(), s: s_t.clone(), ..clone_duals(&st) };
                let merit_t = merit(&layout, &bounds, f_t, &c_trial, &st_t, mu, nu);
                if merit_t <= merit_pre + ETA_ARMIJO * alpha * dphi {
                    accepted = Some((x_t, s_t, merit_t));
                    break;
                }
                // Second-order correction against constraint curvature, only
                // on the first rejected full-ish step.
                if !tried_soc && alpha == alpha_max {
                    tried_soc = true;
                    if let Some((x_c, s_c, merit_c)) = second_order_correction(
                        problem, &layout, &bounds, &kkt, &factors, &st, &step, dx, alpha, mu, nu, tau,
                        &sigma_s, merit_pre, dphi,
                    ) {
                        accepted = Some((x_c, s_c, merit_c));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }

        let (alpha_pr, merit_post) = match accepted {
            Some((x_t, s_t, merit_t)) => {
                st.x = x_t;
                st.s = s_t;
                for r in 0..m {
                    st.y[r] += alpha * step.dy[r];
                }
                apply_dual_step(&layout, &bounds, &mut st, &step, alpha_du, mu);
                problem.constraints(&st.x, &mut c);
                // Step-quality feedback on the primal regularization.
                if alpha >= 0.9 * alpha_max {
                    full_steps += 1;
                    if full_steps >= 3 && delta_ls > 0.0 {
                        // Coarse regime decays fast; near zero tread lightly
                        // to avoid step-size limit cycles.
                        delta_ls /= if delta_ls > 1.0 { 10.0 } else { 2.0 };
                        if delta_ls < 1e-12 {
                            delta_ls = 0.0;
                        }
                        full_steps = 0;
                    }
                } else {
                    full_steps = 0;
                    if alpha < 0.1 * alpha_max {
                        delta_ls = (delta_ls * 20.0).clamp(1e-6, 1e8);
                    }
                }
                (alpha, merit_t)
            }
            None => {
                // Grow the regularization first; full restoration only when
                // that has already been pushed hard.
                if delta_ls < 1e6 {
                    delta_ls = (delta_ls * 100.0).clamp(1e-4, 1e8);
                    log.push(IterRecord {
                        iter,
                        objective: obj,
                        inf_pr,
                        inf_du,
                        mu,
                        alpha_pr: 0.0,
                        alpha_du: 0.0,
                        merit_pre,
                        merit_post: merit_pre,
                        nu,
                        delta_x,
                    });
                    continue 'outer;
                }
                // Feasibility restoration fallback.
                restorations += 1;
                if restorations > 2 {
                    status = SolveStatus::RestorationFailure;
                    iterations = iter;
                    break 'outer;
                }
                match restore_feasibility(problem, &layout, &bounds, &mut kkt, &mut st, &mut c) {
                    Ok(()) => {
                        nu = 1.0;
                        (0.0, merit(&layout, &bounds, problem.objective(&st.x), &c, &st, mu, nu))
                    }
                    Err(()) => {
                        status = SolveStatus::RestorationFailure;
                        iterations = iter;
                        break 'outer;
                    }
                }
            }
        };

        log.push(IterRecord {
            iter,
            objective: obj,
            inf_pr,
            inf_du,
            mu,
            alpha_pr,
            alpha_du,
            merit_pre,
            merit_post,
            nu,
            delta_x,
        });
    }

    let objective = problem.objective(&st.x);
    let kkt_res = crate::kkt::kkt_residuals(problem, &st.x, &st.y, &st.zl, &st.zu);
    Ok(Solution {
        status,
        x: st.x,
        objective,
        y: st.y,
        z_lower: st.zl,
        z_upper: st.zu,
        kkt: kkt_res,
        iterations,
        clamped_start,
        hessian_mode: "exact",
        log,
    })
}

fn clone_duals(st: &State) -> State {
    State {
        x: Vec::new(),
        s: Vec::new(),
        y: st.y.clone(),
        zl: st.zl.clone(),
        zu: st.zu.clone(),
        vl: st.vl.clone(),
        vu: st.vu.clone(),
    }
}

struct Step {
    ds: Vec<f64>,
    dy: Vec<f64>,
    dzl: Vec<f64>,
    dzu: Vec<f64>,
    dvl: Vec<f64>,
    dvu: Vec<f64>,
}

fn dual_residual(layout: &Layout, bounds: &Bounds, grad: &[f64], jac_vals: &[f64], st: &State) -> Vec<f64> {
    let mut r: Vec<f64> = layout.free.iter().map(|&i| grad[i]).collect();
    for (k, &(row, col)) in layout.jac_structure.iter().enumerate() {
        if let Some(f) = layout.free_of_var[col] {
            r[f] += jac_vals[k] * st.y[row];
        }
    }
    for (f, &i) in layout.free.iter().enumerate() {
        if bounds.xl[i].is_finite() {
            r[f] -= st.zl[i];
        }
        if bounds.xu[i].is_finite() {
            r[f] += st.zu[i];
        }
    }
    r
}

/// Primal residual: equality rows `c - cl`, inequality rows `c - s`.
fn primal_residual(layout: &Layout, bounds: &Bounds, c: &[f64], st: &State) -> Vec<f64> {
    (0..layout.m)
        .map(|r| match layout.slack_of_row[r] {
            Some(k) => c[r] - st.s[k],
            None => c[r] - bounds.cl[r],
        })
        .collect()
}

fn multiplier_scalings(_layout: &Layout, st: &State) -> (f64, f64) {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &yv in &st.y {
        sum += yv.abs();
        count += 1;
    }
    let mut zsum = 0.0;
    let mut zcount = 0usize;
    for v in st.zl.iter().chain(st.zu.iter()).chain(st.vl.iter()).chain(st.vu.iter()) {
        if *v != 0.0 {
            zsum += v.abs();
            zcount += 1;
        }
    }
    let sd = ((sum + zsum) / ((count + zcount).max(1) as f64)).max(S_MAX) / S_MAX;
    let sc = (zsum / (zcount.max(1) as f64)).max(S_MAX) / S_MAX;
    (sd, sc)
}

fn complementarity(layout: &Layout, bounds: &Bounds, st: &State, mu: f64) -> f64 {
    let mut worst = 0.0f64;
    for (f, &i) in layout.free.iter().enumerate() {
        let _ = f;
        if bounds.xl[i].is_finite() {
            worst = worst.max(((st.x[i] - bounds.xl[i]) * st.zl[i] - mu).abs());
        }
        if bounds.xu[i].is_finite() {
            worst = worst.max(((bounds.xu[i] - st.x[i]) * st.zu[i] - mu).abs());
        }
    }
    for (k, &r) in layout.ineq.iter().enumerate() {
        if bounds.cl[r].is_finite() {
            worst = worst.max(((st.s[k] - bounds.cl[r]) * st.vl[k] - mu).abs());
        }
        if bounds.cu[r].is_finite() {
            worst = worst.max(((bounds.cu[r] - st.s[k]) * st.vu[k] - mu).abs());
        }
    }
    // The reported row multipliers are y, not the slack duals; measure their
    // complementarity the way the final KKT report does, so internal
    // convergence and the published residuals agree.
    for (k, &r) in layout.ineq.iter().enumerate() {
        let s = st.s[k];
        if st.y[r] > 0.0 && bounds.cu[r].is_finite() {
            worst = worst.max((st.y[r] * (bounds.cu[r] - s) - mu).abs());
        }
        if st.y[r] < 0.0 && bounds.cl[r].is_finite() {
            worst = worst.max((st.y[r].abs() * (s - bounds.cl[r]) - mu).abs());
        }
    }
    worst
}

fn barrier_sigma_x(layout: &Layout, bounds: &Bounds, st: &State) -> Vec<f64> {
    layout
        .free
        .iter()
        .map(|&i| {
            let mut s = 0.0;
            if bounds.xl[i].is_finite() {
                s += st.zl[i] / (st.x[i] - bounds.xl[i]);
            }
            if bounds.xu[i].is_finite() {
                s += st.zu[i] / (bounds.xu[i] - st.x[i]);
            }
            s
        })
        .collect()
}

/// Returns the per-row KKT (2,2) diagonal (`1/Sigma_s` for inequality rows,
/// zero for equalities) and the raw `Sigma_s` per inequality row.
fn barrier_sigma_s(layout: &Layout, bounds: &Bounds, st: &State) -> (Vec<f64>, Vec<f64>) {
    let mut sigma_s = vec![0.0; layout.ineq.len()];
    for (k, &r) in layout.ineq.iter().enumerate() {
        let mut s = 0.0;
        if bounds.cl[r].is_finite() {
            s += st.vl[k] / (st.s[k] - bounds.cl[r]);
        }
        if bounds.cu[r].is_finite() {
            s += st.vu[k] / (bounds.cu[r] - st.s[k]);
        }
        sigma_s[k] = s;
    }
    let con_diag: Vec<f64> = (0..layout.m)
        .map(|r| match layout.slack_of_row[r] {
            Some(k) => {
                if sigma_s[k] > 0.0 {
                    1.0 / sigma_s[k]
                } else {
                    // No finite slack bound on either side: row behaves as free.
                    1e12
                }
            }
            None => 0.0,
        })
        .collect();
    (con_diag, sigma_s)
}

#[allow(clippy::too_many_arguments)]
fn newton_rhs(
    layout: &Layout,
    bounds: &Bounds,
    grad: &[f64],
    jac_vals: &[f64],
    c: &[f64],
    st: &State,
    mu: f64,
    sigma_s: &[f64],
) -> Vec<f64> {
    let nf = layout.free.len();
    let mut rhs = vec![0.0; nf + layout.m];
    // phi_x = grad f + J^T y - mu/(x-xl) + mu/(xu-x)
    for (f, &i) in layout.free.iter().enumerate() {
        let mut g = grad[i];
        if bounds.xl[i].is_finite() {
            g -= mu / (st.x[i] - bounds.xl[i]);
        }
        if bounds.xu[i].is_finite() {
            g += mu / (bounds.xu[i] - st.x[i]);
        }
        rhs[f] = -g;
    }
    for (k, &(row, col)) in layout.jac_structure.iter().enumerate() {
        if let Some(f) = layout.free_of_var[col] {
            rhs[f] -= jac_vals[k] * st.y[row];
        }
    }
    for r in 0..layout.m {
        rhs[nf + r] = match layout.slack_of_row[r] {
            Some(k) => {
                let mut phi_s = -st.y[r];
                if bounds.cl[r].is_finite() {
                    phi_s -= mu / (st.s[k] - bounds.cl[r]);
                }
                if bounds.cu[r].is_finite() {
                    phi_s += mu / (bounds.cu[r] - st.s[k]);
                }
                let inv_sigma = if sigma_s[k] > 0.0 { 1.0 / sigma_s[k] } else { 1e12 };
                -(c[r] - st.s[k]) - inv_sigma * phi_s
            }
            None => -(c[r] - bounds.cl[r]),
        };
    }
    rhs
}

fn recover_step(
    layout: &Layout,
    bounds: &Bounds,
    st: &State,
    mu: f64,
    sigma_s: &[f64],
    dx: &[f64],
    dy: &[f64],
) -> Step {
    let n_ineq = layout.ineq.len();
    let mut ds = vec![0.0; n_ineq];
    let mut dvl = vec![0.0; n_ineq];
    let mut dvu = vec![0.0; n_ineq];
    for (k, &r) in layout.ineq.iter().enumerate() {
        let mut phi_s = -st.y[r];
        if bounds.cl[r].is_finite() {
            phi_s -= mu / (st.s[k] - bounds.cl[r]);
        }
        if bounds.cu[r].is_finite() {
            phi_s += mu / (bounds.cu[r] - st.s[k]);
        }
        let sig = if sigma_s[k] > 0.0 { sigma_s[k] } else { 1e-12 };
        ds[k] = (dy[r] - phi_s) / sig;
        if bounds.cl[r].is_finite() {
            let gap = st.s[k] - bounds.cl[r];
            dvl[k] = mu / gap - st.vl[k] - st.vl[k] / gap * ds[k];
        }
        if bounds.cu[r].is_finite() {
            let gap = bounds.cu[r] - st.s[k];
            dvu[k] = mu / gap - st.vu[k] + st.vu[k] / gap * ds[k];
        }
    }
    let mut dzl = vec![0.0; layout.n];
    let mut dzu = vec![0.0; layout.n];
    for (f, &i) in layout.free.iter().enumerate() {
        if bounds.xl[i].is_finite() {
            let gap = st.x[i] - bounds.xl[i];
            dzl[i] = mu / gap - st.zl[i] - st.zl[i] / gap * dx[f];
        }
        if bounds.xu[i].is_finite() {
            let gap = bounds.xu[i] - st.x[i];
            dzu[i] = mu / gap - st.zu[i] + st.zu[i] / gap * dx[f];
        }
    }
    Step {
        ds,
        dy: dy.to_vec(),
        dzl,
        dzu,
        dvl,
        dvu,
    }
}

fn fraction_to_boundary_primal(
    layout: &Layout,
    bounds: &Bounds,
    st: &State,
    dx: &[f64],
    ds: &[f64],
    tau: f64,
) -> f64 {
    let mut alpha = 1.0f64;
    for (f, &i) in layout.free.iter().enumerate() {
        if dx[f] < 0.0 && bounds.xl[i].is_finite() {
            alpha = alpha.min(tau * (st.x[i] - bounds.xl[i]) / -dx[f]);
        }
        if dx[f] > 0.0 && bounds.xu[i].is_finite() {
            alpha = alpha.min(tau * (bounds.xu[i] - st.x[i]) / dx[f]);
        }
    }
    for (k, &r) in layout.ineq.iter().enumerate() {
        if ds[k] < 0.0 && bounds.cl[r].is_finite() {
            alpha = alpha.min(tau * (st.s[k] - bounds.cl[r]) / -ds[k]);
        }
        if ds[k] > 0.0 && bounds.cu[r].is_finite() {
            alpha = alpha.min(tau * (bounds.cu[r] - st.s[k]) / ds[k]);
        }
    }
    alpha
}

fn fraction_to_boundary_dual(st: &State, step: &Step, tau: f64) -> f64 {
    let mut alpha = 1.0f64;
    let pairs = [
        (&st.zl, &step.dzl),
        (&st.zu, &step.dzu),
        (&st.vl, &step.dvl),
        (&st.vu, &step.dvu),
    ];
    for (z, dz) in pairs {
        for (zi, dzi) in z.iter().zip(dz.iter()) {
            if *dzi < 0.0 && *zi > 0.0 {
                alpha = alpha.min(tau * zi / -dzi);
            }
        }
    }
    alpha
}

fn trial_point(
    layout: &Layout,
    bounds: &Bounds,
    st: &State,
    dx: &[f64],
    ds: &[f64],
    alpha: f64,
) -> (Vec<f64>, Vec<f64>) {
    let _ = bounds;
    let mut x = st.x.clone();
    for (f, &i) in layout.free.iter().enumerate() {
        x[i] += alpha * dx[f];
    }
    let s: Vec<f64> = st.s.iter().zip(ds.iter()).map(|(sv, dv)| sv + alpha * dv).collect();
    (x, s)
}

fn merit(layout: &Layout, bounds: &Bounds, f: f64, c: &[f64], st: &State, mu: f64, nu: f64) -> f64 {
    let mut phi = f;
    for &i in &layout.free {
        if bounds.xl[i].is_finite() {
            phi -= mu * (st.x[i] - bounds.xl[i]).ln();
        }
        if bounds.xu[i].is_finite() {
            phi -= mu * (bounds.xu[i] - st.x[i]).ln();
        }
    }
    for (k, &r) in layout.ineq.iter().enumerate() {
        if bounds.cl[r].is_finite() {
            phi -= mu * (st.s[k] - bounds.cl[r]).ln();
        }
        if bounds.cu[r].is_finite() {
            phi -= mu * (bounds.cu[r] - st.s[k]).ln();
        }
    }
    let mut theta1 = 0.0;
    for r in 0..layout.m {
        theta1 += match layout.slack_of_row[r] {
            Some(k) => (c[r] - st.s[k]).abs(),
            None => (c[r] - bounds.cl[r]).abs(),
        };
    }
    phi + nu * theta1
}

fn barrier_directional(
    layout: &Layout,
    bounds: &Bounds,
    grad: &[f64],
    st: &State,
    mu: f64,
    dx: &[f64],
    ds: &[f64],
) -> f64 {
    let mut d = 0.0;
    for (f, &i) in layout.free.iter().enumerate() {
        let mut g = grad[i];
        if bounds.xl[i].is_finite() {
            g -= mu / (st.x[i] - bounds.xl[i]);
        }
        if bounds.xu[i].is_finite() {
            g += mu / (bounds.xu[i] - st.x[i]);
        }
        d += g * dx[f];
    }
    for (k, &r) in layout.ineq.iter().enumerate() {
        let mut g = 0.0;
        if bounds.cl[r].is_finite() {
            g -= mu / (st.s[k] - bounds.cl[r]);
        }
        if bounds.cu[r].is_finite() {
            g += mu / (bounds.cu[r] - st.s[k]);
        }
        d += g * ds[k];
    }
    d
}

fn apply_dual_step(layout: &Layout, bounds: &Bounds, st: &mut State, step: &Step, alpha_du: f64, mu: f64) {
    for i in 0..layout.n {
        st.zl[i] += alpha_du * step.dzl[i];
        st.zu[i] += alpha_du * step.dzu[i];
    }
    for k in 0..st.s.len() {
        st.vl[k] += alpha_du * step.dvl[k];
        st.vu[k] += alpha_du * step.dvu[k];
    }
    // Keep bound multipliers within a neighborhood of the barrier manifold.
    for (f, &i) in layout.free.iter().enumerate() {
        let _ = f;
        if bounds.xl[i].is_finite() {
            let gap = st.x[i] - bounds.xl[i];
            st.zl[i] = st.zl[i].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
        }
        if bounds.xu[i].is_finite() {
            let gap = bounds.xu[i] - st.x[i];
            st.zu[i] = st.zu[i].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
        }
    }
    for (k, &r) in layout.ineq.iter().enumerate() {
        if bounds.cl[r].is_finite() {
            let gap = st.s[k] - bounds.cl[r];
            st.vl[k] = st.vl[k].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
        }
        if bounds.cu[r].is_finite() {
            let gap = bounds.cu[r] - st.s[k];
            st.vu[k] = st.vu[k].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn second_order_correction(
    problem: &dyn NlpProblem,
    layout: &Layout,
    bounds: &Bounds,
    kkt: &KktSystem,
    factors: &crate::sparse::LdlFactors,
    st: &State,
    step: &Step,
    dx: &[f64],
    alpha: f64,
    mu: f64,
    nu: f64,
    tau: f64,
    sigma_s: &[f64],
    merit_pre: f64,
    dphi: f64,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let nf = layout.free.len();
    let m = layout.m;
    let (x_t, s_t) = trial_point(layout, bounds, st, dx, &step.ds, alpha);
    let mut c_t = vec![0.0; m];
    problem.constraints(&x_t, &mut c_t);
    if c_t.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut rhs = vec![0.0; nf + m];
    for r in 0..m {
        rhs[nf + r] = match layout.slack_of_row[r] {
            Some(k) => -(c_t[r] - s_t[k]),
            None => -(c_t[r] - bounds.cl[r]),
        };
    }
    let sol = kkt.solve_refined(factors, &rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let dx_c = &sol[..nf];
    let dy_c = &sol[nf..];
    let mut ds_c = vec![0.0; layout.ineq.len()];
    for (k, &r) in layout.ineq.iter().enumerate() {
        let sig = if sigma_s[k] > 0.0 { sigma_s[k] } else { 1e-12 };
        ds_c[k] = dy_c[r] / sig;
    }
    // Corrected direction: alpha*d + d_cor, re-limited to the boundary.
    let dx_full: Vec<f64> = (0..nf).map(|f| alpha * dx[f] + dx_c[f]).collect();
    let ds_full: Vec<f64> = (0..ds_c.len()).map(|k| alpha * step.ds[k] + ds_c[k]).collect();
    let alpha_soc = fraction_to_boundary_primal(layout, bounds, st, &dx_full, &ds_full, tau);
    let (x_s, s_s) = trial_point(layout, bounds, st, &dx_full, &ds_full, alpha_soc);
    let f_s = problem.objective(&x_s);
    let mut c_s = vec![0.0; m];
    problem.constraints(&x_s, &mut c_s);
    if !f_s.is_finite() || c_s.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let st_s = State { x: x_s.clone(), s: s_s.clone(), ..clone_duals(st) };
    let merit_s = merit(layout, bounds, f_s, &c_s, &st_s, mu, nu);
    if merit_s <= merit_pre + ETA_ARMIJO * alpha * dphi {
        Some((x_s, s_s, merit_s))
    } else {
        None
    }
}

/// Least-squares constraint multipliers at the current point: solve
/// `[I, J^T; J, -eps] (w, y) = (-(grad f - zl + zu), 0)` for `y`, with the
/// multipliers of inactive inequality rows pinned at their current (barrier)
/// values so complementarity is preserved.
fn least_squares_multipliers(
    layout: &Layout,
    bounds: &Bounds,
    kkt: &mut KktSystem,
    grad: &[f64],
    jac_vals: &[f64],
    st: &State,
) -> Option<Vec<f64>> {
    let nf = layout.free.len();
    let m = layout.m;
    let hess_zero = vec![0.0; layout.hess_structure.len()];
    let sigma_one = vec![1.0; nf];
    const PIN: f64 = 1e10;
    let mut con_eps = vec![1e-10; m];
    let mut rhs = vec![0.0; nf + m];
    for r in 0..m {
        if let Some(k) = layout.slack_of_row[r] {
            let scale = 1.0 + st.s[k].abs();
            let gap_l = if bounds.cl[r].is_finite() {
                st.s[k] - bounds.cl[r]
            } else {
                f64::INFINITY
            };
            let gap_u = if bounds.cu[r].is_finite() {
                bounds.cu[r] - st.s[k]
            } else {
                f64::INFINITY
            };
            if gap_l.min(gap_u) > 1e-4 * scale {
                con_eps[r] = PIN;
                rhs[nf + r] = -PIN * st.y[r];
            }
        }
    }
    kkt.assemble(&hess_zero, &sigma_one, jac_vals, &con_eps, 0.0, 0.0);
    let factors = kkt.factor()?;
    for (f, &i) in layout.free.iter().enumerate() {
        let mut g = grad[i];
        if bounds.xl[i].is_finite() {
            g -= st.zl[i];
        }
        if bounds.xu[i].is_finite() {
            g += st.zu[i];
        }
        rhs[f] = -g;
    }
    let sol = kkt.solve_refined(&factors, &rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut y = sol[nf..].to_vec();
    // Sign projection: an inequality multiplier must press against the side
    // its row is active on.
    for (k, &r) in layout.ineq.iter().enumerate() {
        if con_eps[r] == PIN {
            continue;
        }
        let gap_l = if bounds.cl[r].is_finite() {
            st.s[k] - bounds.cl[r]
        } else {
            f64::INFINITY
        };
        let gap_u = if bounds.cu[r].is_finite() {
            bounds.cu[r] - st.s[k]
        } else {
            f64::INFINITY
        };
        if gap_u < gap_l {
            // Active at the upper side: y >= 0.
            if y[r] < 0.0 {
                y[r] = 0.0;
            }
        } else if y[r] > 0.0 {
            y[r] = 0.0;
        }
    }
    Some(y)
}

/// Gauss-Newton descent on the constraint violation, used when the main
/// line search stalls. Returns with the iterate strictly inside its bounds
/// and slacks reset.
fn restore_feasibility(
    problem: &dyn NlpProblem,
    layout: &Layout,
    bounds: &Bounds,
    kkt: &mut KktSystem,
    st: &mut State,
    c: &mut Vec<f64>,
) -> Result<(), ()> {
    let nf = layout.free.len();
    let m = layout.m;
    let mut jac_vals = vec![0.0; layout.jac_structure.len()];
    let hess_zero = vec![0.0; layout.hess_structure.len()];
    let sigma_one = vec![1.0; nf];
    let con_one = vec![1.0; m];

    let violation = |c: &[f64]| -> f64 {
        (0..m)
            .map(|r| (bounds.cl[r] - c[r]).max(0.0) + (c[r] - bounds.cu[r]).max(0.0))
            .sum()
    };
    problem.constraints(&st.x, c);
    let theta_enter = violation(c);
    if theta_enter <= 1e-12 {
        return Err(()); // line search failed while feasible: no rescue here
    }
    let mut theta = theta_enter;
    for _ in 0..40 {
        problem.jacobian(&st.x, &mut jac_vals);
        // Target the nearest bound for each violated row.
        let mut rhs = vec![0.0; nf + m];
        for r in 0..m {
            let target = c[r].clamp(bounds.cl[r], bounds.cu[r]);
            rhs[nf + r] = -(c[r] - target);
        }
        kkt.assemble(&hess_zero, &sigma_one, &jac_vals, &con_one, 0.0, 0.0);
        let factors = match kkt.factor() {
            Some(f) => f,
            None => return Err(()),
        };
        let sol = kkt.solve_refined(&factors, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(());
        }
        let dx = &sol[..nf];
        // Keep strictly inside variable bounds.
        let zero_ds = vec![0.0; layout.ineq.len()];
        let alpha_max = fraction_to_boundary_primal(layout, bounds, st, dx, &zero_ds, 0.995);
        let mut alpha = alpha_max.min(1.0);
        let mut improved = false;
        let mut c_t = vec![0.0; m];
        while alpha > 1e-12 {
            let (x_t, _) = trial_point(layout, bounds, st, dx, &zero_ds, alpha);
            problem.constraints(&x_t, &mut c_t);
            if c_t.iter().all(|v| v.is_finite()) && violation(&c_t) < theta * (1.0 - 1e-4 * alpha) {
                st.x = x_t;
                *c = c_t.clone();
                theta = violation(c);
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
        if theta <= (1e-8f64).max(theta_enter * 1e-4) {
            break;
        }
    }
    if theta < theta_enter * 0.5 || theta <= 1e-8 {
        // Reset slacks and equality multipliers around the restored point.
        for (k, &r) in layout.ineq.iter().enumerate() {
            st.s[k] = push_interior(bounds.cl[r], bounds.cu[r], c[r]);
        }
        for yv in st.y.iter_mut() {
            *yv = 0.0;
        }
        Ok(())
    } else {
        Err(())
    }
}
