//! Transcription of a multi-phase OCP into a sparse NLP.
//!
//! Per interval of order `N`, states live at the `N` collocation nodes plus
//! the non-collocated right endpoint (shared with the next interval), and
//! controls at the collocation nodes. Defect rows enforce
//! `D X = (dt/2) f(x, u, t)` at every node; path constraints are evaluated
//! at every node; the Lagrange cost is accumulated by LGR quadrature.
//!
//! Derivatives are produced by forward-mode AD: one [`Dual`] seed per
//! Jacobian column of each row, one [`Dual2`] seed pair per declared
//! Hessian entry. Rows declare their own input and curvature sparsity.

use std::collections::BTreeMap;

use crate::autodiff::{Dual, Dual2, Scalar};
use crate::lgr::{lgr_rule, LgrRule};
use crate::ocp::{LinkVar, Mesh, Ocp, TimeSpec};
use thiserror::Error;

pub const MAX_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum TranscribeError {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("{0}")]
    Rule(#[from] crate::lgr::LgrError),
    #[error("dimension {0} exceeds the supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
}

#[derive(Debug, Clone, Copy)]
pub enum TimeRef {
    Constant(f64),
    Var(usize),
}

#[derive(Debug, Clone)]
pub struct IntervalInfo {
    pub order: usize,
    pub fraction: f64,
    /// Cumulative fraction at the interval start.
    pub alpha: f64,
    /// First collocation point index (phase-local).
    pub start_point: usize,
}

#[derive(Debug, Clone)]
pub struct PhaseLayout {
    pub nx: usize,
    pub nu: usize,
    pub state_offset: usize,
    pub ctrl_offset: usize,
    pub n_colloc: usize,
    pub n_support: usize,
    pub intervals: Vec<IntervalInfo>,
    pub point_interval: Vec<usize>,
    /// Normalized position of each collocation point in the phase, in [0, 1).
    pub sigma_colloc: Vec<f64>,
    pub t0: TimeRef,
    pub tf: TimeRef,
    pub defect_row_offset: usize,
}

#[derive(Debug, Clone, Copy)]
enum RowKind {
    Defect {
        phase: usize,
        interval: usize,
        node: usize,
        dim: usize,
    },
    Path {
        phase: usize,
        point: usize,
        row: usize,
    },
    Boundary {
        phase: usize,
        row: usize,
    },
    Link(usize),
}

struct RowSpec {
    kind: RowKind,
    inputs: Vec<usize>,
    /// Local input index pairs with declared curvature.
    hess_pairs: Vec<(usize, usize)>,
    /// Slot of each pair in the global Hessian value vector, with the
    /// symmetry multiplier applied at accumulation time.
    hess_slots: Vec<(usize, f64)>,
    jac_offset: usize,
}

#[derive(Debug, Clone, Copy)]
enum ObjKind {
    Mayer,
    Quad { phase: usize, point: usize },
}

struct ObjTerm {
    kind: ObjKind,
    inputs: Vec<usize>,
    hess_pairs: Vec<(usize, usize)>,
    hess_slots: Vec<(usize, f64)>,
}

pub struct Transcription<'a, O: Ocp> {
    pub ocp: &'a O,
    pub mesh: Mesh,
    pub phases: Vec<PhaseLayout>,
    rules: BTreeMap<usize, LgrRule>,
    n_vars: usize,
    xl: Vec<f64>,
    xu: Vec<f64>,
    cl: Vec<f64>,
    cu: Vec<f64>,
    rows: Vec<RowSpec>,
    obj_terms: Vec<ObjTerm>,
    jac_structure: Vec<(usize, usize)>,
    hess_structure: Vec<(usize, usize)>,
    /// Linear link rows: resolved (global var, coefficient) lists.
    link_terms: Vec<Vec<(usize, f64)>>,
}

impl<'a, O: Ocp> Transcription<'a, O> {
    pub fn new(ocp: &'a O, mesh: Mesh) -> Result<Transcription<'a, O>, TranscribeError> {
        mesh.validate().map_err(TranscribeError::Mesh)?;
        let np = ocp.num_phases();
        assert_eq!(mesh.phases.len(), np, "mesh phase count mismatch");

        let mut rules = BTreeMap::new();
        for pm in &mesh.phases {
            for &n in &pm.orders {
                if !rules.contains_key(&n) {
                    rules.insert(n, lgr_rule(n)?);
                }
            }
        }

        // --- variable layout ---
        let mut phases = Vec::with_capacity(np);
        let mut offset = 0usize;
        for p in 0..np {
            let nx = ocp.state_dim(p);
            let nu = ocp.control_dim(p);
            if nx > MAX_DIM || nu > MAX_DIM || ocp.num_path(p) > MAX_DIM || ocp.num_boundary(p) > MAX_DIM {
                return Err(TranscribeError::DimensionTooLarge(nx.max(nu)));
            }
            let pm = &mesh.phases[p];
            let n_colloc = pm.total_colloc_points();
            let n_support = n_colloc + 1;
            let state_offset = offset;
            offset += n_support * nx;
            let ctrl_offset = offset;
            offset += n_colloc * nu;

            let mut intervals = Vec::with_capacity(pm.orders.len());
            let mut point_interval = vec![0usize; n_colloc];
            let mut sigma_colloc = vec![0.0f64; n_colloc];
            let mut alpha = 0.0;
            let mut start_point = 0usize;
            for (k, (&order, &fraction)) in pm.orders.iter().zip(&pm.fractions).enumerate() {
                let rule = &rules[&order];
                for (i, &tau) in rule.nodes.iter().enumerate() {
                    point_interval[start_point + i] = k;
                    sigma_colloc[start_point + i] = alpha + fraction * (tau + 1.0) * 0.5;
                }
                intervals.push(IntervalInfo {
                    order,
                    fraction,
                    alpha,
                    start_point,
                });
                alpha += fraction;
                start_point += order;
            }

            phases.push(PhaseLayout {
                nx,
                nu,
                state_offset,
                ctrl_offset,
                n_colloc,
                n_support,
                intervals,
                point_interval,
                sigma_colloc,
                t0: TimeRef::Constant(0.0), // patched below
                tf: TimeRef::Constant(0.0),
                defect_row_offset: 0,
            });
        }
        // Time variables go last: per phase t0 then tf, if variable.
        let mut time_bounds = Vec::new();
        for p in 0..np {
            let (t0s, tfs) = ocp.time_spec(p);
            phases[p].t0 = match t0s {
                TimeSpec::Constant(v) => TimeRef::Constant(v),
                TimeSpec::Variable { lb, ub, guess } => {
                    time_bounds.push((lb, ub, guess));
                    let idx = offset;
                    offset += 1;
                    TimeRef::Var(idx)
                }
            };
            phases[p].tf = match tfs {
                TimeSpec::Constant(v) => TimeRef::Constant(v),
                TimeSpec::Variable { lb, ub, guess } => {
                    time_bounds.push((lb, ub, guess));
                    let idx = offset;
                    offset += 1;
                    TimeRef::Var(idx)
                }
            };
        }
        let n_vars = offset;

        // --- variable bounds ---
        let mut xl = vec![f64::NEG_INFINITY; n_vars];
        let mut xu = vec![f64::INFINITY; n_vars];
        for p in 0..np {
            let ph = &phases[p];
            let (slb, sub) = ocp.state_bounds(p);
            for s in 0..ph.n_support {
                for d in 0..ph.nx {
                    let g = ph.state_offset + s * ph.nx + d;
                    xl[g] = slb[d];
                    xu[g] = sub[d];
                }
            }
            let (clb, cub) = ocp.control_bounds(p);
            for c in 0..ph.n_colloc {
                for d in 0..ph.nu {
                    let g = ph.ctrl_offset + c * ph.nu + d;
                    xl[g] = clb[d];
                    xu[g] = cub[d];
                }
            }
            if let Some(x0) = ocp.initial_state(p) {
                for d in 0..ph.nx {
                    let g = ph.state_offset + d;
                    xl[g] = x0[d];
                    xu[g] = x0[d];
                }
            }
            if let Some(xf) = ocp.final_state(p) {
                for (d, v) in xf.iter().enumerate() {
                    if let Some(v) = v {
                        let g = ph.state_offset + (ph.n_support - 1) * ph.nx + d;
                        xl[g] = *v;
                        xu[g] = *v;
                    }
                }
            }
        }
        {
            let mut k = 0usize;
            for p in 0..np {
                for t in [phases[p].t0, phases[p].tf] {
                    if let TimeRef::Var(idx) = t {
                        let (lb, ub, _) = time_bounds[k];
                        xl[idx] = lb;
                        xu[idx] = ub;
                        k += 1;
                    }
                }
            }
        }

        let mut tr = Transcription {
            ocp,
            mesh,
            phases,
            rules,
            n_vars,
            xl,
            xu,
            cl: Vec::new(),
            cu: Vec::new(),
            rows: Vec::new(),
            obj_terms: Vec::new(),
            jac_structure: Vec::new(),
            hess_structure: Vec::new(),
            link_terms: Vec::new(),
        };
        tr.build_rows(time_bounds.iter().map(|&(_, _, g)| g).collect());
        Ok(tr)
    }

    fn time_var_positions(&self, phase: usize) -> Vec<usize> {
        let mut v = Vec::new();
        if let TimeRef::Var(i) = self.phases[phase].t0 {
            v.push(i);
        }
        if let TimeRef::Var(i) = self.phases[phase].tf {
            v.push(i);
        }
        v
    }

    fn build_rows(&mut self, time_guesses: Vec<f64>) {
        let _ = time_guesses;
        let np = self.ocp.num_phases();
        let mut rows: Vec<RowSpec> = Vec::new();
        let mut cl = Vec::new();
        let mut cu = Vec::new();

        // Defect rows.
        for p in 0..np {
            self.phases[p].defect_row_offset = rows.len();
            let ph = self.phases[p].clone();
            let affine = self.ocp.dynamics_affine(p);
            let tvars = self.time_var_positions(p);
            for (k, info) in ph.intervals.iter().enumerate() {
                let n = info.order;
                for i in 0..n {
                    let point = info.start_point + i;
                    for d in 0..ph.nx {
                        let mut inputs = Vec::with_capacity(n + 1 + ph.nx + ph.nu + 2);
                        for j in 0..=n {
                            inputs.push(ph.state_offset + (info.start_point + j) * ph.nx + d);
                        }
                        for dd in 0..ph.nx {
                            inputs.push(ph.state_offset + point * ph.nx + dd);
                        }
                        for uu in 0..ph.nu {
                            inputs.push(ph.ctrl_offset + point * ph.nu + uu);
                        }
                        inputs.extend_from_slice(&tvars);
                        let base_x = n + 1;
                        let base_t = base_x + ph.nx + ph.nu;
                        let nt = tvars.len();
                        let mut pairs = Vec::new();
                        if affine {
                            for a in 0..nt {
                                for b in 0..(ph.nx + ph.nu) {
                                    pairs.push((base_t + a, base_x + b));
                                }
                                for b in 0..=a {
                                    pairs.push((base_t + a, base_t + b));
                                }
                            }
                        } else {
                            let lo = base_x;
                            let hi = base_t + nt;
                            for a in lo..hi {
                                for b in lo..=a {
                                    pairs.push((a, b));
                                }
                            }
                        }
                        rows.push(RowSpec {
                            kind: RowKind::Defect {
                                phase: p,
                                interval: k,
                                node: i,
                                dim: d,
                            },
                            inputs,
                            hess_pairs: pairs,
                            hess_slots: Vec::new(),
                            jac_offset: 0,
                        });
                        cl.push(0.0);
                        cu.push(0.0);
                    }
                }
            }
        }

        // Path rows at every collocation point.
        for p in 0..np {
            let n_path = self.ocp.num_path(p);
            if n_path == 0 {
                continue;
            }
            let ph = self.phases[p].clone();
            let (plb, pub_) = self.ocp.path_bounds(p);
            let tvars = self.time_var_positions(p);
            for point in 0..ph.n_colloc {
                for r in 0..n_path {
                    let mut inputs = Vec::with_capacity(ph.nx + ph.nu + 2);
                    for dd in 0..ph.nx {
                        inputs.push(ph.state_offset + point * ph.nx + dd);
                    }
                    for uu in 0..ph.nu {
                        inputs.push(ph.ctrl_offset + point * ph.nu + uu);
                    }
                    inputs.extend_from_slice(&tvars);
                    let ni = inputs.len();
                    let mut pairs = Vec::new();
                    for a in 0..ni {
                        for b in 0..=a {
                            pairs.push((a, b));
                        }
                    }
                    rows.push(RowSpec {
                        kind: RowKind::Path { phase: p, point, row: r },
                        inputs,
                        hess_pairs: pairs,
                        hess_slots: Vec::new(),
                        jac_offset: 0,
                    });
                    cl.push(plb[r]);
                    cu.push(pub_[r]);
                }
            }
        }

        // Boundary rows on phase-end state and time.
        for p in 0..np {
            let nb = self.ocp.num_boundary(p);
            if nb == 0 {
                continue;
            }
            let ph = self.phases[p].clone();
            let (blb, bub) = self.ocp.boundary_bounds(p);
            for r in 0..nb {
                let mut inputs = Vec::with_capacity(ph.nx + 1);
                for dd in 0..ph.nx {
                    inputs.push(ph.state_offset + (ph.n_support - 1) * ph.nx + dd);
                }
                if let TimeRef::Var(i) = ph.tf {
                    inputs.push(i);
                }
                let ni = inputs.len();
                let mut pairs = Vec::new();
                for a in 0..ni {
                    for b in 0..=a {
                        pairs.push((a, b));
                    }
                }
                rows.push(RowSpec {
                    kind: RowKind::Boundary { phase: p, row: r },
                    inputs,
                    hess_pairs: pairs,
                    hess_slots: Vec::new(),
                    jac_offset: 0,
                });
                cl.push(blb[r]);
                cu.push(bub[r]);
            }
        }

        // Linkage rows (linear).
        let links = self.ocp.links();
        let mut link_terms = Vec::with_capacity(links.len());
        for (li, link) in links.iter().enumerate() {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            let mut lb = link.lb;
            let mut ub = link.ub;
            for &(var, coeff) in &link.terms {
                match self.resolve_link_var(var) {
                    Ok(g) => terms.push((g, coeff)),
                    Err(constant) => {
                        lb -= coeff * constant;
                        ub -= coeff * constant;
                    }
                }
            }
            let inputs: Vec<usize> = terms.iter().map(|&(g, _)| g).collect();
            rows.push(RowSpec {
                kind: RowKind::Link(li),
                inputs,
                hess_pairs: Vec::new(),
                hess_slots: Vec::new(),
                jac_offset: 0,
            });
            cl.push(lb);
            cu.push(ub);
            link_terms.push(terms);
        }
        self.link_terms = link_terms;

        // Objective terms: Mayer on time variables, quadrature per point.
        let mut obj_terms = Vec::new();
        {
            let mut inputs = Vec::new();
            for p in 0..np {
                inputs.extend(self.time_var_positions(p));
            }
            let ni = inputs.len();
            let mut pairs = Vec::new();
            for a in 0..ni {
                for b in 0..=a {
                    pairs.push((a, b));
                }
            }
            obj_terms.push(ObjTerm {
                kind: ObjKind::Mayer,
                inputs,
                hess_pairs: pairs,
                hess_slots: Vec::new(),
            });
        }
        for p in 0..np {
            if !self.ocp.has_lagrange(p) {
                continue;
            }
            let ph = self.phases[p].clone();
            let tvars = self.time_var_positions(p);
            for point in 0..ph.n_colloc {
                let mut inputs = Vec::with_capacity(ph.nx + ph.nu + 2);
                for dd in 0..ph.nx {
                    inputs.push(ph.state_offset + point * ph.nx + dd);
                }
                for uu in 0..ph.nu {
                    inputs.push(ph.ctrl_offset + point * ph.nu + uu);
                }
                inputs.extend_from_slice(&tvars);
                let ni = inputs.len();
                let mut pairs = Vec::new();
                for a in 0..ni {
                    for b in 0..=a {
                        pairs.push((a, b));
                    }
                }
                obj_terms.push(ObjTerm {
                    kind: ObjKind::Quad { phase: p, point },
                    inputs,
                    hess_pairs: pairs,
                    hess_slots: Vec::new(),
                });
            }
        }

        // Jacobian structure and Hessian slot assignment.
        let mut jac_structure = Vec::new();
        for (r, row) in rows.iter_mut().enumerate() {
            row.jac_offset = jac_structure.len();
            for &g in &row.inputs {
                jac_structure.push((r, g));
            }
        }
        let mut hess_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut hess_structure = Vec::new();
        let assign = |inputs: &[usize], pairs: &[(usize, usize)], map: &mut BTreeMap<(usize, usize), usize>, structure: &mut Vec<(usize, usize)>| {
            let mut slots = Vec::with_capacity(pairs.len());
            for &(a, b) in pairs {
                let (ga, gb) = (inputs[a], inputs[b]);
                let key = if ga >= gb { (ga, gb) } else { (gb, ga) };
                let slot = *map.entry(key).or_insert_with(|| {
                    structure.push(key);
                    structure.len() - 1
                });
                // A cross-position pair of the same variable contributes to
                // the diagonal from both orderings.
                let mult = if ga == gb && a != b { 2.0 } else { 1.0 };
                slots.push((slot, mult));
            }
            slots
        };
        for row in rows.iter_mut() {
            row.hess_slots = assign(&row.inputs, &row.hess_pairs, &mut hess_map, &mut hess_structure);
        }
        for term in obj_terms.iter_mut() {
            term.hess_slots = assign(&term.inputs, &term.hess_pairs, &mut hess_map, &mut hess_structure);
        }

        self.rows = rows;
        self.obj_terms = obj_terms;
        self.cl = cl;
        self.cu = cu;
        self.jac_structure = jac_structure;
        self.hess_structure = hess_structure;
    }

    /// Resolve a link variable to a global index, or return the constant it
    /// refers to (constant phase times).
    fn resolve_link_var(&self, var: LinkVar) -> Result<usize, f64> {
        match var {
            LinkVar::StateStart { phase, dim } => Ok(self.phases[phase].state_offset + dim),
            LinkVar::StateEnd { phase, dim } => {
                let ph = &self.phases[phase];
                Ok(ph.state_offset + (ph.n_support - 1) * ph.nx + dim)
            }
            LinkVar::TimeStart(phase) => match self.phases[phase].t0 {
                TimeRef::Var(i) => Ok(i),
                TimeRef::Constant(v) => Err(v),
            },
            LinkVar::TimeEnd(phase) => match self.phases[phase].tf {
                TimeRef::Var(i) => Ok(i),
                TimeRef::Constant(v) => Err(v),
            },
        }
    }

    // --- public index helpers ---

    pub fn num_vars(&self) -> usize {
        self.n_vars
    }
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
    pub fn state_index(&self, phase: usize, support: usize, dim: usize) -> usize {
        let ph = &self.phases[phase];
        ph.state_offset + support * ph.nx + dim
    }
    pub fn control_index(&self, phase: usize, point: usize, dim: usize) -> usize {
        let ph = &self.phases[phase];
        ph.ctrl_offset + point * ph.nu + dim
    }
    pub fn time_refs(&self, phase: usize) -> (TimeRef, TimeRef) {
        (self.phases[phase].t0, self.phases[phase].tf)
    }
    pub fn defect_row_index(&self, phase: usize, point: usize, dim: usize) -> usize {
        self.phases[phase].defect_row_offset + point * self.phases[phase].nx + dim
    }
    pub fn rule(&self, order: usize) -> &LgrRule {
        &self.rules[&order]
    }
    pub fn var_bounds_ref(&self) -> (&[f64], &[f64]) {
        (&self.xl, &self.xu)
    }

    /// Normalized support-point positions of a phase in [0, 1].
    pub fn sigma_support(&self, phase: usize) -> Vec<f64> {
        let ph = &self.phases[phase];
        let mut v: Vec<f64> = ph.sigma_colloc.clone();
        v.push(1.0);
        v
    }

    pub fn time_value(&self, x: &[f64], r: TimeRef) -> f64 {
        match r {
            TimeRef::Constant(v) => v,
            TimeRef::Var(i) => x[i],
        }
    }

    // --- generic row evaluation ---

    fn read_times<T: Scalar>(&self, phase: usize, tail: &[T]) -> (T, T) {
        let ph = &self.phases[phase];
        let mut k = 0;
        let t0 = match ph.t0 {
            TimeRef::Constant(v) => T::cst(v),
            TimeRef::Var(_) => {
                let v = tail[k];
                k += 1;
                v
            }
        };
        let tf = match ph.tf {
            TimeRef::Constant(v) => T::cst(v),
            TimeRef::Var(_) => {
                let v = tail[k];
                k += 1;
                v
            }
        };
        let _ = k;
        (t0, tf)
    }

    fn eval_row<T: Scalar>(&self, spec: &RowSpec, vals: &[T]) -> T {
        match spec.kind {
            RowKind::Defect {
                phase,
                interval,
                node,
                dim,
            } => {
                let ph = &self.phases[phase];
                let info = &ph.intervals[interval];
                let n = info.order;
                let rule = &self.rules[&n];
                let mut dxd = T::cst(0.0);
                for j in 0..=n {
                    dxd = dxd + vals[j].scale(rule.diff[node][j]);
                }
                let xs = &vals[n + 1..n + 1 + ph.nx];
                let us = &vals[n + 1 + ph.nx..n + 1 + ph.nx + ph.nu];
                let (t0, tf) = self.read_times(phase, &vals[n + 1 + ph.nx + ph.nu..]);
                let point = info.start_point + node;
                let sigma = ph.sigma_colloc[point];
                let t = t0.scale(1.0 - sigma) + tf.scale(sigma);
                let mut f = [T::cst(0.0); MAX_DIM];
                self.ocp.dynamics(phase, xs, us, t, &mut f[..ph.nx]);
                let half_dt = (tf - t0).scale(info.fraction * 0.5);
                dxd - half_dt * f[dim]
            }
            RowKind::Path { phase, point, row } => {
                let ph = &self.phases[phase];
                let xs = &vals[..ph.nx];
                let us = &vals[ph.nx..ph.nx + ph.nu];
                let (t0, tf) = self.read_times(phase, &vals[ph.nx + ph.nu..]);
                let sigma = ph.sigma_colloc[point];
                let t = t0.scale(1.0 - sigma) + tf.scale(sigma);
                let mut out = [T::cst(0.0); MAX_DIM];
                self.ocp.path(phase, xs, us, t, &mut out[..self.ocp.num_path(phase)]);
                out[row]
            }
            RowKind::Boundary { phase, row } => {
                let ph = &self.phases[phase];
                let xs = &vals[..ph.nx];
                let t_end = match ph.tf {
                    TimeRef::Constant(v) => T::cst(v),
                    TimeRef::Var(_) => vals[ph.nx],
                };
                let mut out = [T::cst(0.0); MAX_DIM];
                self.ocp
                    .boundary(phase, xs, t_end, &mut out[..self.ocp.num_boundary(phase)]);
                out[row]
            }
            RowKind::Link(li) => {
                let mut acc = T::cst(0.0);
                for (k, &(_, coeff)) in self.link_terms[li].iter().enumerate() {
                    acc = acc + vals[k].scale(coeff);
                }
                acc
            }
        }
    }

    fn eval_obj_term<T: Scalar>(&self, term: &ObjTerm, vals: &[T]) -> T {
        match term.kind {
            ObjKind::Mayer => {
                let np = self.ocp.num_phases();
                let mut times = Vec::with_capacity(np);
                let mut k = 0usize;
                for p in 0..np {
                    let ph = &self.phases[p];
                    let t0 = match ph.t0 {
                        TimeRef::Constant(v) => T::cst(v),
                        TimeRef::Var(_) => {
                            let v = vals[k];
                            k += 1;
                            v
                        }
                    };
                    let tf = match ph.tf {
                        TimeRef::Constant(v) => T::cst(v),
                        TimeRef::Var(_) => {
                            let v = vals[k];
                            k += 1;
                            v
                        }
                    };
                    times.push((t0, tf));
                }
                self.ocp.mayer(&times)
            }
            ObjKind::Quad { phase, point } => {
                let ph = &self.phases[phase];
                let xs = &vals[..ph.nx];
                let us = &vals[ph.nx..ph.nx + ph.nu];
                let (t0, tf) = self.read_times(phase, &vals[ph.nx + ph.nu..]);
                let sigma = ph.sigma_colloc[point];
                let t = t0.scale(1.0 - sigma) + tf.scale(sigma);
                let interval = &ph.intervals[ph.point_interval[point]];
                let rule = &self.rules[&interval.order];
                let w = rule.weights[point - interval.start_point];
                let l = self.ocp.lagrange(phase, xs, us, t);
                l * (tf - t0).scale(interval.fraction * 0.5 * w)
            }
        }
    }
}

impl<O: Ocp> rejoin_nlp::NlpProblem for Transcription<'_, O> {
    fn num_vars(&self) -> usize {
        self.n_vars
    }
    fn num_cons(&self) -> usize {
        self.rows.len()
    }
    fn var_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb.copy_from_slice(&self.xl);
        ub.copy_from_slice(&self.xu);
    }
    fn con_bounds(&self, lb: &mut [f64], ub: &mut [f64]) {
        lb.copy_from_slice(&self.cl);
        ub.copy_from_slice(&self.cu);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut scratch: Vec<f64> = Vec::new();
        let mut total = 0.0;
        for term in &self.obj_terms {
            scratch.clear();
            scratch.extend(term.inputs.iter().map(|&g| x[g]));
            total += self.eval_obj_term(term, &scratch);
        }
        total
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        let mut scratch: Vec<Dual> = Vec::new();
        for term in &self.obj_terms {
            for (k, &g) in term.inputs.iter().enumerate() {
                scratch.clear();
                scratch.extend(term.inputs.iter().map(|&gg| Dual::cst(x[gg])));
                scratch[k].d = 1.0;
                grad[g] += self.eval_obj_term(term, &scratch).d;
            }
        }
    }

    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        let mut scratch: Vec<f64> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            scratch.clear();
            scratch.extend(row.inputs.iter().map(|&g| x[g]));
            c[r] = self.eval_row(row, &scratch);
        }
    }

    fn jac_structure(&self) -> Vec<(usize, usize)> {
        self.jac_structure.clone()
    }

    fn jacobian(&self, x: &[f64], vals: &mut [f64]) {
        let mut scratch: Vec<Dual> = Vec::new();
        for row in &self.rows {
            for k in 0..row.inputs.len() {
                scratch.clear();
                scratch.extend(row.inputs.iter().map(|&g| Dual::cst(x[g])));
                scratch[k].d = 1.0;
                vals[row.jac_offset + k] = self.eval_row(row, &scratch).d;
            }
        }
    }

    fn hess_structure(&self) -> Vec<(usize, usize)> {
        self.hess_structure.clone()
    }

    fn hessian(&self, x: &[f64], sigma: f64, lambda: &[f64], vals: &mut [f64]) {
        for v in vals.iter_mut() {
            *v = 0.0;
        }
        let mut scratch: Vec<Dual2> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if row.hess_pairs.is_empty() || lambda[r] == 0.0 {
                continue;
            }
            for (pi, &(a, b)) in row.hess_pairs.iter().enumerate() {
                scratch.clear();
                scratch.extend(row.inputs.iter().map(|&g| Dual2::cst(x[g])));
                scratch[a].da = 1.0;
                scratch[b].db = 1.0;
                let d2 = self.eval_row(row, &scratch).dab;
                let (slot, mult) = row.hess_slots[pi];
                vals[slot] += lambda[r] * d2 * mult;
            }
        }
        if sigma != 0.0 {
            for term in &self.obj_terms {
                for (pi, &(a, b)) in term.hess_pairs.iter().enumerate() {
                    scratch.clear();
                    scratch.extend(term.inputs.iter().map(|&g| Dual2::cst(x[g])));
                    scratch[a].da = 1.0;
                    scratch[b].db = 1.0;
                    let d2 = self.eval_obj_term(term, &scratch).dab;
                    let (slot, mult) = term.hess_slots[pi];
                    vals[slot] += sigma * d2 * mult;
                }
            }
        }
    }

    fn name(&self) -> &str {
        self.ocp.name()
    }
}
