//! Generic description of a multi-phase optimal control problem.
//!
//! Implementors provide dynamics, path/boundary constraints and costs as
//! functions generic over [`Scalar`](crate::autodiff::Scalar) so the
//! transcription can evaluate values and derivatives from the same code.
//! All quantities are expressed in solver-scaled units; `state_scale` /
//! `control_scale` recover physical units for reporting.

use crate::autodiff::Scalar;

/// Phase start or end time: a constant or a decision variable with bounds.
#[derive(Debug, Clone, Copy)]
pub enum TimeSpec {
    Constant(f64),
    Variable { lb: f64, ub: f64, guess: f64 },
}

/// A variable referenced by a linear linkage row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkVar {
    StateStart { phase: usize, dim: usize },
    StateEnd { phase: usize, dim: usize },
    TimeStart(usize),
    TimeEnd(usize),
}

/// Linear linkage constraint across phase boundaries.
#[derive(Debug, Clone)]
pub struct LinkRow {
    pub terms: Vec<(LinkVar, f64)>,
    pub lb: f64,
    pub ub: f64,
}

pub trait Ocp {
    fn num_phases(&self) -> usize;
    fn state_dim(&self, phase: usize) -> usize;
    fn control_dim(&self, phase: usize) -> usize;

    /// (start, end) time specification of a phase.
    fn time_spec(&self, phase: usize) -> (TimeSpec, TimeSpec);

    /// Componentwise state/control bounds, replicated at every grid point.
    fn state_bounds(&self, phase: usize) -> (Vec<f64>, Vec<f64>);
    fn control_bounds(&self, phase: usize) -> (Vec<f64>, Vec<f64>);

    /// Fixed initial state (applied as equal bounds), if any.
    fn initial_state(&self, phase: usize) -> Option<Vec<f64>> {
        let _ = phase;
        None
    }
    /// Per-dimension fixed final state, if any.
    fn final_state(&self, phase: usize) -> Option<Vec<Option<f64>>> {
        let _ = phase;
        None
    }

    /// State derivative; `out` has `state_dim` entries.
    fn dynamics<T: Scalar>(&self, phase: usize, x: &[T], u: &[T], t: T, out: &mut [T]);
    /// Declares that the dynamics are affine in `(x, u)`; the transcription
    /// then declares only time-coupled Hessian entries for defect rows.
    fn dynamics_affine(&self, phase: usize) -> bool {
        let _ = phase;
        false
    }

    fn num_path(&self, phase: usize) -> usize {
        let _ = phase;
        0
    }
    fn path_bounds(&self, phase: usize) -> (Vec<f64>, Vec<f64>) {
        let _ = phase;
        (Vec::new(), Vec::new())
    }
    fn path<T: Scalar>(&self, phase: usize, x: &[T], u: &[T], t: T, out: &mut [T]) {
        let _ = (phase, x, u, t, out);
    }

    fn has_lagrange(&self, phase: usize) -> bool {
        let _ = phase;
        false
    }
    fn lagrange<T: Scalar>(&self, phase: usize, x: &[T], u: &[T], t: T) -> T {
        let _ = (phase, x, u, t);
        T::cst(0.0)
    }

    /// Nonlinear constraints on the phase-end state and time.
    fn num_boundary(&self, phase: usize) -> usize {
        let _ = phase;
        0
    }
    fn boundary_bounds(&self, phase: usize) -> (Vec<f64>, Vec<f64>) {
        let _ = phase;
        (Vec::new(), Vec::new())
    }
    fn boundary<T: Scalar>(&self, phase: usize, x_end: &[T], t_end: T, out: &mut [T]) {
        let _ = (phase, x_end, t_end, out);
    }

    /// Mayer cost as a function of the per-phase `(t0, tf)` pairs.
    fn mayer<T: Scalar>(&self, times: &[(T, T)]) -> T {
        let _ = times;
        T::cst(0.0)
    }

    fn links(&self) -> Vec<LinkRow> {
        Vec::new()
    }

    /// Multiplicative factors taking scaled values to physical units.
    fn state_scale(&self, phase: usize) -> Vec<f64> {
        vec![1.0; self.state_dim(phase)]
    }
    fn control_scale(&self, phase: usize) -> Vec<f64> {
        vec![1.0; self.control_dim(phase)]
    }

    fn name(&self) -> &str {
        "ocp"
    }
}

/// Collocation grid: per phase, interval fractions and orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub phases: Vec<PhaseMesh>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMesh {
    /// Positive interval width fractions summing to one.
    pub fractions: Vec<f64>,
    /// Collocation order per interval, each in `[2, 16]`.
    pub orders: Vec<usize>,
}

impl PhaseMesh {
    pub fn uniform(intervals: usize, order: usize) -> PhaseMesh {
        PhaseMesh {
            fractions: vec![1.0 / intervals as f64; intervals],
            orders: vec![order; intervals],
        }
    }

    pub fn total_colloc_points(&self) -> usize {
        self.orders.iter().sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.fractions.len() != self.orders.len() || self.fractions.is_empty() {
            return Err("mesh interval lists are empty or mismatched".into());
        }
        if self.fractions.iter().any(|&f| f <= 0.0) {
            return Err("mesh fractions must be positive".into());
        }
        let s: f64 = self.fractions.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(format!("mesh fractions sum to {s}, expected 1"));
        }
        if self.orders.iter().any(|&n| !(2..=16).contains(&n)) {
            return Err("mesh orders must lie in [2, 16]".into());
        }
        Ok(())
    }
}

impl Mesh {
    pub fn uniform(phases: usize, intervals: usize, order: usize) -> Mesh {
        Mesh {
            phases: (0..phases).map(|_| PhaseMesh::uniform(intervals, order)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (p, pm) in self.phases.iter().enumerate() {
            pm.validate().map_err(|e| format!("phase {p}: {e}"))?;
        }
        Ok(())
    }
}
