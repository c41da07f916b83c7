//! Post-solve optimality and feasibility diagnostics.
//!
//! Costates are recovered from the defect-constraint multipliers by the
//! Radau weight transformation; the discrete Hamiltonian `H = L + lambda'F`
//! is then evaluated at every collocation point. On an extremal of this
//! problem the Hamiltonian is constant within each phase, which is the
//! optimality witness the diagnostics assert. Feasibility extrema are
//! computed over densely sampled trajectory rows.

use crate::formation::{ring_deviation, FormationOcp, ScenarioConfig};
use crate::output::TrajRow;
use crate::units::{Vec3, G_TO_FPS2, KNOT_TO_FPS, METER_TO_FT};
use rejoin_colloc::{CollocatedSolution, Ocp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("solution carries no defect multipliers (phase {0})")]
    MissingMultipliers(usize),
    #[error("dimension mismatch between solution and costates")]
    Dimension,
}

/// Costate trajectories per phase, at the collocation points plus the
/// non-collocated phase end. Values are in solver-scaled units.
#[derive(Debug, Clone)]
pub struct CostateEstimate {
    pub phases: Vec<PhaseCostates>,
}

#[derive(Debug, Clone)]
pub struct PhaseCostates {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// LGR multiplier transformation: the costate at collocation point `i` is
/// `-y_i / w_i` under the `f + y^T c` multiplier convention used by the
/// solver; the phase-end costate follows from stationarity with respect to
/// the non-collocated endpoint state.
pub fn estimate_costates(sol: &CollocatedSolution) -> Result<CostateEstimate, ValidationError> {
    let mut phases = Vec::with_capacity(sol.phases.len());
    for (p, ph) in sol.phases.iter().enumerate() {
        if ph.defect_multipliers.len() != ph.colloc_times.len() {
            return Err(ValidationError::MissingMultipliers(p));
        }
        let mut times = ph.colloc_times.clone();
        let mut values: Vec<Vec<f64>> = ph
            .defect_multipliers
            .iter()
            .zip(&ph.weights)
            .map(|(y, w)| y.iter().map(|v| -v / w).collect())
            .collect();
        let last = ph.intervals.last().expect("phase has intervals");
        let mut end = vec![0.0; ph.nx];
        for (i, dcol) in last.end_diff_col.iter().enumerate() {
            let y = &ph.defect_multipliers[last.start_point + i];
            for d in 0..ph.nx {
                end[d] -= dcol * y[d];
            }
        }
        times.push(ph.tf);
        values.push(end);
        phases.push(PhaseCostates { times, values });
    }
    Ok(CostateEstimate { phases })
}

#[derive(Debug, Clone)]
pub struct HamiltonianSeries {
    pub phases: Vec<PhaseHamiltonian>,
    /// Half-width of the exclusion window around phase switches.
    pub switch_window_s: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseHamiltonian {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Mean over points outside the switch window.
    pub mean: f64,
    /// Max |H - mean| outside the switch window.
    pub max_abs_dev: f64,
}

impl PhaseHamiltonian {
    /// Constancy metric: `max |H - mean| <= scale * max(1, |mean|)`.
    pub fn constancy_ratio(&self) -> f64 {
        self.max_abs_dev / self.mean.abs().max(1.0)
    }
}

/// Discrete Hamiltonian `H_k = L_k + lambda_k' F_k` at every collocation
/// point and the phase end. The constancy summary excludes a window around
/// interior phase boundaries, where multiplier estimates are noisy.
pub fn discrete_hamiltonian<O: Ocp>(
    ocp: &O,
    sol: &CollocatedSolution,
    costates: &CostateEstimate,
    switch_window_s: f64,
) -> Result<HamiltonianSeries, ValidationError> {
    let n_phases = sol.phases.len();
    let mut phases = Vec::with_capacity(n_phases);
    // Interior switch times.
    let switches: Vec<f64> = sol.phases[..n_phases - 1].iter().map(|p| p.tf).collect();
    for (p, (ph, lam)) in sol.phases.iter().zip(&costates.phases).enumerate() {
        if lam.values.len() != ph.colloc_times.len() + 1 {
            return Err(ValidationError::Dimension);
        }
        let mut times = Vec::with_capacity(ph.colloc_times.len() + 1);
        let mut values = Vec::with_capacity(ph.colloc_times.len() + 1);
        let mut f = vec![0.0; ph.nx];
        let has_l = ocp.has_lagrange(p);
        for c in 0..=ph.colloc_times.len() {
            let (t, x, u): (f64, &[f64], &[f64]) = if c < ph.colloc_times.len() {
                (ph.colloc_times[c], &ph.states[c], &ph.controls[c])
            } else {
                (ph.tf, &ph.states[ph.states.len() - 1], &ph.control_end)
            };
            ocp.dynamics(p, x, u, t, &mut f);
            let l = if has_l { ocp.lagrange(p, x, u, t) } else { 0.0 };
            let h = l + lam.values[c]
                .iter()
                .zip(&f)
                .map(|(li, fi)| li * fi)
                .sum::<f64>();
            times.push(t);
            values.push(h);
        }
        let outside: Vec<usize> = (0..times.len())
            .filter(|&i| {
                switches
                    .iter()
                    .all(|&s| (times[i] - s).abs() >= switch_window_s)
            })
            .collect();
        let mean = if outside.is_empty() {
            0.0
        } else {
            outside.iter().map(|&i| values[i]).sum::<f64>() / outside.len() as f64
        };
        let max_abs_dev = outside
            .iter()
            .map(|&i| (values[i] - mean).abs())
            .fold(0.0f64, f64::max);
        phases.push(PhaseHamiltonian {
            times,
            values,
            mean,
            max_abs_dev,
        });
    }
    Ok(HamiltonianSeries {
        phases,
        switch_window_s,
    })
}

/// Feasibility extrema over trajectory rows (physical units).
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub max_jet_wash_ft2: f64,
    pub min_speed_kt: f64,
    pub max_speed_kt: f64,
    pub min_accel_g: f64,
    pub max_accel_g: f64,
    pub max_control_g_per_s: f64,
    /// Ring residuals at the phase-1 terminal row.
    pub terminal_f1_ft2: f64,
    pub terminal_f2_ft2: f64,
    /// Discontinuities across the phase boundary.
    pub max_link_pos_ft: f64,
    pub max_link_vel_fps: f64,
    pub max_link_acc_fps2: f64,
    /// Largest physical distance from the ring over phase 2, meters.
    pub max_phase2_ring_deviation_m: f64,
    pub violations: Vec<String>,
}

/// Physical ring gaps of a row: (|axial gap|, |in-plane distance - R|), feet.
pub fn ring_gaps_ft(row: &TrajRow, ring_radius_ft: f64) -> (f64, f64) {
    let axial = row.f1.max(0.0).sqrt();
    let radial = (row.f2 + ring_radius_ft * ring_radius_ft).max(0.0).sqrt() - ring_radius_ft;
    (axial, radial.abs())
}

pub fn feasibility_report(cfg: &ScenarioConfig, rows: &[TrajRow]) -> FeasibilityReport {
    let mut r = FeasibilityReport {
        max_jet_wash_ft2: f64::NEG_INFINITY,
        min_speed_kt: f64::INFINITY,
        max_speed_kt: f64::NEG_INFINITY,
        min_accel_g: f64::INFINITY,
        max_accel_g: f64::NEG_INFINITY,
        max_control_g_per_s: 0.0,
        terminal_f1_ft2: 0.0,
        terminal_f2_ft2: 0.0,
        max_link_pos_ft: 0.0,
        max_link_vel_fps: 0.0,
        max_link_acc_fps2: 0.0,
        max_phase2_ring_deviation_m: 0.0,
        violations: Vec::new(),
    };
    let mut last_phase1: Option<&TrajRow> = None;
    let mut first_phase2: Option<&TrajRow> = None;
    for row in rows {
        let speed = Vec3::from_array(row.v).norm() / KNOT_TO_FPS;
        let accel = Vec3::from_array(row.a).norm() / G_TO_FPS2;
        r.min_speed_kt = r.min_speed_kt.min(speed);
        r.max_speed_kt = r.max_speed_kt.max(speed);
        r.min_accel_g = r.min_accel_g.min(accel);
        r.max_accel_g = r.max_accel_g.max(accel);
        r.max_jet_wash_ft2 = r.max_jet_wash_ft2.max(row.jet_wash);
        for c in row.u {
            r.max_control_g_per_s = r.max_control_g_per_s.max(c.abs() / G_TO_FPS2);
        }
        if row.phase == 1 {
            last_phase1 = Some(row);
        }
        if row.phase == 2 {
            if first_phase2.is_none() {
                first_phase2 = Some(row);
            }
            let (axial, radial) = ring_gaps_ft(row, cfg.ring.radius_ft);
            r.max_phase2_ring_deviation_m = r
                .max_phase2_ring_deviation_m
                .max(axial.max(radial) / METER_TO_FT);
        }
    }
    if let Some(row) = last_phase1 {
        r.terminal_f1_ft2 = row.f1;
        r.terminal_f2_ft2 = row.f2;
    }
    if let (Some(a), Some(b)) = (last_phase1, first_phase2) {
        r.max_link_pos_ft = (Vec3::from_array(b.p) - Vec3::from_array(a.p)).norm();
        r.max_link_vel_fps = (Vec3::from_array(b.v) - Vec3::from_array(a.v)).norm();
        r.max_link_acc_fps2 = (Vec3::from_array(b.a) - Vec3::from_array(a.a)).norm();
    }

    // Violation listing against the scenario bounds, with a small relative
    // slack for interpolated samples between enforced collocation points.
    let env = &cfg.envelope;
    let rel = 2e-3;
    if r.max_speed_kt > env.v_max_kt * (1.0 + rel) {
        r.violations
            .push(format!("max speed {:.2} kt exceeds {} kt", r.max_speed_kt, env.v_max_kt));
    }
    if r.min_speed_kt < env.v_min_kt * (1.0 - rel) {
        r.violations
            .push(format!("min speed {:.2} kt below {} kt", r.min_speed_kt, env.v_min_kt));
    }
    if r.max_accel_g > env.a_max_g * (1.0 + rel) {
        r.violations
            .push(format!("max accel {:.3} g exceeds {} g", r.max_accel_g, env.a_max_g));
    }
    if r.min_accel_g < env.a_min_g * (1.0 - 10.0 * rel) {
        r.violations
            .push(format!("min accel {:.3} g below {} g", r.min_accel_g, env.a_min_g));
    }
    if r.max_control_g_per_s > env.jerk_max_g_per_s * (1.0 + rel) {
        r.violations.push(format!(
            "max jerk component {:.3} g/s exceeds {} g/s",
            r.max_control_g_per_s, env.jerk_max_g_per_s
        ));
    }
    if r.max_jet_wash_ft2 > 0.2 {
        r.violations.push(format!(
            "jet-wash constraint positive: {:.3} ft^2",
            r.max_jet_wash_ft2
        ));
    }
    let ((_, e1), (_, e2)) =
        crate::formation::terminal_ring_bounds(&cfg.ring, cfg.formation_tolerance_m);
    if r.terminal_f1_ft2.abs() > e1 * (1.0 + rel) || r.terminal_f2_ft2.abs() > e2 * (1.0 + rel) {
        r.violations.push(format!(
            "terminal ring residuals ({:.1}, {:.1}) ft^2 outside tolerances ({:.1}, {:.1})",
            r.terminal_f1_ft2, r.terminal_f2_ft2, e1, e2
        ));
    }
    let link_tol_ft = cfg.continuity_tolerance_m * METER_TO_FT;
    if r.max_link_pos_ft > link_tol_ft * 2.0 {
        r.violations.push(format!(
            "phase-boundary position jump {:.3} ft exceeds {:.3} ft",
            r.max_link_pos_ft,
            link_tol_ft * 2.0
        ));
    }
    r
}

/// Time series of the ring deviation functions with physical distances.
#[derive(Debug, Clone)]
pub struct RingTrace {
    pub times: Vec<f64>,
    pub f1_ft2: Vec<f64>,
    pub f2_ft2: Vec<f64>,
    pub axial_dev_m: Vec<f64>,
    pub radial_dev_m: Vec<f64>,
    pub phase: Vec<usize>,
}

pub fn ring_deviation_trace(cfg: &ScenarioConfig, rows: &[TrajRow]) -> RingTrace {
    let mut tr = RingTrace {
        times: Vec::with_capacity(rows.len()),
        f1_ft2: Vec::with_capacity(rows.len()),
        f2_ft2: Vec::with_capacity(rows.len()),
        axial_dev_m: Vec::with_capacity(rows.len()),
        radial_dev_m: Vec::with_capacity(rows.len()),
        phase: Vec::with_capacity(rows.len()),
    };
    for row in rows {
        let (axial, radial) = ring_gaps_ft(row, cfg.ring.radius_ft);
        tr.times.push(row.t);
        tr.f1_ft2.push(row.f1);
        tr.f2_ft2.push(row.f2);
        tr.axial_dev_m.push(axial / METER_TO_FT);
        tr.radial_dev_m.push(radial / METER_TO_FT);
        tr.phase.push(row.phase);
    }
    tr
}

/// Recompute the two deviation functions for a follower/leader geometry,
/// used by file validation and by the study probes.
pub fn deviations_for(
    ocp_cfg: &ScenarioConfig,
    p_follower_ned: Vec3,
    leader_p_ned: Vec3,
    gamma: f64,
    chi: f64,
) -> (f64, f64, f64) {
    let p_d = p_follower_ned - leader_p_ned;
    let dev = ring_deviation(
        p_d,
        crate::units::Angle::from_radians(gamma),
        crate::units::Angle::from_radians(chi),
        &ocp_cfg.ring,
    );
    let jw = crate::formation::jet_wash_value(
        p_d,
        crate::units::Angle::from_radians(gamma),
        crate::units::Angle::from_radians(chi),
        ocp_cfg.ring.jet_wash_radius_ft,
    );
    (dev.axial, dev.radial, jw)
}

/// Phase-2 cost invariance probe: resample a converged solution onto
/// arbitrary ring angles (a dynamics-infeasible motion along the ring) and
/// evaluate the deviation integrand, which must stay identically zero.
pub fn along_ring_integrand(ocp: &FormationOcp, thetas: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &(t, theta) in thetas {
        let ls = ocp.leader.sample(t).expect("time inside horizon");
        let offset = Vec3::new(
            ocp.cfg.ring.center_leader_frame.x,
            ocp.cfg.ring.radius_ft * theta.cos(),
            ocp.cfg.ring.radius_ft * theta.sin(),
        );
        let p_d = crate::units::rotate_leader_to_inertial(
            ls.gamma.radians(),
            ls.chi.radians(),
            offset,
        );
        let val = crate::formation::phase2_integrand(p_d, ls.gamma, ls.chi, &ocp.cfg.ring);
        worst = worst.max(val.abs());
    }
    worst
}

/// One row of the initial-guess comparison study.
#[derive(Debug, Clone)]
pub struct GuessStudyRow {
    pub target: crate::guess::RingTarget,
    pub rejoin_time_s: f64,
    pub cost: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GuessStudyReport {
    pub rows: Vec<GuessStudyRow>,
    /// Pairwise max position separation over the common phase-2 window, ft.
    pub separation_ft: Vec<Vec<f64>>,
}

impl GuessStudyReport {
    pub fn cost_spread_relative(&self) -> f64 {
        let costs: Vec<f64> = self.rows.iter().map(|r| r.cost).collect();
        let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / min.abs().max(1e-30)
    }
    pub fn time_spread_relative(&self) -> f64 {
        let ts: Vec<f64> = self.rows.iter().map(|r| r.rejoin_time_s).collect();
        let max = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / min.abs().max(1e-30)
    }
    pub fn min_pairwise_separation_ft(&self) -> f64 {
        let n = self.separation_ft.len();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                min = min.min(self.separation_ft[i][j]);
            }
        }
        min
    }
}

/// Pairwise max separation of solutions over a common phase-2 time grid.
pub fn pairwise_separation(solutions: &[&CollocatedSolution]) -> Vec<Vec<f64>> {
    let n = solutions.len();
    let t_start = solutions
        .iter()
        .map(|s| s.phases[1].t0)
        .fold(f64::NEG_INFINITY, f64::max);
    let t_end = solutions
        .iter()
        .map(|s| s.phases[1].tf)
        .fold(f64::INFINITY, f64::min);
    let steps = 600;
    let mut sep = vec![vec![0.0f64; n]; n];
    for k in 0..=steps {
        let t = t_start + (t_end - t_start) * k as f64 / steps as f64;
        let positions: Vec<Vec3> = solutions
            .iter()
            .map(|s| {
                let ph = &s.phases[1];
                let x = ph.state_at(t);
                Vec3::new(
                    x[0] * ph.state_scale[0],
                    x[1] * ph.state_scale[1],
                    x[2] * ph.state_scale[2],
                )
            })
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (positions[i] - positions[j]).norm();
                if d > sep[i][j] {
                    sep[i][j] = d;
                    sep[j][i] = d;
                }
            }
        }
    }
    sep
}
