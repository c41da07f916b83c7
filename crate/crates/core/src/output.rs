//! Bit-stable text artifacts: trajectory files, diagnostics, manifests and
//! iteration logs. All numeric output uses 12 significant digits so
//! identical runs produce byte-identical files.

use crate::formation::{FormationOcp, ScenarioConfig};
use crate::guess::GuessTrajectory;
use crate::units::{Vec3, FT_TO_HM};
use crate::validation::{FeasibilityReport, HamiltonianSeries, RingTrace};
use rejoin_colloc::CollocatedSolution;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trajectory file {path}: {reason}")]
    Format { path: String, reason: String },
}

fn io_err(path: &Path, source: std::io::Error) -> OutputError {
    OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Fixed 12-significant-digit formatting.
pub fn fmt_num(x: f64) -> String {
    format!("{:.11e}", x)
}

/// One output sample. User-facing conventions: third components are
/// altitude-up, positions in feet, angles in radians.
#[derive(Debug, Clone, Copy)]
pub struct TrajRow {
    pub t: f64,
    pub p: [f64; 3],
    pub v: [f64; 3],
    pub a: [f64; 3],
    pub u: [f64; 3],
    pub phase: usize,
    pub leader_p: [f64; 3],
    pub leader_v: [f64; 3],
    pub gamma: f64,
    pub chi: f64,
    pub f1: f64,
    pub f2: f64,
    pub jet_wash: f64,
}

pub const TRAJ_COLUMNS: &str = "t_s p_n_ft p_e_ft p_alt_ft v_n_fps v_e_fps v_up_fps \
a_n_fps2 a_e_fps2 a_up_fps2 u_n_fps3 u_e_fps3 u_up_fps3 phase \
l_p_n_ft l_p_e_ft l_p_alt_ft l_v_n_fps l_v_e_fps l_v_up_fps gamma_rad chi_rad \
ring_f1_ft2 ring_f2_ft2 jet_wash_ft2";

fn ned_to_up(v: [f64; 3]) -> [f64; 3] {
    [v[0], v[1], -v[2]]
}

fn sample_row(ocp: &FormationOcp, phase_idx: usize, t: f64, x_scaled: &[f64], u_scaled: &[f64]) -> TrajRow {
    let s = 1.0 / FT_TO_HM;
    let p = Vec3::new(x_scaled[0] * s, x_scaled[1] * s, x_scaled[2] * s);
    let v = Vec3::new(x_scaled[3] * s, x_scaled[4] * s, x_scaled[5] * s);
    let a = Vec3::new(x_scaled[6] * s, x_scaled[7] * s, x_scaled[8] * s);
    let u = Vec3::new(u_scaled[0] * s, u_scaled[1] * s, u_scaled[2] * s);
    let ls = ocp
        .leader
        .sample(t.clamp(0.0, ocp.leader.horizon_s))
        .expect("sample time clamped into horizon");
    let dev = crate::formation::ring_deviation(p - ls.p, ls.gamma, ls.chi, &ocp.cfg.ring);
    let jw = crate::formation::jet_wash_value(
        p - ls.p,
        ls.gamma,
        ls.chi,
        ocp.cfg.ring.jet_wash_radius_ft,
    );
    TrajRow {
        t,
        p: ned_to_up(p.as_array()),
        v: ned_to_up(v.as_array()),
        a: ned_to_up(a.as_array()),
        u: ned_to_up(u.as_array()),
        phase: phase_idx + 1,
        leader_p: ned_to_up(ls.p.as_array()),
        leader_v: ned_to_up(ls.v.as_array()),
        gamma: ls.gamma.radians(),
        chi: ls.chi.radians(),
        f1: dev.axial,
        f2: dev.radial,
        jet_wash: jw,
    }
}

/// Dense trajectory rows: collocation points plus `extra` interpolated
/// samples per interval, per phase.
pub fn trajectory_rows(ocp: &FormationOcp, sol: &CollocatedSolution, extra: usize) -> Vec<TrajRow> {
    let mut rows = Vec::new();
    for (p, ph) in sol.phases.iter().enumerate() {
        for &t in &ph.dense_times(extra) {
            let x = ph.state_at(t);
            let u = ph.control_at(t);
            rows.push(sample_row(ocp, p, t, &x, &u));
        }
    }
    rows
}

/// Rows for a forward-simulated guess (same format, flagged as a guess).
pub fn guess_rows(ocp: &FormationOcp, guess: &GuessTrajectory) -> Vec<TrajRow> {
    let mut rows = Vec::new();
    for (k, &t) in guess.times.iter().enumerate() {
        let st = &guess.states[k];
        let u = if k < guess.controls.len() {
            guess.controls[k]
        } else {
            [0.0; 3]
        };
        let x_scaled: Vec<f64> = st.iter().map(|v| v * FT_TO_HM).collect();
        let u_scaled: Vec<f64> = u.iter().map(|v| v * FT_TO_HM).collect();
        let phase = if k < guess.split_index { 0 } else { 1 };
        rows.push(sample_row(ocp, phase, t, &x_scaled, &u_scaled));
    }
    rows
}

pub fn write_trajectory(
    path: &Path,
    rows: &[TrajRow],
    kind: &str,
    scenario: &str,
) -> Result<(), OutputError> {
    let mut out = String::new();
    out.push_str("# rejoin trajectory v1\n");
    let _ = writeln!(out, "# scenario = {scenario}");
    let _ = writeln!(out, "# kind = {kind}");
    out.push_str("# units: ft, s, rad; vertical components altitude-up\n");
    let _ = writeln!(out, "{TRAJ_COLUMNS}");
    for r in rows {
        let mut fields: Vec<String> = Vec::with_capacity(25);
        fields.push(fmt_num(r.t));
        for v in [r.p, r.v, r.a, r.u] {
            for c in v {
                fields.push(fmt_num(c));
            }
        }
        fields.push(r.phase.to_string());
        for v in [r.leader_p, r.leader_v] {
            for c in v {
                fields.push(fmt_num(c));
            }
        }
        fields.push(fmt_num(r.gamma));
        fields.push(fmt_num(r.chi));
        fields.push(fmt_num(r.f1));
        fields.push(fmt_num(r.f2));
        fields.push(fmt_num(r.jet_wash));
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajRow>, OutputError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != TRAJ_COLUMNS {
                return Err(OutputError::Format {
                    path: path.display().to_string(),
                    reason: format!("unexpected column header on line {}", ln + 1),
                });
            }
            saw_header = true;
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 25 {
            return Err(OutputError::Format {
                path: path.display().to_string(),
                reason: format!("line {} has {} fields, expected 25", ln + 1, toks.len()),
            });
        }
        let num = |i: usize| -> Result<f64, OutputError> {
            toks[i].parse::<f64>().map_err(|e| OutputError::Format {
                path: path.display().to_string(),
                reason: format!("line {} field {}: {}", ln + 1, i + 1, e),
            })
        };
        let vec3 = |i: usize| -> Result<[f64; 3], OutputError> {
            Ok([num(i)?, num(i + 1)?, num(i + 2)?])
        };
        rows.push(TrajRow {
            t: num(0)?,
            p: vec3(1)?,
            v: vec3(4)?,
            a: vec3(7)?,
            u: vec3(10)?,
            phase: toks[13].parse().map_err(|_| OutputError::Format {
                path: path.display().to_string(),
                reason: format!("line {}: bad phase id", ln + 1),
            })?,
            leader_p: vec3(14)?,
            leader_v: vec3(17)?,
            gamma: num(20)?,
            chi: num(21)?,
            f1: num(22)?,
            f2: num(23)?,
            jet_wash: num(24)?,
        });
    }
    if !saw_header {
        return Err(OutputError::Format {
            path: path.display().to_string(),
            reason: "missing column header".into(),
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
pub fn write_diagnostics(
    path: &Path,
    scenario: &str,
    converged: bool,
    mesh_error: f64,
    tf1: f64,
    objective: f64,
    beta: f64,
    kkt: &rejoin_nlp::KktResiduals,
    deriv_gate: Option<f64>,
    report: &FeasibilityReport,
    hamiltonian: &HamiltonianSeries,
    trace: &RingTrace,
) -> Result<(), OutputError> {
    let mut out = String::new();
    out.push_str("# rejoin diagnostics v1\n");
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "scenario = {scenario}");
    let _ = writeln!(out, "converged = {converged}");
    let _ = writeln!(out, "mesh_error = {}", fmt_num(mesh_error));
    let _ = writeln!(out, "kkt_stationarity = {}", fmt_num(kkt.stationarity));
    let _ = writeln!(out, "kkt_feasibility = {}", fmt_num(kkt.feasibility));
    let _ = writeln!(out, "kkt_complementarity = {}", fmt_num(kkt.complementarity));
    if let Some(d) = deriv_gate {
        let _ = writeln!(out, "derivative_gate_max_rel = {}", fmt_num(d));
    }
    let _ = writeln!(out, "\n[cost]");
    let _ = writeln!(out, "t_f1_s = {}", fmt_num(tf1));
    let _ = writeln!(out, "objective_scaled = {}", fmt_num(objective));
    let _ = writeln!(out, "beta = {}", fmt_num(beta));
    let j2 = (objective - beta * tf1) / (1.0 - beta);
    let _ = writeln!(out, "phase2_integral_scaled = {}", fmt_num(j2));
    let _ = writeln!(out, "\n[feasibility]");
    let _ = writeln!(out, "max_jet_wash_ft2 = {}", fmt_num(report.max_jet_wash_ft2));
    let _ = writeln!(out, "min_speed_kt = {}", fmt_num(report.min_speed_kt));
    let _ = writeln!(out, "max_speed_kt = {}", fmt_num(report.max_speed_kt));
    let _ = writeln!(out, "min_accel_g = {}", fmt_num(report.min_accel_g));
    let _ = writeln!(out, "max_accel_g = {}", fmt_num(report.max_accel_g));
    let _ = writeln!(out, "max_control_g_per_s = {}", fmt_num(report.max_control_g_per_s));
    let _ = writeln!(out, "terminal_f1_ft2 = {}", fmt_num(report.terminal_f1_ft2));
    let _ = writeln!(out, "terminal_f2_ft2 = {}", fmt_num(report.terminal_f2_ft2));
    let _ = writeln!(out, "max_link_pos_ft = {}", fmt_num(report.max_link_pos_ft));
    let _ = writeln!(out, "max_link_vel_fps = {}", fmt_num(report.max_link_vel_fps));
    let _ = writeln!(out, "max_link_acc_fps2 = {}", fmt_num(report.max_link_acc_fps2));
    let _ = writeln!(
        out,
        "max_phase2_ring_deviation_m = {}",
        fmt_num(report.max_phase2_ring_deviation_m)
    );
    let _ = writeln!(out, "violations = {}", report.violations.len());
    for v in &report.violations {
        let _ = writeln!(out, "violation = {v}");
    }
    let _ = writeln!(out, "\n[hamiltonian]");
    let _ = writeln!(out, "switch_window_s = {}", fmt_num(hamiltonian.switch_window_s));
    for (p, ph) in hamiltonian.phases.iter().enumerate() {
        let _ = writeln!(out, "phase{}_mean = {}", p + 1, fmt_num(ph.mean));
        let _ = writeln!(out, "phase{}_max_abs_dev = {}", p + 1, fmt_num(ph.max_abs_dev));
        let _ = writeln!(
            out,
            "phase{}_constancy_ratio = {}",
            p + 1,
            fmt_num(ph.constancy_ratio())
        );
    }
    let _ = writeln!(out, "\n[hamiltonian.series] phase t_s H_scaled");
    for (p, ph) in hamiltonian.phases.iter().enumerate() {
        for (t, h) in ph.times.iter().zip(&ph.values) {
            let _ = writeln!(out, "{} {} {}", p + 1, fmt_num(*t), fmt_num(*h));
        }
    }
    let _ = writeln!(
        out,
        "\n[ring.series] phase t_s f1_ft2 f2_ft2 axial_dev_m radial_dev_m"
    );
    for i in 0..trace.times.len() {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            trace.phase[i],
            fmt_num(trace.times[i]),
            fmt_num(trace.f1_ft2[i]),
            fmt_num(trace.f2_ft2[i]),
            fmt_num(trace.axial_dev_m[i]),
            fmt_num(trace.radial_dev_m[i])
        );
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[allow(clippy::too_many_arguments)]
pub fn write_manifest(
    path: &Path,
    cfg: &ScenarioConfig,
    config_hash: &str,
    target: &str,
    mesh_tol: f64,
    nlp_tol: f64,
    converged: bool,
    history: &[rejoin_colloc::RefinementRecord],
    wall_clock_s: f64,
) -> Result<(), OutputError> {
    let mut out = String::new();
    out.push_str("# rejoin run manifest v1\n");
    let _ = writeln!(out, "scenario = {}", cfg.name);
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "config_hash = {config_hash}");
    let _ = writeln!(out, "leader = {}", cfg.leader.kind_label());
    let _ = writeln!(out, "guess_target = {target}");
    let _ = writeln!(out, "mesh_tol = {}", fmt_num(mesh_tol));
    let _ = writeln!(out, "nlp_tol = {}", fmt_num(nlp_tol));
    let _ = writeln!(out, "status = {}", if converged { "converged" } else { "not-converged" });
    out.push_str("# refinement: iter intervals raw_error best_error nlp_status nlp_iters\n");
    for rec in history {
        let _ = writeln!(
            out,
            "refinement = {} {:?} {} {} {} {}",
            rec.iteration,
            rec.intervals,
            fmt_num(rec.max_error),
            fmt_num(rec.best_error),
            rec.nlp_status.label(),
            rec.nlp_iterations
        );
    }
    let _ = writeln!(out, "wall_clock_s = {wall_clock_s:.3}");
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_iteration_log(
    path: &Path,
    records: &[rejoin_nlp::IterRecord],
) -> Result<(), OutputError> {
    let text = rejoin_nlp::ipm::format_iteration_log(records);
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_study_table(
    path: &Path,
    report: &crate::validation::GuessStudyReport,
) -> Result<(), OutputError> {
    let mut out = String::new();
    out.push_str("# rejoin initial-guess study v1\n");
    out.push_str("target t_f1_s cost converged\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            row.target.label(),
            fmt_num(row.rejoin_time_s),
            fmt_num(row.cost),
            row.converged
        );
    }
    out.push_str("# pairwise max phase-2 separation, ft\n");
    for (i, row) in report.separation_ft.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        let _ = writeln!(out, "separation[{i}] = {}", cells.join(" "));
    }
    let _ = writeln!(out, "cost_spread_rel = {}", fmt_num(report.cost_spread_relative()));
    let _ = writeln!(out, "time_spread_rel = {}", fmt_num(report.time_spread_relative()));
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Append-style writer used for stdout summaries.
pub fn print_report(report: &FeasibilityReport) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "feasibility report:");
    let _ = writeln!(stdout, "  max jet wash      {:>14.6} ft^2", report.max_jet_wash_ft2);
    let _ = writeln!(
        stdout,
        "  speed             [{:.2}, {:.2}] kt",
        report.min_speed_kt, report.max_speed_kt
    );
    let _ = writeln!(
        stdout,
        "  acceleration      [{:.3}, {:.3}] g",
        report.min_accel_g, report.max_accel_g
    );
    let _ = writeln!(
        stdout,
        "  max |u| component {:>10.3} g/s",
        report.max_control_g_per_s
    );
    let _ = writeln!(
        stdout,
        "  terminal ring     ({:.2}, {:.2}) ft^2",
        report.terminal_f1_ft2, report.terminal_f2_ft2
    );
    let _ = writeln!(
        stdout,
        "  phase-2 deviation {:>10.3} m",
        report.max_phase2_ring_deviation_m
    );
    if report.violations.is_empty() {
        let _ = writeln!(stdout, "  no violations");
    } else {
        for v in &report.violations {
            let _ = writeln!(stdout, "  VIOLATION: {v}");
        }
    }
}
