//! The two-phase formation-rejoin optimal control problem.
//!
//! Phase 1 flies the follower from its initial state onto the formation
//! ring in minimum time; phase 2 holds the ring with minimum squared
//! deviation until the fixed final time. The combined objective is
//! `beta * tf1 + (1 - beta) * integral((f1^2 + f2^2) dt)` where `f1`/`f2`
//! measure the along-axis and radial deviation from the ring.
//!
//! The solver-facing functions evaluate the ring terms through the leader
//! velocity direction (the ring center sits on the leader's longitudinal
//! axis), which stays smooth even where the course angle is undefined
//! (vertical flight during loops). The public `ring_deviation` /
//! `jet_wash_value` operations use the explicit flight-path/course-angle
//! rotation; for an on-axis ring center the two agree identically.

use crate::guess::GuessParams;
use crate::leader::{LeaderSpec, LeaderTrajectory};
use crate::units::{
    rotate_inertial_to_leader, Angle, Vec3, FT_TO_HM, G_TO_FPS2, KNOT_TO_FPS, METER_TO_FT,
};
use rejoin_colloc::{LinkRow, LinkVar, Mesh, Ocp, PhaseMesh, Scalar, TimeSpec};
use thiserror::Error;

/// Follower kinematic state: position, velocity, acceleration (NED, feet).
#[derive(Debug, Clone, Copy)]
pub struct FollowerState {
    pub p: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

impl FollowerState {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.p.x, self.p.y, self.p.z, self.v.x, self.v.y, self.v.z, self.a.x, self.a.y,
            self.a.z,
        ]
    }
    pub fn from_array(x: &[f64]) -> FollowerState {
        FollowerState {
            p: Vec3::new(x[0], x[1], x[2]),
            v: Vec3::new(x[3], x[4], x[5]),
            a: Vec3::new(x[6], x[7], x[8]),
        }
    }
}

/// Formation ring geometry in the leader body frame.
#[derive(Debug, Clone, Copy)]
pub struct RingSpec {
    pub center_leader_frame: Vec3,
    pub radius_ft: f64,
    pub jet_wash_radius_ft: f64,
}

impl Default for RingSpec {
    fn default() -> Self {
        RingSpec {
            center_leader_frame: Vec3::new(-700.0, 0.0, 0.0),
            radius_ft: 700.0,
            jet_wash_radius_ft: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeBounds {
    pub v_min_kt: f64,
    pub v_max_kt: f64,
    pub a_min_g: f64,
    pub a_max_g: f64,
    pub jerk_max_g_per_s: f64,
}

impl Default for EnvelopeBounds {
    fn default() -> Self {
        EnvelopeBounds {
            v_min_kt: 200.0,
            v_max_kt: 700.0,
            a_min_g: 0.25,
            a_max_g: 7.0,
            jerk_max_g_per_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub mesh_tol: f64,
    pub nlp_tol: f64,
    pub max_mesh_iterations: usize,
    pub max_nlp_iterations: usize,
    pub initial_intervals: usize,
    pub initial_order: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            mesh_tol: 1e-3,
            nlp_tol: 1e-5,
            max_mesh_iterations: 15,
            max_nlp_iterations: 3000,
            initial_intervals: 10,
            initial_order: 4,
        }
    }
}

/// Complete scenario description (units as carried by the config file;
/// vectors already converted to internal NED feet).
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub follower_initial: FollowerState,
    pub leader: LeaderSpec,
    pub ring: RingSpec,
    pub beta: f64,
    pub formation_tolerance_m: f64,
    pub continuity_tolerance_m: f64,
    pub phase2_final_time_s: f64,
    pub envelope: EnvelopeBounds,
    pub guess: GuessParams,
    pub solver: SolverParams,
}

impl ScenarioConfig {
    /// Table-style defaults with the given leader.
    pub fn with_leader(leader: LeaderSpec) -> ScenarioConfig {
        ScenarioConfig {
            name: "scenario".into(),
            follower_initial: FollowerState {
                p: Vec3::new(0.0, 0.0, -20_000.0),
                v: Vec3::new(450.0 * KNOT_TO_FPS, 0.0, 0.0),
                a: Vec3::new(0.07 * G_TO_FPS2, 0.0, -G_TO_FPS2),
            },
            leader,
            ring: RingSpec::default(),
            beta: 0.9,
            formation_tolerance_m: 10.0,
            continuity_tolerance_m: 0.1,
            phase2_final_time_s: 120.0,
            envelope: EnvelopeBounds::default(),
            guess: GuessParams::default(),
            solver: SolverParams::default(),
        }
    }

    pub fn initial_mesh(&self) -> Mesh {
        Mesh {
            phases: vec![
                PhaseMesh::uniform(self.solver.initial_intervals, self.solver.initial_order),
                PhaseMesh::uniform(self.solver.initial_intervals, self.solver.initial_order),
            ],
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("beta must lie in (0,1)")]
    BetaOutOfRange,
    #[error("ring radius {0} ft must exceed the jet-wash radius {1} ft")]
    RingSmallerThanJetWash(f64, f64),
    #[error("jet-wash radius must be nonnegative, got {0} ft")]
    NegativeJetWash(f64),
    #[error("ring center must lie on the leader longitudinal axis (y = z = 0), got y={0} ft, z={1} ft")]
    OffAxisRingCenter(f64, f64),
    #[error("velocity bounds must satisfy 0 < v_min < v_max, got [{0}, {1}] kt")]
    BadVelocityBounds(f64, f64),
    #[error("acceleration bounds must satisfy 0 <= a_min < a_max, got [{0}, {1}] g")]
    BadAccelBounds(f64, f64),
    #[error("jerk bound must be positive, got {0} g/s")]
    BadJerkBound(f64),
    #[error("phase-2 final time must be at least 10 s, got {0} s")]
    HorizonTooShort(f64),
    #[error("formation tolerance must be positive, got {0} m")]
    BadFormationTolerance(f64),
    #[error(transparent)]
    Leader(#[from] crate::leader::LeaderError),
    #[error("tabulated leader file {path}: {source}")]
    LeaderFile {
        path: String,
        source: std::io::Error,
    },
}

/// Construct the leader trajectory named by a spec, reading the sample
/// table from disk for the tabulated kind.
pub fn build_leader(spec: &LeaderSpec) -> Result<LeaderTrajectory, BuildError> {
    match spec {
        LeaderSpec::Spiral(p) => Ok(LeaderTrajectory::spiral(p.clone())?),
        LeaderSpec::Loops(p) => Ok(LeaderTrajectory::loops(p.clone())?),
        LeaderSpec::Tabulated { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| BuildError::LeaderFile {
                path: path.display().to_string(),
                source,
            })?;
            Ok(LeaderTrajectory::tabulated(&text)?)
        }
    }
}

/// Triple-integrator state derivative: `(v, a, u)` stacked.
pub fn follower_dynamics(x: &FollowerState, u: Vec3) -> [f64; 9] {
    [
        x.v.x, x.v.y, x.v.z, x.a.x, x.a.y, x.a.z, u.x, u.y, u.z,
    ]
}

/// Squared deviation measures from the formation ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingDeviation {
    /// `f1`: squared gap along the leader longitudinal axis, ft^2.
    pub axial: f64,
    /// `f2`: squared in-plane distance minus the squared ring radius, ft^2.
    pub radial: f64,
}

/// Ring deviation functions evaluated in leader-frame components:
/// `q = R_i^L p_d - c^L`, `f1 = q_x^2`, `f2 = q_y^2 + q_z^2 - R^2`.
/// Both vanish exactly when the follower sits on the ring.
pub fn ring_deviation(p_d: Vec3, gamma: Angle, chi: Angle, ring: &RingSpec) -> RingDeviation {
    let q = rotate_inertial_to_leader(gamma.radians(), chi.radians(), p_d)
        - ring.center_leader_frame;
    RingDeviation {
        axial: q.x * q.x,
        radial: q.y * q.y + q.z * q.z - ring.radius_ft * ring.radius_ft,
    }
}

/// Jet-wash clearance: negative outside the hazard cylinder of radius
/// `r_jw` around the leader longitudinal axis, positive inside.
pub fn jet_wash_value(p_d: Vec3, gamma: Angle, chi: Angle, r_jw: f64) -> f64 {
    let q = rotate_inertial_to_leader(gamma.radians(), chi.radians(), p_d);
    -(q.y * q.y) - q.z * q.z + r_jw * r_jw
}

/// Squared speed and acceleration magnitudes for the envelope constraints.
pub fn envelope_values(x: &FollowerState) -> (f64, f64) {
    (x.v.norm_squared(), x.a.norm_squared())
}

/// Phase-2 running cost integrand `f1^2 + f2^2` (ft^4).
pub fn phase2_integrand(p_d: Vec3, gamma: Angle, chi: Angle, ring: &RingSpec) -> f64 {
    let d = ring_deviation(p_d, gamma, chi, ring);
    d.axial * d.axial + d.radial * d.radial
}

/// Weighted total cost `beta * tf1 + (1 - beta) * j2`.
pub fn total_cost(tf1: f64, j2: f64, beta: f64) -> f64 {
    beta * tf1 + (1.0 - beta) * j2
}

/// Symmetric bounds on `f1` and `f2` that realize a physical tolerance of
/// `tol_m` meters: `|axial gap| <= tol` and `|in-plane distance - R| <= tol`.
pub fn terminal_ring_bounds(ring: &RingSpec, tol_m: f64) -> ((f64, f64), (f64, f64)) {
    let tol_ft = tol_m * METER_TO_FT;
    let eps1 = tol_ft * tol_ft;
    let r = ring.radius_ft;
    let eps2 = (r + tol_ft) * (r + tol_ft) - r * r;
    ((-eps1, eps1), (-eps2, eps2))
}

/// The transcribable two-phase problem. All internal quantities are in
/// solver scale: hectometers and seconds.
#[derive(Clone)]
pub struct FormationOcp {
    pub cfg: ScenarioConfig,
    pub leader: LeaderTrajectory,
    /// Relative weight on the deviation cost; below 1 gives the softened
    /// problems used as continuation stages.
    deviation_weight: f64,
    x0: [f64; 9],
    state_lb: Vec<f64>,
    state_ub: Vec<f64>,
    u_max: f64,
    v_min_sq: f64,
    v_max_sq: f64,
    a_min_sq: f64,
    a_max_sq: f64,
    ring_cx: f64,
    ring_r_sq: f64,
    jet_wash_r_sq: f64,
    eps1: f64,
    eps2: f64,
    link_pos_tol: f64,
    link_vel_tol: f64,
    tf1_bounds: (f64, f64),
    tf2: f64,
}

impl FormationOcp {
    pub fn scale_factor() -> f64 {
        1.0 / FT_TO_HM
    }

    /// Internal multiplicative objective scaling; keeps the quartic
    /// deviation cost within the solver's comfortable range. Reported costs
    /// divide this back out.
    pub const OBJECTIVE_SCALE: f64 = 1.0;

    /// Solver objective back in reporting units.
    pub fn report_cost(&self, solver_objective: f64) -> f64 {
        solver_objective / Self::OBJECTIVE_SCALE
    }

    /// Copy of the problem with a softened deviation cost, used as a
    /// continuation stage ahead of the full-weight solve.
    pub fn with_deviation_weight(&self, weight: f64) -> FormationOcp {
        let mut copy = self.clone();
        copy.deviation_weight = weight;
        copy
    }
}

/// Validate the scenario and assemble the two-phase problem, loading the
/// leader trajectory (from file for the tabulated kind).
pub fn build_problem(cfg: &ScenarioConfig) -> Result<FormationOcp, BuildError> {
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(BuildError::BetaOutOfRange);
    }
    let ring = &cfg.ring;
    if ring.jet_wash_radius_ft < 0.0 {
        return Err(BuildError::NegativeJetWash(ring.jet_wash_radius_ft));
    }
    if ring.radius_ft <= ring.jet_wash_radius_ft {
        return Err(BuildError::RingSmallerThanJetWash(
            ring.radius_ft,
            ring.jet_wash_radius_ft,
        ));
    }
    if ring.center_leader_frame.y != 0.0 || ring.center_leader_frame.z != 0.0 {
        return Err(BuildError::OffAxisRingCenter(
            ring.center_leader_frame.y,
            ring.center_leader_frame.z,
        ));
    }
    let env = &cfg.envelope;
    if !(env.v_min_kt > 0.0 && env.v_min_kt < env.v_max_kt) {
        return Err(BuildError::BadVelocityBounds(env.v_min_kt, env.v_max_kt));
    }
    if !(env.a_min_g >= 0.0 && env.a_min_g < env.a_max_g) {
        return Err(BuildError::BadAccelBounds(env.a_min_g, env.a_max_g));
    }
    if env.jerk_max_g_per_s <= 0.0 {
        return Err(BuildError::BadJerkBound(env.jerk_max_g_per_s));
    }
    if cfg.phase2_final_time_s < 10.0 {
        return Err(BuildError::HorizonTooShort(cfg.phase2_final_time_s));
    }
    if cfg.formation_tolerance_m <= 0.0 {
        return Err(BuildError::BadFormationTolerance(cfg.formation_tolerance_m));
    }

    let leader = build_leader(&cfg.leader)?;

    let s = FT_TO_HM;
    let x0_state = cfg.follower_initial;
    let mut x0 = [0.0; 9];
    for (i, v) in x0_state.to_array().iter().enumerate() {
        x0[i] = v * s;
    }
    let v_max = env.v_max_kt * KNOT_TO_FPS * s;
    let v_min = env.v_min_kt * KNOT_TO_FPS * s;
    let a_max = env.a_max_g * G_TO_FPS2 * s;
    let a_min = env.a_min_g * G_TO_FPS2 * s;
    let u_max = env.jerk_max_g_per_s * G_TO_FPS2 * s;
    let tf2 = cfg.phase2_final_time_s;
    let travel = v_max * tf2;
    let mut state_lb = vec![0.0; 9];
    let mut state_ub = vec![0.0; 9];
    for d in 0..3 {
        state_lb[d] = x0[d] - travel;
        state_ub[d] = x0[d] + travel;
        state_lb[3 + d] = -v_max;
        state_ub[3 + d] = v_max;
        state_lb[6 + d] = -a_max;
        state_ub[6 + d] = a_max;
    }
    let ((e1_lo, e1_hi), (e2_lo, e2_hi)) = terminal_ring_bounds(ring, cfg.formation_tolerance_m);
    debug_assert_eq!(e1_lo, -e1_hi);
    debug_assert_eq!(e2_lo, -e2_hi);
    let link_tol = cfg.continuity_tolerance_m * METER_TO_FT * s;
    Ok(FormationOcp {
        cfg: cfg.clone(),
        leader,
        deviation_weight: 1.0,
        x0,
        state_lb,
        state_ub,
        u_max,
        v_min_sq: v_min * v_min,
        v_max_sq: v_max * v_max,
        a_min_sq: a_min * a_min,
        a_max_sq: a_max * a_max,
        ring_cx: ring.center_leader_frame.x * s,
        ring_r_sq: (ring.radius_ft * s) * (ring.radius_ft * s),
        jet_wash_r_sq: (ring.jet_wash_radius_ft * s) * (ring.jet_wash_radius_ft * s),
        eps1: e1_hi * s * s,
        eps2: e2_hi * s * s,
        link_pos_tol: link_tol,
        link_vel_tol: link_tol,
        tf1_bounds: (1.0, tf2 - 5.0),
        tf2,
    })
}

impl FormationOcp {
    /// Along-axis gap to the ring center and squared off-axis distance of
    /// the follower relative to the leader, in solver scale. Formed from
    /// the leader velocity direction, which is smooth everywhere the
    /// leader flies (including vertical flight).
    fn ring_terms<T: Scalar>(&self, p: &[T], t: T) -> (T, T) {
        let e = self.leader.eval(t);
        let pl = e.p.scale(FT_TO_HM);
        let vl = e.v.scale(FT_TO_HM);
        let pd = Vec3::new(p[0], p[1], p[2]) - pl;
        let axis = vl.scale_t(T::cst(1.0) / vl.norm());
        let along = axis.dot(pd);
        let off_axis_sq = pd.norm_squared() - along.sq();
        (along - T::cst(self.ring_cx), off_axis_sq)
    }

    fn deviation_fns<T: Scalar>(&self, p: &[T], t: T) -> (T, T) {
        let (gap, off_sq) = self.ring_terms(p, t);
        (gap.sq(), off_sq - T::cst(self.ring_r_sq))
    }

    pub fn beta(&self) -> f64 {
        self.cfg.beta
    }
    pub fn tf1_bounds(&self) -> (f64, f64) {
        self.tf1_bounds
    }
    pub fn initial_state_scaled(&self) -> [f64; 9] {
        self.x0
    }
}

impl Ocp for FormationOcp {
    fn num_phases(&self) -> usize {
        2
    }
    fn state_dim(&self, _: usize) -> usize {
        9
    }
    fn control_dim(&self, _: usize) -> usize {
        3
    }

    fn time_spec(&self, phase: usize) -> (TimeSpec, TimeSpec) {
        let (lb, ub) = self.tf1_bounds;
        if phase == 0 {
            (
                TimeSpec::Constant(0.0),
                TimeSpec::Variable {
                    lb,
                    ub,
                    guess: 0.5 * (lb + ub),
                },
            )
        } else {
            (
                TimeSpec::Variable {
                    lb,
                    ub,
                    guess: 0.5 * (lb + ub),
                },
                TimeSpec::Variable {
                    lb: self.tf2,
                    ub: self.tf2,
                    guess: self.tf2,
                },
            )
        }
    }

    fn state_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (self.state_lb.clone(), self.state_ub.clone())
    }
    fn control_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.u_max; 3], vec![self.u_max; 3])
    }
    fn initial_state(&self, phase: usize) -> Option<Vec<f64>> {
        (phase == 0).then(|| self.x0.to_vec())
    }

    fn dynamics<T: Scalar>(&self, _: usize, x: &[T], u: &[T], _t: T, out: &mut [T]) {
        out[..6].copy_from_slice(&x[3..9]);
        out[6..9].copy_from_slice(&u[..3]);
    }
    fn dynamics_affine(&self, _: usize) -> bool {
        true
    }

    fn num_path(&self, _: usize) -> usize {
        3
    }
    fn path_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (
            vec![self.v_min_sq, self.a_min_sq, f64::NEG_INFINITY],
            vec![self.v_max_sq, self.a_max_sq, 0.0],
        )
    }
    fn path<T: Scalar>(&self, _: usize, x: &[T], _u: &[T], t: T, out: &mut [T]) {
        let v2 = x[3].sq() + x[4].sq() + x[5].sq();
        let a2 = x[6].sq() + x[7].sq() + x[8].sq();
        let (_, off_sq) = self.ring_terms(x, t);
        out[0] = v2;
        out[1] = a2;
        out[2] = T::cst(self.jet_wash_r_sq) - off_sq;
    }

    fn has_lagrange(&self, phase: usize) -> bool {
        phase == 1
    }
    fn lagrange<T: Scalar>(&self, _: usize, x: &[T], _u: &[T], t: T) -> T {
        // The deviation functions enter the cost in decameter^2 units: a
        // weight strong enough to hold the station-keeping deviation to a
        // few meters while keeping the quartic solvable.
        let (f1, f2) = self.deviation_fns(x, t);
        const HM2_TO_DAM2: f64 = 1e2;
        let f1d = f1.scale(HM2_TO_DAM2);
        let f2d = f2.scale(HM2_TO_DAM2);
        (f1d.sq() + f2d.sq())
            .scale((1.0 - self.cfg.beta) * Self::OBJECTIVE_SCALE * self.deviation_weight)
    }

    fn num_boundary(&self, phase: usize) -> usize {
        if phase == 0 {
            2
        } else {
            0
        }
    }
    fn boundary_bounds(&self, _: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.eps1, -self.eps2], vec![self.eps1, self.eps2])
    }
    fn boundary<T: Scalar>(&self, _: usize, x_end: &[T], t_end: T, out: &mut [T]) {
        let (f1, f2) = self.deviation_fns(x_end, t_end);
        out[0] = f1;
        out[1] = f2;
    }

    fn mayer<T: Scalar>(&self, times: &[(T, T)]) -> T {
        times[0].1.scale(self.cfg.beta * Self::OBJECTIVE_SCALE)
    }

    fn links(&self) -> Vec<LinkRow> {
        let mut rows = Vec::with_capacity(10);
        rows.push(LinkRow {
            terms: vec![
                (LinkVar::TimeStart(1), 1.0),
                (LinkVar::TimeEnd(0), -1.0),
            ],
            lb: 0.0,
            ub: 0.0,
        });
        for d in 0..9 {
            let tol = match d {
                0..=2 => self.link_pos_tol,
                3..=5 => self.link_vel_tol,
                _ => 0.0,
            };
            rows.push(LinkRow {
                terms: vec![
                    (LinkVar::StateStart { phase: 1, dim: d }, 1.0),
                    (LinkVar::StateEnd { phase: 0, dim: d }, -1.0),
                ],
                lb: -tol,
                ub: tol,
            });
        }
        rows
    }

    fn state_scale(&self, _: usize) -> Vec<f64> {
        vec![1.0 / FT_TO_HM; 9]
    }
    fn control_scale(&self, _: usize) -> Vec<f64> {
        vec![1.0 / FT_TO_HM; 3]
    }

    fn name(&self) -> &str {
        "formation-ring"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leader::SpiralParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rejoin_colloc::Transcription;

    fn zero_angles() -> (Angle, Angle) {
        (Angle::from_radians(0.0), Angle::from_radians(0.0))
    }

    #[test]
    fn dynamics_passes_jerk_through() {
        let x = FollowerState {
            p: Vec3::ZERO,
            v: Vec3::new(100.0, 0.0, 0.0),
            a: Vec3::ZERO,
        };
        let dx = follower_dynamics(&x, Vec3::ZERO);
        assert_eq!(&dx[0..3], &[100.0, 0.0, 0.0]);
        assert_eq!(&dx[3..9], &[0.0; 6]);
        let dx = follower_dynamics(&x, Vec3::new(0.0, 0.0, 161.0));
        assert_eq!(&dx[6..9], &[0.0, 0.0, 161.0]);
    }

    #[test]
    fn ring_deviation_examples() {
        let ring = RingSpec::default();
        let (g, c) = zero_angles();
        let d = ring_deviation(Vec3::new(-700.0, 700.0, 0.0), g, c, &ring);
        assert_relative_eq!(d.axial, 0.0);
        assert_relative_eq!(d.radial, 0.0);
        let d = ring_deviation(Vec3::new(-700.0, 0.0, 0.0), g, c, &ring);
        assert_relative_eq!(d.axial, 0.0);
        assert_relative_eq!(d.radial, -490_000.0);
        let d = ring_deviation(Vec3::ZERO, g, c, &ring);
        assert_relative_eq!(d.axial, 490_000.0);
        assert_relative_eq!(d.radial, -490_000.0);
    }

    #[test]
    fn jet_wash_examples() {
        let (g, c) = zero_angles();
        assert_relative_eq!(
            jet_wash_value(Vec3::new(-700.0, 0.0, 0.0), g, c, 5.0),
            25.0
        );
        assert_relative_eq!(jet_wash_value(Vec3::new(-700.0, 5.0, 0.0), g, c, 5.0), 0.0);
        assert_relative_eq!(
            jet_wash_value(Vec3::new(-700.0, 700.0, 0.0), g, c, 5.0),
            -489_975.0
        );
    }

    #[test]
    fn envelope_value_examples() {
        let x = FollowerState {
            p: Vec3::ZERO,
            v: Vec3::new(759.5145, 0.0, 0.0),
            a: Vec3::new(0.07 * G_TO_FPS2, 0.0, G_TO_FPS2),
        };
        let (v2, a2) = envelope_values(&x);
        assert_relative_eq!(v2, (450.0 * KNOT_TO_FPS).powi(2), max_relative = 1e-12);
        // |a| for the Table-style initial acceleration is about 1.0024 g.
        assert_relative_eq!(a2.sqrt() / G_TO_FPS2, 1.0024, epsilon = 2e-4);
        let zero = FollowerState {
            p: Vec3::ZERO,
            v: Vec3::ZERO,
            a: Vec3::ZERO,
        };
        assert_eq!(envelope_values(&zero).0, 0.0);
    }

    #[test]
    fn phase2_integrand_examples() {
        let ring = RingSpec::default();
        let (g, c) = zero_angles();
        assert_eq!(
            phase2_integrand(Vec3::new(-700.0, 700.0, 0.0), g, c, &ring),
            0.0
        );
        let center = phase2_integrand(Vec3::new(-700.0, 0.0, 0.0), g, c, &ring);
        assert_relative_eq!(center, 490_000.0f64.powi(2));
        // Any two on-ring points give identical (zero) integrand.
        for theta in [0.3, 2.0, 4.5] {
            let p = Vec3::new(-700.0, 700.0 * theta.cos(), 700.0 * theta.sin());
            assert!(phase2_integrand(p, g, c, &ring).abs() < 1e-18);
        }
    }

    #[test]
    fn total_cost_examples() {
        assert_relative_eq!(total_cost(10.0, 0.0, 0.9), 9.0);
        assert_relative_eq!(total_cost(0.0, 100.0, 0.9), 10.0);
    }

    #[test]
    fn terminal_bounds_match_physical_tolerance() {
        let ring = RingSpec::default();
        let ((lo1, hi1), (lo2, hi2)) = terminal_ring_bounds(&ring, 10.0);
        let tol_ft = 10.0 * METER_TO_FT;
        assert_relative_eq!(hi1, tol_ft * tol_ft);
        assert_relative_eq!(hi2, (700.0 + tol_ft).powi(2) - 700.0f64.powi(2));
        assert_eq!(lo1, -hi1);
        assert_eq!(lo2, -hi2);
        // 10 m off along the axis is boundary-feasible; 100 m radially is not.
        let (g, c) = zero_angles();
        let off_axis = ring_deviation(
            Vec3::new(-700.0 - tol_ft, 700.0, 0.0),
            g,
            c,
            &ring,
        );
        assert!(off_axis.axial <= hi1 * (1.0 + 1e-12));
        let far = ring_deviation(
            Vec3::new(-700.0, 700.0 + 100.0 * METER_TO_FT, 0.0),
            g,
            c,
            &ring,
        );
        assert!(far.radial > hi2);
    }

    #[test]
    fn build_problem_rejects_bad_configs() {
        let mut cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
        cfg.beta = 1.2;
        match build_problem(&cfg) {
            Err(BuildError::BetaOutOfRange) => {}
            Err(other) => panic!("expected beta rejection, got {other:?}"),
            Ok(_) => panic!("beta = 1.2 accepted"),
        }
        let mut cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
        cfg.ring.center_leader_frame.y = 10.0;
        assert!(matches!(
            build_problem(&cfg),
            Err(BuildError::OffAxisRingCenter(_, _))
        ));
    }

    #[test]
    fn build_problem_uses_table_defaults() {
        let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
        let ocp = build_problem(&cfg).unwrap();
        let x0 = ocp.initial_state_scaled();
        assert_relative_eq!(x0[2], -20_000.0 * FT_TO_HM);
        assert_relative_eq!(x0[3], 450.0 * KNOT_TO_FPS * FT_TO_HM);
        assert_relative_eq!(x0[8], -G_TO_FPS2 * FT_TO_HM);
        assert_eq!(ocp.tf2, 120.0);
        assert_eq!(ocp.beta(), 0.9);
    }

    #[test]
    fn decision_vector_length_matches_layout_arithmetic() {
        let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
        let ocp = build_problem(&cfg).unwrap();
        let mesh = Mesh::uniform(2, 1, 3);
        let tr = Transcription::new(&ocp, mesh).unwrap();
        // Two phases of (4 support x 9 states + 3 points x 3 controls),
        // plus tf1, t02, tf2.
        assert_eq!(tr.num_vars(), 2 * (4 * 9 + 3 * 3) + 3);
    }

    #[test]
    fn solver_ring_terms_match_public_deviation_fns() {
        let cfg = ScenarioConfig::with_leader(LeaderSpec::Spiral(SpiralParams::default()));
        let ocp = build_problem(&cfg).unwrap();
        let s = FT_TO_HM;
        for t in [0.0, 17.3, 61.0, 119.0] {
            let ls = ocp.leader.sample(t).unwrap();
            let p_f = ls.p + Vec3::new(-450.0, 380.0, 125.0);
            let p_scaled = [p_f.x * s, p_f.y * s, p_f.z * s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            let (f1, f2) = ocp.deviation_fns(&p_scaled[..3], t);
            let public = ring_deviation(p_f - ls.p, ls.gamma, ls.chi, &cfg.ring);
            assert_relative_eq!(f1, public.axial * s * s, max_relative = 1e-7);
            assert_relative_eq!(f2, public.radial * s * s, max_relative = 1e-7, epsilon = 1e-10);
        }
    }

    proptest! {
        /// Every point of the analytically parametrized ring evaluates to
        /// (0, 0) for random attitudes.
        #[test]
        fn ring_points_have_zero_deviation(
            g in -1.4f64..1.4,
            c in -3.1f64..3.1,
            theta in 0.0f64..std::f64::consts::TAU,
        ) {
            let ring = RingSpec::default();
            let offset = Vec3::new(
                ring.center_leader_frame.x,
                700.0 * theta.cos(),
                700.0 * theta.sin(),
            );
            let p_d = crate::units::rotate_leader_to_inertial(g, c, offset);
            let d = ring_deviation(p_d, Angle::from_radians(g), Angle::from_radians(c), &ring);
            prop_assert!(d.axial.abs() <= 1e-9, "f1 = {}", d.axial);
            prop_assert!(d.radial.abs() <= 1e-9, "f2 = {}", d.radial);
        }

        /// The jet-wash value is invariant along the leader's longitudinal
        /// axis (the cylinder is infinite).
        #[test]
        fn jet_wash_invariant_along_axis(
            g in -1.4f64..1.4,
            c in -3.1f64..3.1,
            x in -2e3f64..2e3,
            y in -2e3f64..2e3,
            z in -2e3f64..2e3,
            shift in -5e3f64..5e3,
        ) {
            let p = Vec3::new(x, y, z);
            let axis = crate::units::rotate_leader_to_inertial(g, c, Vec3::new(1.0, 0.0, 0.0));
            let shifted = p + axis.scale(shift);
            let a = jet_wash_value(p, Angle::from_radians(g), Angle::from_radians(c), 5.0);
            let b = jet_wash_value(shifted, Angle::from_radians(g), Angle::from_radians(c), 5.0);
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs())));
        }

        /// Two algebraic routes to the deviation functions agree: rotating
        /// p_d into the leader frame, versus subtracting the rotated ring
        /// center in the inertial frame and projecting the difference onto
        /// the leader axes.
        #[test]
        fn frame_consistency_of_ring_deviation(
            g in -1.4f64..1.4,
            c in -3.1f64..3.1,
            x in -5e3f64..5e3,
            y in -5e3f64..5e3,
            z in -5e3f64..5e3,
        ) {
            let ring = RingSpec::default();
            let p_d = Vec3::new(x, y, z);
            let via_leader = ring_deviation(p_d, Angle::from_radians(g), Angle::from_radians(c), &ring);
            let r = crate::units::rotation_leader_to_inertial(
                Angle::from_radians(g),
                Angle::from_radians(c),
            );
            let diff = p_d - r.apply(ring.center_leader_frame);
            let q = r.transpose().apply(diff);
            let f1 = q.x * q.x;
            let f2 = q.y * q.y + q.z * q.z - ring.radius_ft * ring.radius_ft;
            prop_assert!((via_leader.axial - f1).abs() <= 1e-9 * (1.0 + f1.abs()));
            prop_assert!((via_leader.radial - f2).abs() <= 1e-9 * (1.0 + f2.abs()));
        }

        /// The weighted cost is strictly increasing in both arguments.
        #[test]
        fn total_cost_monotone(t in 0.0f64..100.0, j in 0.0f64..100.0, d in 0.01f64..10.0) {
            prop_assert!(total_cost(t + d, j, 0.9) > total_cost(t, j, 0.9));
            prop_assert!(total_cost(t, j + d, 0.9) > total_cost(t, j, 0.9));
        }

        /// Dynamics are affine in state and control.
        #[test]
        fn dynamics_linearity(
            a in -100.0f64..100.0,
            b in -100.0f64..100.0,
            c in -100.0f64..100.0,
            d in -100.0f64..100.0,
        ) {
            let x1 = FollowerState { p: Vec3::new(a, b, c), v: Vec3::new(d, a, b), a: Vec3::new(c, d, a) };
            let x2 = FollowerState { p: Vec3::new(b, c, d), v: Vec3::new(a, d, c), a: Vec3::new(b, a, d) };
            let u1 = Vec3::new(a, c, d);
            let u2 = Vec3::new(d, b, a);
            let sum = FollowerState {
                p: x1.p + x2.p,
                v: x1.v + x2.v,
                a: x1.a + x2.a,
            };
            let lhs = follower_dynamics(&sum, u1 + u2);
            let r1 = follower_dynamics(&x1, u1);
            let r2 = follower_dynamics(&x2, u2);
            for i in 0..9 {
                prop_assert!((lhs[i] - (r1[i] + r2[i])).abs() <= 1e-12);
            }
        }
    }
}
