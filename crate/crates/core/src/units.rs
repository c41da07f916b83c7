//! Canonical units, conversions, and rotations between the inertial
//! (north-east-down) frame and the leader body frame.
//!
//! Internal physics runs in feet, seconds and radians with the third vector
//! component pointing down (NED). User-facing data (configs, trajectory
//! files, Table-style initial conditions) carries altitude positive-up; the
//! conversion is a sign flip on the vertical component at the IO boundary.
//! The NLP layer rescales lengths to hectometers; that scale lives here too.

use rejoin_colloc::Scalar;
use thiserror::Error;

pub const KNOT_TO_FPS: f64 = 1.68781;
pub const G_TO_FPS2: f64 = 32.174;
pub const METER_TO_FT: f64 = 3.28084;
pub const NM_TO_FT: f64 = 6076.12;
/// Solver length scale: feet to hectometers (0.3048 m/ft / 100 m/hm).
pub const FT_TO_HM: f64 = 0.003048;

/// Conversion constants bundled for reporting.
#[derive(Debug, Clone, Copy)]
pub struct UnitSystem {
    pub knot_to_fps: f64,
    pub g_to_fps2: f64,
    pub meter_to_ft: f64,
    pub nm_to_ft: f64,
    pub ft_to_hm: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            knot_to_fps: KNOT_TO_FPS,
            g_to_fps2: G_TO_FPS2,
            meter_to_ft: METER_TO_FT,
            nm_to_ft: NM_TO_FT,
            ft_to_hm: FT_TO_HM,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UnitsError {
    #[error("cannot convert {from:?} to {to:?}: incompatible dimensions")]
    IncompatibleDimensions { from: Unit, to: Unit },
    #[error("velocity has no horizontal component: heading is degenerate")]
    DegenerateHeading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Knot,
    FootPerSecond,
    G,
    FootPerSecondSquared,
    Meter,
    Foot,
    NauticalMile,
    Hectometer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Speed,
    Acceleration,
    Length,
}

impl Unit {
    fn dimension(self) -> Dimension {
        match self {
            Unit::Knot | Unit::FootPerSecond => Dimension::Speed,
            Unit::G | Unit::FootPerSecondSquared => Dimension::Acceleration,
            Unit::Meter | Unit::Foot | Unit::NauticalMile | Unit::Hectometer => Dimension::Length,
        }
    }

    /// Factor to the base unit of the dimension (ft, ft/s, ft/s^2).
    fn to_base(self) -> f64 {
        match self {
            Unit::Knot => KNOT_TO_FPS,
            Unit::FootPerSecond => 1.0,
            Unit::G => G_TO_FPS2,
            Unit::FootPerSecondSquared => 1.0,
            Unit::Meter => METER_TO_FT,
            Unit::Foot => 1.0,
            Unit::NauticalMile => NM_TO_FT,
            Unit::Hectometer => 1.0 / FT_TO_HM,
        }
    }
}

pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64, UnitsError> {
    if from.dimension() != to.dimension() {
        return Err(UnitsError::IncompatibleDimensions { from, to });
    }
    Ok(value * from.to_base() / to.to_base())
}

/// Plain angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    radians: f64,
}

impl Angle {
    pub fn from_radians(radians: f64) -> Angle {
        Angle { radians }
    }
    pub fn from_degrees(deg: f64) -> Angle {
        Angle {
            radians: deg.to_radians(),
        }
    }
    pub fn radians(self) -> f64 {
        self.radians
    }
    pub fn degrees(self) -> f64 {
        self.radians.to_degrees()
    }
    /// Normalize to (-pi, pi].
    pub fn normalized(self) -> Angle {
        let two_pi = std::f64::consts::TAU;
        let mut r = self.radians % two_pi;
        if r <= -std::f64::consts::PI {
            r += two_pi;
        } else if r > std::f64::consts::PI {
            r -= two_pi;
        }
        Angle { radians: r }
    }
}

/// Three-vector, generic over the AD scalar. The frame (inertial NED or
/// leader body) is by documented convention of each function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Vec3<T> {
        Vec3 { x, y, z }
    }
    pub fn splat(v: f64) -> Vec3<T> {
        Vec3::new(T::cst(v), T::cst(v), T::cst(v))
    }
    pub fn from_f64(v: Vec3<f64>) -> Vec3<T> {
        Vec3::new(T::cst(v.x), T::cst(v.y), T::cst(v.z))
    }
    pub fn dot(self, o: Vec3<T>) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }
    pub fn scale(self, k: f64) -> Vec3<T> {
        Vec3::new(self.x.scale(k), self.y.scale(k), self.z.scale(k))
    }
    pub fn scale_t(self, k: T) -> Vec3<T> {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
    /// Flip the vertical component: NED <-> altitude-up representation.
    pub fn flip_vertical(self) -> Vec3<T> {
        Vec3::new(self.x, self.y, -self.z)
    }
}

impl Vec3<f64> {
    pub const ZERO: Vec3<f64> = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };
    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
    pub fn from_array(a: [f64; 3]) -> Vec3<f64> {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl<T: Scalar> std::ops::Add for Vec3<T> {
    type Output = Vec3<T>;
    fn add(self, o: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> std::ops::Sub for Vec3<T> {
    type Output = Vec3<T>;
    fn sub(self, o: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> std::ops::Neg for Vec3<T> {
    type Output = Vec3<T>;
    fn neg(self) -> Vec3<T> {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rotation matrix with orthonormality checks, used at f64 reporting level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    pub m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub fn identity() -> Rotation3 {
        Rotation3 {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Rotation3 {
        let m = &self.m;
        Rotation3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max-norm of `R^T R - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += t.m[i][k] * self.m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
        worst
    }
}

/// Direction cosine matrix rotating leader-frame vectors into the inertial
/// NED frame: yaw by the course angle after pitching by the flight-path
/// angle. Its transpose rotates inertial vectors into the leader frame.
pub fn rotation_leader_to_inertial(gamma: Angle, chi: Angle) -> Rotation3 {
    let (sg, cg) = gamma.radians().sin_cos();
    let (sc, cc) = chi.radians().sin_cos();
    Rotation3 {
        m: [
            [cc * cg, -sc, cc * sg],
            [sc * cg, cc, sc * sg],
            [-sg, 0.0, cg],
        ],
    }
}

/// Leader-to-inertial rotation applied to a vector, AD-generic.
pub fn rotate_leader_to_inertial<T: Scalar>(gamma: T, chi: T, v: Vec3<T>) -> Vec3<T> {
    let (sg, cg) = (gamma.sin(), gamma.cos());
    let (sc, cc) = (chi.sin(), chi.cos());
    Vec3::new(
        cc * cg * v.x - sc * v.y + cc * sg * v.z,
        sc * cg * v.x + cc * v.y + sc * sg * v.z,
        -sg * v.x + cg * v.z,
    )
}

/// Inertial-to-leader rotation (transpose of the above), AD-generic.
pub fn rotate_inertial_to_leader<T: Scalar>(gamma: T, chi: T, v: Vec3<T>) -> Vec3<T> {
    let (sg, cg) = (gamma.sin(), gamma.cos());
    let (sc, cc) = (chi.sin(), chi.cos());
    Vec3::new(
        cc * cg * v.x + sc * cg * v.y - sg * v.z,
        -sc * v.x + cc * v.y,
        cc * sg * v.x + sc * sg * v.y + cg * v.z,
    )
}

/// Flight-path and course angles of an inertial NED velocity:
/// `chi = atan2(v_E, v_N)`, `gamma = atan2(-v_D, v_horizontal)`.
pub fn gamma_chi_from_velocity(v: Vec3) -> Result<(Angle, Angle), UnitsError> {
    let horizontal = (v.x * v.x + v.y * v.y).sqrt();
    if horizontal <= 0.0 {
        return Err(UnitsError::DegenerateHeading);
    }
    let chi = v.y.atan2(v.x);
    let gamma = (-v.z).atan2(horizontal);
    Ok((Angle::from_radians(gamma), Angle::from_radians(chi)))
}

/// Lenient variant for trajectory reporting: degenerate headings fall back
/// to `chi = 0` instead of erroring.
pub fn gamma_chi_lenient(v: Vec3) -> (f64, f64) {
    let horizontal = (v.x * v.x + v.y * v.y).sqrt();
    let chi = if horizontal > 0.0 { v.y.atan2(v.x) } else { 0.0 };
    let gamma = (-v.z).atan2(horizontal);
    (gamma, chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_angles_give_identity() {
        let r = rotation_leader_to_inertial(Angle::from_radians(0.0), Angle::from_radians(0.0));
        assert_eq!(r, Rotation3::identity());
    }

    #[test]
    fn quarter_turn_course_maps_nose_east() {
        let r = rotation_leader_to_inertial(
            Angle::from_radians(0.0),
            Angle::from_radians(std::f64::consts::FRAC_PI_2),
        );
        let nose = r.apply(Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(nose.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(nose.y, 1.0, epsilon = 1e-15);
        assert_relative_eq!(nose.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn straight_climb_maps_nose_up() {
        // gamma = pi/2: nose points up, i.e. NED down-component -1, and the
        // third row of the matrix is [-sin g, 0, cos g].
        let r = rotation_leader_to_inertial(
            Angle::from_radians(std::f64::consts::FRAC_PI_2),
            Angle::from_radians(0.0),
        );
        let nose = r.apply(Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(nose.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(nose.y, 0.0, epsilon = 1e-15);
        assert_relative_eq!(nose.z, -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.m[2][0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.m[2][1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.m[2][2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gamma_chi_examples() {
        let (g, c) = gamma_chi_from_velocity(Vec3::new(100.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.radians(), 0.0);
        assert_eq!(c.radians(), 0.0);
        let (g, c) = gamma_chi_from_velocity(Vec3::new(0.0, 100.0, 0.0)).unwrap();
        assert_eq!(g.radians(), 0.0);
        assert_relative_eq!(c.radians(), std::f64::consts::FRAC_PI_2);
        let (g, c) = gamma_chi_from_velocity(Vec3::new(100.0, 0.0, -100.0)).unwrap();
        assert_relative_eq!(g.radians(), std::f64::consts::FRAC_PI_4);
        assert_eq!(c.radians(), 0.0);
    }

    #[test]
    fn vertical_flight_is_degenerate() {
        assert_eq!(
            gamma_chi_from_velocity(Vec3::new(0.0, 0.0, -500.0)),
            Err(UnitsError::DegenerateHeading)
        );
    }

    #[test]
    fn conversion_examples() {
        assert_relative_eq!(
            convert(450.0, Unit::Knot, Unit::FootPerSecond).unwrap(),
            759.5145,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            convert(1.0, Unit::NauticalMile, Unit::Foot).unwrap(),
            6076.12
        );
        assert_relative_eq!(
            convert(7.0, Unit::G, Unit::FootPerSecondSquared).unwrap(),
            225.218,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            convert(700.0, Unit::Foot, Unit::Hectometer).unwrap(),
            2.1336,
            epsilon = 1e-12
        );
    }

    #[test]
    fn incompatible_dimensions_rejected() {
        assert!(convert(1.0, Unit::Knot, Unit::Foot).is_err());
    }

    proptest! {
        #[test]
        fn rotations_are_orthonormal(g in -1.5f64..1.5, c in -3.1f64..3.1) {
            let r = rotation_leader_to_inertial(Angle::from_radians(g), Angle::from_radians(c));
            prop_assert!(r.orthonormality_defect() <= 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn transpose_inverts_rotation(
            g in -1.5f64..1.5,
            c in -3.1f64..3.1,
            x in -1e4f64..1e4,
            y in -1e4f64..1e4,
            z in -1e4f64..1e4,
        ) {
            let r = rotation_leader_to_inertial(Angle::from_radians(g), Angle::from_radians(c));
            let v = Vec3::new(x, y, z);
            let back = r.transpose().apply(r.apply(v));
            let scale = v.norm().max(1.0);
            prop_assert!((back - v).norm() <= 1e-10 * scale);
        }

        #[test]
        fn generic_rotation_matches_matrix(
            g in -1.5f64..1.5,
            c in -3.1f64..3.1,
            x in -1e3f64..1e3,
            y in -1e3f64..1e3,
            z in -1e3f64..1e3,
        ) {
            let r = rotation_leader_to_inertial(Angle::from_radians(g), Angle::from_radians(c));
            let v = Vec3::new(x, y, z);
            let a = r.apply(v);
            let b = rotate_leader_to_inertial(g, c, v);
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + v.norm()));
            let ai = r.transpose().apply(v);
            let bi = rotate_inertial_to_leader(g, c, v);
            prop_assert!((ai - bi).norm() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn heading_roundtrip_recovers_angles(
            g in -1.5f64..1.5,
            c in prop::num::f64::NORMAL.prop_map(|v| v % std::f64::consts::PI),
            s in 1.0f64..2000.0,
        ) {
            prop_assume!(g.abs() < std::f64::consts::FRAC_PI_2 - 1e-3);
            let v = rotate_leader_to_inertial(g, c, Vec3::new(s, 0.0, 0.0));
            let (gg, cc) = gamma_chi_from_velocity(v).unwrap();
            prop_assert!((gg.radians() - g).abs() <= 1e-9);
            let dc = (Angle::from_radians(cc.radians() - c).normalized()).radians();
            prop_assert!(dc.abs() <= 1e-9);
        }

        #[test]
        fn conversion_roundtrip_is_identity(v in -1e6f64..1e6) {
            for (a, b) in [
                (Unit::Knot, Unit::FootPerSecond),
                (Unit::G, Unit::FootPerSecondSquared),
                (Unit::Meter, Unit::Foot),
                (Unit::NauticalMile, Unit::Hectometer),
            ] {
                let there = convert(v, a, b).unwrap();
                let back = convert(there, b, a).unwrap();
                prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }
}
