//! Scenario configuration files: flat `key = value` text with dotted
//! section keys and units in the key names. Every key defaults to the
//! standard test-case value; only the leader kind is mandatory. Unknown
//! keys are rejected by name.

use crate::formation::{FollowerState, ScenarioConfig};
use crate::guess::{GuessParams, RingTarget};
use crate::leader::{LeaderSpec, LoopParams, SpiralParams};
use crate::units::{Angle, Vec3, G_TO_FPS2, KNOT_TO_FPS};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("leader.kind is required (spiral | loops | tabulated)")]
    MissingLeaderKind,
    #[error("beta must lie in (0,1)")]
    BetaOutOfRange,
}

const KNOWN_KEYS: &[&str] = &[
    "scenario.name",
    "leader.kind",
    "leader.initial_north_ft",
    "leader.initial_east_ft",
    "leader.initial_altitude_ft",
    "leader.spiral.speed_kt",
    "leader.spiral.turn_rate_deg_s",
    "leader.spiral.descent_rate_fps",
    "leader.spiral.initial_course_deg",
    "leader.loops.height_ft",
    "leader.loops.count",
    "leader.loops.entry_speed_kt",
    "leader.loops.heading_deg",
    "leader.loops.blend_duration_s",
    "leader.tabulated.path",
    "follower.initial_north_ft",
    "follower.initial_east_ft",
    "follower.initial_altitude_ft",
    "follower.initial_velocity_north_kt",
    "follower.initial_velocity_east_kt",
    "follower.initial_velocity_up_kt",
    "follower.initial_accel_north_g",
    "follower.initial_accel_east_g",
    "follower.initial_accel_up_g",
    "ring.center_x_ft",
    "ring.center_y_ft",
    "ring.center_z_ft",
    "ring.radius_ft",
    "ring.jet_wash_radius_ft",
    "cost.beta",
    "constraint.v_min_kt",
    "constraint.v_max_kt",
    "constraint.a_min_g",
    "constraint.a_max_g",
    "constraint.jerk_max_g_s",
    "constraint.formation_tolerance_m",
    "constraint.continuity_tolerance_m",
    "phase2.final_time_s",
    "guess.target",
    "guess.position_gain",
    "guess.velocity_gain",
    "guess.sample_dt_s",
    "solver.mesh_tol",
    "solver.nlp_tol",
    "solver.max_mesh_iterations",
    "solver.max_nlp_iterations",
    "solver.initial_intervals",
    "solver.initial_order",
];

/// Parsed key/value map in canonical (sorted) order.
pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_map(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    Ok(map)
}

fn get_f64(map: &ConfigMap, key: &str, default: f64) -> Result<f64, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse::<f64>().map_err(|e| ConfigError::BadValue {
            key: key.into(),
            reason: e.to_string(),
        }),
    }
}

fn get_usize(map: &ConfigMap, key: &str, default: usize) -> Result<usize, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse::<usize>().map_err(|e| ConfigError::BadValue {
            key: key.into(),
            reason: e.to_string(),
        }),
    }
}

/// Build a scenario from parsed keys, defaulting everything except the
/// leader kind to the standard test-case values.
pub fn scenario_from_map(map: &ConfigMap, base_dir: &Path) -> Result<ScenarioConfig, ConfigError> {
    let kind = map
        .get("leader.kind")
        .ok_or(ConfigError::MissingLeaderKind)?;

    let leader_north = get_f64(map, "leader.initial_north_ft", crate::units::NM_TO_FT)?;
    let leader_east = get_f64(map, "leader.initial_east_ft", -1000.0)?;
    let leader_alt = get_f64(map, "leader.initial_altitude_ft", 20_000.0)?;

    let leader = match kind.as_str() {
        "spiral" => LeaderSpec::Spiral(SpiralParams {
            speed_kt: get_f64(map, "leader.spiral.speed_kt", 450.0)?,
            turn_rate_rad_s: get_f64(map, "leader.spiral.turn_rate_deg_s", -3.0)?.to_radians(),
            descent_rate_fps: get_f64(map, "leader.spiral.descent_rate_fps", 6500.0 / 120.0)?,
            initial_altitude_ft: leader_alt,
            initial_course: Angle::from_degrees(get_f64(
                map,
                "leader.spiral.initial_course_deg",
                0.0,
            )?),
            initial_north_ft: leader_north,
            initial_east_ft: leader_east,
        }),
        "loops" => LeaderSpec::Loops(LoopParams {
            loop_height_ft: get_f64(map, "leader.loops.height_ft", 12_000.0)?,
            loop_count: get_usize(map, "leader.loops.count", 2)?,
            entry_speed_kt: get_f64(map, "leader.loops.entry_speed_kt", 450.0)?,
            heading: Angle::from_degrees(get_f64(map, "leader.loops.heading_deg", 0.0)?),
            blend_duration_s: get_f64(map, "leader.loops.blend_duration_s", 5.0)?,
            initial_altitude_ft: leader_alt,
            initial_north_ft: leader_north,
            initial_east_ft: leader_east,
        }),
        "tabulated" => {
            let rel = map
                .get("leader.tabulated.path")
                .ok_or_else(|| ConfigError::BadValue {
                    key: "leader.tabulated.path".into(),
                    reason: "required for leader.kind = tabulated".into(),
                })?;
            LeaderSpec::Tabulated {
                path: base_dir.join(rel),
            }
        }
        other => {
            return Err(ConfigError::BadValue {
                key: "leader.kind".into(),
                reason: format!("unknown kind `{other}` (spiral | loops | tabulated)"),
            })
        }
    };

    let beta = get_f64(map, "cost.beta", 0.9)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ConfigError::BetaOutOfRange);
    }

    let target_str = map
        .get("guess.target")
        .map(|s| s.as_str())
        .unwrap_or("right");
    let target = RingTarget::parse(target_str).ok_or_else(|| ConfigError::BadValue {
        key: "guess.target".into(),
        reason: format!("unknown target `{target_str}` (left | right | top | bottom)"),
    })?;

    let follower_initial = FollowerState {
        p: Vec3::new(
            get_f64(map, "follower.initial_north_ft", 0.0)?,
            get_f64(map, "follower.initial_east_ft", 0.0)?,
            -get_f64(map, "follower.initial_altitude_ft", 20_000.0)?,
        ),
        v: Vec3::new(
            get_f64(map, "follower.initial_velocity_north_kt", 450.0)? * KNOT_TO_FPS,
            get_f64(map, "follower.initial_velocity_east_kt", 0.0)? * KNOT_TO_FPS,
            -get_f64(map, "follower.initial_velocity_up_kt", 0.0)? * KNOT_TO_FPS,
        ),
        a: Vec3::new(
            get_f64(map, "follower.initial_accel_north_g", 0.07)? * G_TO_FPS2,
            get_f64(map, "follower.initial_accel_east_g", 0.0)? * G_TO_FPS2,
            -get_f64(map, "follower.initial_accel_up_g", 1.0)? * G_TO_FPS2,
        ),
    };

    Ok(ScenarioConfig {
        name: map
            .get("scenario.name")
            .cloned()
            .unwrap_or_else(|| "scenario".into()),
        follower_initial,
        leader,
        ring: crate::formation::RingSpec {
            center_leader_frame: Vec3::new(
                get_f64(map, "ring.center_x_ft", -700.0)?,
                get_f64(map, "ring.center_y_ft", 0.0)?,
                get_f64(map, "ring.center_z_ft", 0.0)?,
            ),
            radius_ft: get_f64(map, "ring.radius_ft", 700.0)?,
            jet_wash_radius_ft: get_f64(map, "ring.jet_wash_radius_ft", 5.0)?,
        },
        beta,
        formation_tolerance_m: get_f64(map, "constraint.formation_tolerance_m", 10.0)?,
        continuity_tolerance_m: get_f64(map, "constraint.continuity_tolerance_m", 0.1)?,
        phase2_final_time_s: get_f64(map, "phase2.final_time_s", 120.0)?,
        envelope: crate::formation::EnvelopeBounds {
            v_min_kt: get_f64(map, "constraint.v_min_kt", 200.0)?,
            v_max_kt: get_f64(map, "constraint.v_max_kt", 700.0)?,
            a_min_g: get_f64(map, "constraint.a_min_g", 0.25)?,
            a_max_g: get_f64(map, "constraint.a_max_g", 7.0)?,
            jerk_max_g_per_s: get_f64(map, "constraint.jerk_max_g_s", 5.0)?,
        },
        guess: GuessParams {
            target,
            position_gain: get_f64(map, "guess.position_gain", 0.25)?,
            velocity_gain: get_f64(map, "guess.velocity_gain", 1.0)?,
            sample_dt_s: get_f64(map, "guess.sample_dt_s", 0.1)?,
        },
        solver: crate::formation::SolverParams {
            mesh_tol: get_f64(map, "solver.mesh_tol", 1e-3)?,
            nlp_tol: get_f64(map, "solver.nlp_tol", 1e-5)?,
            max_mesh_iterations: get_usize(map, "solver.max_mesh_iterations", 15)?,
            max_nlp_iterations: get_usize(map, "solver.max_nlp_iterations", 3000)?,
            initial_intervals: get_usize(map, "solver.initial_intervals", 10)?,
            initial_order: get_usize(map, "solver.initial_order", 4)?,
        },
    })
}

/// Load a scenario file; relative tabulated-leader paths resolve against
/// the config file's directory.
pub fn load_scenario(path: &Path) -> Result<(ScenarioConfig, ConfigMap), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let map = parse_map(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let cfg = scenario_from_map(&map, base)?;
    Ok((cfg, map))
}

/// Deterministic hash over the canonicalized key/value map: two files with
/// the same semantic content (different ordering, comments, spacing) hash
/// identically.
pub fn config_hash(map: &ConfigMap) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in map {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    format!("sha256:{:x}", hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_spiral_defaults_match_table() {
        let map = parse_map("leader.kind = spiral\n").unwrap();
        let cfg = scenario_from_map(&map, Path::new(".")).unwrap();
        assert_eq!(cfg.beta, 0.9);
        assert_eq!(cfg.ring.radius_ft, 700.0);
        assert_eq!(cfg.formation_tolerance_m, 10.0);
        assert_eq!(cfg.envelope.v_min_kt, 200.0);
        assert_eq!(cfg.envelope.v_max_kt, 700.0);
        assert_eq!(cfg.envelope.a_min_g, 0.25);
        assert_eq!(cfg.envelope.a_max_g, 7.0);
        assert_eq!(cfg.phase2_final_time_s, 120.0);
        assert_eq!(cfg.ring.jet_wash_radius_ft, 5.0);
        // Follower initial state lives in NED internally.
        assert_eq!(cfg.follower_initial.p.z, -20_000.0);
        assert_eq!(cfg.follower_initial.a.z, -G_TO_FPS2);
    }

    #[test]
    fn empty_file_requires_leader_kind() {
        let map = parse_map("# nothing here\n").unwrap();
        match scenario_from_map(&map, Path::new(".")) {
            Err(ConfigError::MissingLeaderKind) => {}
            other => panic!("expected missing-leader error, got {other:?}"),
        }
    }

    #[test]
    fn beta_out_of_range_is_rejected_with_message() {
        let map = parse_map("leader.kind = spiral\ncost.beta = 1.2\n").unwrap();
        let err = scenario_from_map(&map, Path::new(".")).unwrap_err();
        assert_eq!(err.to_string(), "beta must lie in (0,1)");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = parse_map("leader.kind = spiral\nring.diameter_ft = 1400\n").unwrap_err();
        assert_eq!(err.to_string(), "unknown key `ring.diameter_ft`");
    }

    #[test]
    fn hash_ignores_ordering_and_comments() {
        let a = parse_map("leader.kind = spiral\ncost.beta = 0.9\n").unwrap();
        let b = parse_map("# comment\ncost.beta = 0.9\nleader.kind = spiral  # trailing\n").unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c = parse_map("leader.kind = loops\ncost.beta = 0.9\n").unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        assert!(matches!(
            parse_map("leader.kind = spiral\nleader.kind = loops\n"),
            Err(ConfigError::DuplicateKey(_))
        ));
    }
}
