//! Danger labeling: which lateral section an object occupies, whether its
//! heading points at the vehicle, and whether it can close the gap within
//! the allowed reaction time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::TrackedObject;
use crate::geometry::{Point3, YawDegrees};

/// Slack on the distance comparison so an object exactly at the threshold
/// is not lost to rounding in the center-norm computation.
pub const DISTANCE_TOLERANCE_M: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DangerError {
    #[error("reaction time must be positive, got {0}")]
    ReactionTime(f64),
    #[error("vehicle width must be positive, got {0}")]
    VehicleWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Left,
    Front,
    Right,
}

impl Section {
    pub fn mirrored(self) -> Self {
        match self {
            Section::Left => Section::Right,
            Section::Right => Section::Left,
            Section::Front => Section::Front,
        }
    }
}

/// Which labeling rules to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Width-based sections with 150° facing windows in every section.
    #[default]
    Current,
    /// Bearing-based 45°/90°/45° sections; 180° side windows, front ignores heading.
    Legacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerConfig {
    pub reaction_time_s: f64,
    pub vehicle_width_m: f64,
    pub policy: Policy,
}

impl Default for DangerConfig {
    fn default() -> Self {
        Self {
            reaction_time_s: 3.0,
            vehicle_width_m: 2.0,
            policy: Policy::Current,
        }
    }
}

impl DangerConfig {
    pub fn validate(&self) -> Result<(), DangerError> {
        if !(self.reaction_time_s > 0.0 && self.reaction_time_s.is_finite()) {
            return Err(DangerError::ReactionTime(self.reaction_time_s));
        }
        if !(self.vehicle_width_m > 0.0 && self.vehicle_width_m.is_finite()) {
            return Err(DangerError::VehicleWidth(self.vehicle_width_m));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerVerdict {
    pub track_id: u64,
    pub dangerous: bool,
    pub section: Section,
    pub distance_m: f64,
    pub threshold_m: f64,
    pub facing: bool,
}

/// Lateral section by the vehicle-width corridor. Boundaries belong to the sides.
pub fn classify_section(center: &Point3, cfg: &DangerConfig) -> Section {
    let w = cfg.vehicle_width_m;
    if center.y >= w {
        Section::Left
    } else if center.y <= -w {
        Section::Right
    } else {
        Section::Front
    }
}

/// Lateral section by bearing: the central 90° is Front, ties go to Front.
pub fn classify_section_legacy(center: &Point3) -> Section {
    let bearing = center.y.atan2(center.x).to_degrees();
    if bearing > 45.0 {
        Section::Left
    } else if bearing < -45.0 {
        Section::Right
    } else {
        Section::Front
    }
}

/// Closed yaw interval per section under the current rules.
pub fn facing_window(section: Section) -> (f64, f64) {
    match section {
        Section::Left => (195.0, 345.0),
        Section::Right => (15.0, 165.0),
        Section::Front => (105.0, 255.0),
    }
}

/// Whether the heading points toward the vehicle. A stationary object
/// (`None`) counts as facing.
pub fn is_facing_vehicle(yaw: Option<YawDegrees>, section: Section, policy: Policy) -> bool {
    let Some(yaw) = yaw else {
        return true;
    };
    let y = yaw.value();
    match policy {
        Policy::Current => {
            let (lo, hi) = facing_window(section);
            (lo..=hi).contains(&y)
        }
        Policy::Legacy => match section {
            Section::Left => (180.0..360.0).contains(&y),
            Section::Right => (0.0..=180.0).contains(&y),
            Section::Front => true,
        },
    }
}

/// Distance the object covers within the reaction time.
pub fn danger_threshold(speed: f64, cfg: &DangerConfig) -> f64 {
    speed * cfg.reaction_time_s
}

fn section_for(center: &Point3, cfg: &DangerConfig) -> Section {
    match cfg.policy {
        Policy::Current => classify_section(center, cfg),
        Policy::Legacy => classify_section_legacy(center),
    }
}

/// Verdict for a single object; `None` when it is behind the vehicle.
pub fn assess(track: &TrackedObject, cfg: &DangerConfig) -> Option<DangerVerdict> {
    if track.position.x < 0.0 {
        return None;
    }
    let section = section_for(&track.position, cfg);
    let distance_m = track.position.planar_norm();
    let threshold_m = danger_threshold(track.speed, cfg);
    let facing = is_facing_vehicle(track.yaw, section, cfg.policy);
    Some(DangerVerdict {
        track_id: track.track_id,
        dangerous: facing && distance_m <= threshold_m + DISTANCE_TOLERANCE_M,
        section,
        distance_m,
        threshold_m,
        facing,
    })
}

/// Verdicts for every frontal object, in input order. Objects behind the
/// vehicle (x < 0) get no verdict.
pub fn detect_danger(tracks: &[TrackedObject], cfg: &DangerConfig) -> Result<Vec<DangerVerdict>, DangerError> {
    cfg.validate()?;
    Ok(tracks.iter().filter_map(|t| assess(t, cfg)).collect())
}

/// The dangerous subset of a verdict list.
pub fn dangerous(verdicts: &[DangerVerdict]) -> impl Iterator<Item = &DangerVerdict> {
    verdicts.iter().filter(|v| v.dangerous)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use proptest::prelude::*;

    fn w1() -> DangerConfig {
        DangerConfig {
            vehicle_width_m: 1.0,
            ..DangerConfig::default()
        }
    }

    fn obj(x: f64, y: f64, speed: f64, yaw: Option<f64>) -> TrackedObject {
        TrackedObject::synthetic(0, Vec3::new(x, y, 0.0), speed, yaw.map(YawDegrees::new))
    }

    #[test]
    fn sections_by_width() {
        let cfg = w1();
        assert_eq!(classify_section(&Vec3::new(5.0, 0.0, 0.0), &cfg), Section::Front);
        assert_eq!(classify_section(&Vec3::new(5.0, 1.0, 0.0), &cfg), Section::Left);
        assert_eq!(classify_section(&Vec3::new(5.0, -1.0, 0.0), &cfg), Section::Right);
        assert_eq!(classify_section(&Vec3::new(5.0, -2.0, 0.0), &cfg), Section::Right);
    }

    #[test]
    fn sections_by_bearing() {
        assert_eq!(classify_section_legacy(&Vec3::new(1.0, 0.0, 0.0)), Section::Front);
        assert_eq!(classify_section_legacy(&Vec3::new(1.0, 2.0, 0.0)), Section::Left);
        // atan2(-1, 1) is exactly -45°.
        assert_eq!((-1.0f64).atan2(1.0).to_degrees(), -45.0);
        assert_eq!(classify_section_legacy(&Vec3::new(1.0, -1.0, 0.0)), Section::Front);
        assert_eq!(classify_section_legacy(&Vec3::new(1.0, -1.01, 0.0)), Section::Right);
    }

    #[test]
    fn facing_windows_current() {
        let y = |d| Some(YawDegrees::new(d));
        assert!(is_facing_vehicle(y(270.0), Section::Left, Policy::Current));
        assert!(!is_facing_vehicle(y(190.0), Section::Left, Policy::Current));
        assert!(is_facing_vehicle(y(195.0), Section::Left, Policy::Current));
        assert!(is_facing_vehicle(y(345.0), Section::Left, Policy::Current));
        assert!(!is_facing_vehicle(y(0.0), Section::Front, Policy::Current));
        assert!(is_facing_vehicle(y(180.0), Section::Front, Policy::Current));
        assert!(is_facing_vehicle(y(90.0), Section::Right, Policy::Current));
        assert!(!is_facing_vehicle(y(170.0), Section::Right, Policy::Current));
        assert!(is_facing_vehicle(None, Section::Left, Policy::Current));
    }

    #[test]
    fn facing_windows_legacy() {
        let y = |d| Some(YawDegrees::new(d));
        for d in [0.0, 45.0, 90.0, 180.0, 300.0] {
            assert!(is_facing_vehicle(y(d), Section::Front, Policy::Legacy));
        }
        assert!(is_facing_vehicle(y(180.0), Section::Left, Policy::Legacy));
        assert!(!is_facing_vehicle(y(0.0), Section::Left, Policy::Legacy));
        assert!(!is_facing_vehicle(y(360.0), Section::Left, Policy::Legacy));
        assert!(is_facing_vehicle(y(0.0), Section::Right, Policy::Legacy));
        assert!(is_facing_vehicle(y(180.0), Section::Right, Policy::Legacy));
        assert!(!is_facing_vehicle(y(181.0), Section::Right, Policy::Legacy));
    }

    #[test]
    fn current_windows_span_150_degrees() {
        for s in [Section::Left, Section::Front, Section::Right] {
            let (lo, hi) = facing_window(s);
            assert_eq!(hi - lo, 150.0);
            let count = (0..360)
                .filter(|&d| is_facing_vehicle(Some(YawDegrees::new(d as f64)), s, Policy::Current))
                .count();
            assert_eq!(count, 151);
        }
    }

    #[test]
    fn threshold_is_speed_times_time() {
        let cfg = DangerConfig::default();
        assert_eq!(danger_threshold(2.0, &cfg), 6.0);
        assert_eq!(danger_threshold(0.0, &cfg), 0.0);
        let one = DangerConfig {
            reaction_time_s: 1.0,
            ..cfg
        };
        assert_eq!(danger_threshold(10.0, &one), 10.0);
    }

    #[test]
    fn verdicts_front_approach() {
        let cfg = DangerConfig::default();
        let v = detect_danger(&[obj(5.0, 0.0, 2.0, Some(180.0)), obj(7.0, 0.0, 2.0, Some(180.0))], &cfg).unwrap();
        assert!(v[0].dangerous && v[0].facing && v[0].section == Section::Front);
        assert_eq!(v[0].threshold_m, 6.0);
        assert!(!v[1].dangerous && v[1].facing);
    }

    #[test]
    fn parallel_object_depends_on_policy() {
        // Left of the corridor, heading straight back along −x.
        let o = obj(2.0, 2.5, 2.0, Some(180.0));
        let current = detect_danger(std::slice::from_ref(&o), &DangerConfig::default()).unwrap();
        assert_eq!(current[0].section, Section::Left);
        assert!(!current[0].dangerous);
        let legacy = DangerConfig {
            policy: Policy::Legacy,
            ..DangerConfig::default()
        };
        assert!(detect_danger(&[o], &legacy).unwrap()[0].dangerous);
    }

    #[test]
    fn stationary_only_dangerous_at_zero_distance() {
        let cfg = DangerConfig::default();
        let v = detect_danger(&[obj(0.5, 0.0, 0.0, None), obj(0.0, 0.0, 0.0, None)], &cfg).unwrap();
        assert!(!v[0].dangerous);
        assert!(v[1].dangerous);
    }

    #[test]
    fn rear_objects_are_skipped_and_order_kept() {
        let cfg = DangerConfig::default();
        let mut a = obj(-1.0, 0.0, 5.0, Some(0.0));
        a.track_id = 4;
        let mut b = obj(3.0, 0.0, 5.0, Some(180.0));
        b.track_id = 2;
        let mut c = obj(30.0, 0.0, 5.0, Some(180.0));
        c.track_id = 1;
        let v = detect_danger(&[a, b, c], &cfg).unwrap();
        assert_eq!(v.iter().map(|v| v.track_id).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(dangerous(&v).count(), 1);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = DangerConfig {
            reaction_time_s: 0.0,
            ..DangerConfig::default()
        };
        assert_eq!(detect_danger(&[], &cfg), Err(DangerError::ReactionTime(0.0)));
    }

    fn arb_obj() -> impl Strategy<Value = TrackedObject> {
        (0.0f64..40.0, -20.0f64..20.0, 0.0f64..15.0, prop::option::weighted(0.9, 0.0f64..360.0))
            .prop_map(|(x, y, s, yaw)| obj(x, y, s, yaw))
    }

    proptest! {
        #[test]
        fn sections_partition(x in 0.0f64..50.0, y in -50.0f64..50.0, w in 0.1f64..5.0) {
            let cfg = DangerConfig { vehicle_width_m: w, ..DangerConfig::default() };
            let p = Vec3::new(x, y, 0.0);
            let hits = [y >= w, y <= -w, -w < y && y < w].iter().filter(|&&b| b).count();
            prop_assert_eq!(hits, 1);
            let s = classify_section(&p, &cfg);
            prop_assert_eq!(s == Section::Left, y >= w);
            prop_assert_eq!(s == Section::Right, y <= -w);
        }

        #[test]
        fn longer_reaction_never_clears_danger(o in arb_obj(), t in 0.1f64..10.0, extra in 0.0f64..10.0,
                                               legacy in any::<bool>()) {
            let policy = if legacy { Policy::Legacy } else { Policy::Current };
            let short = DangerConfig { reaction_time_s: t, policy, ..DangerConfig::default() };
            let long = DangerConfig { reaction_time_s: t + extra, ..short.clone() };
            let a = detect_danger(std::slice::from_ref(&o), &short).unwrap();
            let b = detect_danger(std::slice::from_ref(&o), &long).unwrap();
            prop_assert!(!a[0].dangerous || b[0].dangerous);
        }

        #[test]
        fn mirror_swaps_sides_keeps_flags(o in arb_obj(), legacy in any::<bool>()) {
            let policy = if legacy { Policy::Legacy } else { Policy::Current };
            // Legacy windows are [180, 360) and [0, 180]; yaw 0 is the one asymmetric point.
            prop_assume!(!(legacy && o.yaw.map(|y| y.value()) == Some(0.0)));
            let cfg = DangerConfig { policy, ..DangerConfig::default() };
            let mut m = o.clone();
            m.position.y = -o.position.y;
            m.yaw = o.yaw.map(YawDegrees::mirrored);
            let a = &detect_danger(std::slice::from_ref(&o), &cfg).unwrap()[0];
            let b = &detect_danger(std::slice::from_ref(&m), &cfg).unwrap()[0];
            prop_assert_eq!(a.dangerous, b.dangerous);
            prop_assert_eq!(a.section.mirrored(), b.section);
        }

        #[test]
        fn dangerous_implies_close_and_facing(o in arb_obj(), legacy in any::<bool>()) {
            let policy = if legacy { Policy::Legacy } else { Policy::Current };
            let cfg = DangerConfig { policy, ..DangerConfig::default() };
            for v in detect_danger(&[o], &cfg).unwrap() {
                prop_assert!(!v.dangerous || (v.facing && v.distance_m <= v.threshold_m + DISTANCE_TOLERANCE_M));
            }
        }

        #[test]
        fn legacy_front_covers_current_front(x in 0.0f64..30.0, y in -1.9f64..1.9,
                                             s in 0.0f64..10.0, yaw in 105.0f64..=255.0) {
            // Legacy Front is the ±45° bearing cone; outside it the side windows apply.
            prop_assume!(y.abs() <= x);
            let o = obj(x, y, s, Some(yaw));
            let cur = &detect_danger(std::slice::from_ref(&o), &DangerConfig::default()).unwrap()[0];
            prop_assume!(cur.dangerous && cur.section == Section::Front);
            let legacy = DangerConfig { policy: Policy::Legacy, ..DangerConfig::default() };
            prop_assert!(detect_danger(&[o], &legacy).unwrap()[0].dangerous);
        }
    }
}
