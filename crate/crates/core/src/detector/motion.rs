use super::DetectorError;
use crate::geometry::{heading_to_yaw, BoundingBox3D, Vec2, Vec3, YawDegrees};

/// Planar displacements shorter than this count as no motion.
pub const STATIONARY_EPSILON_M: f64 = 1e-6;

fn elapsed(prev: &BoundingBox3D, curr: &BoundingBox3D) -> Result<f64, DetectorError> {
    let dt = curr.timestamp - prev.timestamp;
    if !(dt > 0.0) {
        return Err(DetectorError::NonIncreasingTime {
            prev: prev.timestamp,
            curr: curr.timestamp,
        });
    }
    Ok(dt)
}

fn motion(prev: &BoundingBox3D, curr: &BoundingBox3D, ego_translation: Vec2) -> Vec3 {
    curr.center() - prev.center() + ego_translation.extend(0.0)
}

/// Box-center translation plus the vehicle's own translation, over the
/// time between the two boxes.
pub fn estimate_velocity(
    prev: &BoundingBox3D,
    curr: &BoundingBox3D,
    ego_translation: Vec2,
) -> Result<Vec3, DetectorError> {
    let dt = elapsed(prev, curr)?;
    Ok(motion(prev, curr, ego_translation) / dt)
}

/// Yaw of the ego-compensated planar displacement, `None` when stationary.
pub fn estimate_orientation(
    prev: &BoundingBox3D,
    curr: &BoundingBox3D,
    ego_translation: Vec2,
) -> Result<Option<YawDegrees>, DetectorError> {
    elapsed(prev, curr)?;
    let d = motion(prev, curr, ego_translation).planar();
    if d.norm() < STATIONARY_EPSILON_M {
        return Ok(None);
    }
    Ok(heading_to_yaw(d))
}
