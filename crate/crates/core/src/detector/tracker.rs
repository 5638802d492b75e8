use serde::{Deserialize, Serialize};

use super::{
    associate, estimate_velocity, euclidean_cluster, fit_bounding_box, kalman_predict, kalman_update, DetectorConfig,
    DetectorError, KalmanState, PointCloudFrame, STATIONARY_EPSILON_M,
};
use crate::geometry::{heading_to_yaw, BoundingBox3D, Point3, Vec3, YawDegrees};

/// Obstacle report handed to the danger stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub track_id: u64,
    #[serde(rename = "bbox")]
    pub bounding_box: BoundingBox3D,
    /// Filtered box center.
    pub position: Point3,
    /// Filtered velocity in m/s, ego motion compensated.
    pub velocity: Vec3,
    /// Planar speed, m/s.
    pub speed: f64,
    /// `None` while the object is not moving.
    pub yaw: Option<YawDegrees>,
    pub age_frames: u32,
}

impl TrackedObject {
    /// Object with an explicit kinematic state, bypassing the tracker.
    pub fn synthetic(track_id: u64, position: Point3, speed: f64, yaw: Option<YawDegrees>) -> Self {
        let heading = yaw.map_or(0.0, |y| y.value().to_radians());
        let velocity = Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0);
        let bounding_box = BoundingBox3D::new(position, position, 0.0, track_id).expect("finite synthetic position");
        Self {
            track_id,
            bounding_box,
            position,
            velocity,
            speed,
            yaw,
            age_frames: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Track {
    id: u64,
    last_box: BoundingBox3D,
    filter: KalmanState,
    /// False until a second sighting provides a velocity measurement.
    has_velocity: bool,
    age_frames: u32,
    yaw: Option<YawDegrees>,
}

impl Track {
    fn report(&self) -> TrackedObject {
        let velocity = if self.has_velocity { self.filter.velocity() } else { Vec3::ZERO };
        TrackedObject {
            track_id: self.id,
            bounding_box: self.last_box,
            position: self.filter.position(),
            velocity,
            speed: velocity.planar_norm(),
            yaw: self.yaw,
            age_frames: self.age_frames,
        }
    }
}

/// Frame-to-frame multi-object tracker.
///
/// Tracks live only as long as they are matched in every consecutive frame.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: DetectorConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<(u64, f64)>,
}

impl Tracker {
    pub fn new(cfg: DetectorConfig) -> Result<Self, DetectorError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Cluster, fit, associate and filter one frame.
    pub fn process_frame(&mut self, frame: &PointCloudFrame) -> Result<Vec<TrackedObject>, DetectorError> {
        let dt = match self.last_frame {
            Some((prev_id, _)) if frame.frame_id <= prev_id => {
                return Err(DetectorError::OutOfOrderFrame {
                    prev: prev_id,
                    curr: frame.frame_id,
                })
            }
            Some((_, prev_t)) if !(frame.timestamp > prev_t) => {
                return Err(DetectorError::NonIncreasingTime {
                    prev: prev_t,
                    curr: frame.timestamp,
                })
            }
            Some((_, prev_t)) => Some(frame.timestamp - prev_t),
            None => None,
        };

        let boxes = euclidean_cluster(frame, &self.cfg)?
            .iter()
            .enumerate()
            .map(|(i, c)| fit_bounding_box(frame, c, i as u64))
            .collect::<Result<Vec<_>, _>>()?;

        let prev_boxes: Vec<BoundingBox3D> = self.tracks.iter().map(|t| t.last_box).collect();
        let assoc = associate(&prev_boxes, &boxes, &self.cfg)?;
        let ego = frame.ego_translation * self.cfg.ego_sign;

        let mut next = Vec::with_capacity(boxes.len());
        for &(i, j) in &assoc.matches {
            let track = &self.tracks[i];
            let curr = boxes[j];
            let dt = dt.expect("matches imply a previous frame");
            let measured_velocity = estimate_velocity(&track.last_box, &curr, ego)?;
            let filter = if track.has_velocity {
                let mut predicted = kalman_predict(&track.filter, dt, &self.cfg)?;
                // Prediction is in the previous sensor frame; move it into the current one.
                predicted.translate(ego.extend(0.0) * -1.0);
                kalman_update(&predicted, curr.center(), measured_velocity, &self.cfg)?
            } else {
                KalmanState::from_measurement(curr.center(), measured_velocity, &self.cfg)
            };
            // Yaw follows the filtered velocity rather than the raw displacement.
            let planar = filter.velocity().planar();
            let yaw = if planar.norm() * dt < STATIONARY_EPSILON_M {
                None
            } else {
                heading_to_yaw(planar)
            };
            next.push(Track {
                id: track.id,
                last_box: curr,
                filter,
                has_velocity: true,
                age_frames: track.age_frames + 1,
                yaw,
            });
        }
        for &j in &assoc.unmatched_curr {
            let curr = boxes[j];
            next.push(Track {
                id: self.next_id,
                last_box: curr,
                filter: KalmanState::from_measurement(curr.center(), Vec3::ZERO, &self.cfg),
                has_velocity: false,
                age_frames: 1,
                yaw: None,
            });
            self.next_id += 1;
        }
        next.sort_by_key(|t| t.id);
        self.tracks = next;
        self.last_frame = Some((frame.frame_id, frame.timestamp));
        Ok(self.tracks.iter().map(Track::report).collect())
    }
}
