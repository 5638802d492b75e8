//! Obstacle detection: point-cloud clustering, box fitting, frame-to-frame
//! association and constant-velocity filtering.

mod assignment;
mod cluster;
mod kalman;
mod motion;
mod tracker;

pub use assignment::{associate, pair_cost, solve_assignment, Association};
pub use cluster::{euclidean_cluster, fit_bounding_box, Cluster};
pub use kalman::{kalman_predict, kalman_update, KalmanState};
pub use motion::{estimate_orientation, estimate_velocity, STATIONARY_EPSILON_M};
pub use tracker::{TrackedObject, Tracker};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point3, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("timestamps must strictly increase (previous {prev}, current {curr})")]
    NonIncreasingTime { prev: f64, curr: f64 },
    #[error("frame {curr} arrived after frame {prev}")]
    OutOfOrderFrame { prev: u64, curr: u64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("non-finite measurement")]
    NonFiniteMeasurement,
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("cluster index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One LiDAR sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFrame {
    pub frame_id: u64,
    /// Virtual seconds.
    pub timestamp: f64,
    pub points: Vec<Point3>,
    /// Vehicle displacement since the previous frame, in meters.
    pub ego_translation: Vec2,
}

impl PointCloudFrame {
    pub fn new(frame_id: u64, timestamp: f64, points: Vec<Point3>) -> Self {
        Self {
            frame_id,
            timestamp,
            points,
            ego_translation: Vec2::ZERO,
        }
    }

    pub fn with_ego(mut self, ego_translation: Vec2) -> Self {
        self.ego_translation = ego_translation;
        self
    }
}

/// Tuning constants for clustering, association and filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub cluster_radius: f64,
    pub min_cluster_points: usize,
    /// Association gate: pairs whose centers are farther apart are never matched.
    pub max_match_displacement: f64,
    pub cost_weight_displacement: f64,
    pub cost_weight_iou: f64,
    /// Spectral density of the white-acceleration process noise.
    pub process_noise: f64,
    pub measurement_noise_position: f64,
    pub measurement_noise_velocity: f64,
    /// +1 adds the ego translation to object displacement, −1 subtracts it.
    pub ego_sign: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            cluster_radius: 0.5,
            min_cluster_points: 4,
            max_match_displacement: 3.0,
            cost_weight_displacement: 1.0,
            cost_weight_iou: 1.0,
            process_noise: 0.1,
            measurement_noise_position: 0.5,
            measurement_noise_velocity: 1.0,
            ego_sign: 1.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |msg: &str| Err(DetectorError::InvalidConfig(msg.to_string()));
        if !(self.cluster_radius > 0.0 && self.cluster_radius.is_finite()) {
            return bad("cluster_radius must be positive");
        }
        if self.min_cluster_points < 1 {
            return bad("min_cluster_points must be at least 1");
        }
        if !(self.max_match_displacement >= 0.0) {
            return bad("max_match_displacement must be non-negative");
        }
        if !(self.cost_weight_displacement >= 0.0 && self.cost_weight_iou >= 0.0) {
            return bad("cost weights must be non-negative");
        }
        if self.cost_weight_displacement == 0.0 && self.cost_weight_iou == 0.0 {
            return bad("cost weights must not both be zero");
        }
        if !(self.process_noise >= 0.0 && self.process_noise.is_finite()) {
            return bad("process_noise must be non-negative");
        }
        if !(self.measurement_noise_position > 0.0 && self.measurement_noise_velocity > 0.0) {
            return bad("measurement noise must be positive");
        }
        if self.ego_sign != 1.0 && self.ego_sign != -1.0 {
            return bad("ego_sign must be +1 or -1");
        }
        Ok(())
    }
}
