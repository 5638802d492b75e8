use nalgebra::{SMatrix, SVector};

use super::{DetectorConfig, DetectorError};
use crate::geometry::{Point3, Vec3};

type Vector6 = SVector<f64, 6>;
type Matrix6 = SMatrix<f64, 6, 6>;

/// Constant-velocity state `[px, py, pz, vx, vy, vz]` with its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub state_vector: Vector6,
    pub covariance: Matrix6,
}

impl KalmanState {
    pub fn new(position: Point3, velocity: Vec3, covariance: Matrix6) -> Self {
        Self {
            state_vector: Vector6::new(position.x, position.y, position.z, velocity.x, velocity.y, velocity.z),
            covariance,
        }
    }

    /// State seeded directly from a measurement, with the measurement noise
    /// as its covariance.
    pub fn from_measurement(position: Point3, velocity: Vec3, cfg: &DetectorConfig) -> Self {
        Self::new(position, velocity, measurement_covariance(cfg))
    }

    pub fn position(&self) -> Point3 {
        Vec3::new(self.state_vector[0], self.state_vector[1], self.state_vector[2])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.state_vector[3], self.state_vector[4], self.state_vector[5])
    }

    /// Rigid shift of the position estimate; covariance is unchanged.
    pub fn translate(&mut self, offset: Vec3) {
        self.state_vector[0] += offset.x;
        self.state_vector[1] += offset.y;
        self.state_vector[2] += offset.z;
    }
}

fn measurement_covariance(cfg: &DetectorConfig) -> Matrix6 {
    let (p, v) = (cfg.measurement_noise_position, cfg.measurement_noise_velocity);
    Matrix6::from_diagonal(&Vector6::new(p, p, p, v, v, v))
}

fn symmetrize(m: &Matrix6) -> Matrix6 {
    (m + m.transpose()) * 0.5
}

/// Propagate by `dt` under constant velocity.
///
/// Process noise is the discretized white-acceleration model, so every
/// diagonal entry grows when `process_noise > 0`.
pub fn kalman_predict(state: &KalmanState, dt: f64, cfg: &DetectorConfig) -> Result<KalmanState, DetectorError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DetectorError::NonPositiveStep(dt));
    }
    let mut transition = Matrix6::identity();
    let q = cfg.process_noise;
    let mut noise = Matrix6::zeros();
    for axis in 0..3 {
        transition[(axis, axis + 3)] = dt;
        noise[(axis, axis)] = q * dt.powi(4) / 4.0;
        noise[(axis, axis + 3)] = q * dt.powi(3) / 2.0;
        noise[(axis + 3, axis)] = q * dt.powi(3) / 2.0;
        noise[(axis + 3, axis + 3)] = q * dt * dt;
    }
    let covariance = transition * state.covariance * transition.transpose() + noise;
    Ok(KalmanState {
        state_vector: transition * state.state_vector,
        covariance: symmetrize(&covariance),
    })
}

/// Measurement update with a full position and velocity observation.
///
/// The covariance uses the Joseph form, which keeps it symmetric
/// positive-semidefinite under rounding.
pub fn kalman_update(
    state: &KalmanState,
    measured_position: Point3,
    measured_velocity: Vec3,
    cfg: &DetectorConfig,
) -> Result<KalmanState, DetectorError> {
    if !measured_position.is_finite() || !measured_velocity.is_finite() {
        return Err(DetectorError::NonFiniteMeasurement);
    }
    let z = Vector6::new(
        measured_position.x,
        measured_position.y,
        measured_position.z,
        measured_velocity.x,
        measured_velocity.y,
        measured_velocity.z,
    );
    let r = measurement_covariance(cfg);
    let p = &state.covariance;
    let innovation_cov = symmetrize(&(p + r));
    let inverse = innovation_cov
        .cholesky()
        .ok_or(DetectorError::SingularInnovation)?
        .inverse();
    let gain = p * inverse;
    let state_vector = state.state_vector + gain * (z - state.state_vector);
    let residual = Matrix6::identity() - gain;
    let covariance = residual * p * residual.transpose() + gain * r * gain.transpose();
    Ok(KalmanState {
        state_vector,
        covariance: symmetrize(&covariance),
    })
}
