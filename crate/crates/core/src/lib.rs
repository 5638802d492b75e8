//! Simulated LiDAR danger detection driving a timer-based headlight.
//!
//! The pipeline runs point-cloud frames through an obstacle tracker, labels
//! tracked objects as dangerous or not, and switches a headlight on a
//! virtual clock. The [`harness`] module generates and replays scenarios and
//! scores them; [`montecarlo`] estimates how often random objects are
//! labeled dangerous.

pub mod cli;
pub mod danger;
pub mod detector;
pub mod geometry;
pub mod harness;
pub mod light;
pub mod montecarlo;
