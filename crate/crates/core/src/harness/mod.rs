//! Scenario generation, file I/O, end-to-end playback and evaluation.

mod energy;
mod generate;
mod io;
mod metrics;
mod pipeline;

pub use energy::{
    energy_report, EnergyError, EnergyModel, EnergyPreset, EnergyReport, EnergyRow, Beam, Headlight,
    AVERAGE_CASE_HOURS, BEST_CASE_EVENTS, BEST_CASE_HOURS, WORST_CASE_HOURS,
};
pub use generate::{generate_scenario, truth_is_dangerous, ActorScript, Preset, ScenarioSpec, SpecError};
pub use io::{load_scenario, read_scenario, save_scenario, write_scenario, write_trace, ScenarioIoError, FORMAT_VERSION};
pub use metrics::{
    compute_metrics, match_frames, score_episodes, score_trace, ConfusionMatrix, EpisodeOutcome, FrameMatch, MetricsReport, Outcome,
    DEFAULT_MATCHING_RADIUS_M,
};
pub use pipeline::{run_pipeline, FrameRecord, PipelineError, ScenarioTrace};

use serde::{Deserialize, Serialize};

use crate::detector::PointCloudFrame;
use crate::geometry::Point3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub name: String,
    pub frame_rate_hz: f64,
    pub vehicle_width_m: f64,
    pub seed: u64,
}

/// Scripted position and danger label of one actor in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub label: String,
    pub pos: Point3,
    pub dangerous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame_id: u64,
    pub objects: Vec<TruthObject>,
}

/// Sensor frames plus the scripted truth they were rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: ScenarioMeta,
    pub frames: Vec<PointCloudFrame>,
    pub ground_truth: Vec<FrameTruth>,
}

impl Scenario {
    /// Length of the recording: one frame period per frame.
    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.meta.frame_rate_hz
    }

    pub fn truth_for(&self, frame_id: u64) -> Option<&FrameTruth> {
        self.ground_truth.iter().find(|g| g.frame_id == frame_id)
    }
}
