use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Scenario;
use crate::danger::{detect_danger, DangerConfig, DangerError, DangerVerdict};
use crate::detector::{DetectorConfig, DetectorError, TrackedObject, Tracker};
use crate::light::{LightController, LightError, LightState, Transition};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("detector: {0}")]
    Detector(#[from] DetectorError),
    #[error("danger detector: {0}")]
    Danger(#[from] DangerError),
    #[error("light controller: {0}")]
    Light(#[from] LightError),
}

/// Everything the pipeline produced for one input frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub t: f64,
    pub tracks: Vec<TrackedObject>,
    pub verdicts: Vec<DangerVerdict>,
    /// A danger message was sent to the light controller.
    pub danger: bool,
    /// The controller accepted it (started or restarted the timer).
    pub accepted: bool,
    pub light_on: bool,
}

impl FrameRecord {
    pub fn dangerous_tracks(&self) -> impl Iterator<Item = &TrackedObject> {
        self.tracks
            .iter()
            .filter(|t| self.verdicts.iter().any(|v| v.track_id == t.track_id && v.dangerous))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTrace {
    pub name: String,
    pub frame_rate_hz: f64,
    pub tau_s: f64,
    pub duration_s: f64,
    pub frames: Vec<FrameRecord>,
    /// Light switches at exact virtual times. An Off caused by timer expiry is
    /// stamped at the expiry instant, which may fall between frames.
    pub transitions: Vec<Transition>,
}

impl ScenarioTrace {
    /// Seconds lit within `[0, duration_s)`.
    pub fn light_on_s(&self) -> f64 {
        let mut total = 0.0;
        let mut lit_since = None;
        for tr in &self.transitions {
            match (tr.state, lit_since) {
                (LightState::On, None) => lit_since = Some(tr.t),
                (LightState::Off, Some(start)) => {
                    total += (tr.t.min(self.duration_s) - start).max(0.0);
                    lit_since = None;
                }
                _ => {}
            }
        }
        if let Some(start) = lit_since {
            total += (self.duration_s - start).max(0.0);
        }
        total
    }

    pub fn dangerous_verdict_count(&self) -> usize {
        self.frames.iter().flat_map(|f| &f.verdicts).filter(|v| v.dangerous).count()
    }
}

/// Play a scenario through tracker, danger labeling and light control.
pub fn run_pipeline(
    scenario: &Scenario,
    detector_cfg: &DetectorConfig,
    danger_cfg: &DangerConfig,
    tau_s: f64,
) -> Result<ScenarioTrace, PipelineError> {
    danger_cfg.validate()?;
    let mut tracker = Tracker::new(detector_cfg.clone())?;
    let mut light = LightController::new(tau_s)?;
    let mut frames = Vec::with_capacity(scenario.frames.len());
    let mut transitions = Vec::new();

    for frame in &scenario.frames {
        let tracks = tracker.process_frame(frame)?;
        let verdicts = detect_danger(&tracks, danger_cfg)?;
        let danger = verdicts.iter().any(|v| v.dangerous);
        let tick = light.tick(frame.timestamp, danger)?;
        transitions.extend(tick.transitions.iter().copied());
        frames.push(FrameRecord {
            frame_id: frame.frame_id,
            t: frame.timestamp,
            tracks,
            verdicts,
            danger,
            accepted: tick.accepted,
            light_on: tick.light_on,
        });
    }
    if let Some(end) = light.expiry() {
        transitions.push(Transition {
            t: end,
            state: LightState::Off,
        });
    }

    Ok(ScenarioTrace {
        name: scenario.meta.name.clone(),
        frame_rate_hz: scenario.meta.frame_rate_hz,
        tau_s,
        duration_s: scenario.duration_s(),
        frames,
        transitions,
    })
}
