use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{FrameTruth, ScenarioTrace};

pub const DEFAULT_MATCHING_RADIUS_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => self.tp += 1,
            Outcome::FalsePositive => self.fp += 1,
            Outcome::FalseNegative => self.fn_ += 1,
            Outcome::TrueNegative => self.tn += 1,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;
    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

/// Ratios in [0, 1]; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    MetricsReport {
        precision: ratio(cm.tp, cm.tp + cm.fp),
        recall: ratio(cm.tp, cm.tp + cm.fn_),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

/// How one ground-truth object related to the pipeline in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMatch {
    pub frame_id: u64,
    pub label: String,
    pub truly_dangerous: bool,
    /// Nearest track within the matching radius.
    pub track_id: Option<u64>,
    /// Some track within the radius was labeled dangerous.
    pub predicted_dangerous: bool,
}

/// Scoring unit: one truth object over a whole scenario, or one phantom
/// track flagged dangerous away from every truth object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub label: String,
    pub outcome: Outcome,
}

/// Per-frame pairing of truth objects with tracks.
pub fn match_frames(trace: &ScenarioTrace, ground_truth: &[FrameTruth], matching_radius: f64) -> Vec<FrameMatch> {
    let truth_by_frame: HashMap<u64, &FrameTruth> = ground_truth.iter().map(|g| (g.frame_id, g)).collect();
    let mut out = Vec::new();
    for frame in &trace.frames {
        let Some(truth) = truth_by_frame.get(&frame.frame_id) else {
            continue;
        };
        for obj in &truth.objects {
            let mut nearest: Option<(f64, u64)> = None;
            let mut predicted = false;
            for track in &frame.tracks {
                let d = (track.position - obj.pos).planar_norm();
                if d > matching_radius {
                    continue;
                }
                if nearest.is_none_or(|(best, _)| d < best) {
                    nearest = Some((d, track.track_id));
                }
                predicted |= frame.verdicts.iter().any(|v| v.track_id == track.track_id && v.dangerous);
            }
            out.push(FrameMatch {
                frame_id: frame.frame_id,
                label: obj.label.clone(),
                truly_dangerous: obj.dangerous,
                track_id: nearest.map(|(_, id)| id),
                predicted_dangerous: predicted,
            });
        }
    }
    out
}

/// Episode-level outcomes.
///
/// For each truth object: TP if it was flagged in a frame where it was truly
/// dangerous; FN if it was truly dangerous at some point but never flagged
/// while so; FP if never truly dangerous yet flagged; TN if never truly
/// dangerous, never flagged, and tracked at least once. Objects never
/// tracked and never dangerous are not scored. Each track flagged dangerous
/// with no truth object within the radius adds one FP.
pub fn score_episodes(trace: &ScenarioTrace, ground_truth: &[FrameTruth], matching_radius: f64) -> Vec<EpisodeOutcome> {
    #[derive(Default)]
    struct Episode {
        truly: bool,
        hit: bool,
        flagged: bool,
        tracked: bool,
    }
    let mut episodes: BTreeMap<String, Episode> = BTreeMap::new();
    for m in match_frames(trace, ground_truth, matching_radius) {
        let e = episodes.entry(m.label).or_default();
        e.truly |= m.truly_dangerous;
        e.hit |= m.truly_dangerous && m.predicted_dangerous;
        e.flagged |= m.predicted_dangerous;
        e.tracked |= m.track_id.is_some();
    }
    let mut out: Vec<EpisodeOutcome> = episodes
        .into_iter()
        .filter_map(|(label, e)| {
            let outcome = match (e.truly, e.hit, e.flagged, e.tracked) {
                (true, true, _, _) => Outcome::TruePositive,
                (true, false, _, _) => Outcome::FalseNegative,
                (false, _, true, _) => Outcome::FalsePositive,
                (false, _, false, true) => Outcome::TrueNegative,
                (false, _, false, false) => return None,
            };
            Some(EpisodeOutcome { label, outcome })
        })
        .collect();

    let truth_by_frame: HashMap<u64, &FrameTruth> = ground_truth.iter().map(|g| (g.frame_id, g)).collect();
    let mut phantoms = BTreeSet::new();
    for frame in &trace.frames {
        let objects = truth_by_frame.get(&frame.frame_id).map(|g| g.objects.as_slice()).unwrap_or(&[]);
        for track in frame.dangerous_tracks() {
            let near_truth = objects
                .iter()
                .any(|o| (track.position - o.pos).planar_norm() <= matching_radius);
            if !near_truth {
                phantoms.insert(track.track_id);
            }
        }
    }
    out.extend(phantoms.into_iter().map(|id| EpisodeOutcome {
        label: format!("track-{id}"),
        outcome: Outcome::FalsePositive,
    }));
    out
}

/// Confusion matrix over object episodes; see [`score_episodes`].
pub fn score_trace(trace: &ScenarioTrace, ground_truth: &[FrameTruth], matching_radius: f64) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for e in score_episodes(trace, ground_truth, matching_radius) {
        cm.record(e.outcome);
    }
    cm
}
