use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Night drive used as the always-on baseline: 22 minutes, taken as 0.366 h.
pub const WORST_CASE_HOURS: f64 = 0.366;
/// Lit time when roughly 21% of detections are dangerous: 4 min 37 s, taken as 0.077 h.
pub const AVERAGE_CASE_HOURS: f64 = 0.077;
/// Hand-counted dangerous objects on the same drive.
pub const BEST_CASE_EVENTS: usize = 47;
/// 47 isolated 3 s cycles = 141 s, taken as 0.039 h.
pub const BEST_CASE_HOURS: f64 = 0.039;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("on-time {on_time_s} s exceeds total time {total_time_s} s")]
    OnTimeExceedsTotal { on_time_s: f64, total_time_s: f64 },
    #[error("times must be non-negative and finite")]
    InvalidTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Beam {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Headlight {
    #[serde(rename = "flashlight")]
    Flashlight,
    #[serde(rename = "led")]
    Led,
    #[serde(rename = "halogen")]
    Halogen,
}

impl Headlight {
    pub fn name(self) -> &'static str {
        match self {
            Headlight::Flashlight => "flashlight",
            Headlight::Led => "led",
            Headlight::Halogen => "halogen",
        }
    }
}

/// Lamp wattages per beam setting; `None` where a lamp has no such setting.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub lamps: Vec<(Headlight, Option<f64>, Option<f64>)>,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            lamps: vec![
                (Headlight::Flashlight, None, Some(1.5)),
                (Headlight::Led, Some(15.0), Some(25.0)),
                (Headlight::Halogen, Some(55.0), Some(65.0)),
            ],
        }
    }
}

impl EnergyModel {
    pub fn watts(&self, lamp: Headlight, beam: Beam) -> Option<f64> {
        self.lamps.iter().find(|l| l.0 == lamp).and_then(|&(_, low, high)| match beam {
            Beam::Low => low,
            Beam::High => high,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub headlight: Headlight,
    pub watts: Option<f64>,
    /// Energy with the controller, Wh.
    pub on_wh: Option<f64>,
    /// Energy with the light on the whole time, Wh.
    pub baseline_wh: Option<f64>,
    pub saved_wh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub on_time_s: f64,
    pub total_time_s: f64,
    pub beam: Beam,
    pub rows: Vec<EnergyRow>,
    /// `1 − on/total`; `None` for a zero-length drive.
    pub fraction_saved: Option<f64>,
}

impl EnergyReport {
    pub fn row(&self, lamp: Headlight) -> Option<&EnergyRow> {
        self.rows.iter().find(|r| r.headlight == lamp)
    }
}

/// Watt-hours for each lamp given how long the light was on.
pub fn energy_report(on_time_s: f64, total_time_s: f64, model: &EnergyModel, beam: Beam) -> Result<EnergyReport, EnergyError> {
    if !(on_time_s >= 0.0 && total_time_s >= 0.0 && on_time_s.is_finite() && total_time_s.is_finite()) {
        return Err(EnergyError::InvalidTime);
    }
    if on_time_s > total_time_s {
        return Err(EnergyError::OnTimeExceedsTotal { on_time_s, total_time_s });
    }
    let rows = model
        .lamps
        .iter()
        .map(|&(headlight, ..)| {
            let watts = model.watts(headlight, beam);
            let on_wh = watts.map(|w| w * on_time_s / 3600.0);
            let baseline_wh = watts.map(|w| w * total_time_s / 3600.0);
            EnergyRow {
                headlight,
                watts,
                on_wh,
                baseline_wh,
                saved_wh: on_wh.zip(baseline_wh).map(|(on, base)| base - on),
            }
        })
        .collect();
    Ok(EnergyReport {
        on_time_s,
        total_time_s,
        beam,
        rows,
        fraction_saved: (total_time_s > 0.0).then(|| 1.0 - on_time_s / total_time_s),
    })
}

/// The three lighting cases of a night drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnergyPreset {
    /// Lights on for the whole drive.
    Worst,
    /// Lit for the share of time random detections are dangerous.
    Average,
    /// Only the hand-counted dangerous objects, one cycle each.
    Best,
}

impl EnergyPreset {
    pub fn on_hours(self) -> f64 {
        match self {
            EnergyPreset::Worst => WORST_CASE_HOURS,
            EnergyPreset::Average => AVERAGE_CASE_HOURS,
            EnergyPreset::Best => BEST_CASE_HOURS,
        }
    }

    /// `(on_time_s, total_time_s)` for the preset.
    pub fn times(self) -> (f64, f64) {
        (self.on_hours() * 3600.0, WORST_CASE_HOURS * 3600.0)
    }
}
