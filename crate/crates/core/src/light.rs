//! Two-state headlight controller with a countdown timer on virtual time.
//!
//! Off + danger switches the light on for `tau_s` seconds. While more than
//! one second remains, further danger messages are ignored; once the timer
//! is at or below one second a danger message restarts the full cycle. The
//! light goes off when the timer runs out with no danger pending.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Remaining time at or below which danger messages are accepted again.
pub const ACCEPT_WINDOW_S: f64 = 1.0;

/// Timer values within this of zero (or of a boundary) are treated as equal
/// to it; frame timestamps carry rounding from `frame_id / rate`.
pub const TIME_EPSILON_S: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LightError {
    #[error("time went backward from {last} to {now}")]
    TimeWentBackward { last: f64, now: f64 },
    #[error("timer duration must be positive, got {0}")]
    InvalidTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightState {
    On,
    Off,
}

/// A change of light state at an exact virtual time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub state: LightState,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutcome {
    /// Light state after the tick.
    pub light_on: bool,
    /// Whether a danger message started or restarted the timer.
    pub accepted: bool,
    /// At most an Off (timer expiry) followed by an On.
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightController {
    tau_s: f64,
    timer_s: f64,
    last_tick: Option<f64>,
    accepted_messages: u64,
}

impl LightController {
    pub fn new(tau_s: f64) -> Result<Self, LightError> {
        if !(tau_s > 0.0 && tau_s.is_finite()) {
            return Err(LightError::InvalidTau(tau_s));
        }
        Ok(Self {
            tau_s,
            timer_s: 0.0,
            last_tick: None,
            accepted_messages: 0,
        })
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_s
    }

    pub fn timer_s(&self) -> f64 {
        self.timer_s
    }

    pub fn light_on(&self) -> bool {
        self.timer_s > 0.0
    }

    pub fn last_tick(&self) -> Option<f64> {
        self.last_tick
    }

    pub fn accepted_messages(&self) -> u64 {
        self.accepted_messages
    }

    /// Advance the clock to `now` and handle an optional danger message.
    pub fn tick(&mut self, now: f64, danger: bool) -> Result<TickOutcome, LightError> {
        let last = self.last_tick.unwrap_or(now);
        if now < last {
            return Err(LightError::TimeWentBackward { last, now });
        }
        let mut out = TickOutcome::default();
        let was_on = self.light_on();
        let remaining = self.timer_s - (now - last);

        if was_on && remaining < -TIME_EPSILON_S {
            // Expired between ticks.
            out.transitions.push(Transition {
                t: last + self.timer_s,
                state: LightState::Off,
            });
            self.timer_s = 0.0;
        } else if remaining <= TIME_EPSILON_S {
            // Expiring right now: a danger message here continues the cycle.
            self.timer_s = 0.0;
            if was_on && !danger {
                out.transitions.push(Transition {
                    t: now,
                    state: LightState::Off,
                });
            }
        } else {
            self.timer_s = remaining;
        }

        if danger {
            if self.timer_s == 0.0 {
                if !(was_on && out.transitions.is_empty()) {
                    out.transitions.push(Transition {
                        t: now,
                        state: LightState::On,
                    });
                }
                self.timer_s = self.tau_s;
                out.accepted = true;
            } else if self.timer_s <= ACCEPT_WINDOW_S + TIME_EPSILON_S {
                self.timer_s = self.tau_s;
                out.accepted = true;
            }
        }
        if out.accepted {
            self.accepted_messages += 1;
        }
        self.last_tick = Some(now);
        out.light_on = self.light_on();
        Ok(out)
    }

    /// Time at which the light will go off if no further danger arrives.
    pub fn expiry(&self) -> Option<f64> {
        match self.last_tick {
            Some(t) if self.light_on() => Some(t + self.timer_s),
            _ => None,
        }
    }
}

/// Lit intervals produced by replaying a danger trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LightReplay {
    pub transitions: Vec<Transition>,
    /// Closed-open `[start, end)` spans during which the light was on. The
    /// last span runs to timer expiry even past the final trace entry.
    pub intervals: Vec<(f64, f64)>,
    pub accepted_messages: u64,
}

impl LightReplay {
    pub fn on_time(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// On-time restricted to `[start, end)`.
    pub fn on_time_within(&self, start: f64, end: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(end) - a.max(start)).max(0.0))
            .sum()
    }
}

/// Drives a controller through `(timestamp, danger)` pairs and collects
/// the light's transitions and lit spans.
pub fn replay(trace: &[(f64, bool)], tau_s: f64) -> Result<LightReplay, LightError> {
    let mut ctl = LightController::new(tau_s)?;
    let mut out = LightReplay::default();
    let mut lit_since: Option<f64> = None;
    for &(t, danger) in trace {
        let tick = ctl.tick(t, danger)?;
        for tr in &tick.transitions {
            match tr.state {
                LightState::On => lit_since = Some(tr.t),
                LightState::Off => {
                    if let Some(start) = lit_since.take() {
                        out.intervals.push((start, tr.t));
                    }
                }
            }
        }
        out.transitions.extend(tick.transitions);
    }
    if let (Some(start), Some(end)) = (lit_since, ctl.expiry()) {
        out.intervals.push((start, end));
        out.transitions.push(Transition {
            t: end,
            state: LightState::Off,
        });
    }
    out.accepted_messages = ctl.accepted_messages();
    Ok(out)
}

/// Total seconds lit, letting the final cycle run out.
pub fn on_duration(trace: &[(f64, bool)], tau_s: f64) -> Result<f64, LightError> {
    Ok(replay(trace, tau_s)?.on_time())
}
