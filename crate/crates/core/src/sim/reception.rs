//! Frame reception under SINR with capture.
//!
//! A receiver decodes a frame when it was free to lock onto it at the frame's
//! first instant, the frame clears the decode threshold, and SINR stays at or
//! above the capture ratio for the whole frame. Interference is additive.

use serde::{Deserialize, Serialize};

use crate::rf::RadioConfig;

/// Simulation time in nanoseconds.
pub type Time = u64;

/// A signal present at the receiver over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub power: f64,
    pub start: Time,
    pub end: Time,
}

impl Interval {
    pub fn active_at(&self, t: Time) -> bool {
        self.start <= t && t < self.end
    }
}

/// Whether a frame occupying `[start, end)` with `arrival_power` is decoded
/// given the other signals at the receiver.
///
/// Signals that began strictly before `start` and are still on the air decide
/// whether the receiver is deafened: if their summed power reaches the
/// carrier-sense threshold the frame is lost regardless of SINR. Signals
/// starting at `start` or later only enter the SINR check. The receiver's own
/// transmissions are passed as intervals of infinite power.
pub fn resolve_reception(
    start: Time,
    end: Time,
    arrival_power: f64,
    overlapping: &[Interval],
    cfg: &RadioConfig,
) -> bool {
    let deaf: f64 = overlapping
        .iter()
        .filter(|i| i.start < start && i.end > start)
        .map(|i| i.power)
        .sum();
    if deaf >= cfg.cs_threshold {
        return false;
    }
    if arrival_power < cfg.rx_threshold {
        return false;
    }
    // interference only rises when a signal starts, so checking the frame
    // start and every later onset inside the frame suffices
    let onsets = std::iter::once(start).chain(
        overlapping
            .iter()
            .filter(|i| i.start > start && i.start < end)
            .map(|i| i.start),
    );
    for t in onsets {
        let interference: f64 = overlapping.iter().filter(|i| i.active_at(t)).map(|i| i.power).sum();
        if arrival_power / (cfg.noise_floor + interference) < cfg.capture_sinr {
            return false;
        }
    }
    true
}
