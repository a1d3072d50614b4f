//! Physical layer: two-ray ground path loss, SINR, channel-state thresholds
//! and shadowing-based link delivery probability.
//!
//! The packet-level simulator uses the deterministic mean power returned by
//! [`two_ray_rx_power`]. Log-normal shadowing enters only through
//! [`delivery_probability`], which feeds the ETX metric used for route
//! selection.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geom::Point;

/// Node separations below this are clamped before evaluating path loss.
pub const MIN_DISTANCE: f64 = 1.0;

/// Physical-layer constants. All powers in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub tx_power: f64,
    pub antenna_height_tx: f64,
    pub antenna_height_rx: f64,
    pub antenna_gain_tx: f64,
    pub antenna_gain_rx: f64,
    /// Decode sensitivity.
    pub rx_threshold: f64,
    /// Carrier-sense / preamble-detect threshold.
    pub cs_threshold: f64,
    /// Linear power ratio required to decode under interference.
    pub capture_sinr: f64,
    pub noise_floor: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for RadioConfig {
    /// Two-ray constants giving a 250 m transmission range and a 550 m
    /// carrier-sense range.
    fn default() -> Self {
        Self {
            tx_power: 0.281_838_15,
            antenna_height_tx: 1.5,
            antenna_height_rx: 1.5,
            antenna_gain_tx: 1.0,
            antenna_gain_rx: 1.0,
            rx_threshold: 3.652e-10,
            cs_threshold: 1.559e-11,
            capture_sinr: 10.0,
            noise_floor: 1.0e-13,
            shadowing_sigma_db: 4.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("antenna_height_tx", self.antenna_height_tx),
            ("antenna_height_rx", self.antenna_height_rx),
            ("antenna_gain_tx", self.antenna_gain_tx),
            ("antenna_gain_rx", self.antenna_gain_rx),
            ("cs_threshold", self.cs_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.rx_threshold > self.cs_threshold) || !self.rx_threshold.is_finite() {
            return Err(Error::Config(format!(
                "rx_threshold ({}) must exceed cs_threshold ({})",
                self.rx_threshold, self.cs_threshold
            )));
        }
        if !(self.capture_sinr > 1.0) || !self.capture_sinr.is_finite() {
            return Err(Error::Config(format!(
                "capture_sinr must be > 1, got {}",
                self.capture_sinr
            )));
        }
        if !(self.noise_floor >= 0.0) || !self.noise_floor.is_finite() {
            return Err(Error::Config(format!(
                "noise_floor must be >= 0, got {}",
                self.noise_floor
            )));
        }
        if !(self.shadowing_sigma_db >= 0.0) || !self.shadowing_sigma_db.is_finite() {
            return Err(Error::Config(format!(
                "shadowing_sigma_db must be >= 0, got {}",
                self.shadowing_sigma_db
            )));
        }
        Ok(())
    }

    /// Pt·Gt·Gr·ht²·hr², the numerator of the two-ray formula.
    fn two_ray_gain(&self) -> f64 {
        self.tx_power
            * self.antenna_gain_tx
            * self.antenna_gain_rx
            * self.antenna_height_tx.powi(2)
            * self.antenna_height_rx.powi(2)
    }

    /// Mean received power at `distance`, clamped to [`MIN_DISTANCE`].
    pub fn mean_power(&self, distance: f64) -> f64 {
        self.two_ray_gain() / distance.max(MIN_DISTANCE).powi(4)
    }

    pub fn power_between(&self, a: &Point, b: &Point) -> f64 {
        self.mean_power(a.distance(b))
    }

    /// Distance at which the mean received power equals `threshold`.
    pub fn range_for_threshold(&self, threshold: f64) -> f64 {
        (self.two_ray_gain() / threshold).powf(0.25)
    }

    /// Threshold whose crossing distance is `range`.
    pub fn threshold_for_range(&self, range: f64) -> f64 {
        self.two_ray_gain() / range.powi(4)
    }

    pub fn transmission_range(&self) -> f64 {
        self.range_for_threshold(self.rx_threshold)
    }

    pub fn cs_range(&self) -> f64 {
        self.range_for_threshold(self.cs_threshold)
    }

    /// Copy with `cs_threshold` recomputed for a carrier-sense range of `range` meters.
    pub fn with_cs_range(&self, range: f64) -> Self {
        Self {
            cs_threshold: self.threshold_for_range(range),
            ..*self
        }
    }

    pub fn with_tx_range(&self, range: f64) -> Self {
        Self {
            rx_threshold: self.threshold_for_range(range),
            ..*self
        }
    }
}

/// State of the channel from a transmitter to a listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelState {
    Reception,
    CarrierSense,
    Negligible,
}

/// Mean received power under the two-ray ground model.
pub fn two_ray_rx_power(distance: f64, cfg: &RadioConfig) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {distance}"
        )));
    }
    Ok(cfg.two_ray_gain() / distance.powi(4))
}

pub fn classify_power(power: f64, cfg: &RadioConfig) -> ChannelState {
    if power >= cfg.rx_threshold {
        ChannelState::Reception
    } else if power >= cfg.cs_threshold {
        ChannelState::CarrierSense
    } else {
        ChannelState::Negligible
    }
}

pub fn channel_state(tx: &Point, rx: &Point, cfg: &RadioConfig) -> ChannelState {
    classify_power(cfg.power_between(tx, rx), cfg)
}

/// Signal to interference-plus-noise ratio. Returns `f64::INFINITY` when the
/// denominator is zero.
pub fn sinr(intended: f64, interferers: &[f64], noise: f64) -> Result<f64> {
    if !(intended >= 0.0) || !(noise >= 0.0) || interferers.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain("powers must be non-negative".into()));
    }
    if intended == 0.0 {
        return Ok(0.0);
    }
    let denom = noise + interferers.iter().sum::<f64>();
    if denom == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(intended / denom)
    }
}

pub(crate) fn watts_to_db(w: f64) -> f64 {
    10.0 * w.log10()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Probability that the shadowed received power at `distance` clears the
/// decode threshold.
pub fn delivery_probability(distance: f64, cfg: &RadioConfig) -> Result<f64> {
    let mean = two_ray_rx_power(distance, cfg)?;
    let margin_db = watts_to_db(mean) - watts_to_db(cfg.rx_threshold);
    if cfg.shadowing_sigma_db == 0.0 {
        return Ok(if margin_db >= 0.0 { 1.0 } else { 0.0 });
    }
    Ok(std_normal_cdf(margin_db / cfg.shadowing_sigma_db))
}

/// Expected transmission count for a link with the given per-direction
/// delivery probabilities.
pub fn etx(p_forward: f64, p_reverse: f64) -> Result<f64> {
    for p in [p_forward, p_reverse] {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::Domain(format!("probability out of range: {p}")));
        }
    }
    if p_forward == 0.0 || p_reverse == 0.0 {
        return Err(Error::UnusableLink);
    }
    Ok(1.0 / (p_forward * p_reverse))
}
