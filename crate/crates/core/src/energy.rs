//! Watt-hour accounting per edge platform.

use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};

/// Fixed per-stage delays on the detect-to-transmit path, ms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageLatencies {
    pub sensing_poll_ms: u64,
    pub fusion_ms: u64,
    pub capture_ms: u64,
    pub inference_ms: u64,
    pub encode_ms: u64,
}

impl StageLatencies {
    pub fn pre_transmit_ms(&self) -> u64 {
        self.sensing_poll_ms + self.fusion_ms + self.capture_ms + self.inference_ms + self.encode_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformProfile {
    pub name: String,
    pub idle_w: f64,
    pub inference_w: f64,
    pub inference_s: f64,
    #[serde(default = "default_camera_w")]
    pub camera_w: f64,
    #[serde(default = "default_camera_s")]
    pub camera_activation_s: f64,
    #[serde(default = "default_radio_w")]
    pub radio_tx_w: f64,
    #[serde(default)]
    pub battery_wh: Option<f64>,
    pub stages: StageLatencies,
}

fn default_camera_w() -> f64 {
    2.0
}
fn default_camera_s() -> f64 {
    5.0
}
fn default_radio_w() -> f64 {
    0.4
}

impl PlatformProfile {
    /// Pi Zero W + MobileNet-SSD.
    ///
    /// Stage split is a fixture chosen so that, with the default SF7 link
    /// (72 ms payload, 42 ms ACK, 1 ms each way), one alert totals 6.5 s.
    pub fn pi_zero() -> Self {
        PlatformProfile {
            name: "pi_zero".into(),
            idle_w: 0.5,
            inference_w: 2.5,
            inference_s: 5.2,
            camera_w: 2.0,
            camera_activation_s: 5.0,
            radio_tx_w: 0.4,
            battery_wh: None,
            stages: StageLatencies {
                sensing_poll_ms: 100,
                fusion_ms: 180,
                capture_ms: 900,
                inference_ms: 5_200,
                encode_ms: 4,
            },
        }
    }

    /// Pi 4 + YOLOv5s. Same link assumptions; totals 2.4 s per alert.
    pub fn pi4() -> Self {
        PlatformProfile {
            name: "pi4".into(),
            idle_w: 2.7,
            inference_w: 7.5,
            inference_s: 0.8,
            camera_w: 2.0,
            camera_activation_s: 5.0,
            radio_tx_w: 0.4,
            battery_wh: None,
            stages: StageLatencies {
                sensing_poll_ms: 100,
                fusion_ms: 60,
                capture_ms: 1_300,
                inference_ms: 800,
                encode_ms: 24,
            },
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "pi_zero" => Some(Self::pi_zero()),
            "pi4" => Some(Self::pi4()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("idle_w", self.idle_w),
            ("inference_w", self.inference_w),
            ("inference_s", self.inference_s),
            ("camera_w", self.camera_w),
            ("camera_activation_s", self.camera_activation_s),
            ("radio_tx_w", self.radio_tx_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(NetraError::config(format!("platform.{field}"), format!("must be >= 0, got {v}")));
            }
        }
        if self.inference_w < self.idle_w {
            return Err(NetraError::config("platform.inference_w", "must be >= idle_w"));
        }
        if let Some(b) = self.battery_wh {
            if !(b > 0.0) {
                return Err(NetraError::config("platform.battery_wh", "must be > 0"));
            }
        }
        Ok(())
    }
}

pub fn camera_energy(activations: u64, profile: &PlatformProfile) -> f64 {
    activations as f64 * profile.camera_w * profile.camera_activation_s / 3600.0
}

/// Percentage saved relative to a baseline. Also used on raw counts.
pub fn savings(baseline: f64, actual: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(NetraError::Undefined(format!(
            "savings against non-positive baseline {baseline}"
        )));
    }
    Ok((1.0 - actual / baseline) * 100.0)
}

/// What a run did, as far as energy is concerned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTally {
    pub camera_activations: u64,
    pub inferences: u64,
    /// Wall-clock span of the run.
    pub span_s: f64,
    /// Total payload airtime including retries.
    pub airtime_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub camera_wh: f64,
    pub inference_wh: f64,
    pub idle_wh: f64,
    pub radio_wh: f64,
    pub total_wh: f64,
    pub activation_count: u64,
}

/// Idle draw covers the whole span; inference is charged only for the power
/// above idle, so fewer activations never raise any line.
pub fn run_ledger(tally: &RunTally, profile: &PlatformProfile) -> EnergyLedger {
    let camera_wh = camera_energy(tally.camera_activations, profile);
    let inference_wh = tally.inferences as f64
        * (profile.inference_w - profile.idle_w)
        * profile.inference_s
        / 3600.0;
    let idle_wh = profile.idle_w * tally.span_s / 3600.0;
    let radio_wh = profile.radio_tx_w * tally.airtime_s / 3600.0;
    EnergyLedger {
        camera_wh,
        inference_wh,
        idle_wh,
        radio_wh,
        total_wh: camera_wh + inference_wh + idle_wh + radio_wh,
        activation_count: tally.camera_activations,
    }
}

/// Days a battery lasts at the run's average draw.
pub fn battery_days(ledger: &EnergyLedger, span_s: f64, capacity_wh: f64) -> Option<f64> {
    if span_s <= 0.0 || ledger.total_wh <= 0.0 || capacity_wh <= 0.0 {
        return None;
    }
    let daily_wh = ledger.total_wh * 86_400.0 / span_s;
    Some(capacity_wh / daily_wh)
}
