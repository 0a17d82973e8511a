//! Weighted PIR/ultrasonic fusion and the camera activation gate.
//!
//! A sample is scored as
//!
//! ```text
//! Δd          = d_bg - d_current
//! p_dist      = min(Δd / d_max, 1)
//! p_intrusion = w_pir * pir + w_dist * p_dist
//! camera      = p_intrusion >= tau_c
//! ```
//!
//! with early rejection when the PIR is low, when Δd ≤ 0, or when the echo
//! falls outside the `[gate_min, gate_max]` band.

use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};
use crate::sensing::{tof_distance, CalibrationState, SensorSample, SPEED_OF_SOUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Camera fires on every PIR trigger. Baseline for suppression figures.
    PirOnly,
    /// Hard conjunction: PIR, in range, and Δd at least `binary_min_delta_m`.
    Binary,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub w_pir: f64,
    pub w_dist: f64,
    pub d_max: f64,
    pub tau_c: f64,
    pub gate_min: f64,
    pub gate_max: f64,
    pub mode: FusionMode,
    /// Ultrasonic "confirmed" cut for [`FusionMode::Binary`]. Defaults to
    /// `d_max`, i.e. the distance evidence must saturate.
    pub binary_min_delta_m: f64,
    pub v_sound: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            w_pir: 0.4,
            w_dist: 0.6,
            d_max: 1.5,
            tau_c: 0.65,
            gate_min: 4.0,
            gate_max: 15.0,
            mode: FusionMode::Probabilistic,
            binary_min_delta_m: 1.5,
            v_sound: SPEED_OF_SOUND,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(NetraError::config(
                    format!("fusion.{field}"),
                    format!("must be in [0, 1], got {v}"),
                ))
            }
        };
        unit("w_pir", self.w_pir)?;
        unit("w_dist", self.w_dist)?;
        unit("tau_c", self.tau_c)?;
        if (self.w_pir + self.w_dist - 1.0).abs() > 1e-9 {
            return Err(NetraError::config(
                "fusion.w_pir",
                format!(
                    "weights must sum to 1, got {} + {}",
                    self.w_pir, self.w_dist
                ),
            ));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(NetraError::config("fusion.d_max", "must be > 0"));
        }
        if !(self.gate_min > 0.0 && self.gate_min < self.gate_max && self.gate_max.is_finite()) {
            return Err(NetraError::config(
                "fusion.gate_min",
                format!(
                    "need 0 < gate_min < gate_max, got [{}, {}]",
                    self.gate_min, self.gate_max
                ),
            ));
        }
        if !(self.binary_min_delta_m > 0.0) {
            return Err(NetraError::config("fusion.binary_min_delta_m", "must be > 0"));
        }
        if !(self.v_sound > 0.0) {
            return Err(NetraError::config("fusion.v_sound", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    None,
    NoMotion,
    NonPositiveDelta,
    OutOfRange,
    BelowThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionDecision {
    pub d_current: Option<f64>,
    pub delta_d: Option<f64>,
    pub p_dist: f64,
    pub p_intrusion: f64,
    pub camera: bool,
    pub reject_reason: RejectReason,
}

impl FusionDecision {
    fn rejected(reason: RejectReason, d_current: Option<f64>, delta_d: Option<f64>) -> Self {
        FusionDecision {
            d_current,
            delta_d,
            p_dist: 0.0,
            p_intrusion: 0.0,
            camera: false,
            reject_reason: reason,
        }
    }
}

pub fn distance_change(d_bg: f64, d_current: f64) -> f64 {
    d_bg - d_current
}

/// Normalized distance evidence. Negative changes clamp to 0 so the function
/// is total; the pipeline rejects them before getting here.
pub fn distance_probability(delta_d: f64, d_max: f64) -> f64 {
    (delta_d / d_max).clamp(0.0, 1.0)
}

pub fn fuse(pir: bool, p_dist: f64, cfg: &FusionConfig) -> f64 {
    cfg.w_pir * f64::from(u8::from(pir)) + cfg.w_dist * p_dist
}

/// Inclusive: ties activate.
pub fn camera_decision(p_intrusion: f64, tau_c: f64) -> bool {
    p_intrusion >= tau_c
}

fn in_gate(d: f64, cfg: &FusionConfig) -> bool {
    d >= cfg.gate_min && d <= cfg.gate_max
}

/// Decide on a single sensing cycle given an already ranged distance.
/// `d_current = None` means the ultrasonic ping returned nothing.
pub fn decide(
    pir: bool,
    d_current: Option<f64>,
    calib: &CalibrationState,
    cfg: &FusionConfig,
) -> Result<FusionDecision> {
    if !calib.is_complete() {
        return Err(NetraError::CalibrationIncomplete {
            have: calib.sample_count,
        });
    }
    let delta_d = d_current.map(|d| distance_change(calib.d_bg, d));

    if cfg.mode == FusionMode::PirOnly {
        let p_dist = delta_d.map_or(0.0, |dd| distance_probability(dd, cfg.d_max));
        return Ok(FusionDecision {
            d_current,
            delta_d,
            p_dist,
            p_intrusion: if pir { fuse(pir, p_dist, cfg) } else { 0.0 },
            camera: pir,
            reject_reason: if pir { RejectReason::None } else { RejectReason::NoMotion },
        });
    }

    if !pir {
        return Ok(FusionDecision::rejected(RejectReason::NoMotion, None, None));
    }
    let (Some(d), Some(dd)) = (d_current, delta_d) else {
        return Ok(FusionDecision::rejected(RejectReason::OutOfRange, None, None));
    };
    if dd <= 0.0 {
        return Ok(FusionDecision::rejected(
            RejectReason::NonPositiveDelta,
            d_current,
            delta_d,
        ));
    }
    if !in_gate(d, cfg) {
        return Ok(FusionDecision::rejected(
            RejectReason::OutOfRange,
            d_current,
            delta_d,
        ));
    }

    let p_dist = distance_probability(dd, cfg.d_max);
    let p_intrusion = fuse(pir, p_dist, cfg);
    let camera = match cfg.mode {
        FusionMode::Binary => dd >= cfg.binary_min_delta_m,
        FusionMode::Probabilistic => camera_decision(p_intrusion, cfg.tau_c),
        FusionMode::PirOnly => unreachable!("handled above"),
    };
    Ok(FusionDecision {
        d_current,
        delta_d,
        p_dist,
        p_intrusion,
        camera,
        reject_reason: if camera {
            RejectReason::None
        } else {
            RejectReason::BelowThreshold
        },
    })
}

/// Full activation pipeline for one trace sample.
pub fn activation_pipeline(
    sample: &SensorSample,
    calib: &CalibrationState,
    cfg: &FusionConfig,
) -> Result<FusionDecision> {
    if !calib.is_complete() {
        return Err(NetraError::CalibrationIncomplete {
            have: calib.sample_count,
        });
    }
    // No ping fires without motion.
    if !sample.pir && cfg.mode != FusionMode::PirOnly {
        return Ok(FusionDecision::rejected(RejectReason::NoMotion, None, None));
    }
    let d = sample
        .echo_time_s
        .map(|e| tof_distance(e, cfg.v_sound))
        .transpose()?;
    decide(sample.pir, d, calib, cfg)
}

/// Checks that a positive decision really passed every gate.
pub fn decision_respects_gates(
    pir: bool,
    decision: &FusionDecision,
    cfg: &FusionConfig,
) -> bool {
    if !decision.camera || cfg.mode == FusionMode::PirOnly {
        return true;
    }
    let (Some(d), Some(dd)) = (decision.d_current, decision.delta_d) else {
        return false;
    };
    let threshold_ok = match cfg.mode {
        FusionMode::Probabilistic => decision.p_intrusion >= cfg.tau_c,
        FusionMode::Binary => dd >= cfg.binary_min_delta_m,
        FusionMode::PirOnly => true,
    };
    pir && dd > 0.0 && in_gate(d, cfg) && threshold_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::GroundTruth;
    use proptest::prelude::*;

    fn calib(d_bg: f64) -> CalibrationState {
        CalibrationState {
            d_bg,
            sample_count: 5,
        }
    }

    #[test]
    fn distance_change_examples() {
        assert_eq!(distance_change(13.0, 13.0), 0.0);
        assert_eq!(distance_change(13.0, 12.25), 0.75);
        assert_eq!(distance_change(13.0, 14.0), -1.0);
    }

    #[test]
    fn distance_probability_examples() {
        assert_eq!(distance_probability(0.75, 1.5), 0.5);
        assert_eq!(distance_probability(3.0, 1.5), 1.0);
        assert_eq!(distance_probability(0.0, 1.5), 0.0);
        assert_eq!(distance_probability(-2.0, 1.5), 0.0);
    }

    #[test]
    fn fuse_examples() {
        let cfg = FusionConfig::default();
        assert_eq!(fuse(true, 1.0, &cfg), 1.0);
        assert_eq!(fuse(true, 0.5, &cfg), 0.7);
        assert_eq!(fuse(false, 0.5, &cfg), 0.6 * 0.5);
    }

    #[test]
    fn camera_decision_examples() {
        assert!(camera_decision(0.65, 0.65));
        assert!(!camera_decision(0.649, 0.65));
        assert!(camera_decision(0.7, 0.65));
    }

    #[test]
    fn pipeline_examples() {
        let cfg = FusionConfig::default();
        let c = calib(13.0);

        let quiet = SensorSample {
            t_ms: 0,
            pir: false,
            echo_time_s: Some(0.07),
            truth: GroundTruth::Quiet,
        };
        let d = activation_pipeline(&quiet, &c, &cfg).unwrap();
        assert!(!d.camera);
        assert_eq!(d.reject_reason, RejectReason::NoMotion);

        let d = decide(true, Some(3.0), &c, &cfg).unwrap();
        assert!(!d.camera);
        assert_eq!(d.reject_reason, RejectReason::OutOfRange);

        let d = decide(true, Some(14.0), &c, &cfg).unwrap();
        assert_eq!(d.reject_reason, RejectReason::NonPositiveDelta);

        let d = decide(true, Some(12.25), &c, &cfg).unwrap();
        assert_eq!(d.p_intrusion, 0.7);
        assert!(d.camera);
        assert_eq!(d.reject_reason, RejectReason::None);

        let d = decide(true, None, &c, &cfg).unwrap();
        assert_eq!(d.reject_reason, RejectReason::OutOfRange);
    }

    #[test]
    fn pipeline_requires_calibration() {
        let c = CalibrationState {
            d_bg: 13.0,
            sample_count: 3,
        };
        assert_eq!(
            decide(true, Some(12.0), &c, &FusionConfig::default()),
            Err(NetraError::CalibrationIncomplete { have: 3 })
        );
    }

    #[test]
    fn binary_needs_saturated_distance() {
        let cfg = FusionConfig {
            mode: FusionMode::Binary,
            ..FusionConfig::default()
        };
        let c = calib(13.0);
        assert!(!decide(true, Some(12.0), &c, &cfg).unwrap().camera);
        assert!(decide(true, Some(11.5), &c, &cfg).unwrap().camera);
        assert!(decide(true, Some(8.0), &c, &cfg).unwrap().camera);
        assert!(!decide(true, Some(3.9), &c, &cfg).unwrap().camera);
    }

    #[test]
    fn pir_only_follows_pir() {
        let cfg = FusionConfig {
            mode: FusionMode::PirOnly,
            ..FusionConfig::default()
        };
        let c = calib(13.0);
        assert!(decide(true, Some(14.0), &c, &cfg).unwrap().camera);
        assert!(decide(true, None, &c, &cfg).unwrap().camera);
        assert!(!decide(false, Some(10.0), &c, &cfg).unwrap().camera);
    }

    #[test]
    fn config_validation() {
        FusionConfig::default().validate().unwrap();
        let bad = FusionConfig {
            w_pir: 0.5,
            ..FusionConfig::default()
        };
        assert!(matches!(bad.validate(), Err(NetraError::Config { .. })));
        let bad = FusionConfig {
            tau_c: 1.01,
            ..FusionConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FusionConfig {
            gate_min: 15.0,
            ..FusionConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn p_intrusion_monotone_in_delta(a in 0.001f64..9.0, b in 0.001f64..9.0) {
            let cfg = FusionConfig::default();
            let c = calib(13.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d_lo = decide(true, Some(13.0 - lo), &c, &cfg).unwrap();
            let d_hi = decide(true, Some(13.0 - hi), &c, &cfg).unwrap();
            prop_assert!(d_lo.p_intrusion <= d_hi.p_intrusion);
        }

        #[test]
        fn camera_implies_gates(pir in any::<bool>(), d in 0.0f64..20.0, tau in 0.0f64..=1.0) {
            let cfg = FusionConfig { tau_c: tau, ..FusionConfig::default() };
            let dec = decide(pir, Some(d), &calib(13.0), &cfg).unwrap();
            prop_assert!(decision_respects_gates(pir, &dec, &cfg));
            prop_assert!((0.0..=1.0).contains(&dec.p_dist));
            prop_assert!((0.0..=1.0).contains(&dec.p_intrusion));
        }
    }
}
