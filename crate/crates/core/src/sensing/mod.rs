//! PIR + ultrasonic sensing: time-of-flight ranging, background calibration,
//! and the event traces that drive a run.

mod generate;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};

pub use generate::{generate_trace, EnvironmentModel, TraceSpec};
pub use trace::{format_trace, load_trace, parse_trace, EventTrace, TraceMetadata, TRACE_HEADER};

/// Speed of sound in dry air at 20 °C, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Number of empty-track readings averaged into the background distance.
pub const CALIBRATION_SAMPLES: usize = 5;

/// Readings above this are treated as unit mistakes (HC-SR04 ceiling is 4 m
/// nominal; long-range modules top out well below this).
pub const MAX_PLAUSIBLE_DISTANCE_M: f64 = 20.0;

/// What physically caused an intrusion-class event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueClass {
    Human,
    Cow,
    Elephant,
    Obstruction,
    Background,
}

impl TrueClass {
    pub const ALL: [TrueClass; 5] = [
        TrueClass::Human,
        TrueClass::Cow,
        TrueClass::Elephant,
        TrueClass::Obstruction,
        TrueClass::Background,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrueClass::Human => "human",
            TrueClass::Cow => "cow",
            TrueClass::Elephant => "elephant",
            TrueClass::Obstruction => "obstruction",
            TrueClass::Background => "background",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        TrueClass::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// Environmental disturbances that fire the PIR without a real intrusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FalseTriggerKind {
    Vegetation,
    Bird,
    Vehicle,
    Wind,
}

impl FalseTriggerKind {
    pub const ALL: [FalseTriggerKind; 4] = [
        FalseTriggerKind::Vegetation,
        FalseTriggerKind::Bird,
        FalseTriggerKind::Vehicle,
        FalseTriggerKind::Wind,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FalseTriggerKind::Vegetation => "vegetation",
            FalseTriggerKind::Bird => "bird",
            FalseTriggerKind::Vehicle => "vehicle",
            FalseTriggerKind::Wind => "wind",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FalseTriggerKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Simulation-only annotation. The pipeline never looks at it; metrics do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    TrueIntrusion(TrueClass),
    FalseTrigger(FalseTriggerKind),
    Quiet,
}

impl GroundTruth {
    pub fn tag(&self) -> String {
        match self {
            GroundTruth::TrueIntrusion(c) => format!("intrusion:{}", c.as_str()),
            GroundTruth::FalseTrigger(k) => format!("false:{}", k.as_str()),
            GroundTruth::Quiet => "quiet".to_string(),
        }
    }

    pub fn parse_tag(tag: &str) -> Option<Self> {
        if tag == "quiet" {
            return Some(GroundTruth::Quiet);
        }
        let (kind, value) = tag.split_once(':')?;
        match kind {
            "intrusion" => match TrueClass::parse(value)? {
                TrueClass::Background => None,
                c => Some(GroundTruth::TrueIntrusion(c)),
            },
            "false" => FalseTriggerKind::parse(value).map(GroundTruth::FalseTrigger),
            _ => None,
        }
    }

    pub fn is_intrusion(&self) -> bool {
        matches!(self, GroundTruth::TrueIntrusion(_))
    }

    pub fn is_false_trigger(&self) -> bool {
        matches!(self, GroundTruth::FalseTrigger(_))
    }
}

/// One sensing cycle: PIR flag plus the ultrasonic echo, if a ping fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t_ms: u64,
    pub pir: bool,
    pub echo_time_s: Option<f64>,
    pub truth: GroundTruth,
}

impl SensorSample {
    /// Range implied by the echo, if there was one.
    pub fn distance_m(&self, v_sound: f64) -> Result<Option<f64>> {
        self.echo_time_s
            .map(|echo| tof_distance(echo, v_sound))
            .transpose()
    }
}

/// Round-trip echo time to one-way distance.
pub fn tof_distance(echo_time_s: f64, v_sound: f64) -> Result<f64> {
    if !echo_time_s.is_finite() || echo_time_s < 0.0 {
        return Err(NetraError::InvalidSample(format!(
            "echo time must be finite and >= 0, got {echo_time_s}"
        )));
    }
    if !v_sound.is_finite() || v_sound <= 0.0 {
        return Err(NetraError::config(
            "v_sound",
            format!("speed of sound must be > 0, got {v_sound}"),
        ));
    }
    Ok(v_sound * echo_time_s / 2.0)
}

/// Empty-track reference distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationState {
    pub d_bg: f64,
    pub sample_count: usize,
}

impl CalibrationState {
    pub fn is_complete(&self) -> bool {
        self.sample_count == CALIBRATION_SAMPLES && self.d_bg > 0.0
    }
}

/// Average exactly five empty-track distance readings.
pub fn calibrate_background(distances: &[f64]) -> Result<CalibrationState> {
    if distances.len() != CALIBRATION_SAMPLES {
        return Err(NetraError::CalibrationArity {
            expected: CALIBRATION_SAMPLES,
            got: distances.len(),
        });
    }
    for &d in distances {
        if !d.is_finite() || d <= 0.0 {
            return Err(NetraError::InvalidSample(format!(
                "calibration distance must be > 0, got {d}"
            )));
        }
        if d > MAX_PLAUSIBLE_DISTANCE_M {
            return Err(NetraError::InvalidSample(format!(
                "calibration distance {d} m exceeds {MAX_PLAUSIBLE_DISTANCE_M} m"
            )));
        }
    }
    // Sorting first makes the mean independent of input order at the bit level.
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d_bg = sorted.iter().sum::<f64>() / CALIBRATION_SAMPLES as f64;
    Ok(CalibrationState {
        d_bg,
        sample_count: CALIBRATION_SAMPLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tof_examples() {
        assert_eq!(tof_distance(0.0, 343.0).unwrap(), 0.0);
        assert_eq!(tof_distance(0.01, 343.0).unwrap(), 1.715);
        let d = tof_distance(0.0816, 343.0).unwrap();
        assert!((d - 13.9944).abs() < 1e-9);
        assert!((12.0..=15.0).contains(&d));
    }

    #[test]
    fn tof_rejects_negative_echo() {
        assert!(matches!(
            tof_distance(-0.001, 343.0),
            Err(NetraError::InvalidSample(_))
        ));
        assert!(tof_distance(f64::NAN, 343.0).is_err());
        assert!(tof_distance(0.01, 0.0).is_err());
    }

    #[test]
    fn calibration_examples() {
        let c = calibrate_background(&[13.0; 5]).unwrap();
        assert_eq!(c.d_bg, 13.0);
        assert_eq!(c.sample_count, 5);
        assert!(c.is_complete());

        let c = calibrate_background(&[12.0, 12.5, 13.0, 13.5, 14.0]).unwrap();
        assert_eq!(c.d_bg, 13.0);
    }

    #[test]
    fn calibration_errors() {
        assert_eq!(
            calibrate_background(&[12.0, 13.0, 14.0]),
            Err(NetraError::CalibrationArity {
                expected: 5,
                got: 3
            })
        );
        assert!(calibrate_background(&[13.0; 6]).is_err());
        assert!(matches!(
            calibrate_background(&[13.0, 13.0, 0.0, 13.0, 13.0]),
            Err(NetraError::InvalidSample(_))
        ));
        assert!(matches!(
            calibrate_background(&[13.0, 13.0, 25.0, 13.0, 13.0]),
            Err(NetraError::InvalidSample(_))
        ));
    }

    #[test]
    fn truth_tags_round_trip() {
        for tag in [
            "quiet",
            "intrusion:human",
            "intrusion:elephant",
            "false:wind",
            "false:vehicle",
        ] {
            assert_eq!(GroundTruth::parse_tag(tag).unwrap().tag(), tag);
        }
        assert!(GroundTruth::parse_tag("intrusion:background").is_none());
        assert!(GroundTruth::parse_tag("intrusion:tiger").is_none());
        assert!(GroundTruth::parse_tag("nope").is_none());
    }

    proptest! {
        #[test]
        fn tof_is_linear(t in 0.0f64..1.0) {
            let one = tof_distance(t, SPEED_OF_SOUND).unwrap();
            let two = tof_distance(2.0 * t, SPEED_OF_SOUND).unwrap();
            prop_assert_eq!(two, 2.0 * one);
        }

        #[test]
        fn calibration_is_permutation_invariant(
            xs in proptest::collection::vec(0.1f64..20.0, 5),
            rot in 0usize..5,
        ) {
            let base = calibrate_background(&xs).unwrap();
            let mut shuffled = xs.clone();
            shuffled.rotate_left(rot);
            shuffled.swap(0, 4);
            prop_assert_eq!(calibrate_background(&shuffled).unwrap(), base);
        }
    }
}
