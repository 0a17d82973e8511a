use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    EventTrace, FalseTriggerKind, GroundTruth, SensorSample, TrueClass, CALIBRATION_SAMPLES,
    SPEED_OF_SOUND,
};
use crate::error::{NetraError, Result};

/// Sensor geometry used when synthesizing traces.
///
/// PIR defaults to a 110° field of view and 7 m range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentModel {
    pub pir_range_m: f64,
    pub pir_fov_deg: f64,
    pub v_sound: f64,
    /// Intruders appear at a lateral offset drawn uniformly from [0, this].
    pub lateral_spread_m: f64,
}

impl Default for EnvironmentModel {
    fn default() -> Self {
        EnvironmentModel {
            pir_range_m: 7.0,
            pir_fov_deg: 110.0,
            v_sound: SPEED_OF_SOUND,
            lateral_spread_m: 6.0,
        }
    }
}

impl EnvironmentModel {
    /// Whether an object at `range_m` along the track and `lateral_m` off-axis
    /// is inside the PIR detection cone.
    pub fn pir_sees(&self, range_m: f64, lateral_m: f64) -> bool {
        let half_fov = (self.pir_fov_deg / 2.0).to_radians();
        lateral_m <= self.pir_range_m && lateral_m.atan2(range_m) <= half_fov
    }
}

/// Parameters for a synthetic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSpec {
    pub name: String,
    pub n_true: usize,
    pub n_false: usize,
    /// Idle cycles with the PIR low.
    pub n_quiet: usize,
    pub d_bg_m: f64,
    pub interval_ms: u64,
    /// Relative weights for human, cow, elephant, obstruction.
    pub class_weights: [f64; 4],
    /// Relative weights for vegetation, bird, vehicle, wind.
    pub false_weights: [f64; 4],
    pub environment: EnvironmentModel,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            name: "generated".to_string(),
            n_true: 20,
            n_false: 93,
            n_quiet: 0,
            d_bg_m: 13.0,
            interval_ms: 60_000,
            class_weights: [0.5, 0.2, 0.2, 0.1],
            false_weights: [0.4, 0.2, 0.2, 0.2],
            environment: EnvironmentModel::default(),
        }
    }
}

impl TraceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_bg_m > 4.0 && self.d_bg_m <= 15.0) {
            return Err(NetraError::config(
                "trace.d_bg_m",
                format!("background must lie in (4, 15] m, got {}", self.d_bg_m),
            ));
        }
        if self.interval_ms == 0 {
            return Err(NetraError::config("trace.interval_ms", "must be > 0"));
        }
        for (field, w) in [
            ("trace.class_weights", &self.class_weights),
            ("trace.false_weights", &self.false_weights),
        ] {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(NetraError::config(field, "weights must be >= 0 with a positive sum"));
            }
        }
        let env = &self.environment;
        if env.v_sound <= 0.0 || env.pir_range_m <= 0.0 || !(0.0..=360.0).contains(&env.pir_fov_deg) {
            return Err(NetraError::config("trace.environment", "non-physical sensor geometry"));
        }
        Ok(())
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T; 4], weights: &[f64; 4]) -> T {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (item, w) in items.iter().zip(weights) {
        if u < *w {
            return *item;
        }
        u -= w;
    }
    items[3]
}

fn echo_for(d: f64, v_sound: f64) -> f64 {
    // 0.1 µs resolution keeps files readable.
    (2.0 * d / v_sound * 1e7).round() / 1e7
}

/// Synthesize a trace. A pure function of `(spec, seed)`.
///
/// The first five records are empty-track calibration pings.
pub fn generate_trace(spec: &TraceSpec, seed: u64) -> Result<EventTrace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = &spec.environment;
    let v = env.v_sound;

    let mut samples = Vec::with_capacity(CALIBRATION_SAMPLES + spec.n_true + spec.n_false + spec.n_quiet);
    for i in 0..CALIBRATION_SAMPLES {
        let d = spec.d_bg_m + rng.gen_range(-0.02..0.02);
        samples.push(SensorSample {
            t_ms: i as u64 * 100,
            pir: false,
            echo_time_s: Some(echo_for(d, v)),
            truth: GroundTruth::Quiet,
        });
    }

    let classes = [
        TrueClass::Human,
        TrueClass::Cow,
        TrueClass::Elephant,
        TrueClass::Obstruction,
    ];
    let mut truths = Vec::new();
    for _ in 0..spec.n_true {
        truths.push(GroundTruth::TrueIntrusion(pick(&mut rng, &classes, &spec.class_weights)));
    }
    for _ in 0..spec.n_false {
        truths.push(GroundTruth::FalseTrigger(pick(
            &mut rng,
            &FalseTriggerKind::ALL,
            &spec.false_weights,
        )));
    }
    truths.extend(std::iter::repeat_n(GroundTruth::Quiet, spec.n_quiet));
    truths.shuffle(&mut rng);

    let d_bg = spec.d_bg_m;
    for (i, truth) in truths.into_iter().enumerate() {
        let t_ms = 1_000 + i as u64 * spec.interval_ms + rng.gen_range(0..=spec.interval_ms / 2);
        let (pir, distance) = match truth {
            GroundTruth::TrueIntrusion(_) => {
                let range = rng.gen_range(2.5..(d_bg - 0.1));
                let lateral = rng.gen_range(0.0..=env.lateral_spread_m);
                (env.pir_sees(range, lateral), Some(range))
            }
            GroundTruth::FalseTrigger(kind) => {
                let d = match kind {
                    FalseTriggerKind::Vegetation => Some(d_bg + rng.gen_range(-0.3..0.05)),
                    FalseTriggerKind::Wind => Some(d_bg + rng.gen_range(-0.02..0.1)),
                    FalseTriggerKind::Bird => rng
                        .gen_bool(0.7)
                        .then(|| rng.gen_range(0.5..3.5)),
                    FalseTriggerKind::Vehicle => rng
                        .gen_bool(0.7)
                        .then(|| rng.gen_range(15.5..19.0)),
                };
                (true, d)
            }
            GroundTruth::Quiet => (false, Some(d_bg + rng.gen_range(-0.02..0.02))),
        };
        samples.push(SensorSample {
            t_ms,
            pir,
            echo_time_s: distance.map(|d| echo_for(d, v)),
            truth,
        });
    }

    Ok(EventTrace::new(spec.name.clone(), Some(seed), samples))
}
