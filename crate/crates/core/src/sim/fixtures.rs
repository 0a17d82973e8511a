//! Constructed traces that replay to known counts.
//!
//! Every record is placed by hand at a distance chosen to pass or fail a
//! specific gate; the note written above it in the trace file says which.
//! All samples are PIR-high apart from the five calibration pings, the
//! background sits at 13 m, and events are 60 s apart. A fixed stride
//! permutation interleaves the categories so no gate sees a long run of
//! identical inputs.
//!
//! With the default fusion settings (weights 0.4/0.6, `d_max` 1.5 m, gate
//! 4 to 15 m) an in-gate sample scores `P = 0.4 + 0.4 * min(Δd / 1.5, 1)`.

use std::path::Path;

use crate::error::{NetraError, Result};
use crate::sensing::{
    format_trace, EventTrace, FalseTriggerKind, GroundTruth, SensorSample, TrueClass,
    CALIBRATION_SAMPLES, SPEED_OF_SOUND,
};

pub const BACKGROUND_M: f64 = 13.0;
pub const EVENT_SPACING_MS: u64 = 60_000;

pub const TABLE_V_NAME: &str = "tableV_79events";
pub const END_TO_END_NAME: &str = "endToEnd_113events";

struct Planned {
    truth: GroundTruth,
    distance_m: Option<f64>,
    note: String,
}

fn echo(d: f64) -> f64 {
    2.0 * d / SPEED_OF_SOUND
}

fn intrusion(class: TrueClass, d: f64, note: impl Into<String>) -> Planned {
    Planned {
        truth: GroundTruth::TrueIntrusion(class),
        distance_m: Some(d),
        note: note.into(),
    }
}

fn false_trigger(kind: FalseTriggerKind, d: Option<f64>, note: impl Into<String>) -> Planned {
    Planned {
        truth: GroundTruth::FalseTrigger(kind),
        distance_m: d,
        note: note.into(),
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn assemble(name: &str, stride: usize, plan: Vec<Planned>) -> EventTrace {
    let n = plan.len();
    let mut samples = Vec::with_capacity(CALIBRATION_SAMPLES + n);
    let mut notes = Vec::new();
    notes.push((0, format!("calibration: {CALIBRATION_SAMPLES} empty-track pings at {BACKGROUND_M} m")));
    for i in 0..CALIBRATION_SAMPLES {
        samples.push(SensorSample {
            t_ms: i as u64 * 100,
            pir: false,
            echo_time_s: Some(echo(BACKGROUND_M)),
            truth: GroundTruth::Quiet,
        });
    }
    for slot in 0..n {
        let p = &plan[(slot * stride) % n];
        notes.push((samples.len(), p.note.clone()));
        samples.push(SensorSample {
            t_ms: (slot as u64 + 1) * EVENT_SPACING_MS,
            pir: true,
            echo_time_s: p.distance_m.map(echo),
            truth: p.truth,
        });
    }
    let mut trace = EventTrace::new(name, None, samples);
    trace.notes = notes;
    trace
}

const CLASSES: [TrueClass; 4] = [
    TrueClass::Human,
    TrueClass::Cow,
    TrueClass::Elephant,
    TrueClass::Obstruction,
];

/// 79 PIR events: 40 intrusions, 39 false triggers.
///
/// | group | n | Δd or range | binary | τ=0.65 | τ=0.45 |
/// |---|---|---|---|---|---|
/// | intrusion, saturated | 34 | Δd 1.6..8.2 | ✓ | ✓ | ✓ |
/// | intrusion, partial | 4 | Δd 0.7..1.3 | ✗ | ✓ | ✓ |
/// | intrusion, too close | 2 | 3.2, 3.5 m | ✗ | ✗ | ✗ |
/// | vegetation, moderate | 2 | Δd 0.30, 0.35 | ✗ | ✗ | ✓ |
/// | vegetation, slight | 9 | Δd 0.02..0.10 | ✗ | ✗ | ✗ |
/// | wind | 10 | Δd < 0 | ✗ | ✗ | ✗ |
/// | bird | 10 | < 4 m or no echo | ✗ | ✗ | ✗ |
/// | vehicle | 8 | > 15 m or no echo | ✗ | ✗ | ✗ |
pub fn table_v_trace() -> EventTrace {
    let mut plan = Vec::new();
    for k in 0..34 {
        let dd = round2(1.6 + 0.2 * k as f64);
        plan.push(intrusion(
            CLASSES[k % 4],
            BACKGROUND_M - dd,
            format!("intrusion dd={dd} saturates p_dist: passes binary and every tau"),
        ));
    }
    for (k, dd) in [0.7, 0.9, 1.1, 1.3].into_iter().enumerate() {
        let p = 0.4 + 0.6 * dd / 1.5;
        plan.push(intrusion(
            CLASSES[k],
            BACKGROUND_M - dd,
            format!("intrusion dd={dd} P={p:.2}: fails binary, passes tau 0.65"),
        ));
    }
    for (class, d) in [(TrueClass::Human, 3.2), (TrueClass::Cow, 3.5)] {
        plan.push(intrusion(class, d, format!("intrusion at {d} m: inside the 4 m gate, missed")));
    }
    for dd in [0.30, 0.35] {
        let p = 0.4 + 0.6 * dd / 1.5;
        plan.push(false_trigger(
            FalseTriggerKind::Vegetation,
            Some(BACKGROUND_M - dd),
            format!("vegetation dd={dd} P={p:.2}: passes tau 0.45 only"),
        ));
    }
    for k in 0..9 {
        let dd = round2(0.02 + 0.01 * k as f64);
        plan.push(false_trigger(
            FalseTriggerKind::Vegetation,
            Some(BACKGROUND_M - dd),
            format!("vegetation dd={dd}: P below 0.45"),
        ));
    }
    for k in 0..10 {
        let d = round2(BACKGROUND_M + 0.1 * (k + 1) as f64);
        plan.push(false_trigger(
            FalseTriggerKind::Wind,
            Some(d),
            format!("wind, echo at {d} m: dd <= 0"),
        ));
    }
    for d in [0.8, 1.3, 1.8, 2.3, 3.0] {
        plan.push(false_trigger(
            FalseTriggerKind::Bird,
            Some(d),
            format!("bird at {d} m: below the 4 m gate"),
        ));
    }
    for _ in 0..5 {
        plan.push(false_trigger(FalseTriggerKind::Bird, None, "bird, no echo: out of range"));
    }
    for d in [16.0, 17.0, 18.0, 19.0] {
        plan.push(false_trigger(
            FalseTriggerKind::Vehicle,
            Some(d),
            format!("vehicle at {d} m: beyond background, dd <= 0"),
        ));
    }
    for _ in 0..4 {
        plan.push(false_trigger(FalseTriggerKind::Vehicle, None, "vehicle, no echo: out of range"));
    }
    assemble(TABLE_V_NAME, 29, plan)
}

/// 113 PIR events: 20 intrusions (6 human, 2 elephant, 2 obstruction,
/// 10 cow) and 93 false triggers, 22 of which clear fusion and show the
/// camera an empty frame.
pub fn end_to_end_trace() -> EventTrace {
    let mut plan = Vec::new();
    let classes = std::iter::repeat_n(TrueClass::Human, 6)
        .chain(std::iter::repeat_n(TrueClass::Elephant, 2))
        .chain(std::iter::repeat_n(TrueClass::Obstruction, 2))
        .chain(std::iter::repeat_n(TrueClass::Cow, 10));
    for (k, class) in classes.enumerate() {
        let dd = round2(1.6 + 0.3 * k as f64);
        let outcome = match class {
            TrueClass::Cow => "cow is Medium priority: logged, not sent",
            TrueClass::Obstruction => "obstruction is High priority: sent",
            _ => "Critical priority: sent",
        };
        plan.push(intrusion(class, BACKGROUND_M - dd, format!("{} dd={dd}: passes fusion; {outcome}", class.as_str())));
    }
    for k in 0..12 {
        let dd = round2(0.7 + 0.1 * k as f64);
        plan.push(false_trigger(
            FalseTriggerKind::Vegetation,
            Some(BACKGROUND_M - dd),
            format!("vegetation dd={dd}: passes fusion, empty frame is background"),
        ));
    }
    for k in 0..10 {
        let dd = round2(0.75 + 0.1 * k as f64);
        plan.push(false_trigger(
            FalseTriggerKind::Wind,
            Some(BACKGROUND_M - dd),
            format!("wind-blown debris dd={dd}: passes fusion, empty frame is background"),
        ));
    }
    for k in 0..20 {
        let d = round2(BACKGROUND_M + 0.05 * (k + 1) as f64);
        plan.push(false_trigger(FalseTriggerKind::Wind, Some(d), format!("wind, echo at {d} m: dd <= 0")));
    }
    for k in 0..20 {
        let dd = round2(0.02 * (k + 1) as f64);
        plan.push(false_trigger(
            FalseTriggerKind::Vegetation,
            Some(BACKGROUND_M - dd),
            format!("vegetation dd={dd}: P below 0.65"),
        ));
    }
    for k in 0..8 {
        let d = round2(0.5 + 0.4 * k as f64);
        plan.push(false_trigger(FalseTriggerKind::Bird, Some(d), format!("bird at {d} m: below the 4 m gate")));
    }
    for _ in 0..8 {
        plan.push(false_trigger(FalseTriggerKind::Bird, None, "bird, no echo: out of range"));
    }
    for k in 0..8 {
        let d = round2(15.5 + 0.5 * k as f64);
        plan.push(false_trigger(FalseTriggerKind::Vehicle, Some(d), format!("vehicle at {d} m: dd <= 0")));
    }
    for _ in 0..7 {
        plan.push(false_trigger(FalseTriggerKind::Vehicle, None, "vehicle, no echo: out of range"));
    }
    assemble(END_TO_END_NAME, 37, plan)
}

/// Identity labels with per-class confidence spreads for the end-to-end run.
pub const END_TO_END_CONFUSION: &str = "\
#netra-confusion v1
# Perfect labels; confidence spread decides priority.
draw random
columns background human animal elephant obstruction
row human       0 1 0 0 0
row cow         0 0 1 0 0
row elephant    0 0 0 1 0
row obstruction 0 0 0 0 1
row background  1 0 0 0 0
confidence human       0.80 0.95
confidence elephant    0.75 0.90
confidence obstruction 0.65 0.85
confidence cow         0.55 0.70
";

/// Pi Zero + MobileNet-SSD with the size rule: 6 of 49 elephants recalled.
pub const PI_ZERO_RECALL_CONFUSION: &str = "\
#netra-confusion v1
# Quota draw makes every 49 elephant frames yield exactly 6 elephants.
draw quota
columns background human animal elephant obstruction
row human       0.06 0.94 0 0 0
row cow         4/47 0 18/47 25/47 0
row elephant    15/49 0 28/49 6/49 0
row obstruction 1/19 0 0 0 18/19
row background  1 0 0 0 0
confidence elephant 0.6 0.9
";

pub const TABLE_V_SCENARIO: &str = "\
# Fusion comparison over the 79-event fixture.
version = 1
name = \"tableV\"
seed = 7

[trace]
file = \"tableV_79events.trace\"

[fusion]
mode = \"probabilistic\"
tau_c = 0.65

[classifier]
kind = \"oracle\"
confusion = \"identity\"

[platform]
builtin = \"pi_zero\"

[sweep]
tau = [0.45, 0.65]
";

pub const END_TO_END_SCENARIO: &str = "\
# Full pipeline over the 113-event fixture on a clean SF7 link.
version = 1
name = \"endToEnd\"
seed = 7

[trace]
file = \"endToEnd_113events.trace\"

[classifier]
kind = \"oracle\"
confusion = \"endToEnd.confusion\"

[link]
snr_margin_db = 5.0
ack_loss_prob = 0.0

[link.delivery]
kind = \"snr\"

[platform]
builtin = \"pi_zero\"
battery_wh = 140.0
";

pub const LOSSY_SCENARIO: &str = "\
# Same pipeline on a half-reliable link.
version = 1
name = \"endToEnd_lossy\"
seed = 11

[trace]
file = \"endToEnd_113events.trace\"

[classifier]
kind = \"oracle\"
confusion = \"endToEnd.confusion\"

[link.delivery]
kind = \"fixed\"
p = 0.5

[platform]
builtin = \"pi4\"
";

pub const GENERATED_SCENARIO: &str = "\
# Synthetic trace from the environment model.
version = 1
name = \"generated\"
seed = 42

[trace.generate]
name = \"generated\"
n_true = 20
n_false = 93
n_quiet = 30

[classifier]
kind = \"heuristic\"
frame_confidence = 0.85
";

/// Every generated fixture file as `(file name, contents)`.
pub fn files() -> Vec<(&'static str, String)> {
    vec![
        ("tableV_79events.trace", format_trace(&table_v_trace())),
        ("endToEnd_113events.trace", format_trace(&end_to_end_trace())),
        ("endToEnd.confusion", END_TO_END_CONFUSION.to_string()),
        ("pi_zero_recall.confusion", PI_ZERO_RECALL_CONFUSION.to_string()),
        ("tableV.scn", TABLE_V_SCENARIO.to_string()),
        ("endToEnd.scn", END_TO_END_SCENARIO.to_string()),
        ("endToEnd_lossy.scn", LOSSY_SCENARIO.to_string()),
        ("generated.scn", GENERATED_SCENARIO.to_string()),
    ]
}

/// Write every fixture into `dir`, creating it if needed. Returns the paths
/// written.
pub fn write_all(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| NetraError::io(dir, e))?;
    files()
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| NetraError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::parse_confusion;
    use crate::sensing::parse_trace;

    #[test]
    fn counts() {
        let a = table_v_trace();
        assert_eq!(a.samples.len(), CALIBRATION_SAMPLES + 79);
        assert_eq!((a.metadata.true_intrusions, a.metadata.false_triggers), (40, 39));
        let b = end_to_end_trace();
        assert_eq!(b.samples.len(), CALIBRATION_SAMPLES + 113);
        assert_eq!((b.metadata.true_intrusions, b.metadata.false_triggers), (20, 93));
    }

    #[test]
    fn written_form_round_trips() {
        for t in [table_v_trace(), end_to_end_trace()] {
            let back = parse_trace(&format_trace(&t)).unwrap();
            assert_eq!(back.samples, t.samples);
            assert_eq!(back.metadata, t.metadata);
        }
        parse_confusion(END_TO_END_CONFUSION).unwrap();
        parse_confusion(PI_ZERO_RECALL_CONFUSION).unwrap();
    }

    #[test]
    fn stride_is_a_permutation() {
        let t = table_v_trace();
        let mut tags: Vec<String> = t.samples[CALIBRATION_SAMPLES..].iter().map(|s| s.truth.tag()).collect();
        tags.sort();
        assert_eq!(tags.iter().filter(|t| t.starts_with("intrusion")).count(), 40);
    }
}
