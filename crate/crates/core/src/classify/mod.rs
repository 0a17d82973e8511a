//! Classification stage: what the camera saw, how urgent it is, and whether
//! it becomes an alert.
//!
//! Two classifiers implement [`Classifier`]:
//!
//! - [`HeuristicClassifier`] maps base-detector labels through the bounding
//!   box size rule (large "cow" → elephant).
//! - [`OracleClassifier`] replays a confusion matrix in place of a real
//!   network, so runs are reproducible without images.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};
pub use crate::sensing::TrueClass;

pub use oracle::{parse_confusion, ConfusionSpec, DrawMode, OracleClassifier};

/// Labels a base object detector (VOC-style) can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorLabel {
    Person,
    Cow,
    Horse,
    Sheep,
    None,
}

impl DetectorLabel {
    pub fn is_livestock(self) -> bool {
        matches!(self, DetectorLabel::Cow | DetectorLabel::Horse | DetectorLabel::Sheep)
    }
}

/// Pixel-space box, `x1 < x2`, `y1 < y2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl BBox {
    pub fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    fn area(&self) -> u64 {
        u64::from(self.x2.saturating_sub(self.x1)) * u64::from(self.y2.saturating_sub(self.y1))
    }

    fn fits(&self, width: u32, height: u32) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2 && self.x2 <= width && self.y2 <= height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObject {
    pub true_class: TrueClass,
    pub bbox: BBox,
    pub detector_label: DetectorLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub width: u32,
    pub height: u32,
    pub objects: Vec<FrameObject>,
}

impl FrameDescriptor {
    pub fn empty(width: u32, height: u32) -> Self {
        FrameDescriptor {
            width,
            height,
            objects: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(NetraError::InvalidDetection("zero-sized frame".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !o.bbox.fits(self.width, self.height) {
                return Err(NetraError::InvalidDetection(format!(
                    "object {i}: bbox {:?} outside {}x{} frame",
                    o.bbox, self.width, self.height
                )));
            }
            if !(0.0..=1.0).contains(&o.confidence) {
                return Err(NetraError::InvalidDetection(format!(
                    "object {i}: confidence {} not in [0, 1]",
                    o.confidence
                )));
            }
        }
        Ok(())
    }

    /// The object a single-shot classifier reports: highest confidence,
    /// larger box on ties.
    pub fn primary(&self) -> Option<&FrameObject> {
        self.objects.iter().max_by(|a, b| {
            a.confidence
                .total_cmp(&b.confidence)
                .then(a.bbox.area().cmp(&b.bbox.area()))
        })
    }
}

/// Pipeline-level label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Background,
    Human,
    Animal,
    Elephant,
    Obstruction,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Background,
        Label::Human,
        Label::Animal,
        Label::Elephant,
        Label::Obstruction,
    ];

    pub fn code(self) -> u8 {
        match self {
            Label::Background => 0,
            Label::Human => 1,
            Label::Animal => 2,
            Label::Elephant => 3,
            Label::Obstruction => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Label::ALL.get(usize::from(code)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Background => "background",
            Label::Human => "human",
            Label::Animal => "animal",
            Label::Elephant => "elephant",
            Label::Obstruction => "obstruction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Label::ALL.into_iter().find(|l| l.as_str() == s)
    }

    /// The label a perfect classifier gives an object of this class.
    pub fn for_true_class(c: TrueClass) -> Self {
        match c {
            TrueClass::Human => Label::Human,
            TrueClass::Cow => Label::Animal,
            TrueClass::Elephant => Label::Elephant,
            TrueClass::Obstruction => Label::Obstruction,
            TrueClass::Background => Label::Background,
        }
    }
}

/// Alert urgency. Declaration order is severity order, so `Ord` sorts
/// Critical first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    Critical,
    High,
    Medium,
    Low,
}

impl Priority {
    pub const ALL: [Priority; 4] = [Priority::Critical, Priority::High, Priority::Medium, Priority::Low];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code))
            .copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::Critical => "critical",
            Priority::High => "high",
            Priority::Medium => "medium",
            Priority::Low => "low",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    /// Critical and High go out over the radio; Medium is logged only.
    pub fn transmits(self) -> bool {
        matches!(self, Priority::Critical | Priority::High)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub tau_ai: f64,
    pub tau_elephant: f64,
    /// Weight on classifier confidence in the intrusion probability score.
    pub lambda: f64,
    pub tau_alert: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tau_ai: 0.50,
            tau_elephant: 0.25,
            lambda: 0.6,
            tau_alert: 0.60,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("tau_ai", self.tau_ai),
            ("tau_elephant", self.tau_elephant),
            ("lambda", self.lambda),
            ("tau_alert", self.tau_alert),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(NetraError::config(
                    format!("classify.{field}"),
                    format!("must be in [0, 1], got {v}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: Label,
    pub p_ai: f64,
    pub bbox: Option<BBox>,
    pub priority: Priority,
}

impl Detection {
    pub fn new(label: Label, p_ai: f64, bbox: Option<BBox>) -> Self {
        Detection {
            label,
            p_ai,
            bbox,
            priority: priority(label, p_ai),
        }
    }

    pub fn background() -> Self {
        Detection::new(Label::Background, 0.0, None)
    }
}

/// Fraction of the frame covered by `bbox`.
pub fn area_ratio(bbox: &BBox, width: u32, height: u32) -> Result<f64> {
    if width == 0 || height == 0 {
        return Err(NetraError::InvalidDetection("zero-sized frame".into()));
    }
    if !bbox.fits(width, height) {
        return Err(NetraError::InvalidDetection(format!(
            "degenerate or out-of-frame bbox {bbox:?} in {width}x{height}"
        )));
    }
    Ok(bbox.area() as f64 / (u64::from(width) * u64::from(height)) as f64)
}

/// Minimum confidence for a `person` box to count as a human.
pub const HUMAN_MIN_CONFIDENCE: f64 = 0.5;

/// Size rule: livestock boxes covering at least `tau_elephant` of the frame
/// are taken to be elephants.
pub fn size_heuristic_label(
    detector_label: DetectorLabel,
    ratio: f64,
    p_ai: f64,
    cfg: &ClassifyConfig,
) -> Label {
    match detector_label {
        DetectorLabel::Person if p_ai >= HUMAN_MIN_CONFIDENCE => Label::Human,
        DetectorLabel::Person => Label::Background,
        l if l.is_livestock() && ratio >= cfg.tau_elephant => Label::Elephant,
        l if l.is_livestock() => Label::Animal,
        _ => Label::Background,
    }
}

pub fn intrusion_probability_score(p_ai: f64, p_intrusion: f64, lambda: f64) -> f64 {
    lambda * p_ai + (1.0 - lambda) * p_intrusion
}

pub fn priority(label: Label, p_ai: f64) -> Priority {
    match label {
        Label::Elephant | Label::Human if p_ai >= 0.7 => Priority::Critical,
        Label::Obstruction if p_ai >= 0.6 => Priority::High,
        Label::Animal if p_ai >= 0.5 => Priority::Medium,
        _ => Priority::Low,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressReason {
    Background,
    LowConfidence,
    LowScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertCandidate {
    pub label: Label,
    pub p_ai: f64,
    pub ips: f64,
    pub priority: Priority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateOutcome {
    Alert(AlertCandidate),
    Suppressed(SuppressReason),
}

/// Two-threshold alert filter: classifier confidence first, then the blended
/// score against `tau_alert`.
pub fn alert_gate(detection: &Detection, p_intrusion: f64, cfg: &ClassifyConfig) -> GateOutcome {
    if detection.label == Label::Background {
        return GateOutcome::Suppressed(SuppressReason::Background);
    }
    if detection.p_ai < cfg.tau_ai {
        return GateOutcome::Suppressed(SuppressReason::LowConfidence);
    }
    let ips = intrusion_probability_score(detection.p_ai, p_intrusion, cfg.lambda);
    if ips < cfg.tau_alert {
        return GateOutcome::Suppressed(SuppressReason::LowScore);
    }
    GateOutcome::Alert(AlertCandidate {
        label: detection.label,
        p_ai: detection.p_ai,
        ips,
        priority: detection.priority,
    })
}

pub trait Classifier {
    fn classify(&mut self, frame: &FrameDescriptor, cfg: &ClassifyConfig) -> Result<Detection>;
}

/// Base detector + size rule. Obstructions have no detector class here and
/// come back as background.
#[derive(Debug, Clone, Default)]
pub struct HeuristicClassifier;

impl Classifier for HeuristicClassifier {
    fn classify(&mut self, frame: &FrameDescriptor, cfg: &ClassifyConfig) -> Result<Detection> {
        frame.validate()?;
        let Some(obj) = frame.primary() else {
            return Ok(Detection::background());
        };
        let ratio = area_ratio(&obj.bbox, frame.width, frame.height)?;
        let label = size_heuristic_label(obj.detector_label, ratio, obj.confidence, cfg);
        if label == Label::Background {
            return Ok(Detection::background());
        }
        Ok(Detection::new(label, obj.confidence, Some(obj.bbox)))
    }
}

pub const FRAME_SIZE: u32 = 300;

/// Canonical 300×300 frame for an event, as a camera on the track would see
/// it. False triggers and quiet cycles produce an empty frame.
pub fn synthesize_frame(truth: Option<TrueClass>, confidence: f64) -> FrameDescriptor {
    let (bbox, detector_label) = match truth {
        None | Some(TrueClass::Background) => return FrameDescriptor::empty(FRAME_SIZE, FRAME_SIZE),
        Some(TrueClass::Human) => (BBox::new(120, 60, 180, 260), DetectorLabel::Person),
        Some(TrueClass::Cow) => (BBox::new(90, 120, 210, 210), DetectorLabel::Cow),
        Some(TrueClass::Elephant) => (BBox::new(30, 30, 210, 240), DetectorLabel::Cow),
        Some(TrueClass::Obstruction) => (BBox::new(100, 200, 200, 260), DetectorLabel::None),
    };
    FrameDescriptor {
        width: FRAME_SIZE,
        height: FRAME_SIZE,
        objects: vec![FrameObject {
            true_class: truth.unwrap_or(TrueClass::Background),
            bbox,
            detector_label,
            confidence,
        }],
    }
}
