//! Confusion-matrix replay classifier.
//!
//! File format (`#` starts a comment, blank lines ignored):
//!
//! ```text
//! #netra-confusion v1
//! draw quota
//! columns background human animal elephant obstruction
//! row elephant 15/49 0 28/49 6/49 0
//! confidence elephant 0.75 0.90
//! ```
//!
//! Every true class (`human cow elephant obstruction background`) needs a
//! `row`; each row must sum to 1 within 1e-9. Entries may be decimals or
//! `a/b` fractions. `confidence` lines give a uniform range per true class and
//! default to `1.0 1.0`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{area_ratio, BBox, Classifier, ClassifyConfig, Detection, FrameDescriptor, Label};
use crate::error::{NetraError, Result};
use crate::sensing::TrueClass;

const HEADER: &str = "#netra-confusion v1";
const ROW_TOLERANCE: f64 = 1e-9;

/// How labels are drawn from a confusion row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawMode {
    /// Independent seeded draw per frame.
    Random,
    /// Largest-deficit allocation: after `n` frames of a class, each label has
    /// been emitted `round(p * n)` times (exactly, when `p * n` is integral).
    Quota,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionSpec {
    pub draw: DrawMode,
    pub rows: BTreeMap<TrueClass, [f64; 5]>,
    pub confidence: BTreeMap<TrueClass, (f64, f64)>,
}

impl ConfusionSpec {
    pub fn identity() -> Self {
        let mut rows = BTreeMap::new();
        for c in TrueClass::ALL {
            let mut row = [0.0; 5];
            row[usize::from(Label::for_true_class(c).code())] = 1.0;
            rows.insert(c, row);
        }
        ConfusionSpec {
            draw: DrawMode::Random,
            rows,
            confidence: BTreeMap::new(),
        }
    }

    pub fn with_confidence(mut self, class: TrueClass, lo: f64, hi: f64) -> Self {
        self.confidence.insert(class, (lo, hi));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for c in TrueClass::ALL {
            let row = self
                .rows
                .get(&c)
                .ok_or_else(|| NetraError::config(format!("confusion.row.{}", c.as_str()), "missing row"))?;
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(NetraError::config(
                    format!("confusion.row.{}", c.as_str()),
                    "entries must be in [0, 1]",
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(NetraError::config(
                    format!("confusion.row.{}", c.as_str()),
                    format!("row sums to {sum}, expected 1"),
                ));
            }
        }
        for (c, (lo, hi)) in &self.confidence {
            if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(NetraError::config(
                    format!("confusion.confidence.{}", c.as_str()),
                    format!("need 0 <= lo <= hi <= 1, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NetraError::io(path, e))?;
        parse_confusion(&text)
    }
}

fn parse_prob(tok: &str, line: usize) -> Result<f64> {
    let bad = || NetraError::parse(line, format!("bad probability `{tok}`"));
    let v = match tok.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.parse().map_err(|_| bad())?;
            let b: f64 = b.parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            a / b
        }
        None => tok.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_confusion(text: &str) -> Result<ConfusionSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, l)) if l.starts_with("#netra-confusion") => {
            return Err(NetraError::parse(n, format!("unsupported version in `{l}`")))
        }
        Some((n, _)) => return Err(NetraError::parse(n, format!("missing `{HEADER}` header"))),
        None => return Err(NetraError::parse(1, "empty confusion spec")),
    }

    let mut draw = DrawMode::Random;
    let mut columns: Option<Vec<Label>> = None;
    let mut rows = BTreeMap::new();
    let mut confidence = BTreeMap::new();

    for (n, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "draw" => {
                draw = match toks.get(1).copied() {
                    Some("random") => DrawMode::Random,
                    Some("quota") => DrawMode::Quota,
                    other => return Err(NetraError::parse(n, format!("unknown draw mode {other:?}"))),
                }
            }
            "columns" => {
                let cols = toks[1..]
                    .iter()
                    .map(|t| Label::parse(t).ok_or_else(|| NetraError::parse(n, format!("unknown label `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let mut sorted = cols.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != 5 || cols.len() != 5 {
                    return Err(NetraError::parse(n, "columns must list each of the 5 labels once"));
                }
                columns = Some(cols);
            }
            "row" => {
                let cols = columns
                    .as_ref()
                    .ok_or_else(|| NetraError::parse(n, "`row` before `columns`"))?;
                let class = toks
                    .get(1)
                    .and_then(|t| TrueClass::parse(t))
                    .ok_or_else(|| NetraError::parse(n, "row needs a true class"))?;
                if toks.len() != 7 {
                    return Err(NetraError::parse(n, format!("row needs 5 entries, got {}", toks.len().saturating_sub(2))));
                }
                let mut row = [0.0; 5];
                for (label, tok) in cols.iter().zip(&toks[2..]) {
                    row[usize::from(label.code())] = parse_prob(tok, n)?;
                }
                if rows.insert(class, row).is_some() {
                    return Err(NetraError::parse(n, format!("duplicate row `{}`", class.as_str())));
                }
            }
            "confidence" => {
                let class = toks
                    .get(1)
                    .and_then(|t| TrueClass::parse(t))
                    .ok_or_else(|| NetraError::parse(n, "confidence needs a true class"))?;
                if toks.len() != 4 {
                    return Err(NetraError::parse(n, "confidence needs `lo hi`"));
                }
                confidence.insert(class, (parse_prob(toks[2], n)?, parse_prob(toks[3], n)?));
            }
            other => return Err(NetraError::parse(n, format!("unknown directive `{other}`"))),
        }
    }

    let spec = ConfusionSpec {
        draw,
        rows,
        confidence,
    };
    spec.validate()?;
    Ok(spec)
}

/// Classifier that emits labels according to a confusion matrix.
#[derive(Debug, Clone)]
pub struct OracleClassifier {
    spec: ConfusionSpec,
    rng: ChaCha8Rng,
    seen: BTreeMap<TrueClass, u64>,
    emitted: BTreeMap<TrueClass, [u64; 5]>,
}

impl OracleClassifier {
    pub fn new(spec: ConfusionSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(OracleClassifier {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seen: BTreeMap::new(),
            emitted: BTreeMap::new(),
        })
    }

    fn draw_label(&mut self, class: TrueClass) -> Label {
        let row = self.spec.rows[&class];
        let idx = match self.spec.draw {
            DrawMode::Random => {
                let u: f64 = self.rng.gen();
                let mut acc = 0.0;
                let mut pick = None;
                for (i, p) in row.iter().enumerate() {
                    acc += p;
                    if *p > 0.0 && u < acc {
                        pick = Some(i);
                        break;
                    }
                }
                // Rounding can leave u just above the running sum.
                pick.unwrap_or_else(|| row.iter().rposition(|p| *p > 0.0).unwrap_or(0))
            }
            DrawMode::Quota => {
                let n = self.seen.get(&class).copied().unwrap_or(0) + 1;
                let emitted = self.emitted.entry(class).or_insert([0; 5]);
                let mut best = 0;
                let mut best_deficit = f64::NEG_INFINITY;
                for (i, p) in row.iter().enumerate() {
                    if *p <= 0.0 {
                        continue;
                    }
                    let deficit = p * n as f64 - emitted[i] as f64;
                    if deficit > best_deficit + 1e-12 {
                        best = i;
                        best_deficit = deficit;
                    }
                }
                best
            }
        };
        *self.seen.entry(class).or_insert(0) += 1;
        self.emitted.entry(class).or_insert([0; 5])[idx] += 1;
        Label::from_code(idx as u8).unwrap_or(Label::Background)
    }

    fn draw_confidence(&mut self, class: TrueClass) -> f64 {
        let (lo, hi) = self.spec.confidence.get(&class).copied().unwrap_or((1.0, 1.0));
        // Always consume one draw so the stream does not depend on the ranges.
        let u: f64 = self.rng.gen();
        lo + (hi - lo) * u
    }
}

/// Boxes whose area ratio agrees with the size rule at the default threshold.
fn box_for(label: Label, original: Option<BBox>, frame: &FrameDescriptor, cfg: &ClassifyConfig) -> Option<BBox> {
    let (w, h) = (frame.width, frame.height);
    let ratio_of = |b: &BBox| area_ratio(b, w, h).ok();
    let centered = |side_frac: f64| {
        let bw = ((f64::from(w) * side_frac).round() as u32).clamp(1, w);
        let bh = ((f64::from(h) * side_frac).round() as u32).clamp(1, h);
        let x1 = (w - bw) / 2;
        let y1 = (h - bh) / 2;
        BBox::new(x1, y1, x1 + bw, y1 + bh)
    };
    match label {
        Label::Background => None,
        Label::Elephant => match original {
            Some(b) if ratio_of(&b).is_some_and(|r| r >= cfg.tau_elephant) => Some(b),
            _ => Some(centered(0.6)),
        },
        Label::Animal => match original {
            Some(b) if ratio_of(&b).is_some_and(|r| r < cfg.tau_elephant) => Some(b),
            _ => Some(centered(0.3)),
        },
        _ => original,
    }
}

impl Classifier for OracleClassifier {
    fn classify(&mut self, frame: &FrameDescriptor, cfg: &ClassifyConfig) -> Result<Detection> {
        frame.validate()?;
        let Some(obj) = frame.primary() else {
            return Ok(Detection::background());
        };
        let class = obj.true_class;
        let label = self.draw_label(class);
        let p_ai = self.draw_confidence(class);
        if label == Label::Background {
            return Ok(Detection::new(Label::Background, p_ai, None));
        }
        Ok(Detection::new(label, p_ai, box_for(label, Some(obj.bbox), frame, cfg)))
    }
}
