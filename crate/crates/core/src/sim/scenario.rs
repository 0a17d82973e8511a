//! Scenario files: versioned TOML describing one run.
//!
//! ```toml
//! version = 1
//! name = "tableV"
//! seed = 7
//!
//! [trace]
//! file = "tableV_79events.trace"
//!
//! [fusion]
//! mode = "probabilistic"
//! tau_c = 0.65
//!
//! [classifier]
//! kind = "oracle"
//! confusion = "identity"
//!
//! [platform]
//! builtin = "pi_zero"
//!
//! [sweep]
//! tau = [0.45, 0.65]
//! ```
//!
//! Unknown keys anywhere are errors. Relative paths resolve against the
//! scenario file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alerting::{LinkModel, RetryPolicy};
use crate::classify::{ClassifyConfig, ConfusionSpec};
use crate::energy::PlatformProfile;
use crate::error::{NetraError, Result};
use crate::fusion::FusionConfig;
use crate::sensing::{generate_trace, load_trace, EventTrace, TraceSpec};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    trace: TraceSection,
    #[serde(default)]
    fusion: FusionConfig,
    #[serde(default)]
    classify: ClassifyConfig,
    #[serde(default)]
    classifier: ClassifierSection,
    #[serde(default)]
    link: LinkModel,
    #[serde(default)]
    retry: RetryPolicy,
    #[serde(default)]
    platform: PlatformSection,
    #[serde(default)]
    node: NodeConfig,
    #[serde(default)]
    receiver: ReceiverConfig,
    #[serde(default)]
    sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceSection {
    #[serde(default)]
    file: Option<PathBuf>,
    #[serde(default)]
    generate: Option<TraceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ClassifierKind {
    Oracle,
    Heuristic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierSection {
    kind: ClassifierKind,
    #[serde(default)]
    confusion: Option<String>,
    #[serde(default)]
    frame_confidence: Option<f64>,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            kind: ClassifierKind::Oracle,
            confusion: None,
            frame_confidence: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformSection {
    #[serde(default)]
    builtin: Option<String>,
    #[serde(default)]
    custom: Option<PlatformProfile>,
    #[serde(default)]
    battery_wh: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    tau: Vec<f64>,
}

/// Where the edge node sits and when the scenario clock starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodeConfig {
    pub lat: f64,
    pub lon: f64,
    /// Unix ms corresponding to scenario time 0.
    pub epoch_ms: u64,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            lat: 26.14453,
            lon: 91.73622,
            epoch_ms: 1_773_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub dedup_window_ms: u64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            dedup_window_ms: crate::alerting::Receiver::DEFAULT_DEDUP_WINDOW_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierChoice {
    Oracle(ConfusionSpec),
    /// Size-rule classifier fed synthetic frames at a fixed confidence.
    Heuristic { frame_confidence: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    File(PathBuf),
    Generated(TraceSpec),
}

/// A fully resolved scenario: every referenced file has been read.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub source: TraceSource,
    pub trace: EventTrace,
    pub fusion: FusionConfig,
    pub classify: ClassifyConfig,
    pub classifier: ClassifierChoice,
    pub link: LinkModel,
    pub retry: RetryPolicy,
    pub platform: PlatformProfile,
    pub node: NodeConfig,
    pub receiver: ReceiverConfig,
    pub sweep: Option<Vec<f64>>,
}

impl Scenario {
    /// In-memory scenario with default settings around an existing trace.
    pub fn from_trace(name: impl Into<String>, trace: EventTrace) -> Self {
        Scenario {
            name: name.into(),
            seed: 0,
            source: TraceSource::File(PathBuf::new()),
            trace,
            fusion: FusionConfig::default(),
            classify: ClassifyConfig::default(),
            classifier: ClassifierChoice::Oracle(ConfusionSpec::identity()),
            link: LinkModel::default(),
            retry: RetryPolicy::default(),
            platform: PlatformProfile::pi_zero(),
            node: NodeConfig::default(),
            receiver: ReceiverConfig::default(),
            sweep: None,
        }
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NetraError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base, seed_override)
    }

    pub fn from_toml(text: &str, base_dir: &Path, seed_override: Option<u64>) -> Result<Self> {
        let file = parse_file(text)?;
        if file.version != SCENARIO_VERSION {
            return Err(NetraError::config(
                "version",
                format!("unsupported scenario version {}, expected {SCENARIO_VERSION}", file.version),
            ));
        }
        let seed = seed_override.or(file.seed);

        let (source, trace, seed) = match (file.trace.file, file.trace.generate) {
            (Some(p), None) => {
                let p = base_dir.join(p);
                let trace = load_trace(&p)?;
                (TraceSource::File(p), trace, seed.unwrap_or(0))
            }
            (None, Some(spec)) => {
                let seed = seed.ok_or_else(|| {
                    NetraError::config("seed", "required when the trace is generated")
                })?;
                let trace = generate_trace(&spec, seed)?;
                (TraceSource::Generated(spec), trace, seed)
            }
            _ => {
                return Err(NetraError::config(
                    "trace",
                    "exactly one of `file` or `generate` must be given",
                ))
            }
        };
        trace.validate()?;

        let classifier = match file.classifier.kind {
            ClassifierKind::Oracle => {
                if file.classifier.frame_confidence.is_some() {
                    return Err(NetraError::config(
                        "classifier.frame_confidence",
                        "only valid for the heuristic classifier",
                    ));
                }
                let spec = match file.classifier.confusion.as_deref() {
                    None | Some("identity") => ConfusionSpec::identity(),
                    Some(p) => ConfusionSpec::load(&base_dir.join(p))?,
                };
                ClassifierChoice::Oracle(spec)
            }
            ClassifierKind::Heuristic => {
                if file.classifier.confusion.is_some() {
                    return Err(NetraError::config(
                        "classifier.confusion",
                        "only valid for the oracle classifier",
                    ));
                }
                let c = file.classifier.frame_confidence.unwrap_or(0.9);
                if !(0.0..=1.0).contains(&c) {
                    return Err(NetraError::config(
                        "classifier.frame_confidence",
                        format!("must be in [0, 1], got {c}"),
                    ));
                }
                ClassifierChoice::Heuristic { frame_confidence: c }
            }
        };

        let mut platform = match (file.platform.builtin, file.platform.custom) {
            (Some(name), None) => PlatformProfile::builtin(&name).ok_or_else(|| {
                NetraError::config(
                    "platform.builtin",
                    format!("unknown platform `{name}` (expected pi_zero or pi4)"),
                )
            })?,
            (None, Some(p)) => p,
            (None, None) => PlatformProfile::pi_zero(),
            (Some(_), Some(_)) => {
                return Err(NetraError::config(
                    "platform",
                    "give either `builtin` or `custom`, not both",
                ))
            }
        };
        if file.platform.battery_wh.is_some() {
            platform.battery_wh = file.platform.battery_wh;
        }

        let scenario = Scenario {
            name: file.name.unwrap_or_else(|| trace.metadata.scenario.clone()),
            seed,
            source,
            trace,
            fusion: file.fusion,
            classify: file.classify,
            classifier,
            link: file.link,
            retry: file.retry,
            platform,
            node: file.node,
            receiver: file.receiver,
            sweep: file.sweep.map(|s| s.tau),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Same scenario under another seed. Generated traces are regenerated.
    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        let mut s = self.clone();
        s.seed = seed;
        if let TraceSource::Generated(spec) = &s.source {
            s.trace = generate_trace(spec, seed)?;
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.classify.validate()?;
        if let ClassifierChoice::Oracle(spec) = &self.classifier {
            spec.validate()?;
        }
        self.link.validate()?;
        self.retry.validate()?;
        self.platform.validate()?;
        if !(-90.0..=90.0).contains(&self.node.lat) {
            return Err(NetraError::config("node.lat", "must be in [-90, 90]"));
        }
        if !(-180.0..=180.0).contains(&self.node.lon) {
            return Err(NetraError::config("node.lon", "must be in [-180, 180]"));
        }
        if let Some(taus) = &self.sweep {
            validate_taus(taus)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(NetraError::config("sweep.tau", "list is empty"));
    }
    for t in taus {
        if !(0.0..=1.0).contains(t) {
            return Err(NetraError::config(
                "sweep.tau",
                format!("threshold {t} not in [0, 1]"),
            ));
        }
    }
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_file(text: &str) -> Result<ScenarioFile> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        let line = e.span().map_or(0, |s| line_of(text, s.start));
        NetraError::parse(line, e.message().to_string())
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        NetraError::config(if path == "." { "scenario".to_string() } else { path }, inner.message().to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FusionMode;

    const GENERATED: &str = r#"
version = 1
seed = 3

[trace.generate]
n_true = 4
n_false = 6

[fusion]
mode = "binary"
"#;

    #[test]
    fn parses_generated_scenario() {
        let s = Scenario::from_toml(GENERATED, Path::new("."), None).unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.fusion.mode, FusionMode::Binary);
        assert_eq!(s.trace.metadata.true_intrusions, 4);
        assert_eq!(s.platform.name, "pi_zero");
    }

    #[test]
    fn seed_override_regenerates() {
        let a = Scenario::from_toml(GENERATED, Path::new("."), None).unwrap();
        let b = Scenario::from_toml(GENERATED, Path::new("."), Some(4)).unwrap();
        assert_ne!(a.trace, b.trace);
        assert_eq!(a.with_seed(4).unwrap().trace, b.trace);
    }

    #[test]
    fn generated_trace_needs_seed() {
        let text = GENERATED.replace("seed = 3", "");
        let err = Scenario::from_toml(&text, Path::new("."), None).unwrap_err();
        assert!(matches!(err, NetraError::Config { ref field, .. } if field == "seed"));
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let text = GENERATED.replace("mode = \"binary\"", "mode = \"binary\"\ntau_x = 0.5");
        match Scenario::from_toml(&text, Path::new("."), None) {
            Err(NetraError::Config { field, msg }) => {
                assert!(field.starts_with("fusion"), "{field}");
                assert!(msg.contains("tau_x"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_threshold_is_config_error() {
        let text = GENERATED.replace("mode = \"binary\"", "tau_c = 1.01");
        let err = Scenario::from_toml(&text, Path::new("."), None).unwrap_err();
        assert!(matches!(err, NetraError::Config { ref field, .. } if field == "fusion.tau_c"));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = Scenario::from_toml("version = 1\n[trace\n", Path::new("."), None).unwrap_err();
        assert!(matches!(err, NetraError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn rejects_wrong_version_and_missing_file() {
        let text = GENERATED.replace("version = 1", "version = 2");
        assert!(matches!(
            Scenario::from_toml(&text, Path::new("."), None),
            Err(NetraError::Config { .. })
        ));
        let err = Scenario::load(Path::new("/nonexistent/x.scn"), None).unwrap_err();
        assert!(matches!(err, NetraError::Io { kind: std::io::ErrorKind::NotFound, .. }));
    }

    #[test]
    fn trace_source_must_be_unique() {
        let err = Scenario::from_toml("version = 1\n[trace]\n", Path::new("."), None).unwrap_err();
        assert!(matches!(err, NetraError::Config { ref field, .. } if field == "trace"));
    }
}
