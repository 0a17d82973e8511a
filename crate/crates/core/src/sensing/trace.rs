//! Line-oriented trace files.
//!
//! ```text
//! #netra-trace v1
//! #@ scenario=tableV_79events
//! #@ seed=0
//! #@ true_intrusions=40
//! #@ false_triggers=39
//! # free comment
//! 0,0,0.0758017,quiet
//! 60000,1,0.0641399,intrusion:human
//! 61000,1,-,false:wind
//! ```
//!
//! Records are `t_ms,pir,echo_time_s|-,truth_tag`. `#@ key=value` lines carry
//! metadata; other `#` lines and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroundTruth, SensorSample};
use crate::error::{NetraError, Result};

pub const TRACE_HEADER: &str = "#netra-trace v1";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scenario: String,
    pub seed: Option<u64>,
    pub true_intrusions: usize,
    pub false_triggers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub metadata: TraceMetadata,
    pub samples: Vec<SensorSample>,
    /// Per-record comments, keyed by sample index. Only used when writing
    /// constructed fixtures.
    #[serde(skip)]
    pub notes: Vec<(usize, String)>,
}

impl EventTrace {
    /// Build a trace and derive the metadata counts from the annotations.
    pub fn new(scenario: impl Into<String>, seed: Option<u64>, samples: Vec<SensorSample>) -> Self {
        let (true_intrusions, false_triggers) = tally(&samples);
        EventTrace {
            metadata: TraceMetadata {
                scenario: scenario.into(),
                seed,
                true_intrusions,
                false_triggers,
            },
            samples,
            notes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut last = 0u64;
        for (i, s) in self.samples.iter().enumerate() {
            if s.t_ms < last {
                return Err(NetraError::InvalidSample(format!(
                    "sample {i}: timestamp {} goes backwards (previous {last})",
                    s.t_ms
                )));
            }
            last = s.t_ms;
            if let Some(e) = s.echo_time_s {
                if !e.is_finite() || e < 0.0 {
                    return Err(NetraError::InvalidSample(format!(
                        "sample {i}: echo time {e} out of range"
                    )));
                }
            }
        }
        let counts = tally(&self.samples);
        if counts != (self.metadata.true_intrusions, self.metadata.false_triggers) {
            return Err(NetraError::InvalidSample(format!(
                "metadata counts ({}, {}) disagree with annotations ({}, {})",
                self.metadata.true_intrusions, self.metadata.false_triggers, counts.0, counts.1
            )));
        }
        Ok(())
    }
}

fn tally(samples: &[SensorSample]) -> (usize, usize) {
    samples.iter().fold((0, 0), |(t, f), s| match s.truth {
        GroundTruth::TrueIntrusion(_) => (t + 1, f),
        GroundTruth::FalseTrigger(_) => (t, f + 1),
        GroundTruth::Quiet => (t, f),
    })
}

pub fn load_trace(path: &Path) -> Result<EventTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| NetraError::io(path, e))?;
    parse_trace(&text)
}

pub fn parse_trace(text: &str) -> Result<EventTrace> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(NetraError::parse(1, "empty trace: missing header")),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i + 1, l.trim()),
        }
    };
    let (hline, htext) = header;
    match htext.strip_prefix("#netra-trace ") {
        Some("v1") => {}
        Some(v) => {
            return Err(NetraError::parse(
                hline,
                format!("unsupported trace version `{v}`"),
            ))
        }
        None => return Err(NetraError::parse(hline, "missing `#netra-trace v1` header")),
    }

    let mut scenario = String::new();
    let mut seed = None;
    let mut declared_true = None;
    let mut declared_false = None;
    let mut samples = Vec::new();
    let mut last_t = 0u64;

    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("#@") {
            let (k, v) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| NetraError::parse(lineno, "metadata must be `key=value`"))?;
            let v = v.trim();
            let num = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| NetraError::parse(lineno, format!("bad count `{v}`")))
            };
            match k.trim() {
                "scenario" => scenario = v.to_string(),
                "seed" => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|_| NetraError::parse(lineno, format!("bad seed `{v}`")))?,
                    )
                }
                "true_intrusions" => declared_true = Some(num(v)?),
                "false_triggers" => declared_false = Some(num(v)?),
                other => {
                    return Err(NetraError::parse(
                        lineno,
                        format!("unknown metadata key `{other}`"),
                    ))
                }
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(NetraError::parse(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let t_ms = fields[0]
            .parse::<u64>()
            .map_err(|_| NetraError::parse(lineno, format!("bad timestamp `{}`", fields[0])))?;
        if t_ms < last_t {
            return Err(NetraError::parse(
                lineno,
                format!("timestamp {t_ms} precedes previous {last_t}"),
            ));
        }
        last_t = t_ms;
        let pir = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(NetraError::parse(lineno, format!("pir must be 0 or 1, got `{other}`"))),
        };
        let echo_time_s = match fields[2] {
            "-" => None,
            s => {
                let e = s
                    .parse::<f64>()
                    .map_err(|_| NetraError::parse(lineno, format!("bad echo time `{s}`")))?;
                if !e.is_finite() || e < 0.0 {
                    return Err(NetraError::parse(lineno, format!("echo time must be >= 0, got {s}")));
                }
                Some(e)
            }
        };
        let truth = GroundTruth::parse_tag(fields[3])
            .ok_or_else(|| NetraError::parse(lineno, format!("unknown truth tag `{}`", fields[3])))?;
        samples.push(SensorSample {
            t_ms,
            pir,
            echo_time_s,
            truth,
        });
    }

    let trace = EventTrace::new(scenario, seed, samples);
    let (t, f) = (trace.metadata.true_intrusions, trace.metadata.false_triggers);
    if declared_true.is_some_and(|d| d != t) || declared_false.is_some_and(|d| d != f) {
        return Err(NetraError::parse(
            0,
            format!(
                "declared counts ({}, {}) disagree with records ({t}, {f})",
                declared_true.unwrap_or(t),
                declared_false.unwrap_or(f)
            ),
        ));
    }
    Ok(trace)
}

pub fn format_trace(trace: &EventTrace) -> String {
    let mut out = String::new();
    let m = &trace.metadata;
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let _ = writeln!(out, "#@ scenario={}", m.scenario);
    if let Some(seed) = m.seed {
        let _ = writeln!(out, "#@ seed={seed}");
    }
    let _ = writeln!(out, "#@ true_intrusions={}", m.true_intrusions);
    let _ = writeln!(out, "#@ false_triggers={}", m.false_triggers);
    let mut notes = trace.notes.iter().peekable();
    for (i, s) in trace.samples.iter().enumerate() {
        while let Some((_, note)) = notes.next_if(|(at, _)| *at == i) {
            let _ = writeln!(out, "# {note}");
        }
        let echo = match s.echo_time_s {
            Some(e) => format!("{e}"),
            None => "-".to_string(),
        };
        let _ = writeln!(out, "{},{},{},{}", s.t_ms, u8::from(s.pir), echo, s.truth.tag());
    }
    out
}
