use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::alerting::{DriverAlertEvent, ReceiverStats};
use crate::energy::EnergyLedger;
use crate::fusion::FusionMode;

pub const REPORT_VERSION: u32 = 1;

/// Stage counts from raw PIR triggers down to alerts in the cab.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funnel {
    pub raw_pir: u64,
    pub fusion_passed: u64,
    pub ai_confirmed: u64,
    pub transmitted: u64,
    pub delivered: u64,
}

impl Funnel {
    pub fn is_monotone(&self) -> bool {
        self.raw_pir >= self.fusion_passed
            && self.fusion_passed >= self.ai_confirmed
            && self.ai_confirmed >= self.transmitted
            && self.transmitted >= self.delivered
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionRejects {
    pub no_motion: u64,
    pub non_positive_delta: u64,
    pub out_of_range: u64,
    pub below_threshold: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertCounts {
    /// Passed the alert gate at Critical or High.
    pub confirmed: u64,
    /// Passed the gate at Medium or Low; logged on the node only.
    pub logged_only: u64,
    pub suppressed: u64,
    pub transmitted: u64,
    pub delivered: u64,
    /// Still in the retry buffer when the run ended.
    pub buffered: u64,
    pub dropped: u64,
    pub retries: u64,
}

/// Alert latency, detection to ACK, over delivered alerts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub mean_ms: Option<f64>,
    pub p50_ms: Option<u64>,
    pub p95_ms: Option<u64>,
    pub max_ms: Option<u64>,
}

impl LatencyStats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[u64]) -> Self {
        if samples.is_empty() {
            return LatencyStats::default();
        }
        let mut v = samples.to_vec();
        v.sort_unstable();
        let rank = |q: f64| {
            let k = (q * v.len() as f64).ceil() as usize;
            v[k.clamp(1, v.len()) - 1]
        };
        LatencyStats {
            count: v.len() as u64,
            mean_ms: Some(v.iter().sum::<u64>() as f64 / v.len() as f64),
            p50_ms: Some(rank(0.50)),
            p95_ms: Some(rank(0.95)),
            max_ms: v.last().copied(),
        }
    }
}

/// Percentages in [0, 100]; `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// True activations over ground-truth intrusions.
    pub detection_rate: Option<f64>,
    /// False activations over ground-truth false triggers.
    pub false_alarm_rate: Option<f64>,
    /// Share of PIR triggers that never became a confirmed alert.
    pub suppression_pct: Option<f64>,
    /// Share of PIR triggers the fusion stage discarded.
    pub fusion_elimination_pct: Option<f64>,
    /// Camera energy saved against firing on every PIR trigger.
    pub camera_energy_savings_pct: Option<f64>,
    pub pdr_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub mode: FusionMode,
    pub tau_c: f64,
    pub platform: String,
    pub spreading_factor: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub settings: RunSettings,
    pub n_events: u64,
    pub ground_truth_intrusions: u64,
    pub ground_truth_false_triggers: u64,
    pub pir_triggers: u64,
    pub camera_activations: u64,
    pub activations_true: u64,
    pub activations_false: u64,
    pub fusion_rejects: FusionRejects,
    pub detections: BTreeMap<String, u64>,
    pub alerts: AlertCounts,
    pub rates: Rates,
    pub latency: LatencyStats,
    pub energy: EnergyLedger,
    pub battery_days: Option<f64>,
    pub span_ms: u64,
    pub funnel: Funnel,
    pub receiver: ReceiverStats,
    pub driver_events: Vec<DriverAlertEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `tau=0.65`, `binary`, or `pir_only`.
    pub label: String,
    pub tau_c: Option<f64>,
    pub report: MetricsReport,
}

/// On-disk report envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ReportFile {
    Run {
        report_version: u32,
        report: MetricsReport,
    },
    Sweep {
        report_version: u32,
        points: Vec<SweepPoint>,
    },
}

impl ReportFile {
    pub fn run(report: MetricsReport) -> Self {
        ReportFile::Run {
            report_version: REPORT_VERSION,
            report,
        }
    }

    pub fn sweep(points: Vec<SweepPoint>) -> Self {
        ReportFile::Sweep {
            report_version: REPORT_VERSION,
            points,
        }
    }

    pub fn version(&self) -> u32 {
        match self {
            ReportFile::Run { report_version, .. } | ReportFile::Sweep { report_version, .. } => {
                *report_version
            }
        }
    }

    /// Pretty JSON with a trailing newline. Stable for a given report.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_else(|e| {
            // Every field is a plain number, string, or map with string keys.
            unreachable!("report serialization cannot fail: {e}")
        });
        s.push('\n');
        s
    }

    pub fn render(&self) -> String {
        match self {
            ReportFile::Run { report, .. } => render_run(report),
            ReportFile::Sweep { points, .. } => render_sweep(points),
        }
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}%"))
}

fn ms(v: Option<u64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

fn mode_name(mode: FusionMode) -> &'static str {
    match mode {
        FusionMode::PirOnly => "pir_only",
        FusionMode::Binary => "binary",
        FusionMode::Probabilistic => "probabilistic",
    }
}

pub fn render_run(r: &MetricsReport) -> String {
    let mut out = String::new();
    let s = &r.settings;
    let _ = writeln!(out, "scenario  {}  (seed {})", r.scenario, r.seed);
    let _ = writeln!(
        out,
        "fusion    {}  tau_c {}  platform {}  SF{}",
        mode_name(s.mode),
        s.tau_c,
        s.platform,
        s.spreading_factor
    );
    out.push('\n');
    let _ = writeln!(out, "{:<14}{:>8}{:>8}{:>8}{:>12}{:>10}", "Method", "True", "False", "Total", "Detection", "FalseRate");
    let _ = writeln!(
        out,
        "{:<14}{:>8}{:>8}{:>8}{:>12}{:>10}",
        mode_name(s.mode),
        r.activations_true,
        r.activations_false,
        r.camera_activations,
        pct(r.rates.detection_rate),
        pct(r.rates.false_alarm_rate)
    );
    out.push('\n');
    let f = &r.funnel;
    let _ = writeln!(out, "{:<10}{:>8}{:>8}{:>10}{:>13}{:>11}", "Funnel", "PIR", "Fusion", "Confirmed", "Transmitted", "Delivered");
    let _ = writeln!(
        out,
        "{:<10}{:>8}{:>8}{:>10}{:>13}{:>11}",
        "", f.raw_pir, f.fusion_passed, f.ai_confirmed, f.transmitted, f.delivered
    );
    out.push('\n');
    let _ = writeln!(out, "suppression        {}", pct(r.rates.suppression_pct));
    let _ = writeln!(out, "fusion eliminated  {}", pct(r.rates.fusion_elimination_pct));
    let _ = writeln!(out, "camera energy cut  {}", pct(r.rates.camera_energy_savings_pct));
    let _ = writeln!(out, "PDR                {}", pct(r.rates.pdr_pct));
    let l = &r.latency;
    let _ = writeln!(
        out,
        "latency ms         mean {}  p50 {}  p95 {}  max {}",
        l.mean_ms.map_or_else(|| "n/a".to_string(), |m| format!("{m:.0}")),
        ms(l.p50_ms),
        ms(l.p95_ms),
        ms(l.max_ms)
    );
    let e = &r.energy;
    let _ = writeln!(
        out,
        "energy Wh          camera {:.4}  inference {:.4}  idle {:.4}  radio {:.6}  total {:.4}",
        e.camera_wh, e.inference_wh, e.idle_wh, e.radio_wh, e.total_wh
    );
    if let Some(d) = r.battery_days {
        let _ = writeln!(out, "battery days       {d:.1}");
    }
    if !r.detections.is_empty() {
        let labels: Vec<String> = r.detections.iter().map(|(k, v)| format!("{k} {v}")).collect();
        let _ = writeln!(out, "detections         {}", labels.join(", "));
    }
    out
}

pub fn render_sweep(points: &[SweepPoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{:>8}{:>13}{:>8}{:>8}{:>12}", "Method", "tau_c", "Activations", "True", "False", "Detection");
    for p in points {
        let r = &p.report;
        let tau = p.tau_c.map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
        let _ = writeln!(
            out,
            "{:<14}{:>8}{:>13}{:>8}{:>8}{:>12}",
            mode_name(r.settings.mode),
            tau,
            r.camera_activations,
            r.activations_true,
            r.activations_false,
            pct(r.rates.detection_rate)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles() {
        let s = LatencyStats::from_samples(&[2400, 2400, 2400, 4000]);
        assert_eq!(s.count, 4);
        assert_eq!(s.p50_ms, Some(2400));
        assert_eq!(s.p95_ms, Some(4000));
        assert_eq!(s.max_ms, Some(4000));
        assert_eq!(s.mean_ms, Some(2800.0));
        assert_eq!(LatencyStats::from_samples(&[]), LatencyStats::default());
    }

    #[test]
    fn funnel_monotone() {
        let f = Funnel {
            raw_pir: 113,
            fusion_passed: 42,
            ai_confirmed: 10,
            transmitted: 10,
            delivered: 10,
        };
        assert!(f.is_monotone());
        assert!(!Funnel { delivered: 11, ..f }.is_monotone());
    }
}
