//! Discrete-event runs over a trace: sensing, fusion, classification,
//! alerting and energy composed on a 1 ms clock.
//!
//! The first five samples of every trace are the calibration window. Each
//! later sample is scored by the fusion gate; activations are classified,
//! gated, and Critical/High alerts go out after the platform's stage delay.
//! A single radio serves transmissions in order.

pub mod fixtures;
mod report;
mod scenario;
mod scheduler;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use report::{
    render_run, render_sweep, AlertCounts, Funnel, FusionRejects, LatencyStats, MetricsReport,
    Rates, ReportFile, RunSettings, SweepPoint, REPORT_VERSION,
};
pub use scenario::{
    ClassifierChoice, NodeConfig, ReceiverConfig, Scenario, TraceSource, SCENARIO_VERSION,
};
pub use scheduler::Scheduler;

use crate::alerting::{
    adaptive_sf, airtime_ms, Alert, LoraParams, Receiver, Transmitter, TxStatus, PAYLOAD_LEN,
};
use crate::classify::{
    alert_gate, synthesize_frame, Classifier, GateOutcome, HeuristicClassifier, OracleClassifier,
};
use crate::energy::{battery_days, camera_energy, run_ledger, savings, RunTally};
use crate::error::Result;
use crate::fusion::{activation_pipeline, FusionMode, RejectReason};
use crate::sensing::{calibrate_background, GroundTruth, CalibrationState, CALIBRATION_SAMPLES};

enum Event {
    Sample(usize),
    Transmit { alert: Alert, detected_ms: u64 },
    Arrival([u8; PAYLOAD_LEN]),
}

fn calibrate(scenario: &Scenario) -> Result<CalibrationState> {
    let v = scenario.fusion.v_sound;
    let window: Vec<f64> = scenario
        .trace
        .samples
        .iter()
        .take(CALIBRATION_SAMPLES)
        .map(|s| {
            s.distance_m(v)?.ok_or_else(|| {
                crate::NetraError::InvalidSample(format!(
                    "calibration sample at {} ms has no echo",
                    s.t_ms
                ))
            })
        })
        .collect::<Result<_>>()?;
    calibrate_background(&window)
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64 * 100.0)
}

/// Replay one scenario. Deterministic in `(scenario, scenario.seed)`.
pub fn run(scenario: &Scenario) -> Result<MetricsReport> {
    scenario.validate()?;
    scenario.trace.validate()?;
    let calib = calibrate(scenario)?;

    let mut classifier: Box<dyn Classifier> = match &scenario.classifier {
        ClassifierChoice::Oracle(spec) => Box::new(OracleClassifier::new(spec.clone(), scenario.seed)?),
        ClassifierChoice::Heuristic { .. } => Box::new(HeuristicClassifier),
    };
    let frame_confidence = match scenario.classifier {
        ClassifierChoice::Heuristic { frame_confidence } => frame_confidence,
        ClassifierChoice::Oracle(_) => 1.0,
    };
    let mut link_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    link_rng.set_stream(1);

    let fusion = &scenario.fusion;
    let node = &scenario.node;
    let pre_tx_ms = scenario.platform.stages.pre_transmit_ms();
    let sf = adaptive_sf(&scenario.link);
    let tx_ms = airtime_ms(PAYLOAD_LEN, &LoraParams::new(sf))?;

    let mut sched = Scheduler::new();
    for i in CALIBRATION_SAMPLES..scenario.trace.samples.len() {
        sched.schedule(scenario.trace.samples[i].t_ms, Event::Sample(i));
    }

    let mut tx = Transmitter::new(&scenario.retry);
    let mut rx = Receiver::new(scenario.receiver.dedup_window_ms, node.epoch_ms);
    let mut radio_free_ms = 0u64;

    let mut r = MetricsReport {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        settings: RunSettings {
            mode: fusion.mode,
            tau_c: fusion.tau_c,
            platform: scenario.platform.name.clone(),
            spreading_factor: sf,
        },
        n_events: 0,
        ground_truth_intrusions: 0,
        ground_truth_false_triggers: 0,
        pir_triggers: 0,
        camera_activations: 0,
        activations_true: 0,
        activations_false: 0,
        fusion_rejects: FusionRejects::default(),
        detections: BTreeMap::new(),
        alerts: AlertCounts::default(),
        rates: Rates::default(),
        latency: LatencyStats::default(),
        energy: Default::default(),
        battery_days: None,
        span_ms: 0,
        funnel: Funnel::default(),
        receiver: Default::default(),
        driver_events: Vec::new(),
    };
    let mut latencies = Vec::new();
    let mut airtime_s = 0.0;
    let mut end_ms = scenario.trace.samples.last().map_or(0, |s| s.t_ms);

    while let Some((t, batch)) = sched.pop_tick() {
        end_ms = end_ms.max(t);
        let mut arrivals: Vec<[u8; PAYLOAD_LEN]> = Vec::new();
        for ev in batch {
            match ev {
                Event::Sample(i) => {
                    let s = &scenario.trace.samples[i];
                    r.n_events += 1;
                    match s.truth {
                        GroundTruth::TrueIntrusion(_) => r.ground_truth_intrusions += 1,
                        GroundTruth::FalseTrigger(_) => r.ground_truth_false_triggers += 1,
                        GroundTruth::Quiet => {}
                    }
                    if s.pir {
                        r.pir_triggers += 1;
                    }
                    let d = activation_pipeline(s, &calib, fusion)?;
                    match d.reject_reason {
                        RejectReason::None => {}
                        RejectReason::NoMotion => r.fusion_rejects.no_motion += 1,
                        RejectReason::NonPositiveDelta => r.fusion_rejects.non_positive_delta += 1,
                        RejectReason::OutOfRange => r.fusion_rejects.out_of_range += 1,
                        RejectReason::BelowThreshold => r.fusion_rejects.below_threshold += 1,
                    }
                    if !d.camera {
                        continue;
                    }
                    r.camera_activations += 1;
                    let truth_class = match s.truth {
                        GroundTruth::TrueIntrusion(c) => {
                            r.activations_true += 1;
                            Some(c)
                        }
                        _ => {
                            r.activations_false += 1;
                            None
                        }
                    };
                    let frame = synthesize_frame(truth_class, frame_confidence);
                    let det = classifier.classify(&frame, &scenario.classify)?;
                    *r.detections.entry(det.label.as_str().to_string()).or_insert(0) += 1;
                    match alert_gate(&det, d.p_intrusion, &scenario.classify) {
                        GateOutcome::Suppressed(_) => r.alerts.suppressed += 1,
                        GateOutcome::Alert(c) if !c.priority.transmits() => r.alerts.logged_only += 1,
                        GateOutcome::Alert(c) => {
                            r.alerts.confirmed += 1;
                            let alert = Alert::new(
                                c.label,
                                c.priority,
                                c.ips,
                                node.lat,
                                node.lon,
                                node.epoch_ms + s.t_ms,
                            )?;
                            sched.schedule(
                                s.t_ms + pre_tx_ms,
                                Event::Transmit {
                                    alert,
                                    detected_ms: s.t_ms,
                                },
                            );
                        }
                    }
                }
                Event::Transmit { alert, detected_ms } => {
                    let start = t.max(radio_free_ms);
                    let out = tx.transmit_with_ack(&alert, &scenario.link, &scenario.retry, &mut link_rng);
                    if out.status == TxStatus::Failed {
                        log::warn!("alert {:016x} could not be encoded", alert.alert_id);
                        continue;
                    }
                    r.alerts.transmitted += 1;
                    r.alerts.retries += u64::from(out.retries_used);
                    airtime_s += out.airtime_s;
                    if let Some(frame) = out.frame {
                        for a in &out.attempts {
                            if let Some(at) = a.arrival_ms {
                                sched.schedule(start + at, Event::Arrival(frame));
                            }
                        }
                    }
                    let busy_until = match out.latency_ms {
                        Some(l) => start + l,
                        None => out.attempts.last().map_or(start, |a| {
                            start + a.start_ms + tx_ms + scenario.retry.ack_timeout_ms
                        }),
                    };
                    radio_free_ms = busy_until;
                    end_ms = end_ms.max(busy_until);
                    if let Some(l) = out.latency_ms {
                        r.alerts.delivered += 1;
                        latencies.push(start - detected_ms + l);
                    }
                }
                Event::Arrival(frame) => arrivals.push(frame),
            }
        }
        if !arrivals.is_empty() {
            let refs: Vec<&[u8]> = arrivals.iter().map(|f| f.as_slice()).collect();
            rx.receive_tick(t, &refs);
        }
    }

    r.alerts.buffered = tx.buffer().len() as u64;
    r.alerts.dropped = tx.dropped_ids().len() as u64;
    r.span_ms = end_ms;

    r.funnel = Funnel {
        raw_pir: r.pir_triggers,
        fusion_passed: r.camera_activations,
        ai_confirmed: r.alerts.confirmed,
        transmitted: r.alerts.transmitted,
        delivered: r.alerts.delivered,
    };

    let baseline_wh = camera_energy(r.pir_triggers, &scenario.platform);
    let actual_wh = camera_energy(r.camera_activations, &scenario.platform);
    r.rates = Rates {
        detection_rate: rate(r.activations_true, r.ground_truth_intrusions),
        false_alarm_rate: rate(r.activations_false, r.ground_truth_false_triggers),
        suppression_pct: rate(r.pir_triggers - r.alerts.confirmed.min(r.pir_triggers), r.pir_triggers),
        fusion_elimination_pct: rate(
            r.pir_triggers - r.camera_activations.min(r.pir_triggers),
            r.pir_triggers,
        ),
        camera_energy_savings_pct: savings(baseline_wh, actual_wh).ok(),
        pdr_pct: rate(r.alerts.delivered, r.alerts.transmitted),
    };
    r.latency = LatencyStats::from_samples(&latencies);

    let tally = RunTally {
        camera_activations: r.camera_activations,
        inferences: r.camera_activations,
        span_s: end_ms as f64 / 1000.0,
        airtime_s,
    };
    r.energy = run_ledger(&tally, &scenario.platform);
    r.battery_days = scenario
        .platform
        .battery_wh
        .and_then(|cap| battery_days(&r.energy, tally.span_s, cap));
    r.receiver = rx.stats().clone();
    r.driver_events = rx.events().to_vec();
    Ok(r)
}

/// The funnel of a completed run.
pub fn funnel_report(report: &MetricsReport) -> Funnel {
    report.funnel
}

fn run_point(scenario: &Scenario, label: String, mode: FusionMode, tau: Option<f64>) -> Result<SweepPoint> {
    let mut s = scenario.clone();
    s.fusion.mode = mode;
    if let Some(t) = tau {
        s.fusion.tau_c = t;
    }
    Ok(SweepPoint {
        label,
        tau_c: tau,
        report: run(&s)?,
    })
}

fn run_points(scenario: &Scenario, specs: Vec<(String, FusionMode, Option<f64>)>) -> Result<Vec<SweepPoint>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .into_iter()
            .map(|(label, mode, tau)| scope.spawn(move || run_point(scenario, label, mode, tau)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    })
}

/// One probabilistic run per threshold, in the order given. Points run in
/// parallel; they share nothing mutable.
pub fn sweep(scenario: &Scenario, taus: &[f64]) -> Result<Vec<SweepPoint>> {
    scenario::validate_taus(taus)?;
    scenario.validate()?;
    run_points(
        scenario,
        taus.iter()
            .map(|&t| (format!("tau={t}"), FusionMode::Probabilistic, Some(t)))
            .collect(),
    )
}

/// PIR-only and binary reference rows for a sweep table.
pub fn baselines(scenario: &Scenario) -> Result<Vec<SweepPoint>> {
    run_points(
        scenario,
        vec![
            ("pir_only".to_string(), FusionMode::PirOnly, None),
            ("binary".to_string(), FusionMode::Binary, None),
        ],
    )
}
