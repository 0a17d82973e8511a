//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use netra_core::alerting::{
    decode_payload, encode_payload, Alert, LinkModel, RetryPolicy, Transmitter, TxStatus,
};
use netra_core::classify::{
    alert_gate, area_ratio, intrusion_probability_score, priority, size_heuristic_label, BBox,
    ClassifyConfig, Detection, DetectorLabel, GateOutcome, Label, Priority,
};
use netra_core::energy::{camera_energy, savings, PlatformProfile};
use netra_core::fusion::{
    camera_decision, decide, decision_respects_gates, distance_change, distance_probability, fuse,
    FusionConfig, FusionMode, RejectReason,
};
use netra_core::sensing::{calibrate_background, tof_distance, CalibrationState};
use netra_core::sim::{self, ReportFile, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::load(&fixture(name), None).expect("fixture scenario loads")
}

fn calib(d_bg: f64) -> CalibrationState {
    calibrate_background(&[d_bg; 5]).expect("valid calibration")
}

fn c1_hand_values() -> Check {
    let started = Instant::now();
    let cfg = FusionConfig::default();
    let ccfg = ClassifyConfig::default();

    ensure!(tof_distance(0.0, 343.0) == Ok(0.0), "tof(0)");
    ensure!(tof_distance(0.01, 343.0) == Ok(1.715), "tof(0.01)");
    let d = tof_distance(0.0816, 343.0).map_err(|e| e.to_string())?;
    ensure!((d - 13.99).abs() < 0.005, "tof(0.0816) = {d}");

    ensure!(calib(13.0).d_bg == 13.0, "constant calibration");
    let mixed = calibrate_background(&[12.0, 12.5, 13.0, 13.5, 14.0]).map_err(|e| e.to_string())?;
    ensure!(mixed.d_bg == 13.0, "mean calibration {}", mixed.d_bg);
    ensure!(calibrate_background(&[12.0, 13.0, 14.0]).is_err(), "arity");

    ensure!(distance_change(13.0, 13.0) == 0.0, "Δd zero");
    ensure!(distance_change(13.0, 12.25) == 0.75, "Δd 0.75");
    ensure!(distance_change(13.0, 14.0) == -1.0, "Δd negative");
    ensure!(distance_probability(0.75, 1.5) == 0.5, "p_dist 0.5");
    ensure!(distance_probability(3.0, 1.5) == 1.0, "p_dist clamp");
    ensure!(distance_probability(0.0, 1.5) == 0.0, "p_dist zero");
    ensure!(fuse(true, 1.0, &cfg) == 1.0, "fuse max");
    ensure!(fuse(true, 0.5, &cfg) == 0.7, "fuse 0.7");
    ensure!(fuse(false, 0.5, &cfg) == 0.6 * 0.5, "fuse without pir");
    ensure!(camera_decision(0.65, 0.65), "tie activates");
    ensure!(!camera_decision(0.649, 0.65), "below threshold");
    ensure!(camera_decision(0.7, 0.65), "0.7 activates");

    let c = calib(13.0);
    let dec = decide(false, Some(12.0), &c, &cfg).map_err(|e| e.to_string())?;
    ensure!(!dec.camera && dec.reject_reason == RejectReason::NoMotion, "no motion");
    let dec = decide(true, Some(3.0), &c, &cfg).map_err(|e| e.to_string())?;
    ensure!(!dec.camera && dec.reject_reason == RejectReason::OutOfRange, "out of range");
    let dec = decide(true, Some(12.25), &c, &cfg).map_err(|e| e.to_string())?;
    ensure!(dec.camera && dec.p_intrusion == 0.7, "composition p={}", dec.p_intrusion);

    ensure!(area_ratio(&BBox::new(0, 0, 300, 300), 300, 300) == Ok(1.0), "full frame");
    ensure!(area_ratio(&BBox::new(30, 30, 180, 180), 300, 300) == Ok(0.25), "ratio 0.25");
    ensure!(area_ratio(&BBox::new(0, 0, 30, 30), 300, 300) == Ok(0.01), "ratio 0.01");
    ensure!(area_ratio(&BBox::new(5, 5, 5, 9), 300, 300).is_err(), "degenerate bbox");
    ensure!(size_heuristic_label(DetectorLabel::Person, 0.1, 0.9, &ccfg) == Label::Human, "person");
    ensure!(size_heuristic_label(DetectorLabel::Cow, 0.25, 0.8, &ccfg) == Label::Elephant, "elephant boundary");
    ensure!(size_heuristic_label(DetectorLabel::Cow, 0.10, 0.8, &ccfg) == Label::Animal, "animal");

    ensure!(intrusion_probability_score(0.8, 0.3, 1.0) == 0.8, "lambda 1");
    ensure!(intrusion_probability_score(0.8, 0.7, 0.6) == 0.76, "ips 0.76");
    ensure!(intrusion_probability_score(0.5, 0.5, 0.3) == 0.5, "equal inputs");
    ensure!(priority(Label::Elephant, 0.7) == Priority::Critical, "critical boundary");
    ensure!(priority(Label::Obstruction, 0.55) == Priority::Low, "low fallthrough");
    ensure!(priority(Label::Animal, 0.5) == Priority::Medium, "medium boundary");

    let bg = Detection::background();
    ensure!(matches!(alert_gate(&bg, 1.0, &ccfg), GateOutcome::Suppressed(_)), "background suppressed");
    let weak = Detection::new(Label::Human, 0.45, None);
    ensure!(matches!(alert_gate(&weak, 1.0, &ccfg), GateOutcome::Suppressed(_)), "weak human suppressed");
    let strong = Detection::new(Label::Human, 0.8, None);
    match alert_gate(&strong, 0.7, &ccfg) {
        GateOutcome::Alert(a) => ensure!(a.ips == 0.76, "gate ips {}", a.ips),
        other => return Err(format!("expected alert, got {other:?}")),
    }

    ensure!(camera_energy(0, &PlatformProfile::pi_zero()) == 0.0, "zero energy");
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(())
}

fn with_mode(s: &Scenario, mode: FusionMode, tau: f64) -> Scenario {
    let mut s = s.clone();
    s.fusion.mode = mode;
    s.fusion.tau_c = tau;
    s
}

fn c2_mode_comparison() -> Check {
    let base = load("tableV.scn");
    let bin = sim::run(&with_mode(&base, FusionMode::Binary, 0.65)).map_err(|e| e.to_string())?;
    ensure!(
        (bin.activations_true, bin.activations_false) == (34, 0),
        "binary {}/{}",
        bin.activations_true,
        bin.activations_false
    );
    ensure!(bin.rates.detection_rate == Some(85.0), "binary rate {:?}", bin.rates.detection_rate);
    let prob = sim::run(&with_mode(&base, FusionMode::Probabilistic, 0.65)).map_err(|e| e.to_string())?;
    ensure!(
        (prob.activations_true, prob.activations_false) == (38, 0),
        "probabilistic {}/{}",
        prob.activations_true,
        prob.activations_false
    );
    ensure!(prob.rates.detection_rate == Some(95.0), "probabilistic rate {:?}", prob.rates.detection_rate);
    Ok(())
}

fn c3_threshold_sweep() -> Check {
    let base = load("tableV.scn");
    let pts = sim::sweep(&base, &[0.45, 0.65]).map_err(|e| e.to_string())?;
    let got: Vec<(u64, u64)> = pts
        .iter()
        .map(|p| (p.report.camera_activations, p.report.activations_false))
        .collect();
    ensure!(got == vec![(40, 2), (38, 0)], "sweep rows {got:?}");
    let pir = sim::run(&with_mode(&base, FusionMode::PirOnly, 0.65)).map_err(|e| e.to_string())?;
    ensure!(
        (pir.camera_activations, pir.activations_false) == (79, 39),
        "pir-only {}/{}",
        pir.camera_activations,
        pir.activations_false
    );
    Ok(())
}

fn c4_energy() -> Check {
    let p = PlatformProfile::pi_zero();
    let e79 = camera_energy(79, &p);
    let e38 = camera_energy(38, &p);
    ensure!((e79 - 0.2194).abs() <= 0.0005, "camera_energy(79) = {e79}");
    ensure!((e38 - 0.1056).abs() <= 0.0005, "camera_energy(38) = {e38}");
    let s = savings(0.2194, 0.1056).map_err(|e| e.to_string())?;
    ensure!((s - 51.9).abs() <= 0.1, "savings {s}");
    let s = savings(e79, e38).map_err(|e| e.to_string())?;
    ensure!((s - 51.9).abs() <= 0.1, "savings from counts {s}");
    let report = sim::run(&load("tableV.scn")).map_err(|e| e.to_string())?;
    ensure!((report.energy.camera_wh - 0.1056).abs() <= 0.0005, "ledger camera {}", report.energy.camera_wh);
    ensure!(report.energy.activation_count == report.camera_activations, "ledger count");
    Ok(())
}

fn c5_funnel() -> Check {
    let r = sim::run(&load("endToEnd.scn")).map_err(|e| e.to_string())?;
    let f = sim::funnel_report(&r);
    let got = [f.raw_pir, f.fusion_passed, f.ai_confirmed, f.transmitted, f.delivered];
    ensure!(got == [113, 42, 10, 10, 10], "funnel {got:?}");
    let sup = r.rates.suppression_pct.unwrap_or(f64::NAN);
    ensure!((sup - 91.2).abs() <= 0.1, "suppression {sup}");
    ensure!(r.rates.pdr_pct == Some(100.0), "pdr {:?}", r.rates.pdr_pct);
    ensure!(f.is_monotone(), "funnel not monotone");
    Ok(())
}

fn c6_latency() -> Check {
    let base = load("endToEnd.scn");
    for (profile, want) in [(PlatformProfile::pi4(), 2_400.0), (PlatformProfile::pi_zero(), 6_500.0)] {
        let mut s = base.clone();
        let name = profile.name.clone();
        s.platform = profile;
        s.link = LinkModel::lossless();
        let r = sim::run(&s).map_err(|e| e.to_string())?;
        let mean = r.latency.mean_ms.ok_or("no delivered alerts")?;
        let max = r.latency.max_ms.unwrap_or(0) as f64;
        ensure!((mean - want).abs() <= 50.0 && (max - want).abs() <= 50.0, "{name}: mean {mean} max {max}");
    }
    Ok(())
}

fn random_alert(rng: &mut ChaCha8Rng) -> Alert {
    let label = Label::ALL[rng.gen_range(0..Label::ALL.len())];
    let prio = Priority::ALL[rng.gen_range(0..Priority::ALL.len())];
    Alert::new(
        label,
        prio,
        rng.gen_range(0.0..=1.0),
        rng.gen_range(-90.0..=90.0),
        rng.gen_range(-180.0..=180.0),
        rng.gen_range(0..=u64::MAX / 2),
    )
    .expect("in-range alert")
}

fn c7_codec() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10_000 {
        let a = random_alert(&mut rng);
        let frame = encode_payload(&a).map_err(|e| e.to_string())?;
        let back = decode_payload(&frame).map_err(|e| format!("trial {i}: {e}"))?;
        ensure!(back == a, "trial {i}: {a:?} != {back:?}");
    }
    for i in 0..10_000 {
        let a = random_alert(&mut rng);
        let mut frame = encode_payload(&a).map_err(|e| e.to_string())?;
        let bit = rng.gen_range(0..frame.len() * 8);
        frame[bit / 8] ^= 1 << (bit % 8);
        ensure!(decode_payload(&frame).is_err(), "corruption {i} (bit {bit}) accepted");
    }
    let golden = std::fs::read_to_string(fixture("golden/frame.hex")).map_err(|e| e.to_string())?;
    let alert = Alert::new(Label::Human, Priority::Critical, 0.76, 26.14453, 91.73622, 1_773_000_000_000)
        .map_err(|e| e.to_string())?;
    for _ in 0..2 {
        let hex: String = encode_payload(&alert)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        ensure!(hex == golden.trim(), "golden frame drifted: {hex}");
    }
    Ok(())
}

fn c8_protocol() -> Check {
    const TRIALS: usize = 10_000;
    let policy = RetryPolicy::default();
    let attempts_max = policy.max_retries as usize + 1;
    let alert = Alert::new(Label::Elephant, Priority::Critical, 0.9, 26.1, 91.7, 1).map_err(|e| e.to_string())?;
    for p in [1.0, 0.5, 0.0] {
        let link = LinkModel::with_delivery(p);
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + (p * 10.0) as u64);
        let mut tx = Transmitter::new(&policy);
        // bins[k] = delivered on attempt k+1; last bin = buffered
        let mut bins = vec![0usize; attempts_max + 1];
        for i in 0..TRIALS {
            let out = tx.transmit_with_ack(&alert, &link, &policy, &mut rng);
            match out.status {
                TxStatus::Delivered => bins[out.attempts.len() - 1] += 1,
                TxStatus::Buffered => bins[attempts_max] += 1,
                TxStatus::Failed => return Err("valid alert failed to encode".into()),
            }
            ensure!(tx.is_conserved(), "p={p} trial {i}: conservation broken");
        }
        for (k, &n) in bins.iter().enumerate() {
            let expected = if k < attempts_max {
                (1.0 - p).powi(k as i32) * p
            } else {
                (1.0 - p).powi(attempts_max as i32)
            };
            let observed = n as f64 / TRIALS as f64;
            ensure!(
                (observed - expected).abs() <= 0.02,
                "p={p} bin {k}: observed {observed:.4} expected {expected:.4}"
            );
        }
    }
    Ok(())
}

fn c9_fusion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = FusionConfig::default();
    for i in 0..10_000 {
        let d_bg = rng.gen_range(4.5..=15.0);
        let c = calib(d_bg);
        let pir = rng.gen_bool(0.8);
        let d = rng.gen_bool(0.9).then(|| rng.gen_range(0.0..20.0));

        let t1: f64 = rng.gen_range(0.0..=1.0);
        let t2: f64 = rng.gen_range(0.0..=1.0);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let at = |tau: f64| {
            decide(pir, d, &c, &FusionConfig { tau_c: tau, ..cfg.clone() }).map(|x| x.camera)
        };
        let (on_lo, on_hi) = (at(lo).map_err(|e| e.to_string())?, at(hi).map_err(|e| e.to_string())?);
        ensure!(!on_hi || on_lo, "sample {i}: activates at tau {hi} but not {lo}");

        if let Some(d1) = d {
            let d2 = rng.gen_range(cfg.gate_min..=d1.max(cfg.gate_min));
            // d2 <= d1 means a larger Δd; both must be in the gate to compare.
            if d1 >= cfg.gate_min && d1 <= cfg.gate_max {
                let a = decide(pir, Some(d1), &c, &cfg).map_err(|e| e.to_string())?;
                let b = decide(pir, Some(d2), &c, &cfg).map_err(|e| e.to_string())?;
                ensure!(!a.camera || b.camera, "sample {i}: Δd increase turned camera off");
                ensure!(b.p_intrusion >= a.p_intrusion, "sample {i}: P decreased with Δd");
            }
        }

        for mode in [FusionMode::Probabilistic, FusionMode::Binary] {
            let mcfg = FusionConfig { mode, tau_c: lo, ..cfg.clone() };
            let dec = decide(pir, d, &c, &mcfg).map_err(|e| e.to_string())?;
            ensure!(decision_respects_gates(pir, &dec, &mcfg), "sample {i}: {dec:?} violates gates");
        }
    }
    Ok(())
}

fn c10_determinism() -> Check {
    for name in ["tableV.scn", "endToEnd.scn", "endToEnd_lossy.scn", "generated.scn"] {
        let a = ReportFile::run(sim::run(&load(name)).map_err(|e| e.to_string())?).to_json();
        let b = ReportFile::run(sim::run(&load(name)).map_err(|e| e.to_string())?).to_json();
        ensure!(a == b, "{name}: reports differ between runs");
        let golden_name = format!("golden/{}.json", name.trim_end_matches(".scn"));
        let golden = std::fs::read_to_string(fixture(&golden_name)).map_err(|e| e.to_string())?;
        ensure!(a == golden, "{name}: report differs from {golden_name}");
    }
    let s = load("tableV.scn");
    let mut pts = sim::baselines(&s).map_err(|e| e.to_string())?;
    pts.extend(sim::sweep(&s, &[0.45, 0.65]).map_err(|e| e.to_string())?);
    let sweep = ReportFile::sweep(pts).to_json();
    let golden = std::fs::read_to_string(fixture("golden/tableV_sweep.json")).map_err(|e| e.to_string())?;
    ensure!(sweep == golden, "sweep differs from golden");
    Ok(())
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 10] = [
        ("scoring hand values", c1_hand_values),
        ("fusion comparison, binary vs probabilistic", c2_mode_comparison),
        ("threshold sweep and PIR-only baseline", c3_threshold_sweep),
        ("camera energy and savings", c4_energy),
        ("end-to-end funnel", c5_funnel),
        ("per-alert latency profiles", c6_latency),
        ("codec round trip and corruption", c7_codec),
        ("retry law and buffer conservation", c8_protocol),
        ("fusion invariants", c9_fusion),
        ("report determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = started.elapsed().as_millis();
        match result {
            Ok(()) => println!("criterion {:>2} PASS  {name} ({ms} ms)", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
