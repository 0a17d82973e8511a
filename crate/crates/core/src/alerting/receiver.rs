//! Train-side receiver: decodes frames, drops duplicates, hands the driver
//! one event per alert.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::codec::decode_payload;
use super::Alert;
use crate::classify::{Label, Priority};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverAlertEvent {
    /// Receiver clock at arrival, ms since scenario start.
    pub t_ms: u64,
    pub alert_id: u64,
    pub label: Label,
    pub priority: Priority,
    /// Detection timestamp to arrival.
    pub latency_ms: u64,
    /// Copies of this alert discarded inside the dedup window.
    pub dedup_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverStats {
    pub frames_ok: u64,
    pub decode_failures: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone)]
pub struct Receiver {
    dedup_window_ms: u64,
    /// Scenario epoch so that alert timestamps map to receiver ticks.
    epoch_ms: u64,
    /// alert_id → (first seen tick, index into `events`).
    seen: BTreeMap<u64, (u64, usize)>,
    events: Vec<DriverAlertEvent>,
    stats: ReceiverStats,
}

impl Receiver {
    pub const DEFAULT_DEDUP_WINDOW_MS: u64 = 60_000;

    pub fn new(dedup_window_ms: u64, epoch_ms: u64) -> Self {
        Receiver {
            dedup_window_ms,
            epoch_ms,
            seen: BTreeMap::new(),
            events: Vec::new(),
            stats: ReceiverStats::default(),
        }
    }

    pub fn stats(&self) -> &ReceiverStats {
        &self.stats
    }

    /// Every event emitted so far, in emission order.
    pub fn events(&self) -> &[DriverAlertEvent] {
        &self.events
    }

    pub fn has_seen(&self, alert_id: u64) -> bool {
        self.seen.contains_key(&alert_id)
    }

    /// Process all frames that arrive on the same tick. Returns the new
    /// driver events, Critical before High, then by detection time.
    pub fn receive_tick(&mut self, t_ms: u64, frames: &[&[u8]]) -> Vec<DriverAlertEvent> {
        let mut fresh: Vec<Alert> = Vec::new();
        let mut same_tick_dups: BTreeMap<u64, u32> = BTreeMap::new();
        for bytes in frames {
            let alert = match decode_payload(bytes) {
                Ok(a) => a,
                Err(e) => {
                    log::debug!("receiver dropped frame at {t_ms} ms: {e}");
                    self.stats.decode_failures += 1;
                    continue;
                }
            };
            self.stats.frames_ok += 1;
            match self.seen.get(&alert.alert_id) {
                Some(&(first, idx)) if t_ms.saturating_sub(first) <= self.dedup_window_ms => {
                    self.stats.duplicates += 1;
                    self.events[idx].dedup_count += 1;
                    continue;
                }
                _ => {}
            }
            if fresh.iter().any(|a| a.alert_id == alert.alert_id) {
                self.stats.duplicates += 1;
                *same_tick_dups.entry(alert.alert_id).or_insert(0) += 1;
                continue;
            }
            fresh.push(alert);
        }
        fresh.sort_by_key(|a| (a.priority, a.timestamp_ms, a.alert_id));
        let mut out = Vec::with_capacity(fresh.len());
        for a in fresh {
            let now_epoch = self.epoch_ms + t_ms;
            let ev = DriverAlertEvent {
                t_ms,
                alert_id: a.alert_id,
                label: a.label,
                priority: a.priority,
                latency_ms: now_epoch.saturating_sub(a.timestamp_ms),
                dedup_count: same_tick_dups.get(&a.alert_id).copied().unwrap_or(0),
            };
            self.seen.insert(a.alert_id, (t_ms, self.events.len()));
            self.events.push(ev.clone());
            out.push(ev);
        }
        out
    }

    pub fn receive(&mut self, t_ms: u64, frame: &[u8]) -> Option<DriverAlertEvent> {
        self.receive_tick(t_ms, &[frame]).pop()
    }
}

/// `t_ms,alert_id_hex,label,priority,latency_ms,dedup_count`, one per line.
pub fn format_event_log(events: &[DriverAlertEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(
            out,
            "{},{:016x},{},{},{},{}",
            e.t_ms,
            e.alert_id,
            e.label.as_str(),
            e.priority.as_str(),
            e.latency_ms,
            e.dedup_count
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alerting::encode_payload;

    fn frame(label: Label, priority: Priority, ts: u64) -> [u8; 31] {
        encode_payload(&Alert::new(label, priority, 0.8, 26.1, 91.7, ts).unwrap()).unwrap()
    }

    #[test]
    fn duplicate_frame_yields_one_event() {
        let mut rx = Receiver::new(60_000, 0);
        let f = frame(Label::Human, Priority::Critical, 100);
        assert!(rx.receive(2_500, &f).is_some());
        assert!(rx.receive(6_000, &f).is_none());
        assert_eq!(rx.events().len(), 1);
        assert_eq!(rx.events()[0].dedup_count, 1);
        assert_eq!(rx.stats().duplicates, 1);
        assert_eq!(rx.events()[0].latency_ms, 2_400);
    }

    #[test]
    fn same_tick_sorted_by_priority() {
        let mut rx = Receiver::new(60_000, 0);
        let high = frame(Label::Obstruction, Priority::High, 10);
        let crit = frame(Label::Elephant, Priority::Critical, 20);
        let evs = rx.receive_tick(500, &[&high, &crit]);
        assert_eq!(evs.len(), 2);
        assert_eq!(evs[0].priority, Priority::Critical);
        assert_eq!(evs[1].priority, Priority::High);
    }

    #[test]
    fn same_tick_duplicates_are_counted() {
        let mut rx = Receiver::new(60_000, 0);
        let f = frame(Label::Human, Priority::Critical, 10);
        let evs = rx.receive_tick(500, &[&f, &f]);
        assert_eq!(evs.len(), 1);
        assert_eq!(rx.events()[0].dedup_count, 1);
    }

    #[test]
    fn outside_window_is_new_event() {
        let mut rx = Receiver::new(1_000, 0);
        let f = frame(Label::Human, Priority::Critical, 10);
        assert!(rx.receive(100, &f).is_some());
        assert!(rx.receive(2_000, &f).is_some());
    }

    #[test]
    fn corrupt_frames_are_counted() {
        let mut rx = Receiver::new(60_000, 0);
        let mut f = frame(Label::Human, Priority::Critical, 10);
        f[5] ^= 0x80;
        assert!(rx.receive(100, &f).is_none());
        assert_eq!(rx.stats().decode_failures, 1);
        assert!(rx.receive(100, &f[..10]).is_none());
        assert_eq!(rx.stats().decode_failures, 2);
    }

    #[test]
    fn log_format() {
        let mut rx = Receiver::new(60_000, 0);
        rx.receive(2_500, &frame(Label::Human, Priority::Critical, 100));
        let log = format_event_log(rx.events());
        let fields: Vec<&str> = log.trim_end().split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[0], "2500");
        assert_eq!(fields[1].len(), 16);
        assert_eq!(&fields[2..], &["human", "critical", "2400", "0"]);
    }
}
