//! Alert records and everything between the edge node and the driver cab:
//! the 31-byte payload, LoRa airtime, spreading-factor selection, the
//! confirmed-uplink retry machine, and the train-side receiver.

mod airtime;
mod codec;
mod link;
mod receiver;
mod tx;

use serde::{Deserialize, Serialize};

use crate::classify::{Label, Priority};
use crate::error::{NetraError, Result};

pub use airtime::{airtime, airtime_ms, LoraParams, DEFAULT_BANDWIDTH_HZ, DEFAULT_CODING_RATE};
pub use codec::{
    decode_ack, decode_payload, encode_ack, encode_payload, frame_crc, ACK_LEN, ACK_VERSION,
    PAYLOAD_LEN, PAYLOAD_VERSION,
};
pub use link::{adaptive_sf, snr_floor_db, Delivery, LinkModel};
pub use receiver::{format_event_log, DriverAlertEvent, Receiver, ReceiverStats};
pub use tx::{Attempt, RetryPolicy, Transmitter, TxOutcome, TxState, TxStatus};

/// One alert as carried over the air.
///
/// `ips` is stored at 1e-4 resolution and coordinates at 1e-5 degrees; use
/// [`Alert::new`] to get a value that survives the wire unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub alert_id: u64,
    pub label: Label,
    pub priority: Priority,
    pub ips: f64,
    pub lat: f64,
    pub lon: f64,
    pub timestamp_ms: u64,
}

pub(crate) fn quantize_ips(ips: f64) -> u16 {
    (ips * 1e4).round() as u16
}

pub(crate) fn quantize_deg(deg: f64) -> i32 {
    (deg * 1e5).round() as i32
}

impl Alert {
    /// Quantized alert with its id derived from time and place.
    pub fn new(
        label: Label,
        priority: Priority,
        ips: f64,
        lat: f64,
        lon: f64,
        timestamp_ms: u64,
    ) -> Result<Self> {
        validate_fields(ips, lat, lon)?;
        let lat = f64::from(quantize_deg(lat)) / 1e5;
        let lon = f64::from(quantize_deg(lon)) / 1e5;
        Ok(Alert {
            alert_id: make_alert_id(timestamp_ms, lat, lon),
            label,
            priority,
            ips: f64::from(quantize_ips(ips)) / 1e4,
            lat,
            lon,
            timestamp_ms,
        })
    }

    pub fn validate(&self) -> Result<()> {
        validate_fields(self.ips, self.lat, self.lon)
    }
}

fn validate_fields(ips: f64, lat: f64, lon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ips) {
        return Err(NetraError::InvalidAlert(format!("ips {ips} not in [0, 1]")));
    }
    if !(-90.0..=90.0).contains(&lat) {
        return Err(NetraError::InvalidAlert(format!("latitude {lat} out of range")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(NetraError::InvalidAlert(format!("longitude {lon} out of range")));
    }
    Ok(())
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// FNV-1a over `timestamp_ms (u64 BE) ‖ lat×1e5 (i32 BE) ‖ lon×1e5 (i32 BE)`.
pub fn make_alert_id(timestamp_ms: u64, lat: f64, lon: f64) -> u64 {
    let mut key = [0u8; 16];
    key[..8].copy_from_slice(&timestamp_ms.to_be_bytes());
    key[8..12].copy_from_slice(&quantize_deg(lat).to_be_bytes());
    key[12..].copy_from_slice(&quantize_deg(lon).to_be_bytes());
    fnv1a64(&key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn alert_id_golden() {
        assert_eq!(
            make_alert_id(1_773_000_000_000, 26.14453, 91.73622),
            0x194f2750c0486bf9
        );
    }

    #[test]
    fn alert_id_is_deterministic() {
        let a = make_alert_id(1_000, 26.1, 91.7);
        assert_eq!(a, make_alert_id(1_000, 26.1, 91.7));
        assert_ne!(a, make_alert_id(1_001, 26.1, 91.7));
    }

    #[test]
    fn no_collisions_over_perturbed_inputs() {
        let base = 1_773_000_000_000u64;
        let mut ids = HashSet::new();
        for dt in 0..2_500u64 {
            for (dlat, dlon) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let lat = 26.14453 + f64::from(dlat) * 1e-5;
                let lon = 91.73622 + f64::from(dlon) * 1e-5;
                assert!(ids.insert(make_alert_id(base + dt, lat, lon)));
            }
        }
        assert_eq!(ids.len(), 10_000);
    }

    #[test]
    fn new_rejects_bad_fields() {
        assert!(Alert::new(Label::Human, Priority::Critical, 1.2, 0.0, 0.0, 0).is_err());
        assert!(Alert::new(Label::Human, Priority::Critical, 0.5, 91.0, 0.0, 0).is_err());
        assert!(Alert::new(Label::Human, Priority::Critical, 0.5, 0.0, -181.0, 0).is_err());
        assert!(Alert::new(Label::Human, Priority::Critical, f64::NAN, 0.0, 0.0, 0).is_err());
    }
}
