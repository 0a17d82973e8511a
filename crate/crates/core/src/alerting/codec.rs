//! Fixed 31-byte alert frame.
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 0     | version (`0x01`)                        |
//! | 1–8   | alert id, u64 BE                        |
//! | 9     | label code                              |
//! | 10    | priority code                           |
//! | 11–12 | ips × 10⁴, u16 BE                       |
//! | 13–16 | lat × 10⁵, i32 BE                       |
//! | 17–20 | lon × 10⁵, i32 BE                       |
//! | 21–28 | timestamp ms, u64 BE                    |
//! | 29–30 | CRC-16/CCITT-FALSE over bytes 0–28, BE  |
//!
//! ACKs are 11 bytes: version `0x81`, the acknowledged id, CRC.

use crc::{Crc, CRC_16_IBM_3740};

use super::{quantize_deg, quantize_ips, Alert};
use crate::classify::{Label, Priority};
use crate::error::{NetraError, Result};

pub const PAYLOAD_LEN: usize = 31;
pub const PAYLOAD_VERSION: u8 = 0x01;
pub const ACK_LEN: usize = 11;
pub const ACK_VERSION: u8 = 0x81;

// CRC-16/IBM-3740 is the catalogue name for CCITT-FALSE (0x1021, init 0xFFFF).
const CCITT: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn frame_crc(bytes: &[u8]) -> u16 {
    CCITT.checksum(bytes)
}

pub fn encode_payload(alert: &Alert) -> Result<[u8; PAYLOAD_LEN]> {
    alert.validate()?;
    let mut out = [0u8; PAYLOAD_LEN];
    out[0] = PAYLOAD_VERSION;
    out[1..9].copy_from_slice(&alert.alert_id.to_be_bytes());
    out[9] = alert.label.code();
    out[10] = alert.priority.code();
    out[11..13].copy_from_slice(&quantize_ips(alert.ips).to_be_bytes());
    out[13..17].copy_from_slice(&quantize_deg(alert.lat).to_be_bytes());
    out[17..21].copy_from_slice(&quantize_deg(alert.lon).to_be_bytes());
    out[21..29].copy_from_slice(&alert.timestamp_ms.to_be_bytes());
    let crc = frame_crc(&out[..29]);
    out[29..].copy_from_slice(&crc.to_be_bytes());
    Ok(out)
}

fn check_crc(bytes: &[u8]) -> Result<()> {
    let n = bytes.len();
    let found = u16::from_be_bytes([bytes[n - 2], bytes[n - 1]]);
    let expected = frame_crc(&bytes[..n - 2]);
    if found != expected {
        return Err(NetraError::Integrity { expected, found });
    }
    Ok(())
}

pub fn decode_payload(bytes: &[u8]) -> Result<Alert> {
    if bytes.len() != PAYLOAD_LEN {
        return Err(NetraError::Length {
            expected: PAYLOAD_LEN,
            got: bytes.len(),
        });
    }
    check_crc(bytes)?;
    if bytes[0] != PAYLOAD_VERSION {
        return Err(NetraError::Version(bytes[0]));
    }
    let be_u64 = |r: std::ops::Range<usize>| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[r]);
        u64::from_be_bytes(b)
    };
    let be_i32 = |at: usize| i32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);

    let label = Label::from_code(bytes[9])
        .ok_or_else(|| NetraError::Malformed(format!("label code {}", bytes[9])))?;
    let priority = Priority::from_code(bytes[10])
        .ok_or_else(|| NetraError::Malformed(format!("priority code {}", bytes[10])))?;
    let ips_q = u16::from_be_bytes([bytes[11], bytes[12]]);
    if ips_q > 10_000 {
        return Err(NetraError::Malformed(format!("ips {ips_q} exceeds 10000")));
    }
    let lat_q = be_i32(13);
    let lon_q = be_i32(17);
    if !(-9_000_000..=9_000_000).contains(&lat_q) || !(-18_000_000..=18_000_000).contains(&lon_q) {
        return Err(NetraError::Malformed(format!(
            "coordinates ({lat_q}, {lon_q}) out of range"
        )));
    }
    Ok(Alert {
        alert_id: be_u64(1..9),
        label,
        priority,
        ips: f64::from(ips_q) / 1e4,
        lat: f64::from(lat_q) / 1e5,
        lon: f64::from(lon_q) / 1e5,
        timestamp_ms: be_u64(21..29),
    })
}

pub fn encode_ack(alert_id: u64) -> [u8; ACK_LEN] {
    let mut out = [0u8; ACK_LEN];
    out[0] = ACK_VERSION;
    out[1..9].copy_from_slice(&alert_id.to_be_bytes());
    let crc = frame_crc(&out[..9]);
    out[9..].copy_from_slice(&crc.to_be_bytes());
    out
}

pub fn decode_ack(bytes: &[u8]) -> Result<u64> {
    if bytes.len() != ACK_LEN {
        return Err(NetraError::Length {
            expected: ACK_LEN,
            got: bytes.len(),
        });
    }
    check_crc(bytes)?;
    if bytes[0] != ACK_VERSION {
        return Err(NetraError::Version(bytes[0]));
    }
    let mut id = [0u8; 8];
    id.copy_from_slice(&bytes[1..9]);
    Ok(u64::from_be_bytes(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const GOLDEN_HEX: &str =
        "01194f2750c0486bf901001db00027e4b5008bfa760000019ccf090200c5f5";

    fn golden_alert() -> Alert {
        Alert::new(Label::Human, Priority::Critical, 0.76, 26.14453, 91.73622, 1_773_000_000_000)
            .unwrap()
    }

    fn to_hex(b: &[u8]) -> String {
        b.iter().map(|x| format!("{x:02x}")).collect()
    }

    #[test]
    fn crc_check_value() {
        assert_eq!(frame_crc(b"123456789"), 0x29b1);
    }

    #[test]
    fn golden_frame() {
        let bytes = encode_payload(&golden_alert()).unwrap();
        assert_eq!(to_hex(&bytes), GOLDEN_HEX);
        assert_eq!(decode_payload(&bytes).unwrap(), golden_alert());
    }

    #[test]
    fn decode_errors() {
        let bytes = encode_payload(&golden_alert()).unwrap();
        assert!(matches!(
            decode_payload(&bytes[..30]),
            Err(NetraError::Length { expected: 31, got: 30 })
        ));

        let mut flipped = bytes;
        flipped[12] ^= 0x04;
        assert!(matches!(decode_payload(&flipped), Err(NetraError::Integrity { .. })));

        let mut v2 = bytes;
        v2[0] = 0x02;
        let crc = frame_crc(&v2[..29]);
        v2[29..].copy_from_slice(&crc.to_be_bytes());
        assert_eq!(decode_payload(&v2), Err(NetraError::Version(0x02)));

        let mut bad_label = bytes;
        bad_label[9] = 9;
        let crc = frame_crc(&bad_label[..29]);
        bad_label[29..].copy_from_slice(&crc.to_be_bytes());
        assert!(matches!(decode_payload(&bad_label), Err(NetraError::Malformed(_))));
    }

    #[test]
    fn every_single_bit_flip_is_caught() {
        let bytes = encode_payload(&golden_alert()).unwrap();
        for bit in 0..PAYLOAD_LEN * 8 {
            let mut b = bytes;
            b[bit / 8] ^= 1 << (bit % 8);
            assert!(matches!(decode_payload(&b), Err(NetraError::Integrity { .. })), "bit {bit}");
        }
    }

    #[test]
    fn ack_round_trip() {
        let ack = encode_ack(0xdead_beef_0123_4567);
        assert_eq!(decode_ack(&ack).unwrap(), 0xdead_beef_0123_4567);
        let mut bad = ack;
        bad[3] ^= 1;
        assert!(decode_ack(&bad).is_err());
        // A payload is never mistaken for an ACK.
        assert!(decode_ack(&encode_payload(&golden_alert()).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn decode_is_total(bytes in proptest::collection::vec(any::<u8>(), 31)) {
            if let Ok(a) = decode_payload(&bytes) {
                prop_assert!((0.0..=1.0).contains(&a.ips));
                prop_assert!((-90.0..=90.0).contains(&a.lat));
                prop_assert!((-180.0..=180.0).contains(&a.lon));
                prop_assert_eq!(encode_payload(&a).unwrap().to_vec(), bytes);
            }
        }

        #[test]
        fn valid_crc_frames_decode_or_fail_typed(mut body in proptest::collection::vec(any::<u8>(), 29)) {
            body[0] = PAYLOAD_VERSION;
            let crc = frame_crc(&body);
            body.extend_from_slice(&crc.to_be_bytes());
            match decode_payload(&body) {
                Ok(a) => prop_assert_eq!(encode_payload(&a).unwrap().to_vec(), body),
                Err(e) => prop_assert!(matches!(e, NetraError::Malformed(_))),
            }
        }
    }
}
