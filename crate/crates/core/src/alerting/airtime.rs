use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};

pub const DEFAULT_BANDWIDTH_HZ: u32 = 125_000;
/// Coding rate 4/5, stored as the denominator.
pub const DEFAULT_CODING_RATE: u8 = 5;
const PREAMBLE_SYMBOLS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoraParams {
    pub sf: u8,
    pub bw_hz: u32,
    /// Coding rate denominator: 5..=8 for 4/5..4/8.
    pub cr: u8,
}

impl LoraParams {
    pub fn new(sf: u8) -> Self {
        LoraParams {
            sf,
            bw_hz: DEFAULT_BANDWIDTH_HZ,
            cr: DEFAULT_CODING_RATE,
        }
    }

    pub fn airtime(&self, payload_len: usize) -> Result<f64> {
        airtime(payload_len, self.sf, self.bw_hz, self.cr)
    }
}

/// LoRa time on air in seconds: 8-symbol preamble, explicit header, payload
/// CRC on, low-data-rate optimization when symbols exceed 16 ms (SF11/12 at
/// 125 kHz).
pub fn airtime(payload_len: usize, sf: u8, bw_hz: u32, cr: u8) -> Result<f64> {
    if !(7..=12).contains(&sf) {
        return Err(NetraError::config("link.sf", format!("spreading factor {sf} not in 7..=12")));
    }
    if bw_hz == 0 {
        return Err(NetraError::config("link.bw_hz", "bandwidth must be > 0"));
    }
    if !(5..=8).contains(&cr) {
        return Err(NetraError::config("link.cr", format!("coding rate 4/{cr} not supported")));
    }
    let t_sym = f64::from(1u32 << sf) / f64::from(bw_hz);
    let ldro = t_sym > 0.016;
    let sf_i = i64::from(sf);
    let de = i64::from(ldro);
    let numerator = 8 * payload_len as i64 - 4 * sf_i + 28 + 16;
    let denominator = 4 * (sf_i - 2 * de);
    // Ceiling division on integers; the numerator may be negative for tiny payloads.
    let blocks = if numerator > 0 {
        (numerator + denominator - 1) / denominator
    } else {
        0
    };
    let payload_symbols = 8 + blocks * i64::from(cr);
    let preamble = (PREAMBLE_SYMBOLS + 4.25) * t_sym;
    Ok(preamble + payload_symbols as f64 * t_sym)
}

/// Airtime rounded up to the simulator's 1 ms tick.
pub fn airtime_ms(payload_len: usize, params: &LoraParams) -> Result<u64> {
    Ok((params.airtime(payload_len)? * 1000.0 - 1e-9).ceil() as u64)
}
