use serde::{Deserialize, Serialize};

use crate::error::{NetraError, Result};

/// Demodulation floor for a spreading factor, dB SNR. SF7 sits at -7.5 dB and
/// each step up buys 2.5 dB, down to -20 dB at SF12.
pub fn snr_floor_db(sf: u8) -> f64 {
    -7.5 - 2.5 * f64::from(sf.clamp(7, 12) - 7)
}

/// How a frame's fate is decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Delivery {
    /// Delivered iff the link SNR clears the chosen SF's floor.
    Snr,
    /// Same delivery probability at every SF.
    Fixed { p: f64 },
    /// Delivery probability indexed by SF7..=SF12.
    PerSf { p: [f64; 6] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkModel {
    pub snr_margin_db: f64,
    pub delivery: Delivery,
    pub ack_loss_prob: f64,
    pub propagation_ms: u64,
}

impl Default for LinkModel {
    /// 1 km line of sight: strong link, nothing lost.
    fn default() -> Self {
        LinkModel {
            snr_margin_db: 5.0,
            delivery: Delivery::Snr,
            ack_loss_prob: 0.0,
            propagation_ms: 1,
        }
    }
}

impl LinkModel {
    pub fn lossless() -> Self {
        LinkModel::default()
    }

    pub fn with_delivery(p: f64) -> Self {
        LinkModel {
            delivery: Delivery::Fixed { p },
            ..LinkModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |field: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(NetraError::config(
                    format!("link.{field}"),
                    format!("probability {p} not in [0, 1]"),
                ))
            }
        };
        prob("ack_loss_prob", self.ack_loss_prob)?;
        match &self.delivery {
            Delivery::Snr => {}
            Delivery::Fixed { p } => prob("delivery.p", *p)?,
            Delivery::PerSf { p } => {
                for x in p {
                    prob("delivery.p", *x)?;
                }
            }
        }
        if !self.snr_margin_db.is_finite() {
            return Err(NetraError::config("link.snr_margin_db", "must be finite"));
        }
        Ok(())
    }

    pub fn delivery_prob(&self, sf: u8) -> f64 {
        match &self.delivery {
            Delivery::Snr => {
                if self.snr_margin_db >= snr_floor_db(sf) {
                    1.0
                } else {
                    0.0
                }
            }
            Delivery::Fixed { p } => *p,
            Delivery::PerSf { p } => p[usize::from(sf.clamp(7, 12) - 7)],
        }
    }
}

/// Smallest SF whose floor the link clears; SF12 when none does.
pub fn adaptive_sf(link: &LinkModel) -> u8 {
    (7..=12)
        .find(|&sf| link.snr_margin_db >= snr_floor_db(sf))
        .unwrap_or(12)
}
