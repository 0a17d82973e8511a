//! Confirmed-uplink sender: transmit, wait for the ACK, back off and retry,
//! and park the alert in a bounded FIFO when retries run out.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::airtime::{airtime_ms, LoraParams};
use super::codec::{encode_payload, ACK_LEN, PAYLOAD_LEN};
use super::link::{adaptive_sf, LinkModel};
use super::Alert;
use crate::error::{NetraError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub ack_timeout_ms: u64,
    pub buffer_capacity: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff_base_ms: 1_000,
            ack_timeout_ms: 500,
            buffer_capacity: 64,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_capacity == 0 {
            return Err(NetraError::config("retry.buffer_capacity", "must be > 0"));
        }
        if self.max_retries > 16 {
            return Err(NetraError::config("retry.max_retries", "at most 16"));
        }
        Ok(())
    }

    /// Wait before retry `n` (1-based): base, 2·base, 4·base, ...
    pub fn backoff_ms(&self, n: u32) -> u64 {
        self.backoff_base_ms << n.saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxState {
    Idle,
    AwaitAck,
    Retrying(u32),
    Buffered,
    Delivered,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxStatus {
    Delivered,
    Buffered,
    /// The alert could not be encoded; nothing went on air.
    Failed,
}

/// One transmission. Times are ms relative to the first attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start_ms: u64,
    pub sf: u8,
    pub frame_delivered: bool,
    pub arrival_ms: Option<u64>,
    pub ack_received: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxOutcome {
    pub status: TxStatus,
    pub attempts: Vec<Attempt>,
    pub retries_used: u32,
    /// First transmission to ACK receipt.
    pub latency_ms: Option<u64>,
    /// Sum of all payload airtime spent, seconds.
    pub airtime_s: f64,
    /// Alert evicted from the full buffer to make room, if any.
    pub dropped: Option<Alert>,
    pub transitions: Vec<TxState>,
    #[serde(skip)]
    pub frame: Option<[u8; PAYLOAD_LEN]>,
}

#[derive(Debug, Clone)]
pub struct Transmitter {
    state: TxState,
    retries_used: u32,
    buffer: VecDeque<Alert>,
    capacity: usize,
    alerts_in: u64,
    delivered: u64,
    dropped: Vec<u64>,
}

impl Transmitter {
    pub fn new(policy: &RetryPolicy) -> Self {
        Transmitter {
            state: TxState::Idle,
            retries_used: 0,
            buffer: VecDeque::with_capacity(policy.buffer_capacity),
            capacity: policy.buffer_capacity,
            alerts_in: 0,
            delivered: 0,
            dropped: Vec::new(),
        }
    }

    pub fn state(&self) -> TxState {
        self.state
    }

    pub fn retries_used(&self) -> u32 {
        self.retries_used
    }

    pub fn buffer(&self) -> &VecDeque<Alert> {
        &self.buffer
    }

    pub fn alerts_in(&self) -> u64 {
        self.alerts_in
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Ids evicted from the buffer, oldest first.
    pub fn dropped_ids(&self) -> &[u64] {
        &self.dropped
    }

    /// `alerts_in = delivered + buffered + dropped`.
    pub fn is_conserved(&self) -> bool {
        self.alerts_in == self.delivered + self.buffer.len() as u64 + self.dropped.len() as u64
    }

    fn enter(&mut self, state: TxState, log: &mut Vec<TxState>) {
        self.state = state;
        log.push(state);
    }

    /// Send one alert until it is acknowledged or the retry budget is spent.
    pub fn transmit_with_ack<R: Rng + ?Sized>(
        &mut self,
        alert: &Alert,
        link: &LinkModel,
        policy: &RetryPolicy,
        rng: &mut R,
    ) -> TxOutcome {
        self.alerts_in += 1;
        self.retries_used = 0;
        let mut transitions = Vec::new();
        self.enter(TxState::Idle, &mut transitions);

        let sf = adaptive_sf(link);
        let params = LoraParams::new(sf);
        let timing = encode_payload(alert).and_then(|frame| {
            Ok((
                frame,
                airtime_ms(PAYLOAD_LEN, &params)?,
                airtime_ms(ACK_LEN, &params)?,
                params.airtime(PAYLOAD_LEN)?,
            ))
        });
        let Ok((frame, tx_ms, ack_ms, tx_s)) = timing else {
            // Invalid alerts never reach the air; count them as delivered-nowhere
            // by keeping them out of the conservation ledger.
            self.alerts_in -= 1;
            self.enter(TxState::Failed, &mut transitions);
            return TxOutcome {
                status: TxStatus::Failed,
                attempts: Vec::new(),
                retries_used: 0,
                latency_ms: None,
                airtime_s: 0.0,
                dropped: None,
                transitions,
                frame: None,
            };
        };

        let p_frame = link.delivery_prob(sf);
        let p_ack = 1.0 - link.ack_loss_prob;
        let prop = link.propagation_ms;
        let mut attempts = Vec::new();
        let mut start = 0u64;
        let mut airtime_s = 0.0;

        for n in 0..=policy.max_retries {
            if n > 0 {
                self.retries_used = n;
                self.enter(TxState::Retrying(n), &mut transitions);
            }
            self.enter(TxState::AwaitAck, &mut transitions);
            airtime_s += tx_s;
            // Two draws per attempt regardless of outcome keep the stream aligned.
            let frame_ok = rng.gen::<f64>() < p_frame;
            let ack_ok = rng.gen::<f64>() < p_ack;
            let arrival = start + tx_ms + prop;
            let acked = frame_ok && ack_ok;
            attempts.push(Attempt {
                start_ms: start,
                sf,
                frame_delivered: frame_ok,
                arrival_ms: frame_ok.then_some(arrival),
                ack_received: acked,
            });
            if acked {
                self.delivered += 1;
                self.enter(TxState::Delivered, &mut transitions);
                return TxOutcome {
                    status: TxStatus::Delivered,
                    attempts,
                    retries_used: n,
                    latency_ms: Some(arrival + ack_ms + prop),
                    airtime_s,
                    dropped: None,
                    transitions,
                    frame: Some(frame),
                };
            }
            if n < policy.max_retries {
                start += tx_ms + policy.ack_timeout_ms + policy.backoff_ms(n + 1);
            }
        }

        let dropped = if self.buffer.len() >= self.capacity {
            let old = self.buffer.pop_front();
            if let Some(a) = &old {
                log::warn!("retry buffer full, dropping alert {:016x}", a.alert_id);
                self.dropped.push(a.alert_id);
            }
            old
        } else {
            None
        };
        self.buffer.push_back(*alert);
        self.enter(TxState::Buffered, &mut transitions);
        TxOutcome {
            status: TxStatus::Buffered,
            attempts,
            retries_used: self.retries_used,
            latency_ms: None,
            airtime_s,
            dropped,
            transitions,
            frame: Some(frame),
        }
    }
}
