// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::SenderError;

/// How many losses a gap ACK reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossCounting {
    /// `ack_seqno - seqno_una`: the packets skipped over.
    #[default]
    Gap,
    /// `ack_seqno - seqno_una + 1`, which also counts the acknowledged packet.
    Inclusive,
}

/// Sender tunables. All fields have defaults; scenario files override any
/// subset by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenderConfig {
    /// Smoothing factor µ of the loss estimator.
    pub mu: f64,
    /// RTO = gamma * RTT.
    pub gamma: f64,
    pub initial_tokens: f64,
    pub initial_ss_threshold: f64,
    /// Lower bound on tokens after a backoff.
    pub token_floor: f64,
    pub numblks: u16,
    pub min_blksize: u16,
    pub max_blksize: u16,
    pub initial_p: f64,
    /// Loss estimate restored after a timeout.
    pub default_p: f64,
    /// RTT assumed before the first sample arrives.
    pub default_rtt_s: f64,
    /// Packets older than `staleness_factor * RTT` no longer count as in flight.
    pub staleness_factor: f64,
    pub loss_counting: LossCounting,
    /// Count acknowledged packets of blocks beyond `currblk` as delivered
    /// degrees of freedom when scheduling.
    pub credit_acked_blocks: bool,
    /// Back off at most once per window of packets: gap ACKs for packets
    /// sent before the last backoff neither shrink nor grow the tokens.
    pub backoff_once_per_rtt: bool,
    /// Bytes of source data per packet.
    pub payload_len: u16,
    /// Seeds the generator that picks coding seeds.
    pub coding_seed: u64,
}

impl Default for SenderConfig {
    fn default() -> Self {
        Self {
            mu: 0.1,
            gamma: 3.0,
            initial_tokens: 2.0,
            initial_ss_threshold: 64.0,
            token_floor: 2.0,
            numblks: 2,
            min_blksize: 8,
            max_blksize: 128,
            initial_p: 0.0,
            default_p: 0.05,
            default_rtt_s: 0.2,
            staleness_factor: 1.5,
            loss_counting: LossCounting::Gap,
            credit_acked_blocks: true,
            backoff_once_per_rtt: false,
            payload_len: 1451,
            coding_seed: 0,
        }
    }
}

impl SenderConfig {
    pub fn validate(&self) -> Result<(), SenderError> {
        let bad = |what: &'static str| Err(SenderError::InvalidConfig(what));
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad("mu must lie in (0, 1)");
        }
        if !(self.gamma >= 1.0) {
            return bad("gamma must be at least 1");
        }
        if !(self.staleness_factor >= 1.0) {
            return bad("staleness_factor must be at least 1");
        }
        if !(self.token_floor >= 1.0) || !(self.initial_tokens >= self.token_floor) {
            return bad("initial_tokens must be at least token_floor, which must be at least 1");
        }
        if !(self.initial_ss_threshold > 0.0) {
            return bad("initial_ss_threshold must be positive");
        }
        if self.numblks == 0 {
            return bad("numblks must be at least 1");
        }
        if self.min_blksize == 0 || self.min_blksize > self.max_blksize {
            return bad("blksize bounds must satisfy 1 <= min_blksize <= max_blksize");
        }
        if !(0.0..=1.0).contains(&self.initial_p) || !(0.0..=1.0).contains(&self.default_p) {
            return bad("loss estimates must lie in [0, 1]");
        }
        if !(self.default_rtt_s > 0.0) {
            return bad("default_rtt_s must be positive");
        }
        if self.payload_len == 0 {
            return bad("payload_len must be positive");
        }
        Ok(())
    }
}
