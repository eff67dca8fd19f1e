// SPDX-License-Identifier: Apache-2.0

//! Reference loss-based AIMD flow (standard TCP with selective
//! acknowledgements) for baselines and friendliness experiments.
//!
//! Per-packet window model: slow start, `cwnd += 1/cwnd` per ACK in
//! congestion avoidance, one halving per window of losses, and a
//! retransmission timeout that drops back to a window of one. A segment is
//! declared lost once `dupthresh` later transmissions have been delivered.

use std::collections::{BTreeSet, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::time::{secs, Time};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenoConfig {
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
    pub dupthresh: u32,
    pub min_rto_s: f64,
    pub initial_rto_s: f64,
    pub max_rto_s: f64,
    /// Multiplicative decrease applied once per loss window.
    pub beta: f64,
    pub payload_len: u16,
}

impl Default for RenoConfig {
    fn default() -> Self {
        Self {
            initial_cwnd: 2.0,
            initial_ssthresh: 1e9,
            dupthresh: 3,
            min_rto_s: 0.2,
            initial_rto_s: 1.0,
            max_rto_s: 60.0,
            beta: 0.5,
            payload_len: 1460,
        }
    }
}

impl RenoConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.initial_cwnd >= 1.0) {
            return Err("initial_cwnd must be at least 1");
        }
        if self.dupthresh == 0 {
            return Err("dupthresh must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err("beta must lie in (0, 1)");
        }
        if !(self.min_rto_s > 0.0 && self.initial_rto_s > 0.0 && self.max_rto_s >= self.min_rto_s) {
            return Err("RTO bounds must be positive and ordered");
        }
        if self.payload_len == 0 {
            return Err("payload_len must be positive");
        }
        Ok(())
    }
}

/// A data segment on the wire. `tx_id` is unique per transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenoSegment {
    pub tx_id: u64,
    pub seg: u64,
}

/// Acknowledgement: the transmission being acknowledged plus the
/// cumulative next-expected segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenoAck {
    pub tx_id: u64,
    pub seg: u64,
    pub cum: u64,
}

#[derive(Debug, Clone, Copy)]
struct Tx {
    id: u64,
    seg: u64,
    sent_at: Time,
    later_delivered: u32,
}

#[derive(Debug, Clone)]
pub struct RenoSender {
    cfg: RenoConfig,
    cwnd: f64,
    ssthresh: f64,
    next_seg: u64,
    total_segs: Option<u64>,
    cum_acked: u64,
    outstanding: VecDeque<Tx>,
    retransmit: BTreeSet<u64>,
    next_tx_id: u64,
    /// Losses of transmissions below this id belong to the current
    /// reduction and do not reduce the window again.
    recovery_end: u64,
    srtt: Option<Duration>,
    rttvar: Duration,
    rto: Duration,
    rto_deadline: Option<Time>,
    last_rtt: Option<Duration>,
    timeouts: u64,
    reductions: u64,
}

impl RenoSender {
    pub fn new(cfg: RenoConfig, stream_len: Option<u64>) -> Self {
        let total_segs = stream_len.map(|l| l.div_ceil(cfg.payload_len as u64));
        Self {
            cwnd: cfg.initial_cwnd,
            ssthresh: cfg.initial_ssthresh,
            next_seg: 0,
            total_segs,
            cum_acked: 0,
            outstanding: VecDeque::new(),
            retransmit: BTreeSet::new(),
            next_tx_id: 0,
            recovery_end: 0,
            srtt: None,
            rttvar: Duration::ZERO,
            rto: secs(cfg.initial_rto_s),
            rto_deadline: None,
            last_rtt: None,
            timeouts: 0,
            reductions: 0,
            cfg,
        }
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }
    pub fn ssthresh(&self) -> f64 {
        self.ssthresh
    }
    pub fn rto(&self) -> Duration {
        self.rto
    }
    pub fn last_rtt(&self) -> Option<Duration> {
        self.last_rtt
    }
    pub fn timeouts(&self) -> u64 {
        self.timeouts
    }
    pub fn reductions(&self) -> u64 {
        self.reductions
    }
    pub fn pipe(&self) -> usize {
        self.outstanding.len()
    }

    pub fn is_finished(&self) -> bool {
        self.total_segs.is_some_and(|t| self.cum_acked >= t)
    }

    fn in_recovery(&self) -> bool {
        self.outstanding.front().is_some_and(|t| t.id < self.recovery_end) || !self.retransmit.is_empty()
    }

    fn reduce(&mut self) {
        self.ssthresh = (self.cwnd * self.cfg.beta).max(2.0);
        self.cwnd = self.ssthresh;
        self.recovery_end = self.next_tx_id;
        self.reductions += 1;
    }

    fn sample_rtt(&mut self, r: Duration) {
        self.last_rtt = Some(r);
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2;
            }
            Some(s) => {
                let diff = s.abs_diff(r);
                self.rttvar = self.rttvar.mul_f64(0.75) + diff.mul_f64(0.25);
                self.srtt = Some(s.mul_f64(0.875) + r.mul_f64(0.125));
            }
        }
        let rto = self.srtt.expect("set above") + self.rttvar * 4;
        self.rto = rto.clamp(secs(self.cfg.min_rto_s), secs(self.cfg.max_rto_s));
    }

    /// Processes one acknowledgement.
    pub fn on_ack(&mut self, ack: &RenoAck, now: Time) {
        self.cum_acked = self.cum_acked.max(ack.cum);
        self.retransmit.retain(|&s| s >= self.cum_acked && s != ack.seg);

        let Some(pos) = self.outstanding.iter().position(|t| t.id == ack.tx_id) else {
            // the transmission was already written off by a timeout
            self.restart_timer(now);
            return;
        };
        let tx = self.outstanding.remove(pos).expect("index from position");
        self.sample_rtt(now - tx.sent_at);

        let mut newly_lost = Vec::new();
        for t in self.outstanding.iter_mut().take_while(|t| t.id < tx.id) {
            t.later_delivered += 1;
        }
        while let Some(front) = self.outstanding.front() {
            if front.id < tx.id && front.later_delivered >= self.cfg.dupthresh {
                newly_lost.push(self.outstanding.pop_front().expect("front exists"));
            } else {
                break;
            }
        }
        // entries behind a still-pending front can also cross the threshold
        let mut i = 0;
        while i < self.outstanding.len() {
            let t = self.outstanding[i];
            if t.id < tx.id && t.later_delivered >= self.cfg.dupthresh {
                newly_lost.push(self.outstanding.remove(i).expect("index in range"));
            } else {
                i += 1;
            }
        }

        let mut reduce = false;
        for t in &newly_lost {
            if t.seg >= self.cum_acked {
                self.retransmit.insert(t.seg);
            }
            if t.id >= self.recovery_end {
                reduce = true;
            }
        }
        if reduce {
            self.reduce();
        } else if !self.in_recovery() {
            if self.cwnd < self.ssthresh {
                self.cwnd += 1.0;
            } else {
                self.cwnd += 1.0 / self.cwnd;
            }
        }
        self.restart_timer(now);
    }

    fn restart_timer(&mut self, now: Time) {
        self.rto_deadline = (!self.outstanding.is_empty()).then(|| now + self.rto);
    }

    /// Fires the retransmission timer if it has expired.
    pub fn check_timeout(&mut self, now: Time) -> bool {
        match self.rto_deadline {
            Some(d) if now >= d => {}
            _ => return false,
        }
        self.ssthresh = (self.cwnd * self.cfg.beta).max(2.0);
        self.cwnd = 1.0;
        for t in self.outstanding.drain(..) {
            if t.seg >= self.cum_acked {
                self.retransmit.insert(t.seg);
            }
        }
        self.recovery_end = self.next_tx_id;
        self.rto = (self.rto * 2).min(secs(self.cfg.max_rto_s));
        self.rto_deadline = None;
        self.timeouts += 1;
        true
    }

    /// Sends retransmissions first, then new segments, while the window
    /// allows.
    pub fn transmit(&mut self, now: Time) -> Vec<RenoSegment> {
        self.check_timeout(now);
        let mut out = Vec::new();
        while (self.outstanding.len() as f64) < self.cwnd.floor() {
            let seg = if let Some(s) = self.retransmit.pop_first() {
                s
            } else if self.total_segs.is_none_or(|t| self.next_seg < t) {
                self.next_seg += 1;
                self.next_seg - 1
            } else {
                break;
            };
            let id = self.next_tx_id;
            self.next_tx_id += 1;
            self.outstanding.push_back(Tx {
                id,
                seg,
                sent_at: now,
                later_delivered: 0,
            });
            out.push(RenoSegment { tx_id: id, seg });
        }
        if self.rto_deadline.is_none() && !self.outstanding.is_empty() {
            self.rto_deadline = Some(now + self.rto);
        }
        out
    }

    pub fn next_deadline(&self) -> Option<Time> {
        if self.is_finished() {
            None
        } else {
            self.rto_deadline
        }
    }
}

/// Cumulative-ACK receiver with out-of-order buffering.
#[derive(Debug, Clone, Default)]
pub struct RenoReceiver {
    cum: u64,
    above: BTreeSet<u64>,
    duplicates: u64,
}

impl RenoReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Next in-order segment expected; everything below has been delivered.
    pub fn cum(&self) -> u64 {
        self.cum
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn on_segment(&mut self, s: &RenoSegment) -> RenoAck {
        if s.seg < self.cum || !self.above.insert(s.seg) {
            self.duplicates += 1;
        }
        while self.above.remove(&self.cum) {
            self.cum += 1;
        }
        RenoAck {
            tx_id: s.tx_id,
            seg: s.seg,
            cum: self.cum,
        }
    }
}
