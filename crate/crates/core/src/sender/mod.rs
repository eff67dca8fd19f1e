// SPDX-License-Identifier: Apache-2.0

//! The sending side: parameter estimation, token-based congestion control
//! with adaptive backoff, block lifecycle and block scheduling.
//!
//! The sender is a passive state machine. A driver calls [`Sender::on_ack`]
//! for each acknowledgement, [`Sender::tick`] whenever it may transmit, and
//! wakes up at [`Sender::next_deadline`] so timeouts and staleness are
//! noticed without traffic.

mod config;
mod estimate;

pub use config::{LossCounting, SenderConfig};
pub use estimate::{adapt_blksize, backoff_factor, update_loss_estimate};

use std::collections::VecDeque;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{nonzero_coeff_vector, Block};
use crate::time::{secs, Time};
use crate::wire::{Ack, Packet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SenderError {
    #[error("invalid sender configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("round-trip times must be positive")]
    NonPositiveRtt,
    #[error("block {0} is not in the active window")]
    BlockNotActive(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SlowStart,
    CongestionAvoidance,
}

/// Where block payloads come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Real bytes, coded and carried in every packet.
    Bytes(Vec<u8>),
    /// Length-only stream: packets carry no payload bytes but coding vectors
    /// and rank bookkeeping are exact. `None` means an endless stream.
    Virtual { len: Option<u64> },
}

impl Source {
    fn len(&self) -> Option<u64> {
        match self {
            Source::Bytes(b) => Some(b.len() as u64),
            Source::Virtual { len } => *len,
        }
    }
}

#[derive(Debug, Clone)]
struct ActiveBlock {
    number: u32,
    len: u16,
    data: Option<Block>,
    next_sys_index: u16,
    /// ACKed packets of this block while it was not `currblk`.
    acked: u16,
}

#[derive(Debug, Clone, Copy)]
struct SendRecord {
    sent_at: Time,
    block: u32,
}

/// What [`Sender::on_ack`] did with an acknowledgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckOutcome {
    /// ACK for a sequence number outside `[seqno_una, seqno_nxt)`.
    Ignored,
    /// Processed; `gap` packets before `ack_seqno` were never acknowledged.
    Accepted { gap: u32 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderCounters {
    pub systematic_sent: u64,
    pub coded_sent: u64,
    pub timeouts: u64,
    pub backoffs: u64,
}

/// Connection state of one sender.
#[derive(Debug, Clone)]
pub struct Sender {
    cfg: SenderConfig,
    source: Source,
    /// Packets handed to blocks so far.
    assigned_packets: u64,
    total_packets: Option<u64>,

    p: f64,
    rtt: Duration,
    rtt_min: Option<Duration>,
    seqno_nxt: u32,
    seqno_una: u32,
    ss_threshold: f64,
    time_lastack: Time,
    tokens: f64,
    currblk: u32,
    currdof: u16,
    mode: Mode,
    timed_out: bool,
    /// Gap ACKs for seqnos below this belong to an earlier backoff.
    recover_seqno: u32,

    blocks: VecDeque<ActiveBlock>,
    /// B(seqno) and T(seqno) for seqnos in `[seqno_una, seqno_nxt)`.
    log: VecDeque<SendRecord>,
    seeds: ChaCha8Rng,
    counters: SenderCounters,
}

impl Sender {
    /// Starts a connection at `now`, the time the peer's SYN was seen.
    pub fn new(cfg: SenderConfig, source: Source, now: Time) -> Result<Self, SenderError> {
        cfg.validate()?;
        let total_packets = source.len().map(|l| l.div_ceil(cfg.payload_len as u64));
        Ok(Self {
            p: cfg.initial_p,
            rtt: secs(cfg.default_rtt_s),
            rtt_min: None,
            seqno_nxt: 0,
            seqno_una: 0,
            ss_threshold: cfg.initial_ss_threshold,
            time_lastack: now,
            tokens: cfg.initial_tokens,
            currblk: 0,
            currdof: 0,
            mode: Mode::SlowStart,
            timed_out: false,
            recover_seqno: 0,
            blocks: VecDeque::new(),
            log: VecDeque::new(),
            seeds: ChaCha8Rng::seed_from_u64(cfg.coding_seed),
            counters: SenderCounters::default(),
            assigned_packets: 0,
            total_packets,
            source,
            cfg,
        })
    }

    pub fn config(&self) -> &SenderConfig {
        &self.cfg
    }
    pub fn loss_estimate(&self) -> f64 {
        self.p
    }
    pub fn rtt(&self) -> Duration {
        self.rtt
    }
    pub fn rtt_min(&self) -> Option<Duration> {
        self.rtt_min
    }
    pub fn rto(&self) -> Duration {
        self.rtt.mul_f64(self.cfg.gamma)
    }
    pub fn tokens(&self) -> f64 {
        self.tokens
    }
    pub fn ss_threshold(&self) -> f64 {
        self.ss_threshold
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn seqno_nxt(&self) -> u32 {
        self.seqno_nxt
    }
    pub fn seqno_una(&self) -> u32 {
        self.seqno_una
    }
    pub fn time_lastack(&self) -> Time {
        self.time_lastack
    }
    pub fn currblk(&self) -> u32 {
        self.currblk
    }
    pub fn currdof(&self) -> u16 {
        self.currdof
    }
    pub fn counters(&self) -> SenderCounters {
        self.counters
    }

    /// Total source packets, `None` for an endless stream.
    pub fn total_packets(&self) -> Option<u64> {
        self.total_packets
    }

    /// Block numbers currently buffered, lowest first.
    pub fn active_blocks(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().map(|b| b.number)
    }

    /// Length of an active block.
    pub fn block_len(&self, block_no: u32) -> Option<u16> {
        self.block(block_no).map(|b| b.len)
    }

    /// All data has been acknowledged as decoded.
    pub fn is_finished(&self) -> bool {
        self.blocks.is_empty() && self.source_exhausted()
    }

    fn source_exhausted(&self) -> bool {
        self.total_packets.is_some_and(|t| self.assigned_packets >= t)
    }

    fn block(&self, block_no: u32) -> Option<&ActiveBlock> {
        let offset = block_no.checked_sub(self.currblk)? as usize;
        self.blocks.get(offset).filter(|b| b.number == block_no)
    }

    fn block_mut(&mut self, block_no: u32) -> Option<&mut ActiveBlock> {
        let offset = block_no.checked_sub(self.currblk)? as usize;
        self.blocks.get_mut(offset).filter(|b| b.number == block_no)
    }

    fn staleness_horizon(&self) -> Duration {
        self.rtt.mul_f64(self.cfg.staleness_factor)
    }

    /// Processes one acknowledgement received at `now`.
    pub fn on_ack(&mut self, ack: &Ack, now: Time) -> AckOutcome {
        if ack.ack_seqno < self.seqno_una || ack.ack_seqno >= self.seqno_nxt {
            return AckOutcome::Ignored;
        }
        let record = self.log[(ack.ack_seqno - self.seqno_una) as usize];

        self.time_lastack = now;
        self.timed_out = false;
        // a zero sample would make the backoff ratio undefined
        let sample = (now - record.sent_at).max(Duration::from_nanos(1));
        self.rtt = sample;
        let rtt_min = self.rtt_min.map_or(sample, |m| m.min(sample));
        self.rtt_min = Some(rtt_min);

        if ack.ack_currblk > self.currblk {
            while self.blocks.front().is_some_and(|b| b.number < ack.ack_currblk) {
                self.blocks.pop_front();
            }
            self.currblk = ack.ack_currblk;
            self.currdof = ack.ack_currdof;
        }
        if ack.ack_currblk == self.currblk {
            self.currdof = self.currdof.max(ack.ack_currdof);
        }
        if let Some(b) = self.block(self.currblk) {
            self.currdof = self.currdof.min(b.len);
        }

        let gap = ack.ack_seqno - self.seqno_una;
        let losses = match (gap, self.cfg.loss_counting) {
            (0, _) => 0,
            (g, LossCounting::Gap) => g,
            (g, LossCounting::Inclusive) => g + 1,
        };
        self.p = update_loss_estimate(self.p, losses, self.cfg.mu);

        match self.mode {
            Mode::SlowStart => {
                self.tokens += 1.0;
                if self.tokens > self.ss_threshold {
                    self.mode = Mode::CongestionAvoidance;
                }
            }
            Mode::CongestionAvoidance => {
                if gap > 0 && self.cfg.backoff_once_per_rtt && ack.ack_seqno < self.recover_seqno {
                    // same loss window as the last backoff
                } else if gap > 0 {
                    self.recover_seqno = self.seqno_nxt;
                    let beta = backoff_factor(rtt_min, sample).expect("positive samples");
                    self.tokens = (beta * self.tokens).max(self.cfg.token_floor);
                    self.counters.backoffs += 1;
                } else {
                    self.tokens += 1.0 / self.tokens;
                }
            }
        }

        if record.block > self.currblk {
            if let Some(b) = self.block_mut(record.block) {
                b.acked = b.acked.saturating_add(1);
            }
        }

        let advance = (ack.ack_seqno + 1 - self.seqno_una) as usize;
        self.log.drain(..advance);
        self.seqno_una = ack.ack_seqno + 1;
        AckOutcome::Accepted { gap }
    }

    /// Applies the retransmission timeout if no ACK arrived within RTO of
    /// the last one. Repeated calls during one silent period reset once.
    pub fn check_timeout(&mut self, now: Time) -> bool {
        if self.timed_out || now <= self.time_lastack + self.rto() {
            return false;
        }
        let before = self.tokens;
        self.tokens = self.cfg.initial_tokens;
        self.mode = Mode::SlowStart;
        self.ss_threshold = (before / 2.0).max(self.cfg.initial_tokens);
        self.p = self.cfg.default_p;
        self.timed_out = true;
        self.counters.timeouts += 1;
        true
    }

    /// Initialises blocks until `numblks` are buffered or the source runs dry.
    fn fill_window(&mut self) {
        while self.blocks.len() < self.cfg.numblks as usize && !self.source_exhausted() {
            let number = self.currblk + self.blocks.len() as u32;
            let blksize = self.adapt_blksize() as u64;
            let len = match self.total_packets {
                Some(t) => blksize.min(t - self.assigned_packets),
                None => blksize,
            } as u16;
            let data = match &self.source {
                Source::Bytes(bytes) => {
                    let pl = self.cfg.payload_len as usize;
                    let start = self.assigned_packets as usize * pl;
                    let end = (start + len as usize * pl).min(bytes.len());
                    Some(Block::from_bytes(number, &bytes[start..end], pl).expect("non-empty block"))
                }
                Source::Virtual { .. } => None,
            };
            self.assigned_packets += len as u64;
            self.blocks.push_back(ActiveBlock {
                number,
                len,
                data,
                next_sys_index: 0,
                acked: 0,
            });
        }
    }

    /// Size for the next block from the current token count.
    pub fn adapt_blksize(&self) -> u16 {
        adapt_blksize(self.tokens, self.cfg.min_blksize, self.cfg.max_blksize)
    }

    /// Non-stale in-flight packets: the total, and per active block.
    fn census(&self, now: Time) -> (usize, Vec<usize>) {
        let horizon = self.staleness_horizon();
        let mut total = 0;
        let mut per_block = vec![0usize; self.blocks.len()];
        for r in &self.log {
            if now < r.sent_at + horizon {
                total += 1;
                if let Some(off) = r.block.checked_sub(self.currblk) {
                    if let Some(slot) = per_block.get_mut(off as usize) {
                        *slot += 1;
                    }
                }
            }
        }
        (total, per_block)
    }

    /// Packets sent, not acknowledged, and not yet stale.
    pub fn in_flight(&self, now: Time) -> usize {
        self.census(now).0
    }

    fn pick_block(&self, onfly: &[usize]) -> Option<usize> {
        let q = 1.0 - self.p;
        self.blocks.iter().enumerate().find_map(|(i, b)| {
            let expected = q * onfly[i] as f64;
            let needed = if b.number == self.currblk {
                b.len.saturating_sub(self.currdof) as f64
            } else if self.cfg.credit_acked_blocks {
                b.len.saturating_sub(b.acked) as f64
            } else {
                b.len as f64
            };
            (expected < needed).then_some(i)
        })
    }

    /// The lowest active block whose expected deliveries still fall short
    /// of what the receiver needs, if any.
    pub fn schedule_block(&mut self, now: Time) -> Option<u32> {
        self.fill_window();
        let (_, onfly) = self.census(now);
        self.pick_block(&onfly).map(|i| self.blocks[i].number)
    }

    /// Builds the next packet of `block_no`: systematic packets in index
    /// order first, coded combinations afterwards.
    pub fn next_packet(&mut self, block_no: u32, now: Time) -> Result<Packet, SenderError> {
        let seqno = self.seqno_nxt;
        let coding_seed: u32 = self.seeds.random();
        let blk = self.block_mut(block_no).ok_or(SenderError::BlockNotActive(block_no))?;
        let packet = if blk.next_sys_index < blk.len {
            let index = blk.next_sys_index;
            blk.next_sys_index += 1;
            let payload = match &blk.data {
                Some(d) => d.encode_systematic(index as usize).expect("index below blk_len"),
                None => Vec::new(),
            };
            Packet::systematic(block_no, seqno, blk.len, index, payload)
        } else {
            let (seed, vector) = nonzero_coeff_vector(coding_seed, blk.len as usize);
            let payload = match &blk.data {
                Some(d) => d.encode_with(&vector).expect("vector matches block"),
                None => Vec::new(),
            };
            Packet::coded(block_no, seqno, blk.len, seed, payload)
        };
        if packet.is_systematic() {
            self.counters.systematic_sent += 1;
        } else {
            self.counters.coded_sent += 1;
        }
        self.log.push_back(SendRecord {
            sent_at: now,
            block: block_no,
        });
        self.seqno_nxt += 1;
        Ok(packet)
    }

    /// Emits every packet the token budget and the scheduler allow at `now`.
    pub fn tick(&mut self, now: Time) -> Vec<Packet> {
        self.check_timeout(now);
        self.fill_window();
        let (mut in_flight, mut onfly) = self.census(now);
        let mut out = Vec::new();
        while (in_flight as f64) < self.tokens.floor() {
            let Some(i) = self.pick_block(&onfly) else {
                break;
            };
            let number = self.blocks[i].number;
            out.push(self.next_packet(number, now).expect("scheduled block is active"));
            in_flight += 1;
            onfly[i] += 1;
        }
        out
    }

    /// Earliest future time at which the sender's decisions can change
    /// without an ACK: the RTO, or the next in-flight packet going stale.
    pub fn next_deadline(&self, now: Time) -> Option<Time> {
        if self.is_finished() {
            return None;
        }
        let horizon = self.staleness_horizon();
        let stale = self.log.iter().map(|r| r.sent_at + horizon).find(|&t| t > now);
        let rto = (!self.timed_out).then(|| self.time_lastack + self.rto() + Duration::from_nanos(1));
        match (stale, rto) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}
