// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reno::{RenoAck, RenoReceiver, RenoSegment, RenoSender};
use super::scenario::{FlowSpec, Protocol, Scenario, ScenarioError};
use super::stats::{Counters, FlowStats, RunResult, Sample};
use crate::receiver::Receiver;
use crate::sender::{Sender, Source};
use crate::time::{secs, Time};
use crate::wire::{Ack, Packet};

#[derive(Debug)]
enum DataMsg {
    Ctcp(Packet),
    Reno(RenoSegment),
}

#[derive(Debug)]
struct DataUnit {
    flow: usize,
    msg: DataMsg,
    /// Hit by an airtime loss while being transmitted.
    doomed: bool,
}

#[derive(Debug)]
enum AckMsg {
    Ctcp(Ack),
    Reno(RenoAck),
}

#[derive(Debug)]
enum Event {
    FlowStart(usize),
    Wake { flow: usize, gen: u64 },
    ServiceDone,
    Deliver(DataUnit),
    AckArrive { flow: usize, ack: AckMsg },
    Sample,
}

#[derive(Debug)]
struct Scheduled {
    at: Time,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

enum Endpoints {
    Ctcp { tx: Box<Sender>, rx: Box<Receiver> },
    Reno { tx: Box<RenoSender>, rx: RenoReceiver },
}

struct Flow {
    spec: FlowSpec,
    start: Time,
    ends: Option<Endpoints>,
    counters: Counters,
    wake_gen: u64,
    wake_at: Option<Time>,
    completed_at: Option<Time>,
    series: Vec<Sample>,
    /// Source bytes when payload is carried, with the verified prefix length.
    source: Option<Vec<u8>>,
    verified: usize,
    corrupt: bool,
}

impl Flow {
    fn delivered_bytes(&self) -> u64 {
        match &self.ends {
            None => 0,
            Some(Endpoints::Ctcp { rx, .. }) => rx.decoded_bytes(),
            Some(Endpoints::Reno { rx, .. }) => {
                let b = rx.cum() * self.spec.reno.payload_len as u64;
                self.spec.file_bytes.map_or(b, |f| b.min(f))
            }
        }
    }

    fn window(&self) -> f64 {
        match &self.ends {
            None => 0.0,
            Some(Endpoints::Ctcp { tx, .. }) => tx.tokens(),
            Some(Endpoints::Reno { tx, .. }) => tx.cwnd(),
        }
    }

    fn rtt_s(&self) -> f64 {
        match &self.ends {
            Some(Endpoints::Ctcp { tx, .. }) if tx.rtt_min().is_some() => tx.rtt().as_secs_f64(),
            Some(Endpoints::Reno { tx, .. }) => tx.last_rtt().map_or(0.0, |r| r.as_secs_f64()),
            _ => 0.0,
        }
    }

    fn is_complete(&self) -> bool {
        self.completed_at.is_some()
    }
}

/// A discrete-event run of one scenario.
///
/// ```
/// use ctcp::netsim::{Scenario, Simulation};
///
/// let sc = Scenario::from_toml_str(r#"
///     id = "doc"
///     duration_s = 2.0
///     [link]
///     rate_bps = 10e6
///     prop_delay_s = 0.02
///     queue_bdp = 1.0
///     [[flows]]
///     protocol = "ctcp"
/// "#).unwrap();
/// let mut sim = Simulation::new(&sc).unwrap();
/// while sim.step() {
///     assert!(sim.conserved());
/// }
/// let result = sim.finish();
/// assert!(result.flows[0].goodput_bps > 5e6);
/// ```
pub struct Simulation {
    sc: Scenario,
    now: Time,
    end: Time,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    events: u64,
    rng: ChaCha8Rng,
    waiting: VecDeque<DataUnit>,
    busy: Option<DataUnit>,
    capacity: usize,
    airtime: Duration,
    one_way: Duration,
    sample_every: Duration,
    flows: Vec<Flow>,
    stopped: bool,
}

fn mix(seed: u64, i: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (i.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Simulation {
    pub fn new(sc: &Scenario) -> Result<Self, ScenarioError> {
        sc.validate()?;
        let end = Time::from_secs_f64(sc.duration_s);
        let mut sim = Self {
            now: Time::ZERO,
            end,
            heap: BinaryHeap::new(),
            seq: 0,
            events: 0,
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            waiting: VecDeque::new(),
            busy: None,
            capacity: sc.link.queue_capacity(),
            airtime: secs(sc.link.mtu_bytes as f64 * 8.0 / sc.link.rate_bps),
            one_way: secs(sc.link.prop_delay_s / 2.0),
            sample_every: secs(sc.sample_interval_s),
            flows: sc
                .flows
                .iter()
                .map(|spec| Flow {
                    spec: spec.clone(),
                    start: Time::from_secs_f64(spec.start_s),
                    ends: None,
                    counters: Counters::default(),
                    wake_gen: 0,
                    wake_at: None,
                    completed_at: None,
                    series: Vec::new(),
                    source: None,
                    verified: 0,
                    corrupt: false,
                })
                .collect(),
            stopped: sc.duration_s == 0.0,
            sc: sc.clone(),
        };
        if !sim.stopped {
            for i in 0..sim.flows.len() {
                let at = sim.flows[i].start;
                sim.push(at, Event::FlowStart(i));
            }
            sim.push(Time::ZERO, Event::Sample);
        }
        Ok(sim)
    }

    fn push(&mut self, at: Time, event: Event) {
        self.heap.push(Scheduled {
            at,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Packets waiting in the bottleneck, excluding the one in service.
    pub fn queue_len(&self) -> usize {
        self.waiting.len()
    }

    pub fn queue_capacity(&self) -> usize {
        self.capacity
    }

    pub fn counters(&self, flow: usize) -> Counters {
        self.flows[flow].counters
    }

    /// Packet conservation for every flow.
    pub fn conserved(&self) -> bool {
        self.flows.iter().all(|f| f.counters.conserved())
    }

    /// Processes the next event. Returns false once the run is over.
    pub fn step(&mut self) -> bool {
        if self.stopped {
            return false;
        }
        let Some(next) = self.heap.peek() else {
            self.stopped = true;
            return false;
        };
        if next.at > self.end {
            self.stopped = true;
            return false;
        }
        let Scheduled { at, event, .. } = self.heap.pop().expect("peeked");
        self.now = at;
        self.events += 1;
        match event {
            Event::FlowStart(i) => self.start_flow(i),
            Event::Wake { flow, gen } => {
                if self.flows[flow].wake_gen == gen {
                    self.flows[flow].wake_at = None;
                    self.service_flow(flow);
                }
            }
            Event::ServiceDone => self.service_done(),
            Event::Deliver(unit) => self.deliver(unit),
            Event::AckArrive { flow, ack } => self.ack_arrive(flow, ack),
            Event::Sample => self.sample(),
        }
        let all_finite_done = self
            .flows
            .iter()
            .all(|f| f.spec.file_bytes.is_some() && f.is_complete());
        if all_finite_done {
            self.stopped = true;
        }
        true
    }

    pub fn run(mut self) -> RunResult {
        while self.step() {}
        self.finish()
    }

    fn start_flow(&mut self, i: usize) {
        let seed = mix(self.sc.seed, i as u64);
        let f = &mut self.flows[i];
        let now = self.now;
        let ends = match f.spec.protocol {
            Protocol::Ctcp => {
                let mut cfg = f.spec.ctcp.clone();
                cfg.coding_seed ^= seed;
                let source = if f.spec.carry_payload {
                    let len = f.spec.file_bytes.expect("validated") as usize;
                    let mut bytes = vec![0u8; len];
                    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut bytes);
                    f.source = Some(bytes.clone());
                    Source::Bytes(bytes)
                } else {
                    Source::Virtual { len: f.spec.file_bytes }
                };
                let rx = Receiver::new(cfg.numblks, cfg.payload_len, f.spec.file_bytes);
                let tx = Sender::new(cfg, source, now).expect("validated config");
                Endpoints::Ctcp {
                    tx: Box::new(tx),
                    rx: Box::new(rx),
                }
            }
            Protocol::Reno => Endpoints::Reno {
                tx: Box::new(RenoSender::new(f.spec.reno.clone(), f.spec.file_bytes)),
                rx: RenoReceiver::new(),
            },
        };
        f.ends = Some(ends);
        self.service_flow(i);
    }

    fn service_flow(&mut self, i: usize) {
        let now = self.now;
        let (out, deadline) = match self.flows[i].ends.as_mut() {
            None => return,
            Some(Endpoints::Ctcp { tx, .. }) => {
                let out: Vec<DataMsg> = tx.tick(now).into_iter().map(DataMsg::Ctcp).collect();
                (out, tx.next_deadline(now))
            }
            Some(Endpoints::Reno { tx, .. }) => {
                let out: Vec<DataMsg> = tx.transmit(now).into_iter().map(DataMsg::Reno).collect();
                (out, tx.next_deadline())
            }
        };
        for msg in out {
            self.send_data(DataUnit {
                flow: i,
                msg,
                doomed: false,
            });
        }
        let deadline = deadline.map(|d| d.max(now + Duration::from_nanos(1)));
        let f = &mut self.flows[i];
        if deadline != f.wake_at {
            f.wake_at = deadline;
            f.wake_gen += 1;
            if let Some(at) = deadline {
                let gen = f.wake_gen;
                self.push(at, Event::Wake { flow: i, gen });
            }
        }
    }

    fn send_data(&mut self, unit: DataUnit) {
        let c = &mut self.flows[unit.flow].counters;
        c.sent += 1;
        if self.sc.link.loss.arrival_decision(&mut self.rng).is_drop() {
            c.model_lost += 1;
            return;
        }
        if self.busy.is_some() && self.waiting.len() >= self.capacity {
            c.overflow_lost += 1;
            return;
        }
        c.in_queue += 1;
        self.waiting.push_back(unit);
        if self.busy.is_none() {
            self.start_service();
        }
    }

    fn start_service(&mut self) {
        if let Some(mut unit) = self.waiting.pop_front() {
            unit.doomed = self.sc.link.loss.airtime_decision(self.now, self.airtime).is_drop();
            self.busy = Some(unit);
            let at = self.now + self.airtime;
            self.push(at, Event::ServiceDone);
        }
    }

    fn service_done(&mut self) {
        let unit = self.busy.take().expect("a packet is in service");
        let c = &mut self.flows[unit.flow].counters;
        c.in_queue -= 1;
        if unit.doomed {
            c.model_lost += 1;
        } else {
            c.in_flight += 1;
            let at = self.now + self.one_way;
            self.push(at, Event::Deliver(unit));
        }
        self.start_service();
    }

    fn deliver(&mut self, unit: DataUnit) {
        let now = self.now;
        let i = unit.flow;
        let f = &mut self.flows[i];
        f.counters.in_flight -= 1;
        f.counters.delivered += 1;
        let ack = match (f.ends.as_mut(), unit.msg) {
            (Some(Endpoints::Ctcp { rx, .. }), DataMsg::Ctcp(p)) => {
                let a = rx.on_packet(&p);
                let bytes = rx.deliver();
                if let Some(src) = &f.source {
                    let end = f.verified + bytes.len();
                    if src.get(f.verified..end) != Some(&bytes[..]) {
                        f.corrupt = true;
                    }
                    f.verified = end;
                }
                if rx.is_complete() && f.completed_at.is_none() {
                    f.completed_at = Some(now);
                }
                AckMsg::Ctcp(a)
            }
            (Some(Endpoints::Reno { rx, .. }), DataMsg::Reno(s)) => {
                let a = rx.on_segment(&s);
                if f.completed_at.is_none() {
                    if let Some(total) = f.spec.file_bytes {
                        if rx.cum() * f.spec.reno.payload_len as u64 >= total {
                            f.completed_at = Some(now);
                        }
                    }
                }
                AckMsg::Reno(a)
            }
            _ => unreachable!("data and endpoints always match"),
        };
        f.counters.acks_sent += 1;
        let p = self.sc.link.ack_loss_p;
        if p > 0.0 && self.rng.random::<f64>() < p {
            self.flows[i].counters.acks_lost += 1;
            return;
        }
        self.push(now + self.one_way, Event::AckArrive { flow: i, ack });
    }

    fn ack_arrive(&mut self, i: usize, ack: AckMsg) {
        let now = self.now;
        match (self.flows[i].ends.as_mut(), ack) {
            (Some(Endpoints::Ctcp { tx, .. }), AckMsg::Ctcp(a)) => {
                tx.on_ack(&a, now);
            }
            (Some(Endpoints::Reno { tx, .. }), AckMsg::Reno(a)) => tx.on_ack(&a, now),
            _ => unreachable!("acks and endpoints always match"),
        }
        self.service_flow(i);
    }

    fn sample(&mut self) {
        let t_s = self.now.as_secs_f64();
        for f in &mut self.flows {
            if f.ends.is_some() {
                let s = Sample {
                    t_s,
                    window: f.window(),
                    rtt_s: f.rtt_s(),
                    delivered_bytes: f.delivered_bytes(),
                };
                f.series.push(s);
            }
        }
        let next = self.now + self.sample_every;
        if next <= self.end {
            self.push(next, Event::Sample);
        }
    }

    /// Summarises the run up to the current time.
    pub fn finish(self) -> RunResult {
        let end = self.now;
        let warmup = self.sc.warmup_s;
        let flows = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let delivered = f.delivered_bytes();
                let completion = f.completed_at.map(|t| (t - f.start).as_secs_f64());
                let elapsed = completion.unwrap_or_else(|| end.saturating_since(f.start).as_secs_f64());
                let goodput = if elapsed > 0.0 {
                    delivered as f64 * 8.0 / elapsed
                } else {
                    0.0
                };
                let settled: Vec<&Sample> = f.series.iter().filter(|s| s.t_s >= f.spec.start_s + warmup).collect();
                let mean_window = if settled.is_empty() {
                    0.0
                } else {
                    settled.iter().map(|s| s.window).sum::<f64>() / settled.len() as f64
                };
                let rtts: Vec<f64> = settled.iter().map(|s| s.rtt_s).filter(|&r| r > 0.0).collect();
                let mean_rtt_s = if rtts.is_empty() {
                    0.0
                } else {
                    rtts.iter().sum::<f64>() / rtts.len() as f64
                };
                let (timeouts, backoffs, redundant) = match &f.ends {
                    None => (0, 0, 0),
                    Some(Endpoints::Ctcp { tx, rx }) => {
                        (tx.counters().timeouts, tx.counters().backoffs, rx.redundant_packets())
                    }
                    Some(Endpoints::Reno { tx, rx }) => (tx.timeouts(), tx.reductions(), rx.duplicates()),
                };
                FlowStats {
                    flow: i,
                    protocol: f.spec.protocol,
                    start_s: f.spec.start_s,
                    delivered_bytes: delivered,
                    goodput_bps: goodput,
                    completion_s: completion,
                    counters: f.counters,
                    timeouts,
                    backoffs,
                    redundant,
                    mean_window,
                    mean_rtt_s,
                    payload_intact: f.source.as_ref().map(|_| !f.corrupt),
                    series: f.series.clone(),
                }
            })
            .collect();
        RunResult {
            scenario_id: self.sc.id.clone(),
            seed: self.sc.seed,
            end_s: end.as_secs_f64(),
            events: self.events,
            link_rate_bps: self.sc.link.rate_bps,
            flows,
        }
    }
}

/// Runs a scenario to completion or to its duration.
pub fn run_scenario(sc: &Scenario) -> Result<RunResult, ScenarioError> {
    Ok(Simulation::new(sc)?.run())
}
