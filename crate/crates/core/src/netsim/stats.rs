// SPDX-License-Identifier: Apache-2.0

use super::scenario::Protocol;

/// One time-series point of a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t_s: f64,
    /// Tokens for coded flows, cwnd for the reference flow.
    pub window: f64,
    /// Latest RTT sample, zero before the first one.
    pub rtt_s: f64,
    pub delivered_bytes: u64,
}

/// Packet accounting of one flow. Every sent packet is in exactly one of
/// the other buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub sent: u64,
    pub delivered: u64,
    /// Dropped by the loss model.
    pub model_lost: u64,
    /// Dropped on arrival at a full queue.
    pub overflow_lost: u64,
    /// Waiting in the bottleneck queue or being transmitted.
    pub in_queue: u64,
    /// Propagating from the bottleneck to the receiver.
    pub in_flight: u64,
    pub acks_sent: u64,
    pub acks_lost: u64,
}

impl Counters {
    pub fn lost(&self) -> u64 {
        self.model_lost + self.overflow_lost
    }

    pub fn conserved(&self) -> bool {
        self.sent == self.delivered + self.model_lost + self.overflow_lost + self.in_queue + self.in_flight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats {
    pub flow: usize,
    pub protocol: Protocol,
    pub start_s: f64,
    /// Application bytes delivered in order.
    pub delivered_bytes: u64,
    pub goodput_bps: f64,
    /// Time from start until the last byte was delivered, finite flows only.
    pub completion_s: Option<f64>,
    pub counters: Counters,
    pub timeouts: u64,
    pub backoffs: u64,
    /// Delivered packets that added nothing: non-innovative coded packets,
    /// duplicates and packets for already decoded data.
    pub redundant: u64,
    /// Time-average of the window over samples past warm-up.
    pub mean_window: f64,
    pub mean_rtt_s: f64,
    /// Whether decoded bytes matched the source, when payload was carried.
    pub payload_intact: Option<bool>,
    pub series: Vec<Sample>,
}

impl FlowStats {
    /// Goodput over `[t0, t1]` from the time series, by linear
    /// interpolation between samples.
    pub fn goodput_between(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        (self.delivered_at(t1) - self.delivered_at(t0)) * 8.0 / (t1 - t0)
    }

    /// Delivered bytes at `t`, interpolated between samples.
    pub fn delivered_at(&self, t: f64) -> f64 {
        let s = &self.series;
        match s.iter().position(|x| x.t_s >= t) {
            None => s.last().map_or(0.0, |x| x.delivered_bytes as f64),
            Some(0) => {
                if s[0].t_s <= t {
                    s[0].delivered_bytes as f64
                } else {
                    0.0
                }
            }
            Some(i) => {
                let (a, b) = (s[i - 1], s[i]);
                let f = (t - a.t_s) / (b.t_s - a.t_s);
                a.delivered_bytes as f64 + f * (b.delivered_bytes as f64 - a.delivered_bytes as f64)
            }
        }
    }
}

/// Outcome of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario_id: String,
    pub seed: u64,
    /// Simulated time at which the run stopped.
    pub end_s: f64,
    pub events: u64,
    pub link_rate_bps: f64,
    pub flows: Vec<FlowStats>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(points: &[(f64, u64)]) -> FlowStats {
        FlowStats {
            flow: 0,
            protocol: Protocol::Reno,
            start_s: 0.0,
            delivered_bytes: 0,
            goodput_bps: 0.0,
            completion_s: None,
            counters: Counters::default(),
            timeouts: 0,
            backoffs: 0,
            redundant: 0,
            mean_window: 0.0,
            mean_rtt_s: 0.0,
            payload_intact: None,
            series: points
                .iter()
                .map(|&(t_s, delivered_bytes)| Sample {
                    t_s,
                    window: 1.0,
                    rtt_s: 0.0,
                    delivered_bytes,
                })
                .collect(),
        }
    }

    #[test]
    fn interpolated_goodput() {
        let s = stats(&[(1.0, 0), (2.0, 1000), (3.0, 3000)]);
        assert_eq!(s.delivered_at(1.5), 500.0);
        assert_eq!(s.delivered_at(10.0), 3000.0);
        assert_eq!(s.delivered_at(0.5), 0.0);
        assert_eq!(s.goodput_between(2.0, 3.0), 16000.0);
        assert_eq!(s.goodput_between(3.0, 2.0), 0.0);
    }

    #[test]
    fn conservation_arith() {
        let c = Counters {
            sent: 10,
            delivered: 5,
            model_lost: 1,
            overflow_lost: 1,
            in_queue: 2,
            in_flight: 1,
            ..Default::default()
        };
        assert!(c.conserved());
        assert_eq!(c.lost(), 2);
    }
}
