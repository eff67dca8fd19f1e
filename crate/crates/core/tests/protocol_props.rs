// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;
use std::time::Duration;

use ctcp::analysis::{jain_index, padhye_window, stationary_rate, AimdModelParams};
use ctcp::field::{coeff_vector, gf256, Block, DecoderState};
use ctcp::sender::{AckOutcome, Mode};
use ctcp::wire::{Ack, Packet};
use ctcp::{Receiver, Sender, SenderConfig, Source, Time};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Trace {
    sent: u64,
    delivered: Vec<u8>,
    complete: bool,
    redundant: u64,
}

/// Drives a sender and receiver over a link with fixed one-way delay and
/// iid data loss, checking per-ACK invariants along the way.
fn loopback(data: &[u8], cfg: SenderConfig, p: f64, delay_ms: u64, seed: u64, limit: Time) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tx = Sender::new(cfg.clone(), Source::Bytes(data.to_vec()), Time::ZERO).unwrap();
    let mut rx = Receiver::new(cfg.numblks, cfg.payload_len, Some(data.len() as u64));
    let delay = Duration::from_millis(delay_ms);
    let step = Duration::from_micros(500);
    let mut fwd: VecDeque<(Time, Packet)> = VecDeque::new();
    let mut back: VecDeque<(Time, Ack)> = VecDeque::new();
    let mut delivered = Vec::new();
    let mut sent = 0;
    let mut now = Time::ZERO;
    let (mut last_currblk, mut last_una) = (0, 0);

    while !rx.is_complete() && now < limit {
        for pkt in tx.tick(now) {
            sent += 1;
            assert!(pkt.block_no >= tx.currblk());
            assert!(pkt.block_no < tx.currblk() + cfg.numblks as u32);
            if rng.random::<f64>() >= p {
                fwd.push_back((now + delay, pkt));
            }
        }
        while fwd.front().is_some_and(|(t, _)| *t <= now) {
            let (_, pkt) = fwd.pop_front().unwrap();
            let ack = rx.on_packet(&pkt);
            assert_eq!(ack.ack_seqno, pkt.seqno);
            assert_eq!(ack.ack_currdof as usize, rx.rank_of(ack.ack_currblk).unwrap_or(0));
            back.push_back((now + delay, ack));
            delivered.extend(rx.deliver());
            assert!(data.starts_with(&delivered));
        }
        while back.front().is_some_and(|(t, _)| *t <= now) {
            let (_, ack) = back.pop_front().unwrap();
            let (tokens, mode) = (tx.tokens(), tx.mode());
            let outcome = tx.on_ack(&ack, now);
            assert!((0.0..=1.0).contains(&tx.loss_estimate()));
            if let AckOutcome::Accepted { gap } = outcome {
                match mode {
                    Mode::SlowStart => assert!(tx.tokens() >= tokens),
                    Mode::CongestionAvoidance if gap == 0 => assert!(tx.tokens() > tokens),
                    Mode::CongestionAvoidance => {
                        let beta = tx.rtt_min().unwrap().as_secs_f64() / tx.rtt().as_secs_f64();
                        let expect = (beta * tokens).max(cfg.token_floor);
                        assert!((tx.tokens() - expect).abs() < 1e-9, "{} vs {expect}", tx.tokens());
                    }
                }
            }
            assert!(tx.currblk() >= last_currblk && tx.seqno_una() >= last_una);
            assert!(tx.active_blocks().all(|b| b >= tx.currblk()));
            (last_currblk, last_una) = (tx.currblk(), tx.seqno_una());
        }
        now += step;
    }
    Trace {
        sent,
        delivered,
        complete: rx.is_complete(),
        redundant: rx.redundant_packets(),
    }
}

fn bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_block_arrives_under_loss(
        len in 1usize..30_000,
        p in 0.0f64..0.5,
        delay_ms in 1u64..30,
        numblks in 1u16..6,
        seed: u64,
    ) {
        let data = bytes(len, seed);
        let cfg = SenderConfig { payload_len: 100, numblks, coding_seed: seed, ..SenderConfig::default() };
        let t = loopback(&data, cfg, p, delay_ms, seed, Time::from_millis(600_000));
        prop_assert!(t.complete, "{} of {len} bytes after {} packets", t.delivered.len(), t.sent);
        prop_assert_eq!(t.delivered, data);
    }

    #[test]
    fn lossless_link_sends_no_redundancy(len in 1usize..40_000, delay_ms in 1u64..20, seed: u64) {
        let data = bytes(len, seed);
        let cfg = SenderConfig { payload_len: 200, numblks: 3, ..SenderConfig::default() };
        let t = loopback(&data, cfg, 0.0, delay_ms, seed, Time::from_millis(60_000));
        prop_assert!(t.complete);
        prop_assert_eq!(t.sent, len.div_ceil(200) as u64);
        prop_assert_eq!(t.redundant, 0);
    }

    #[test]
    fn dependent_rows_never_add_rank(
        blk_len in 1usize..24,
        seeds in prop::collection::vec(any::<u32>(), 1..24),
        mix in prop::collection::vec(any::<u8>(), 24),
    ) {
        let data = bytes(blk_len * 8, blk_len as u64);
        let block = Block::from_bytes(0, &data, 8).unwrap();
        let mut dec = DecoderState::new(blk_len, 8);
        let mut rows: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
        for &s in &seeds {
            let v = coeff_vector(s, blk_len).as_bytes();
            let pl = block.encode_coded(s);
            dec.insert(&v, &pl).unwrap();
            rows.push((v, pl));
        }
        let mut v = vec![0u8; blk_len];
        let mut pl = vec![0u8; 8];
        for ((rv, rp), &c) in rows.iter().zip(&mix) {
            gf256::mul_add_slice(&mut v, rv, c);
            gf256::mul_add_slice(&mut pl, rp, c);
        }
        let rank = dec.rank();
        let ins = dec.insert(&v, &pl).unwrap();
        prop_assert!(!ins.innovative);
        prop_assert_eq!(dec.rank(), rank);
    }

    #[test]
    fn padhye_decreases(a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
        prop_assume!(a < b);
        prop_assert!(padhye_window(a).unwrap() > padhye_window(b).unwrap());
    }

    #[test]
    fn stationary_rate_linear_in_interval(
        alpha in 0.1f64..10.0, rtt in 1e-3f64..1.0, beta in 0.0f64..0.99, t in 0.01f64..100.0, c in 0.01f64..100.0,
    ) {
        let m = AimdModelParams { alpha, rtt, mean_beta: beta, mean_interval: t };
        let scaled = AimdModelParams { mean_interval: c * t, ..m };
        let (x, y) = (stationary_rate(&m).unwrap(), stationary_rate(&scaled).unwrap());
        prop_assert!((y - c * x).abs() <= 1e-9 * y.abs());
    }

    #[test]
    fn jain_scale_invariant(x in prop::collection::vec(0.0f64..1e9, 1..10), c in 1e-3f64..1e3) {
        prop_assume!(x.iter().any(|&v| v > 0.0));
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let (j, k) = (jain_index(&x).unwrap(), jain_index(&scaled).unwrap());
        prop_assert!((j - k).abs() < 1e-12);
        prop_assert!(j <= 1.0 + 1e-12 && j >= 1.0 / x.len() as f64 - 1e-12);
    }
}

#[test]
fn receiver_acks_every_packet_including_junk() {
    let mut rx = Receiver::new(2, 4, Some(8));
    let block = Block::from_bytes(0, b"abcdefgh", 4).unwrap();
    let packets = [
        Packet::systematic(0, 0, 2, 0, block.encode_systematic(0).unwrap()),
        Packet::systematic(0, 1, 2, 0, block.encode_systematic(0).unwrap()),
        Packet::systematic(5, 2, 2, 0, vec![0; 4]),
        Packet::systematic(0, 3, 2, 1, block.encode_systematic(1).unwrap()),
    ];
    for p in &packets {
        assert_eq!(rx.on_packet(p).ack_seqno, p.seqno);
    }
    assert_eq!(rx.redundant_packets(), 2);
    assert_eq!(rx.deliver(), b"abcdefgh");
}
