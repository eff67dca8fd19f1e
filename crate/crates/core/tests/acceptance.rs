// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//!
//! Run alone with `cargo test -p ctcp --test acceptance`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use ctcp::analysis::{efficiency_eta, forward_redundancy, jain_index, padhye_window, unneeded_coded_exact};
use ctcp::field::{coeff_vector, gf256, Block, DecoderState};
use ctcp::netsim::{run_scenario, Protocol, RunResult, Scenario, Simulation};
use ctcp::report::RunReport;
use ctcp::sender::update_loss_estimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(name: &str) -> Scenario {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "scenarios",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect();
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn with(mut sc: Scenario, param: &str, v: f64) -> Scenario {
    sc.set_param(param, v).unwrap();
    sc
}

fn timed(sc: &Scenario) -> (RunResult, Duration) {
    let t = Instant::now();
    let r = run_scenario(sc).unwrap();
    (r, t.elapsed())
}

type Outcome = (bool, String);

fn efficiency(r: &RunResult) -> f64 {
    r.flows[0].goodput_bps / r.link_rate_bps
}

fn criterion_1_efficiency_vs_loss() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, floor) in [("efficiency_p01", 0.90), ("efficiency_p10", 0.75)] {
        let sc = scenario(name);
        assert_eq!(sc.duration_s, 300.0);
        let (r, wall) = timed(&sc);
        let e = efficiency(&r);
        let good = e >= floor && wall < Duration::from_secs(60);
        ok &= good;
        parts.push(format!(
            "{name} efficiency {e:.4} (min {floor}) in {:.2}s wall",
            wall.as_secs_f64()
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_2_buffer_insensitivity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.01, 0.05] {
        let full = with(scenario("efficiency_p01"), "loss_p", p);
        let small = with(full.clone(), "queue_bdp", 0.25);
        let e_full = efficiency(&run_scenario(&full).unwrap());
        let e_small = efficiency(&run_scenario(&small).unwrap());
        let gap_pp = (e_full - e_small).abs() * 100.0;
        ok &= gap_pp <= 5.0;
        parts.push(format!(
            "p={p}: BDP {e_full:.4}, 0.25 BDP {e_small:.4}, gap {gap_pp:.2}pp"
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_3_reference_window_vs_sqrt_law() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.005, 0.01, 0.02, 0.05] {
        let r = run_scenario(&with(scenario("reno_padhye"), "loss_p", p)).unwrap();
        let w = r.flows[0].mean_window;
        let model = padhye_window(p).unwrap();
        let rel = w / model - 1.0;
        ok &= rel.abs() <= 0.30;
        parts.push(format!("p={p}: window {w:.2} vs {model:.2} ({:+.1}%)", rel * 100.0));
    }
    (ok, parts.join("; "))
}

fn criterion_4_friendliness_lossless() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["friendliness_lossless_rtt10", "friendliness_lossless_rtt25"] {
        let r = run_scenario(&scenario(name)).unwrap();
        assert_eq!(r.flows[0].protocol, Protocol::Reno);
        assert_eq!(r.flows[1].protocol, Protocol::Ctcp);
        let ratio = r.flows[1].goodput_bps / r.flows[0].goodput_bps;
        ok &= (0.7..=1.4).contains(&ratio);
        parts.push(format!(
            "{name}: ctcp {:.2} Mbps / reno {:.2} Mbps = {ratio:.3}",
            r.flows[1].goodput_bps / 1e6,
            r.flows[0].goodput_bps / 1e6
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_5_friendliness_lossy() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.01, 0.05] {
        let mixed = run_scenario(&with(scenario("friendliness_lossy"), "loss_p", p)).unwrap();
        let pair = run_scenario(&with(scenario("reno_pair_lossy"), "loss_p", p)).unwrap();
        let with_ctcp = mixed.flows[0].goodput_bps;
        let with_reno = (pair.flows[0].goodput_bps + pair.flows[1].goodput_bps) / 2.0;
        let rel = with_ctcp / with_reno - 1.0;
        ok &= rel.abs() <= 0.20;
        parts.push(format!(
            "p={p}: reno beside ctcp {:.3} Mbps, beside reno {:.3} Mbps ({:+.1}%)",
            with_ctcp / 1e6,
            with_reno / 1e6,
            rel * 100.0
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_6_fairness_convergence() -> Outcome {
    let sc = scenario("fairness");
    assert_eq!(sc.flows[1].start_s, 60.0);
    let r = run_scenario(&sc).unwrap();
    let t1 = sc.duration_s;
    let t0 = t1 * 2.0 / 3.0;
    let g: Vec<f64> = r.flows.iter().map(|f| f.goodput_between(t0, t1)).collect();
    let j = jain_index(&g).unwrap();
    (
        j >= 0.95,
        format!(
            "goodputs over [{t0:.0}s, {t1:.0}s] {:.3} / {:.3} Mbps, Jain {j:.4} (min 0.95)",
            g[0] / 1e6,
            g[1] / 1e6
        ),
    )
}

fn criterion_7_transfer_completion() -> Outcome {
    let completion = |name: &str, p: f64| {
        let r = run_scenario(&with(scenario(name), "loss_p", p)).unwrap();
        assert_eq!(r.flows[0].delivered_bytes, 1_000_000);
        r.flows[0].completion_s.expect("transfer completes")
    };
    let (c0, c20) = (completion("transfer_ctcp", 0.0), completion("transfer_ctcp", 0.2));
    let (r0, r20) = (completion("transfer_reno", 0.0), completion("transfer_reno", 0.2));
    let (cr, rr) = (c20 / c0, r20 / r0);
    (
        cr <= 2.0 && rr >= 8.0,
        format!("ctcp {c0:.3}s -> {c20:.3}s (x{cr:.2}, max 2); reno {r0:.3}s -> {r20:.3}s (x{rr:.1}, min 8)"),
    )
}

fn criterion_8_interference() -> Outcome {
    // 1 Mbps: a 1500 B frame takes 12 ms, longer than the 11 ms gap
    let mut slow_ok = true;
    let mut parts = Vec::new();
    for name in ["interference_ctcp", "interference_reno"] {
        let r = run_scenario(&with(scenario(name), "rate_bps", 1e6)).unwrap();
        let c = r.flows[0].counters;
        let rate = c.model_lost as f64 / c.sent as f64;
        slow_ok &= rate >= 0.99 && r.flows[0].delivered_bytes == 0;
        parts.push(format!(
            "{name} at 1 Mbps loses {:.2}% of {} frames",
            rate * 100.0,
            c.sent
        ));
    }
    let sc = scenario("interference_ctcp");
    let ctcp = run_scenario(&sc).unwrap();
    let reno = run_scenario(&scenario("interference_reno")).unwrap();
    let half = sc.duration_s / 2.0;
    let steady = ctcp.flows[0].goodput_between(half, sc.duration_s);
    let g_ctcp = ctcp.flows[0].goodput_bps;
    let g_reno = reno.flows[0].goodput_bps;
    let fast_ok = steady > 0.0 && g_reno <= g_ctcp / 3.0;
    parts.push(format!(
        "at 11 Mbps ctcp {:.3} Mbps (second half {:.3} Mbps), reno {:.4} Mbps",
        g_ctcp / 1e6,
        steady / 1e6,
        g_reno / 1e6
    ));
    (slow_ok && fast_ok, parts.join("; "))
}

/// Unneeded forward coded packets per source packet, by simulation: each
/// block sends `N + n` packets through iid erasures.
fn eta_monte_carlo(n_block: u32, p: f64, trials: u32, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = forward_redundancy(n_block, p).unwrap();
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..trials {
        let erased = (0..n_block + n).filter(|_| rng.random::<f64>() < p).count() as u32;
        let x = n.saturating_sub(erased) as f64 / n_block as f64;
        sum += x;
        sq += x * x;
    }
    let mean = sum / trials as f64;
    let var = (sq / trials as f64 - mean * mean).max(0.0);
    (mean, (var / trials as f64).sqrt())
}

fn criterion_9_property_suites() -> Outcome {
    let mut failed: Vec<String> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    // field inverses, exhaustively
    for a in 1..=255u8 {
        let inv = gf256::inv(a).unwrap();
        if gf256::mul(a, inv) != 1 || (1..=255u8).filter(|&b| gf256::mul(a, b) == 1).count() != 1 {
            failed.push(format!("inverse of {a}"));
        }
    }
    if gf256::inv(0).is_ok() {
        failed.push("zero has an inverse".into());
    }

    // decoder round trip over random blocks and loss patterns
    let cases = 250;
    for case in 0..cases {
        let blk_len = rng.random_range(1..=48usize);
        let payload = rng.random_range(1..=40usize);
        let p: f64 = rng.random_range(0.0..0.6);
        let data: Vec<u8> = (0..blk_len * payload).map(|_| rng.random()).collect();
        let block = Block::from_bytes(case, &data, payload).unwrap();
        let mut dec = DecoderState::new(blk_len, payload);
        for i in 0..blk_len {
            if rng.random::<f64>() >= p {
                dec.insert_systematic(i, &block.encode_systematic(i).unwrap()).unwrap();
            }
        }
        let mut sent = 0;
        while !dec.is_decodable() && sent < 10 * blk_len + 50 {
            let seed: u32 = rng.random();
            sent += 1;
            if rng.random::<f64>() >= p {
                let v = coeff_vector(seed, blk_len);
                dec.insert(&v.as_bytes(), &block.encode_coded(seed)).unwrap();
            }
        }
        if dec.decode().map(|d| d.concat()).ok().as_deref() != Some(&data[..]) {
            failed.push(format!("decoder round trip case {case}"));
        }
    }
    notes.push(format!("{cases} decoder cases"));

    // loss estimator: one batch update equals a success then L losses
    for l in 1..=50u32 {
        for _ in 0..20 {
            let p0: f64 = rng.random();
            let mu: f64 = rng.random_range(0.001..0.999);
            let batch = update_loss_estimate(p0, l, mu);
            let mut seq = p0 * (1.0 - mu);
            for _ in 0..l {
                seq = seq * (1.0 - mu) + mu;
            }
            if (batch - seq).abs() > 1e-12 {
                failed.push(format!("estimator L={l} p={p0} mu={mu}: {batch} vs {seq}"));
            }
        }
    }

    // closed-form eta against simulation of N + n erasures per block
    let mut eta_bad = Vec::new();
    for n_block in [4u32, 8, 32] {
        for p in [0.05, 0.1, 0.2] {
            let (mc, se) = eta_monte_carlo(n_block, p, 100_000, &mut rng);
            let formula = efficiency_eta(n_block, p).unwrap();
            let exact = unneeded_coded_exact(n_block, p).unwrap();
            let z = (formula - mc) / se.max(1e-12);
            let z_exact = (exact - mc) / se.max(1e-12);
            if z.abs() > 3.0 {
                eta_bad.push(format!(
                    "N={n_block} p={p}: eta {formula:.5} vs sim {mc:.5} ({z:+.1} SE)"
                ));
            }
            notes.push(format!("N={n_block} p={p} all-packet binomial {z_exact:+.1} SE"));
        }
    }
    if !eta_bad.is_empty() {
        failed.push(format!("eta vs Monte Carlo: {}", eta_bad.join(", ")));
    }

    // determinism: byte-identical summary CSV
    let summary = |sc: &Scenario| {
        let mut buf = Vec::new();
        RunReport::new(run_scenario(sc).unwrap())
            .write_summary(&mut buf)
            .unwrap();
        let mut ts = Vec::new();
        RunReport::new(run_scenario(sc).unwrap())
            .write_timeseries(&mut ts)
            .unwrap();
        (buf, ts)
    };
    let det = with(scenario("fairness"), "duration_s", 90.0);
    if summary(&det) != summary(&det) {
        failed.push("repeated run differs".into());
    }

    // conservation after every event
    for name in [
        "efficiency_p05",
        "friendliness_lossy",
        "interference_ctcp",
        "transfer_reno",
    ] {
        let sc = with(scenario(name), "duration_s", 20.0);
        let mut sim = Simulation::new(&sc).unwrap();
        let mut events = 0u64;
        while sim.step() {
            events += 1;
            if !sim.conserved() || sim.queue_len() > sim.queue_capacity() {
                failed.push(format!("{name}: conservation broken at event {events}"));
                break;
            }
        }
        notes.push(format!("{name} {events} events conserved"));
    }

    let ok = failed.is_empty();
    let detail = if ok {
        notes.join("; ")
    } else {
        format!("{} (also: {})", failed.join("; "), notes.join("; "))
    };
    (ok, detail)
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1_efficiency_vs_loss),
        (2, criterion_2_buffer_insensitivity),
        (3, criterion_3_reference_window_vs_sqrt_law),
        (4, criterion_4_friendliness_lossless),
        (5, criterion_5_friendliness_lossy),
        (6, criterion_6_fairness_convergence),
        (7, criterion_7_transfer_completion),
        (8, criterion_8_interference),
        (9, criterion_9_property_suites),
    ];
    let handles: Vec<_> = criteria.into_iter().map(|(n, f)| (n, thread::spawn(f))).collect();
    let mut failed = 0;
    for (n, h) in handles {
        let (ok, detail) = h.join().unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!("criterion {n}: {} : {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
