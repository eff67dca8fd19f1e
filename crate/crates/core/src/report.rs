// SPDX-License-Identifier: Apache-2.0

//! Derived metrics and CSV output for simulation runs.

use std::io::Write;

use crate::analysis::jain_index;
use crate::netsim::{FlowStats, RunResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats `x` rounded to `sig` significant digits, without an exponent.
///
/// ```
/// use ctcp::report::fmt_sig;
/// assert_eq!(fmt_sig(0.0123456789, 4), "0.01235");
/// assert_eq!(fmt_sig(24_154_321.0, 6), "24154300");
/// assert_eq!(fmt_sig(-2.5, 3), "-2.50");
/// assert_eq!(fmt_sig(0.0, 6), "0");
/// ```
pub fn fmt_sig(x: f64, sig: u32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        }
        .to_string();
    }
    let scale = 10f64.powi(x.abs().log10().floor() as i32 + 1 - sig as i32);
    let r = (x / scale).round() * scale;
    let mag = r.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{:.*}", decimals, r)
}

const SIG: u32 = 6;

fn f(x: f64) -> String {
    fmt_sig(x, SIG)
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

/// Per-flow metrics plus run-level aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub result: RunResult,
    /// Goodput of each flow over link capacity.
    pub efficiency: Vec<f64>,
    /// Sum of flow goodputs over link capacity.
    pub total_efficiency: f64,
    /// Fairness across flows; `None` if no flow delivered anything.
    pub jain: Option<f64>,
    pub version: &'static str,
}

impl RunReport {
    pub fn new(result: RunResult) -> Self {
        let efficiency: Vec<f64> = result
            .flows
            .iter()
            .map(|s| s.goodput_bps / result.link_rate_bps)
            .collect();
        let goodputs: Vec<f64> = result.flows.iter().map(|s| s.goodput_bps).collect();
        Self {
            total_efficiency: efficiency.iter().sum(),
            jain: jain_index(&goodputs).ok(),
            efficiency,
            version: VERSION,
            result,
        }
    }

    pub const SUMMARY_HEADER: [&'static str; 19] = [
        "scenario",
        "seed",
        "version",
        "flow",
        "protocol",
        "start_s",
        "end_s",
        "goodput_bps",
        "efficiency",
        "completion_s",
        "delivered_bytes",
        "packets_sent",
        "packets_delivered",
        "model_losses",
        "overflow_losses",
        "timeouts",
        "mean_window",
        "mean_rtt_s",
        "jain_index",
    ];

    /// One row per flow.
    pub fn write_summary<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::SUMMARY_HEADER)?;
        let r = &self.result;
        for (s, eff) in r.flows.iter().zip(&self.efficiency) {
            w.write_record([
                r.scenario_id.clone(),
                r.seed.to_string(),
                self.version.to_string(),
                s.flow.to_string(),
                s.protocol.name().to_string(),
                f(s.start_s),
                f(r.end_s),
                f(s.goodput_bps),
                f(*eff),
                opt(s.completion_s),
                s.delivered_bytes.to_string(),
                s.counters.sent.to_string(),
                s.counters.delivered.to_string(),
                s.counters.model_lost.to_string(),
                s.counters.overflow_lost.to_string(),
                s.timeouts.to_string(),
                f(s.mean_window),
                f(s.mean_rtt_s),
                opt(self.jain),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Every sample of every flow, flows in order.
    pub fn write_timeseries<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "flow", "t_s", "window", "rtt_s", "delivered_bytes"])?;
        for s in &self.result.flows {
            for p in &s.series {
                w.write_record([
                    self.result.scenario_id.clone(),
                    s.flow.to_string(),
                    f(p.t_s),
                    f(p.window),
                    f(p.rtt_s),
                    p.delivered_bytes.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Column names of a sweep over a scenario with `flows` flows.
pub fn sweep_header(flows: usize) -> Vec<String> {
    let mut h: Vec<String> = ["param", "value", "seed", "efficiency", "jain_index"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..flows {
        h.push(format!("goodput_bps_{i}"));
        h.push(format!("completion_s_{i}"));
        h.push(format!("mean_window_{i}"));
    }
    h
}

/// Writes a sweep table: one row per `(value, report)` in the given order.
pub fn write_sweep<W: Write>(out: W, param: &str, flows: usize, rows: &[(f64, RunReport)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(flows))?;
    for (v, rep) in rows {
        let mut rec = vec![
            param.to_string(),
            f(*v),
            rep.result.seed.to_string(),
            f(rep.total_efficiency),
            opt(rep.jain),
        ];
        for s in &rep.result.flows {
            rec.push(f(s.goodput_bps));
            rec.push(opt(s.completion_s));
            rec.push(f(s.mean_window));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Goodputs of all flows over `[t0, t1]`, from their time series.
pub fn window_goodputs(flows: &[FlowStats], t0: f64, t1: f64) -> Vec<f64> {
    flows.iter().map(|s| s.goodput_between(t0, t1)).collect()
}
