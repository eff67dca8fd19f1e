// SPDX-License-Identifier: Apache-2.0

//! Closed-form curves as CSV.

use std::io::Write;

use anyhow::{bail, Context, Result};
use ctcp::analysis::{
    efficiency_eta, efficiency_from_eta, forward_redundancy, padhye_window, stationary_rate, unneeded_coded_exact,
    AimdModelParams,
};
use ctcp::report::fmt_sig;

use crate::grid::parse_grid;

const SIG: u32 = 6;

fn f(x: f64) -> String {
    fmt_sig(x, SIG)
}

pub const NAMES: &[&str] = &["padhye", "eta", "stationary"];

pub fn write_model<W: Write>(name: &str, grid: &str, out: W) -> Result<()> {
    match name {
        "padhye" => padhye(grid, out),
        "eta" => eta(grid, out),
        "stationary" => stationary(grid, out),
        _ => bail!("unknown model `{name}` (expected one of {})", NAMES.join(", ")),
    }
}

fn pick(g: &mut std::collections::BTreeMap<String, Vec<f64>>, key: &str, default: &[f64]) -> Vec<f64> {
    g.remove(key).unwrap_or_else(|| default.to_vec())
}

fn default_p() -> Vec<f64> {
    crate::grid::parse_list("0.005:0.2:40").expect("valid literal")
}

fn padhye<W: Write>(grid: &str, out: W) -> Result<()> {
    let mut g = parse_grid(grid, &["p"])?;
    let ps = pick(&mut g, "p", &default_p());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "window"])?;
    for p in ps {
        let win = padhye_window(p).with_context(|| format!("p = {p}"))?;
        w.write_record([f(p), f(win)])?;
    }
    w.flush()?;
    Ok(())
}

fn eta<W: Write>(grid: &str, out: W) -> Result<()> {
    let mut g = parse_grid(grid, &["N", "p"])?;
    let ns = pick(&mut g, "N", &[32.0]);
    let ps = pick(&mut g, "p", &default_p());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "p", "n", "eta", "efficiency", "eta_exact"])?;
    for &n_block in &ns {
        if n_block < 1.0 || n_block.fract() != 0.0 || n_block > u32::MAX as f64 {
            bail!("block size N = {n_block} must be a positive integer");
        }
        let n_block = n_block as u32;
        for &p in &ps {
            let ctx = || format!("N = {n_block}, p = {p}");
            w.write_record([
                n_block.to_string(),
                f(p),
                forward_redundancy(n_block, p).with_context(ctx)?.to_string(),
                f(efficiency_eta(n_block, p).with_context(ctx)?),
                f(efficiency_from_eta(n_block, p).with_context(ctx)?),
                f(unneeded_coded_exact(n_block, p).with_context(ctx)?),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn stationary<W: Write>(grid: &str, out: W) -> Result<()> {
    let mut g = parse_grid(grid, &["alpha", "rtt", "mean_beta", "mean_interval"])?;
    let alphas = pick(&mut g, "alpha", &[1.0]);
    let rtts = pick(&mut g, "rtt", &[0.025]);
    let betas = pick(&mut g, "mean_beta", &[0.5]);
    let intervals = pick(&mut g, "mean_interval", &[1.0]);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "rtt", "mean_beta", "mean_interval", "alpha_tilde", "rate"])?;
    for &alpha in &alphas {
        for &rtt in &rtts {
            for &mean_beta in &betas {
                for &mean_interval in &intervals {
                    let m = AimdModelParams {
                        alpha,
                        rtt,
                        mean_beta,
                        mean_interval,
                    };
                    let rate = stationary_rate(&m).with_context(|| format!("{m:?}"))?;
                    w.write_record([
                        f(alpha),
                        f(rtt),
                        f(mean_beta),
                        f(mean_interval),
                        f(m.alpha_tilde()),
                        f(rate),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
