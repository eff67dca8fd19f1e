// SPDX-License-Identifier: Apache-2.0

//! `ctcp`: run simulated experiments and evaluate closed-form models.

mod grid;
mod model;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ctcp::netsim::{run_scenario, Scenario};
use ctcp::report::{write_sweep, RunReport};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "ctcp", version, about = "Network-coded TCP experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario and write its summary CSV.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-flow time series.
        #[arg(long)]
        timeseries: bool,
    },
    /// Run a scenario once per parameter value; one CSV row per run on stdout.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Scenario field to vary, e.g. loss_p or queue_bdp.
        #[arg(long)]
        param: String,
        /// Comma separated values or start:stop:count. May be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a closed-form model over a grid; CSV on stdout.
    Model {
        /// padhye, eta or stationary.
        #[arg(long)]
        name: String,
        /// e.g. "p=0.001:0.2:40;N=32".
        #[arg(long, default_value = "")]
        grid: String,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = Scenario::load(path).with_context(|| format!("scenario {}", path.display()))?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn cmd_run(scenario: &Path, seed: Option<u64>, out: &Path, timeseries: bool) -> Result<()> {
    let sc = load(scenario, seed)?;
    let report = RunReport::new(run_scenario(&sc)?);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let summary = out.join(format!("{}_summary.csv", sc.id));
    report.write_summary(create(&summary)?)?;
    eprintln!("wrote {}", summary.display());
    if timeseries {
        let ts = out.join(format!("{}_timeseries.csv", sc.id));
        report.write_timeseries(create(&ts)?)?;
        eprintln!("wrote {}", ts.display());
    }
    for (s, eff) in report.result.flows.iter().zip(&report.efficiency) {
        println!(
            "flow {} {}: goodput {:.4} Mbps, efficiency {:.4}",
            s.flow,
            s.protocol.name(),
            s.goodput_bps / 1e6,
            eff
        );
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_sweep(scenario: &Path, param: &str, values: &str, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let template = load(scenario, seed)?;
    if !Scenario::PARAMS.contains(&param) {
        bail!(
            "unknown parameter `{param}` (expected one of {})",
            Scenario::PARAMS.join(", ")
        );
    }
    let values = grid::parse_list(values).context("--values")?;
    let scenarios = values
        .iter()
        .map(|&v| {
            let mut sc = template.clone();
            sc.set_param(param, v).with_context(|| format!("{param} = {v}"))?;
            Ok(sc)
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = scenarios
        .par_iter()
        .map(|sc| run_scenario(sc).map(RunReport::new))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<(f64, RunReport)> = values.into_iter().zip(reports).collect();
    let flows = template.flows.len();
    match out {
        Some(p) => write_sweep(create(p)?, param, flows, &rows)?,
        None => write_sweep(io::stdout().lock(), param, flows, &rows)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            out,
            timeseries,
        } => cmd_run(scenario, *seed, out, *timeseries),
        Cmd::Sweep {
            scenario,
            param,
            values,
            seed,
            out,
        } => cmd_sweep(scenario, param, values, *seed, out.as_deref()),
        Cmd::Model { name, grid } => {
            let mut stdout = io::stdout().lock();
            model::write_model(name, grid, &mut stdout).and_then(|_| Ok(stdout.flush()?))
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
