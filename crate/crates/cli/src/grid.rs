// SPDX-License-Identifier: Apache-2.0

//! Value lists and parameter grids given on the command line.
//!
//! A list is either comma separated numbers (`0.01,0.05,0.1`) or an
//! inclusive linear range `start:stop:count`. A grid is a `;` separated
//! set of `name=list` entries.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};

pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = num(parts[0])?;
        let stop: f64 = num(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .with_context(|| format!("bad point count `{}`", parts[2]))?;
        return Ok(match count {
            0 => Vec::new(),
            1 => vec![start],
            n => (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect(),
        });
    }
    if parts.len() != 1 {
        bail!("range `{spec}` must look like start:stop:count");
    }
    spec.split(',').map(num).collect()
}

fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("bad number `{}`", s.trim()))?;
    if !v.is_finite() {
        bail!("non-finite value `{}`", s.trim());
    }
    Ok(v)
}

/// Parses `name=list;name=list`, rejecting names outside `allowed`.
pub fn parse_grid(spec: &str, allowed: &[&str]) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for entry in spec.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let (name, list) = entry
            .split_once('=')
            .with_context(|| format!("grid entry `{entry}` must look like name=values"))?;
        let name = name.trim();
        if !allowed.contains(&name) {
            bail!(
                "unknown grid parameter `{name}` (expected one of {})",
                allowed.join(", ")
            );
        }
        let values = parse_list(list).with_context(|| format!("in grid entry `{name}`"))?;
        out.insert(name.to_string(), values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("1,2.5, 3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_list("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_list("7:9:1").unwrap(), vec![7.0]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("1,x").is_err());
        assert!(parse_list("1:2").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("p=0.01,0.02; N=32", &["p", "N"]).unwrap();
        assert_eq!(g["p"], vec![0.01, 0.02]);
        assert_eq!(g["N"], vec![32.0]);
        assert!(parse_grid("q=1", &["p"]).is_err());
        assert!(parse_grid("p", &["p"]).is_err());
    }
}
