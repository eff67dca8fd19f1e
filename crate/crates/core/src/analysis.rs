// SPDX-License-Identifier: Apache-2.0

//! Closed-form models and summary metrics.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("loss rate {0} outside the allowed range")]
    LossRate(f64),
    #[error("block size must be at least 1")]
    BlockSize,
    #[error("mean backoff factor {0} must be below 1")]
    MeanBeta(f64),
    #[error("model parameters must be positive")]
    NonPositive,
    #[error("goodputs must be non-empty, non-negative and not all zero")]
    Goodputs,
}

/// Mean steady-state window of a loss-driven AIMD flow with backoff 0.5,
/// in packets per RTT: `sqrt(1.5 / p)`.
pub fn padhye_window(p: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::LossRate(p));
    }
    Ok((1.5 / p).sqrt())
}

/// Forward coded packets sent with an `n_block`-packet block at loss rate
/// `p`: `floor(N / (1 - p)) - N`.
pub fn forward_redundancy(n_block: u32, p: f64) -> Result<u32, AnalysisError> {
    if n_block == 0 {
        return Err(AnalysisError::BlockSize);
    }
    if !(0.0..1.0).contains(&p) {
        return Err(AnalysisError::LossRate(p));
    }
    let n = n_block as f64;
    Ok(((n / (1.0 - p)).floor() - n).max(0.0) as u32)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normalised count of unnecessary forward coded packets per block,
///
/// `eta = (1/N) * sum_{k=0}^{n-1} (n-k) C(n,k) p^k (1-p)^(N-k)`
///
/// with `n = forward_redundancy(N, p)`. Evaluated exactly as written; the
/// mix of `n` and `N` in the binomial term is kept as is.
pub fn efficiency_eta(n_block: u32, p: f64) -> Result<f64, AnalysisError> {
    let n = forward_redundancy(n_block, p)?;
    let big_n = n_block as i32;
    let sum: f64 = (0..n)
        .map(|k| (n - k) as f64 * binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi(big_n - k as i32))
        .sum();
    Ok(sum / n_block as f64)
}

/// Mean unnecessary forward coded packets per source packet when all
/// `N + n` transmissions of a block see independent erasures:
/// `(1/N) * sum_{k=0}^{n-1} (n-k) C(N+n,k) p^k (1-p)^(N+n-k)`.
pub fn unneeded_coded_exact(n_block: u32, p: f64) -> Result<f64, AnalysisError> {
    let n = forward_redundancy(n_block, p)?;
    let total = n_block + n;
    let sum: f64 = (0..n)
        .map(|k| (n - k) as f64 * binomial(total, k) * p.powi(k as i32) * (1.0 - p).powi((total - k) as i32))
        .sum();
    Ok(sum / n_block as f64)
}

/// Efficiency implied by `eta`: `1 - eta * N / (N + n)`.
pub fn efficiency_from_eta(n_block: u32, p: f64) -> Result<f64, AnalysisError> {
    let n = forward_redundancy(n_block, p)?;
    let eta = efficiency_eta(n_block, p)?;
    Ok(1.0 - eta * n_block as f64 / (n_block + n) as f64)
}

/// Inputs of the stationary AIMD rate model for one flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimdModelParams {
    /// Additive increase, packets per RTT.
    pub alpha: f64,
    /// Round-trip propagation delay of the flow, seconds.
    pub rtt: f64,
    /// Mean backoff factor over backoff events (1 when the flow does not
    /// back off at an event).
    pub mean_beta: f64,
    /// Mean time between network backoff events, seconds.
    pub mean_interval: f64,
}

impl AimdModelParams {
    /// `alpha / T_i^2`: rate increase per second, per second.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha / (self.rtt * self.rtt)
    }
}

/// Mean stationary rate `alpha_tilde * E[T] / (1 - E[beta])`, packets/s.
pub fn stationary_rate(m: &AimdModelParams) -> Result<f64, AnalysisError> {
    if !(m.mean_beta < 1.0) {
        return Err(AnalysisError::MeanBeta(m.mean_beta));
    }
    if !(m.alpha > 0.0 && m.rtt > 0.0 && m.mean_interval > 0.0) {
        return Err(AnalysisError::NonPositive);
    }
    Ok(m.alpha_tilde() * m.mean_interval / (1.0 - m.mean_beta))
}

/// Jain's fairness index `(sum x)^2 / (n sum x^2)`.
pub fn jain_index(goodputs: &[f64]) -> Result<f64, AnalysisError> {
    if goodputs.is_empty() || goodputs.iter().any(|&x| !(x >= 0.0)) {
        return Err(AnalysisError::Goodputs);
    }
    let sum: f64 = goodputs.iter().sum();
    let sq: f64 = goodputs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return Err(AnalysisError::Goodputs);
    }
    Ok(sum * sum / (goodputs.len() as f64 * sq))
}
