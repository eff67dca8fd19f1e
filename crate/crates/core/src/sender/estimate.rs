// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use super::SenderError;

/// Exponential smoothing of the 0/1 loss sequence, batched over one ACK.
///
/// With `losses == 0` this is a single success update, `p(1-µ)`. Otherwise
/// it equals one success update followed by `losses` loss updates:
/// `p(1-µ)^(losses+1) + 1 - (1-µ)^losses`.
pub fn update_loss_estimate(p: f64, losses: u32, mu: f64) -> f64 {
    let keep = 1.0 - mu;
    let decayed = keep.powi(losses as i32);
    let next = p * keep * decayed + (1.0 - decayed);
    next.clamp(0.0, 1.0)
}

/// Adaptive multiplicative backoff: `RTT_min / RTT`.
pub fn backoff_factor(rtt_min: Duration, rtt: Duration) -> Result<f64, SenderError> {
    if rtt_min.is_zero() || rtt.is_zero() {
        return Err(SenderError::NonPositiveRtt);
    }
    Ok((rtt_min.as_secs_f64() / rtt.as_secs_f64()).min(1.0))
}

/// Block length for a newly initialised block: the token count rounded and
/// clamped to `[min, max]`.
pub fn adapt_blksize(tokens: f64, min: u16, max: u16) -> u16 {
    tokens.round().clamp(min as f64, max as f64) as u16
}
