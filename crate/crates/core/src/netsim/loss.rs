// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::time::Time;

/// Loss process on the data direction of the bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossModel {
    #[default]
    None,
    /// Independent Bernoulli erasures, applied before the queue.
    Iid { p: f64 },
    /// An interferer that is on for `width_s` at the start of every
    /// `period_s`. A frame is lost if its transmission overlaps a burst.
    PeriodicBurst { period_s: f64, width_s: f64 },
    /// Union of the component losses.
    Composite { parts: Vec<LossModel> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossDecision {
    Keep,
    Drop,
}

impl LossDecision {
    pub fn is_drop(self) -> bool {
        self == LossDecision::Drop
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            LossModel::None => Ok(()),
            LossModel::Iid { p } if (0.0..1.0).contains(p) => Ok(()),
            LossModel::Iid { p } => Err(format!("iid loss rate {p} must lie in [0, 1)")),
            LossModel::PeriodicBurst { period_s, width_s } => {
                if !(*period_s > 0.0) || !(*width_s >= 0.0) || !(width_s < period_s) {
                    Err(format!(
                        "burst needs 0 <= width_s < period_s, got width {width_s} period {period_s}"
                    ))
                } else {
                    Ok(())
                }
            }
            LossModel::Composite { parts } => parts.iter().try_for_each(LossModel::validate),
        }
    }

    /// Losses decided when a packet reaches the link, before queueing.
    pub fn arrival_decision<R: Rng + ?Sized>(&self, rng: &mut R) -> LossDecision {
        match self {
            LossModel::Iid { p } => {
                if *p > 0.0 && rng.random::<f64>() < *p {
                    LossDecision::Drop
                } else {
                    LossDecision::Keep
                }
            }
            LossModel::Composite { parts } => {
                // draw for every component so the rng stream does not depend
                // on earlier outcomes
                let mut out = LossDecision::Keep;
                for part in parts {
                    if part.arrival_decision(rng).is_drop() {
                        out = LossDecision::Drop;
                    }
                }
                out
            }
            _ => LossDecision::Keep,
        }
    }

    /// Losses decided by the transmission interval `[start, start + airtime)`.
    pub fn airtime_decision(&self, start: Time, airtime: Duration) -> LossDecision {
        match self {
            LossModel::PeriodicBurst { period_s, width_s } => {
                let period = (period_s * 1e9).round() as u64;
                let width = (width_s * 1e9).round() as u64;
                let phase = start.as_nanos() % period;
                let air = airtime.as_nanos() as u64;
                // inside a burst, or running into the next one
                if phase < width || phase + air > period {
                    LossDecision::Drop
                } else {
                    LossDecision::Keep
                }
            }
            LossModel::Composite { parts } => {
                if parts.iter().any(|p| p.airtime_decision(start, airtime).is_drop()) {
                    LossDecision::Drop
                } else {
                    LossDecision::Keep
                }
            }
            _ => LossDecision::Keep,
        }
    }

    /// Combined keep/drop verdict for a packet transmitted at `now` for
    /// `airtime`. A zero airtime gives the point rule
    /// `drop iff now mod period < width` for bursts.
    pub fn decide<R: Rng + ?Sized>(&self, now: Time, airtime: Duration, rng: &mut R) -> LossDecision {
        let a = self.arrival_decision(rng);
        let b = self.airtime_decision(now, airtime);
        if a.is_drop() || b.is_drop() {
            LossDecision::Drop
        } else {
            LossDecision::Keep
        }
    }
}
