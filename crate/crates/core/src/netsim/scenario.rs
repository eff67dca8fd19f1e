// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::loss::LossModel;
use super::reno::RenoConfig;
use crate::sender::SenderConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// The emulated bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub rate_bps: f64,
    /// Round-trip propagation delay, split evenly between the two directions.
    pub prop_delay_s: f64,
    /// Queue capacity in packets. Exactly one of `queue_pkts` and
    /// `queue_bdp` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_pkts: Option<u32>,
    /// Queue capacity as a multiple of the bandwidth-delay product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_bdp: Option<f64>,
    /// Bytes on the wire per data packet.
    #[serde(default = "default_mtu")]
    pub mtu_bytes: u32,
    #[serde(default)]
    pub loss: LossModel,
    /// Independent loss rate on the acknowledgement path.
    #[serde(default)]
    pub ack_loss_p: f64,
}

fn default_mtu() -> u32 {
    1500
}

impl LinkConfig {
    /// Bandwidth-delay product in packets of `mtu_bytes`.
    pub fn bdp_packets(&self) -> f64 {
        self.rate_bps * self.prop_delay_s / (8.0 * self.mtu_bytes as f64)
    }

    /// Queue capacity in packets, at least one.
    pub fn queue_capacity(&self) -> usize {
        match (self.queue_pkts, self.queue_bdp) {
            (Some(q), _) => q.max(1) as usize,
            (None, Some(f)) => ((f * self.bdp_packets()).round() as usize).max(1),
            (None, None) => 1,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.rate_bps > 0.0 && self.rate_bps.is_finite()) {
            return Err(invalid("link.rate_bps", "must be positive"));
        }
        if !(self.prop_delay_s > 0.0 && self.prop_delay_s.is_finite()) {
            return Err(invalid("link.prop_delay_s", "must be positive"));
        }
        match (self.queue_pkts, self.queue_bdp) {
            (Some(0), _) => return Err(invalid("link.queue_pkts", "must be positive")),
            (Some(_), Some(_)) | (None, None) => {
                return Err(invalid("link", "give exactly one of queue_pkts and queue_bdp"))
            }
            (None, Some(f)) if !(f > 0.0 && f.is_finite()) => {
                return Err(invalid("link.queue_bdp", "must be positive"))
            }
            _ => {}
        }
        if self.mtu_bytes == 0 {
            return Err(invalid("link.mtu_bytes", "must be positive"));
        }
        self.loss.validate().map_err(|r| invalid("link.loss", r))?;
        if !(0.0..1.0).contains(&self.ack_loss_p) {
            return Err(invalid("link.ack_loss_p", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Ctcp,
    Reno,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Ctcp => "ctcp",
            Protocol::Reno => "reno",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub protocol: Protocol,
    #[serde(default)]
    pub start_s: f64,
    /// Finite transfer size; absent means the flow sends until the end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_bytes: Option<u64>,
    /// Code and carry real payload bytes. Without it packets carry only
    /// headers while coding vectors and decoder ranks stay exact.
    #[serde(default)]
    pub carry_payload: bool,
    #[serde(default)]
    pub ctcp: SenderConfig,
    #[serde(default)]
    pub reno: RenoConfig,
}

impl FlowSpec {
    pub fn new(protocol: Protocol) -> Self {
        Self {
            protocol,
            start_s: 0.0,
            file_bytes: None,
            carry_payload: false,
            ctcp: SenderConfig::default(),
            reno: RenoConfig::default(),
        }
    }

    pub fn payload_len(&self) -> u16 {
        match self.protocol {
            Protocol::Ctcp => self.ctcp.payload_len,
            Protocol::Reno => self.reno.payload_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    /// Spacing of time-series samples.
    #[serde(default = "default_sample_interval")]
    pub sample_interval_s: f64,
    /// Samples before `start_s + warmup_s` are left out of window averages.
    #[serde(default)]
    pub warmup_s: f64,
    pub link: LinkConfig,
    pub flows: Vec<FlowSpec>,
}

fn default_sample_interval() -> f64 {
    0.1
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.id.is_empty() {
            return Err(invalid("id", "must not be empty"));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("duration_s", "must be a non-negative number"));
        }
        if !(self.sample_interval_s > 0.0) {
            return Err(invalid("sample_interval_s", "must be positive"));
        }
        if !(self.warmup_s >= 0.0) {
            return Err(invalid("warmup_s", "must be non-negative"));
        }
        self.link.validate()?;
        if self.flows.is_empty() {
            return Err(invalid("flows", "at least one flow is required"));
        }
        for (i, f) in self.flows.iter().enumerate() {
            if !(f.start_s >= 0.0 && f.start_s.is_finite()) {
                return Err(invalid(format!("flows[{i}].start_s"), "must be non-negative"));
            }
            if f.carry_payload && (f.file_bytes.is_none() || f.protocol != Protocol::Ctcp) {
                return Err(invalid(
                    format!("flows[{i}].carry_payload"),
                    "needs a ctcp flow with file_bytes",
                ));
            }
            if f.file_bytes == Some(0) {
                return Err(invalid(format!("flows[{i}].file_bytes"), "must be positive"));
            }
            f.ctcp
                .validate()
                .map_err(|e| invalid(format!("flows[{i}].ctcp"), e.to_string()))?;
            f.reno.validate().map_err(|e| invalid(format!("flows[{i}].reno"), e))?;
        }
        Ok(())
    }

    /// Names accepted by [`Scenario::set_param`].
    pub const PARAMS: &'static [&'static str] = &[
        "loss_p",
        "queue_bdp",
        "queue_pkts",
        "rate_bps",
        "prop_delay_s",
        "ack_loss_p",
        "duration_s",
        "seed",
        "file_bytes",
        "burst_width_s",
        "burst_period_s",
    ];

    /// Overrides one field by name and revalidates.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), ScenarioError> {
        match name {
            "loss_p" => set_iid(&mut self.link.loss, value),
            "queue_bdp" => {
                self.link.queue_bdp = Some(value);
                self.link.queue_pkts = None;
            }
            "queue_pkts" => {
                self.link.queue_pkts = Some(value.round().max(0.0) as u32);
                self.link.queue_bdp = None;
            }
            "rate_bps" => self.link.rate_bps = value,
            "prop_delay_s" => self.link.prop_delay_s = value,
            "ack_loss_p" => self.link.ack_loss_p = value,
            "duration_s" => self.duration_s = value,
            "seed" => self.seed = value.max(0.0) as u64,
            "file_bytes" => {
                for f in &mut self.flows {
                    f.file_bytes = Some(value.round().max(0.0) as u64);
                }
            }
            "burst_width_s" | "burst_period_s" => {
                if !set_burst(&mut self.link.loss, name, value) {
                    return Err(invalid(name, "scenario has no periodic_burst loss"));
                }
            }
            _ => return Err(ScenarioError::UnknownParam(name.to_string())),
        }
        self.validate()
    }
}

fn set_iid(loss: &mut LossModel, p: f64) {
    match loss {
        LossModel::Iid { p: old } => *old = p,
        LossModel::Composite { parts } => match parts.iter_mut().find(|m| matches!(m, LossModel::Iid { .. })) {
            Some(LossModel::Iid { p: old }) => *old = p,
            _ => parts.push(LossModel::Iid { p }),
        },
        LossModel::PeriodicBurst { .. } => {
            let burst = std::mem::take(loss);
            *loss = LossModel::Composite {
                parts: vec![burst, LossModel::Iid { p }],
            };
        }
        LossModel::None => *loss = LossModel::Iid { p },
    }
}

fn set_burst(loss: &mut LossModel, name: &str, v: f64) -> bool {
    match loss {
        LossModel::PeriodicBurst { period_s, width_s } => {
            if name == "burst_width_s" {
                *width_s = v;
            } else {
                *period_s = v;
            }
            true
        }
        LossModel::Composite { parts } => parts.iter_mut().any(|m| set_burst(m, name, v)),
        _ => false,
    }
}
