// SPDX-License-Identifier: Apache-2.0

//! Discrete-event simulation of flows sharing one bottleneck link.
//!
//! The link drops packets by its loss model on arrival, queues survivors
//! in a FIFO of fixed capacity and transmits them at the link rate. Half
//! the round-trip propagation delay is applied in each direction.

mod loss;
mod reno;
mod scenario;
mod sim;
mod stats;

pub use loss::{LossDecision, LossModel};
pub use reno::{RenoAck, RenoConfig, RenoReceiver, RenoSegment, RenoSender};
pub use scenario::{FlowSpec, LinkConfig, Protocol, Scenario, ScenarioError};
pub use sim::{run_scenario, Simulation};
pub use stats::{Counters, FlowStats, RunResult, Sample};
