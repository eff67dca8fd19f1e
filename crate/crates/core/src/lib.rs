// SPDX-License-Identifier: Apache-2.0

//! Network-coded TCP: a congestion-controlled transport that sends
//! systematic random linear combinations of packets over GF(256), with a
//! deterministic simulator and closed-form models to evaluate it.
//!
//! ```
//! use ctcp::field::{Block, DecoderState};
//!
//! let block = Block::from_bytes(0, b"coded transport!", 4).unwrap();
//! let mut dec = DecoderState::new(4, 4);
//! // two source packets lost, two coded packets repair them
//! dec.insert_systematic(0, &block.encode_systematic(0).unwrap()).unwrap();
//! dec.insert_systematic(3, &block.encode_systematic(3).unwrap()).unwrap();
//! for seed in [21, 22] {
//!     let v = ctcp::field::coeff_vector(seed, 4);
//!     dec.insert(v.as_bytes().as_slice(), &block.encode_coded(seed)).unwrap();
//! }
//! assert_eq!(dec.decode().unwrap().concat(), b"coded transport!");
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod field;
pub mod netsim;
pub mod receiver;
pub mod report;
pub mod sender;
pub mod time;
pub mod wire;

pub use receiver::Receiver;
pub use sender::{Sender, SenderConfig, Source};
pub use time::Time;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/field.md")]
    struct Field;
    #[doc = include_str!("../../../book/src/wire.md")]
    struct Wire;
    #[doc = include_str!("../../../book/src/sender.md")]
    struct Sender;
    #[doc = include_str!("../../../book/src/receiver.md")]
    struct Receiver;
    #[doc = include_str!("../../../book/src/simulator.md")]
    struct Simulator;
    #[doc = include_str!("../../../book/src/models.md")]
    struct Models;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
