// SPDX-License-Identifier: Apache-2.0

//! GF(256) arithmetic and systematic random linear block coding.

mod block;
mod coeff;
mod decoder;
pub mod gf256;

pub use block::Block;
pub use coeff::{coeff_vector, nonzero_coeff_vector, CodingVector, XorShift64Star};
pub use decoder::{DecoderState, Insertion};
pub use gf256::Symbol;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("block must contain at least one non-empty packet")]
    EmptyBlock,
    #[error("packet index {index} out of range for block of {blk_len}")]
    IndexOutOfRange { index: usize, blk_len: usize },
    #[error("coding vector has length {got}, block has {expected} packets")]
    VectorLength { expected: usize, got: usize },
    #[error("payload has length {got}, expected {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("block not decodable yet: rank {rank} of {blk_len}")]
    NotDecodable { rank: usize, blk_len: usize },
}
