// SPDX-License-Identifier: Apache-2.0

use super::coeff::{coeff_vector, CodingVector};
use super::gf256::mul_add_slice;
use super::CodecError;

/// A group of equal-length packets coded together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub block_no: u32,
    packets: Vec<Vec<u8>>,
    payload_len: usize,
}

impl Block {
    pub fn new(block_no: u32, packets: Vec<Vec<u8>>) -> Result<Self, CodecError> {
        let payload_len = packets.first().map(Vec::len).ok_or(CodecError::EmptyBlock)?;
        if let Some(bad) = packets.iter().find(|p| p.len() != payload_len) {
            return Err(CodecError::PayloadLength {
                expected: payload_len,
                got: bad.len(),
            });
        }
        Ok(Self {
            block_no,
            packets,
            payload_len,
        })
    }

    /// Cuts `data` into `payload_len`-byte packets, zero-padding the last one.
    pub fn from_bytes(block_no: u32, data: &[u8], payload_len: usize) -> Result<Self, CodecError> {
        if data.is_empty() || payload_len == 0 {
            return Err(CodecError::EmptyBlock);
        }
        let packets = data
            .chunks(payload_len)
            .map(|c| {
                let mut p = c.to_vec();
                p.resize(payload_len, 0);
                p
            })
            .collect();
        Self::new(block_no, packets)
    }

    pub fn blk_len(&self) -> usize {
        self.packets.len()
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn packets(&self) -> &[Vec<u8>] {
        &self.packets
    }

    /// The `index`-th source packet, sent verbatim.
    pub fn encode_systematic(&self, index: usize) -> Result<Vec<u8>, CodecError> {
        self.packets.get(index).cloned().ok_or(CodecError::IndexOutOfRange {
            index,
            blk_len: self.blk_len(),
        })
    }

    /// `sum_i coeff[i] * packet_i`, byte-wise.
    pub fn encode_with(&self, coeffs: &CodingVector) -> Result<Vec<u8>, CodecError> {
        if coeffs.len() != self.blk_len() {
            return Err(CodecError::VectorLength {
                expected: self.blk_len(),
                got: coeffs.len(),
            });
        }
        let mut out = vec![0u8; self.payload_len];
        for (c, pkt) in coeffs.0.iter().zip(&self.packets) {
            mul_add_slice(&mut out, pkt, c.0);
        }
        Ok(out)
    }

    /// Coded payload for the vector expanded from `seed`.
    pub fn encode_coded(&self, seed: u32) -> Vec<u8> {
        let v = coeff_vector(seed, self.blk_len());
        self.encode_with(&v).expect("vector length matches block")
    }
}
