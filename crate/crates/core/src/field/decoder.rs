// SPDX-License-Identifier: Apache-2.0

//! Incremental Gaussian elimination over GF(256).
//!
//! Rows are kept in reduced row-echelon form, indexed by pivot column, with
//! every pivot normalised to 1. Inserting a packet eliminates it against the
//! stored pivots; if anything survives it becomes a new pivot row and is
//! back-substituted into the existing rows. Once the rank reaches the block
//! length each row is a unit vector and its payload is the source packet.

use super::gf256::{inv, mul_add_slice, mul_slice};
use super::CodecError;

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

/// Outcome of [`DecoderState::insert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub innovative: bool,
    pub rank: usize,
}

/// Per-block decoding matrix.
#[derive(Debug, Clone)]
pub struct DecoderState {
    blk_len: usize,
    payload_len: usize,
    rows: Vec<Option<Row>>,
    rank: usize,
}

impl DecoderState {
    pub fn new(blk_len: usize, payload_len: usize) -> Self {
        Self {
            blk_len,
            payload_len,
            rows: vec![None; blk_len],
            rank: 0,
        }
    }

    pub fn blk_len(&self) -> usize {
        self.blk_len
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_decodable(&self) -> bool {
        self.rank == self.blk_len
    }

    pub fn pivot_present(&self, column: usize) -> bool {
        self.rows.get(column).is_some_and(Option::is_some)
    }

    /// Inserts the systematic packet `index`, whose vector is `e_index`.
    pub fn insert_systematic(&mut self, index: usize, payload: &[u8]) -> Result<Insertion, CodecError> {
        if index >= self.blk_len {
            return Err(CodecError::IndexOutOfRange {
                index,
                blk_len: self.blk_len,
            });
        }
        let mut coeffs = vec![0u8; self.blk_len];
        coeffs[index] = 1;
        self.insert_owned(coeffs, payload.to_vec())
    }

    /// Row-reduces `(coeffs, payload)` against the stored pivots. A dependent
    /// packet leaves the state untouched.
    pub fn insert(&mut self, coeffs: &[u8], payload: &[u8]) -> Result<Insertion, CodecError> {
        self.insert_owned(coeffs.to_vec(), payload.to_vec())
    }

    fn insert_owned(&mut self, mut coeffs: Vec<u8>, mut payload: Vec<u8>) -> Result<Insertion, CodecError> {
        if coeffs.len() != self.blk_len {
            return Err(CodecError::VectorLength {
                expected: self.blk_len,
                got: coeffs.len(),
            });
        }
        if payload.len() != self.payload_len {
            return Err(CodecError::PayloadLength {
                expected: self.payload_len,
                got: payload.len(),
            });
        }
        if self.is_decodable() {
            return Ok(Insertion {
                innovative: false,
                rank: self.rank,
            });
        }

        // Stored rows are zero in every other pivot column, so a single pass
        // in any order clears all pivot columns of the incoming row.
        for col in 0..self.blk_len {
            let f = coeffs[col];
            if f == 0 {
                continue;
            }
            if let Some(row) = &self.rows[col] {
                mul_add_slice(&mut coeffs, &row.coeffs, f);
                mul_add_slice(&mut payload, &row.payload, f);
            }
        }

        let Some(pivot) = coeffs.iter().position(|&c| c != 0) else {
            return Ok(Insertion {
                innovative: false,
                rank: self.rank,
            });
        };

        let scale = inv(coeffs[pivot])?;
        mul_slice(&mut coeffs, scale);
        mul_slice(&mut payload, scale);

        for row in self.rows.iter_mut().flatten() {
            let f = row.coeffs[pivot];
            if f != 0 {
                mul_add_slice(&mut row.coeffs, &coeffs, f);
                mul_add_slice(&mut row.payload, &payload, f);
            }
        }

        self.rows[pivot] = Some(Row { coeffs, payload });
        self.rank += 1;
        Ok(Insertion {
            innovative: true,
            rank: self.rank,
        })
    }

    /// Source payloads in block order. Requires full rank.
    pub fn decode(&self) -> Result<Vec<Vec<u8>>, CodecError> {
        if !self.is_decodable() {
            return Err(CodecError::NotDecodable {
                rank: self.rank,
                blk_len: self.blk_len,
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.as_ref().expect("full rank").payload.clone())
            .collect())
    }
}
