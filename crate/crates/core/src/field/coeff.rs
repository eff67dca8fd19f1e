// SPDX-License-Identifier: Apache-2.0

//! Coding-coefficient generation shared by sender and receiver.
//!
//! A packet carries only a 32-bit seed; both ends expand it into the same
//! coefficient vector. The generator is xorshift64* (Vigna's constants),
//! seeded with the 32-bit seed duplicated into both halves of the state, and
//! each coefficient is the low byte of one output.

use super::gf256::Symbol;

/// xorshift64* with the `12, 25, 27` shift triple.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub const MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

    pub fn from_seed(seed: u32) -> Self {
        let s = seed as u64;
        Self { state: (s << 32) | s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(Self::MULTIPLIER)
    }
}

/// Dense coefficient vector for one coded packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingVector(pub Vec<Symbol>);

impl CodingVector {
    /// The systematic vector `e_index` of a block of `len` packets.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = vec![Symbol::ZERO; len];
        v[index] = Symbol::ONE;
        CodingVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|s| s.is_zero())
    }

    pub fn as_bytes(&self) -> Vec<u8> {
        self.0.iter().map(|s| s.0).collect()
    }
}

/// Expands `seed` into `blk_len` coefficients. Pure in `(seed, blk_len)`.
///
/// Seed 0 leaves the generator state at zero and yields the zero vector;
/// senders avoid it through [`nonzero_coeff_vector`].
pub fn coeff_vector(seed: u32, blk_len: usize) -> CodingVector {
    let mut rng = XorShift64Star::from_seed(seed);
    CodingVector((0..blk_len).map(|_| Symbol(rng.next_u64() as u8)).collect())
}

/// Walks `seed, seed+1, ...` until the expanded vector is nonzero and returns
/// the seed actually used alongside the vector.
pub fn nonzero_coeff_vector(seed: u32, blk_len: usize) -> (u32, CodingVector) {
    let mut s = seed;
    loop {
        let v = coeff_vector(s, blk_len);
        if !v.is_zero() {
            return (s, v);
        }
        s = s.wrapping_add(1);
    }
}
