// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x + 1.
//!
//! Addition is XOR. Multiplication goes through log/exp tables built at
//! compile time from the generator `0x03`, plus a full 64 KiB product table
//! for the slice kernels used by the encoder and decoder.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

use super::CodecError;

/// Reduction polynomial, including the x^8 term.
pub const POLY: u16 = 0x11B;

const fn xtime(a: u8) -> u8 {
    let shifted = (a as u16) << 1;
    if shifted & 0x100 != 0 {
        (shifted ^ POLY) as u8
    } else {
        shifted as u8
    }
}

const fn build_exp_log() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u8 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x;
        log[x as usize] = i as u8;
        // multiply by the generator 0x03 = x + 1
        x = xtime(x) ^ x;
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_exp_log();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

const fn build_mul_table() -> [[u8; 256]; 256] {
    let exp = TABLES.0;
    let log = TABLES.1;
    let mut t = [[0u8; 256]; 256];
    let mut a = 1;
    while a < 256 {
        let mut b = 1;
        while b < 256 {
            t[a][b] = exp[log[a] as usize + log[b] as usize];
            b += 1;
        }
        a += 1;
    }
    t
}

static MUL: [[u8; 256]; 256] = build_mul_table();

/// Product of two field elements.
#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    MUL[a as usize][b as usize]
}

/// Multiplicative inverse. Zero has none.
#[inline]
pub fn inv(a: u8) -> Result<u8, CodecError> {
    if a == 0 {
        return Err(CodecError::ZeroInverse);
    }
    Ok(EXP[255 - LOG[a as usize] as usize])
}

/// `dst[i] = c * dst[i]`
pub fn mul_slice(dst: &mut [u8], c: u8) {
    match c {
        0 => dst.fill(0),
        1 => {}
        _ => {
            let row = &MUL[c as usize];
            for d in dst.iter_mut() {
                *d = row[*d as usize];
            }
        }
    }
}

/// `dst[i] ^= c * src[i]`, the row operation behind encoding and elimination.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
        }
        _ => {
            let row = &MUL[c as usize];
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= row[*s as usize];
            }
        }
    }
}

/// An element of GF(256).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u8);

impl Symbol {
    pub const ZERO: Symbol = Symbol(0);
    pub const ONE: Symbol = Symbol(1);

    pub fn inv(self) -> Result<Symbol, CodecError> {
        inv(self.0).map(Symbol)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({:#04x})", self.0)
    }
}

impl From<u8> for Symbol {
    fn from(v: u8) -> Self {
        Symbol(v)
    }
}

impl From<Symbol> for u8 {
    fn from(s: Symbol) -> Self {
        s.0
    }
}

#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl Add for Symbol {
    type Output = Symbol;
    fn add(self, rhs: Symbol) -> Symbol {
        Symbol(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl AddAssign for Symbol {
    fn add_assign(&mut self, rhs: Symbol) {
        self.0 ^= rhs.0;
    }
}

// characteristic 2: subtraction is addition
#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl Sub for Symbol {
    type Output = Symbol;
    fn sub(self, rhs: Symbol) -> Symbol {
        Symbol(self.0 ^ rhs.0)
    }
}

impl Mul for Symbol {
    type Output = Symbol;
    fn mul(self, rhs: Symbol) -> Symbol {
        Symbol(mul(self.0, rhs.0))
    }
}

impl MulAssign for Symbol {
    fn mul_assign(&mut self, rhs: Symbol) {
        self.0 = mul(self.0, rhs.0);
    }
}

#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl Div for Symbol {
    type Output = Symbol;
    /// Panics on division by zero, like integer division.
    fn div(self, rhs: Symbol) -> Symbol {
        let r = rhs.inv().expect("division by zero in GF(256)");
        self * r
    }
}
