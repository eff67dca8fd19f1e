// SPDX-License-Identifier: Apache-2.0

//! Byte layout of the protocol messages.
//!
//! Every frame starts with the magic byte `0xC7` and a type byte. Integers
//! are big-endian and there is no padding. See `docs/wire.md` for the table.
//!
//! | type | message | body |
//! |------|---------|------|
//! | 0 | data | block_no u32, seqno u32, seed u32, blk_len u16, flags u8, sys_index u16, payload_len u16, payload |
//! | 1 | ack | ack_currblk u32, ack_currdof u16, ack_seqno u32 |
//! | 2 | hello | numblks u16, payload_len u16, stream_len u64 |

use thiserror::Error;

pub const MAGIC: u8 = 0xC7;
pub const TYPE_DATA: u8 = 0;
pub const TYPE_ACK: u8 = 1;
pub const TYPE_HELLO: u8 = 2;

/// Set in [`Packet::flags`] for uncoded packets.
pub const FLAG_SYSTEMATIC: u8 = 0x01;
/// `sys_index` value carried by coded packets.
pub const NO_SYS_INDEX: u16 = 0xFFFF;

/// Data frame length without payload.
pub const DATA_HEADER_LEN: usize = 2 + 4 + 4 + 4 + 2 + 1 + 2 + 2;
pub const ACK_LEN: usize = 2 + 4 + 2 + 4;
pub const HELLO_LEN: usize = 2 + 2 + 2 + 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unexpected frame type {0}")]
    BadType(u8),
    #[error("frame truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("declared payload length {declared} exceeds the {available} bytes available")]
    PayloadOverrun { declared: usize, available: usize },
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

/// A data packet. Systematic packets carry source packet `sys_index`
/// verbatim; coded packets carry the combination expanded from `seed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub block_no: u32,
    pub seqno: u32,
    pub seed: u32,
    pub blk_len: u16,
    pub flags: u8,
    pub sys_index: u16,
    pub payload: Vec<u8>,
}

impl Packet {
    pub fn systematic(block_no: u32, seqno: u32, blk_len: u16, index: u16, payload: Vec<u8>) -> Self {
        Self {
            block_no,
            seqno,
            seed: 0,
            blk_len,
            flags: FLAG_SYSTEMATIC,
            sys_index: index,
            payload,
        }
    }

    pub fn coded(block_no: u32, seqno: u32, blk_len: u16, seed: u32, payload: Vec<u8>) -> Self {
        Self {
            block_no,
            seqno,
            seed,
            blk_len,
            flags: 0,
            sys_index: NO_SYS_INDEX,
            payload,
        }
    }

    pub fn is_systematic(&self) -> bool {
        self.flags & FLAG_SYSTEMATIC != 0
    }

    fn validate(&self) -> Result<(), WireError> {
        if self.blk_len == 0 {
            return Err(WireError::InvalidField("blk_len must be at least 1"));
        }
        if self.flags & !FLAG_SYSTEMATIC != 0 {
            return Err(WireError::InvalidField("unknown flag bits"));
        }
        if self.is_systematic() {
            if self.sys_index >= self.blk_len {
                return Err(WireError::InvalidField("sys_index must be below blk_len"));
            }
        } else if self.sys_index != NO_SYS_INDEX {
            return Err(WireError::InvalidField("coded packet must carry sys_index 0xFFFF"));
        }
        if self.payload.len() > u16::MAX as usize {
            return Err(WireError::InvalidField("payload longer than 65535 bytes"));
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        DATA_HEADER_LEN + self.payload.len()
    }
}

/// Per-packet acknowledgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    pub ack_currblk: u32,
    pub ack_currdof: u16,
    pub ack_seqno: u32,
}

/// Connection-start metadata: window size, packet size and total stream
/// length, so the receiver can strip the zero padding of the final block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    pub numblks: u16,
    pub payload_len: u16,
    pub stream_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Data(Packet),
    Ack(Ack),
    Hello(Hello),
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or(WireError::Truncated {
            needed: end,
            have: self.buf.len(),
        })?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice of length N"))
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take()?))
    }

    fn finish(&self) -> Result<(), WireError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}

fn header(buf: &[u8], expected: u8) -> Result<Reader<'_>, WireError> {
    let mut r = Reader { buf, pos: 0 };
    let magic = r.u8()?;
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let ty = r.u8()?;
    if ty != expected {
        return Err(WireError::BadType(ty));
    }
    Ok(r)
}

pub fn encode_packet(p: &Packet) -> Result<Vec<u8>, WireError> {
    p.validate()?;
    let mut out = Vec::with_capacity(p.encoded_len());
    out.extend_from_slice(&[MAGIC, TYPE_DATA]);
    out.extend_from_slice(&p.block_no.to_be_bytes());
    out.extend_from_slice(&p.seqno.to_be_bytes());
    out.extend_from_slice(&p.seed.to_be_bytes());
    out.extend_from_slice(&p.blk_len.to_be_bytes());
    out.push(p.flags);
    out.extend_from_slice(&p.sys_index.to_be_bytes());
    out.extend_from_slice(&(p.payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&p.payload);
    Ok(out)
}

pub fn decode_packet(buf: &[u8]) -> Result<Packet, WireError> {
    let mut r = header(buf, TYPE_DATA)?;
    let block_no = r.u32()?;
    let seqno = r.u32()?;
    let seed = r.u32()?;
    let blk_len = r.u16()?;
    let flags = r.u8()?;
    let sys_index = r.u16()?;
    let payload_len = r.u16()? as usize;
    let available = buf.len() - r.pos;
    if payload_len > available {
        return Err(WireError::PayloadOverrun {
            declared: payload_len,
            available,
        });
    }
    let payload = buf[r.pos..r.pos + payload_len].to_vec();
    r.pos += payload_len;
    r.finish()?;
    let p = Packet {
        block_no,
        seqno,
        seed,
        blk_len,
        flags,
        sys_index,
        payload,
    };
    p.validate()?;
    Ok(p)
}

pub fn encode_ack(a: &Ack) -> Vec<u8> {
    let mut out = Vec::with_capacity(ACK_LEN);
    out.extend_from_slice(&[MAGIC, TYPE_ACK]);
    out.extend_from_slice(&a.ack_currblk.to_be_bytes());
    out.extend_from_slice(&a.ack_currdof.to_be_bytes());
    out.extend_from_slice(&a.ack_seqno.to_be_bytes());
    out
}

pub fn decode_ack(buf: &[u8]) -> Result<Ack, WireError> {
    let mut r = header(buf, TYPE_ACK)?;
    let a = Ack {
        ack_currblk: r.u32()?,
        ack_currdof: r.u16()?,
        ack_seqno: r.u32()?,
    };
    r.finish()?;
    Ok(a)
}

pub fn encode_hello(h: &Hello) -> Vec<u8> {
    let mut out = Vec::with_capacity(HELLO_LEN);
    out.extend_from_slice(&[MAGIC, TYPE_HELLO]);
    out.extend_from_slice(&h.numblks.to_be_bytes());
    out.extend_from_slice(&h.payload_len.to_be_bytes());
    out.extend_from_slice(&h.stream_len.to_be_bytes());
    out
}

pub fn decode_hello(buf: &[u8]) -> Result<Hello, WireError> {
    let mut r = header(buf, TYPE_HELLO)?;
    let h = Hello {
        numblks: r.u16()?,
        payload_len: r.u16()?,
        stream_len: r.u64()?,
    };
    r.finish()?;
    if h.numblks == 0 {
        return Err(WireError::InvalidField("numblks must be at least 1"));
    }
    Ok(h)
}

/// Decodes any frame, dispatching on the type byte.
pub fn decode_frame(buf: &[u8]) -> Result<Frame, WireError> {
    match buf.get(1) {
        _ if buf.is_empty() => Err(WireError::Truncated { needed: 2, have: 0 }),
        _ if buf[0] != MAGIC => Err(WireError::BadMagic(buf[0])),
        None => Err(WireError::Truncated { needed: 2, have: 1 }),
        Some(&TYPE_DATA) => decode_packet(buf).map(Frame::Data),
        Some(&TYPE_ACK) => decode_ack(buf).map(Frame::Ack),
        Some(&TYPE_HELLO) => decode_hello(buf).map(Frame::Hello),
        Some(&t) => Err(WireError::BadType(t)),
    }
}

pub fn encode_frame(f: &Frame) -> Result<Vec<u8>, WireError> {
    match f {
        Frame::Data(p) => encode_packet(p),
        Frame::Ack(a) => Ok(encode_ack(a)),
        Frame::Hello(h) => Ok(encode_hello(h)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_data_frame() {
        let p = Packet::coded(1, 2, 8, 3, vec![]);
        let bytes = encode_packet(&p).unwrap();
        // 4+4+4+2+1+2+2 field bytes plus magic and type
        assert_eq!(bytes.len(), 19 + 2);
        assert_eq!(bytes.len(), DATA_HEADER_LEN);
        assert_eq!(decode_packet(&bytes).unwrap(), p);
    }

    #[test]
    fn exact_layout() {
        let p = Packet::systematic(0x01020304, 0x0A0B0C0D, 0x0010, 0x0003, vec![0xEE, 0xFF]);
        let bytes = encode_packet(&p).unwrap();
        assert_eq!(
            bytes,
            vec![
                0xC7, 0x00, 0x01, 0x02, 0x03, 0x04, 0x0A, 0x0B, 0x0C, 0x0D, 0, 0, 0, 0, 0x00, 0x10, 0x01, 0x00, 0x03,
                0x00, 0x02, 0xEE, 0xFF
            ]
        );
        let a = Ack {
            ack_currblk: 7,
            ack_currdof: 0x0102,
            ack_seqno: 0xFFFF_FFFE,
        };
        assert_eq!(
            encode_ack(&a),
            vec![0xC7, 0x01, 0, 0, 0, 7, 0x01, 0x02, 0xFF, 0xFF, 0xFF, 0xFE]
        );
    }

    #[test]
    fn ack_frame() {
        let a = Ack {
            ack_currblk: 3,
            ack_currdof: 9,
            ack_seqno: 1000,
        };
        let bytes = encode_ack(&a);
        assert_eq!(bytes.len(), 12);
        assert_eq!(decode_ack(&bytes).unwrap(), a);
        assert!(matches!(
            decode_ack(&bytes[..11]),
            Err(WireError::Truncated { needed: 12, have: 11 })
        ));
    }

    #[test]
    fn rejects_malformed() {
        let p = Packet::coded(1, 2, 8, 3, vec![1, 2, 3]);
        let mut bytes = encode_packet(&p).unwrap();
        let mut bad = bytes.clone();
        bad[0] = 0x00;
        assert_eq!(decode_packet(&bad), Err(WireError::BadMagic(0)));
        assert_eq!(decode_frame(&bad), Err(WireError::BadMagic(0)));

        let short = &bytes[..bytes.len() - 1];
        assert_eq!(
            decode_packet(short),
            Err(WireError::PayloadOverrun {
                declared: 3,
                available: 2
            })
        );
        bytes.push(0);
        assert_eq!(decode_packet(&bytes), Err(WireError::TrailingBytes(1)));

        assert_eq!(decode_ack(&encode_packet(&p).unwrap()), Err(WireError::BadType(0)));

        let sys_out_of_range = Packet::systematic(0, 0, 4, 4, vec![]);
        assert!(encode_packet(&sys_out_of_range).is_err());
        assert_eq!(decode_frame(&[]), Err(WireError::Truncated { needed: 2, have: 0 }));
        assert_eq!(decode_frame(&[MAGIC, 9]), Err(WireError::BadType(9)));
    }

    #[test]
    fn hello_round_trip() {
        let h = Hello {
            numblks: 2,
            payload_len: 1451,
            stream_len: 1_000_000,
        };
        let bytes = encode_hello(&h);
        assert_eq!(bytes.len(), HELLO_LEN);
        assert_eq!(decode_frame(&bytes).unwrap(), Frame::Hello(h));
    }
}
