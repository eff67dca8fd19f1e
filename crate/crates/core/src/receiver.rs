// SPDX-License-Identifier: Apache-2.0

//! The receiving side: per-block decoders, per-packet ACKs and in-order
//! delivery of decoded blocks.

use std::collections::BTreeMap;

use crate::field::{coeff_vector, DecoderState};
use crate::wire::{Ack, Hello, Packet};

/// Connection state of one receiver.
#[derive(Debug, Clone)]
pub struct Receiver {
    numblks: u32,
    payload_len: usize,
    stream_len: Option<u64>,
    ack_currblk: u32,
    ack_currdof: u16,
    decoders: BTreeMap<u32, DecoderState>,
    /// Decoded bytes not yet handed out by [`Receiver::deliver`].
    pending: Vec<u8>,
    decoded_bytes: u64,
    delivered_blocks: u32,
    innovative: u64,
    redundant: u64,
}

impl Receiver {
    /// `payload_len` is the nominal source bytes per packet, used for
    /// accounting even when packets arrive without payload bytes.
    pub fn new(numblks: u16, payload_len: u16, stream_len: Option<u64>) -> Self {
        Self {
            numblks: numblks.max(1) as u32,
            payload_len: payload_len as usize,
            stream_len,
            ack_currblk: 0,
            ack_currdof: 0,
            decoders: BTreeMap::new(),
            pending: Vec::new(),
            decoded_bytes: 0,
            delivered_blocks: 0,
            innovative: 0,
            redundant: 0,
        }
    }

    pub fn from_hello(h: &Hello) -> Self {
        Self::new(h.numblks, h.payload_len, Some(h.stream_len))
    }

    pub fn ack_currblk(&self) -> u32 {
        self.ack_currblk
    }
    pub fn ack_currdof(&self) -> u16 {
        self.ack_currdof
    }
    /// Blocks decoded and released to the application.
    pub fn delivered_blocks(&self) -> u32 {
        self.delivered_blocks
    }
    /// Application bytes decoded so far, padding excluded.
    pub fn decoded_bytes(&self) -> u64 {
        self.decoded_bytes
    }
    pub fn innovative_packets(&self) -> u64 {
        self.innovative
    }
    pub fn redundant_packets(&self) -> u64 {
        self.redundant
    }

    /// Whether the whole stream has been decoded. Always false for an
    /// endless stream.
    pub fn is_complete(&self) -> bool {
        self.stream_len.is_some_and(|l| self.decoded_bytes >= l)
    }

    /// Rank held for `block_no`, if a decoder exists.
    pub fn rank_of(&self, block_no: u32) -> Option<usize> {
        self.decoders.get(&block_no).map(DecoderState::rank)
    }

    fn ack_for(&self, seqno: u32) -> Ack {
        Ack {
            ack_currblk: self.ack_currblk,
            ack_currdof: self.ack_currdof,
            ack_seqno: seqno,
        }
    }

    /// Absorbs one packet and returns its acknowledgement.
    pub fn on_packet(&mut self, pkt: &Packet) -> Ack {
        let in_window =
            pkt.block_no >= self.ack_currblk && pkt.block_no < self.ack_currblk.saturating_add(self.numblks);
        if !in_window || pkt.blk_len == 0 || self.is_complete() {
            self.redundant += 1;
            return self.ack_for(pkt.seqno);
        }

        let blk_len = pkt.blk_len as usize;
        let decoder = self
            .decoders
            .entry(pkt.block_no)
            .or_insert_with(|| DecoderState::new(blk_len, pkt.payload.len()));

        let result = if decoder.blk_len() != blk_len {
            None
        } else if pkt.is_systematic() {
            decoder.insert_systematic(pkt.sys_index as usize, &pkt.payload).ok()
        } else {
            let v = coeff_vector(pkt.seed, blk_len).as_bytes();
            decoder.insert(&v, &pkt.payload).ok()
        };

        match result {
            Some(r) if r.innovative => {
                self.innovative += 1;
                if pkt.block_no == self.ack_currblk {
                    self.ack_currdof += 1;
                    if self.ack_currdof as usize == blk_len {
                        self.advance();
                    }
                }
            }
            _ => self.redundant += 1,
        }
        self.ack_for(pkt.seqno)
    }

    /// Releases the current block and any following full-rank blocks.
    fn advance(&mut self) {
        while let Some(d) = self.decoders.get(&self.ack_currblk) {
            if !d.is_decodable() {
                break;
            }
            let d = self.decoders.remove(&self.ack_currblk).expect("present");
            let nominal = (d.blk_len() * self.payload_len) as u64;
            let take = match self.stream_len {
                Some(l) => nominal.min(l.saturating_sub(self.decoded_bytes)),
                None => nominal,
            };
            if d.payload_len() > 0 {
                let mut bytes: Vec<u8> = d.decode().expect("full rank").concat();
                bytes.truncate(take as usize);
                self.pending.extend_from_slice(&bytes);
            }
            self.decoded_bytes += take;
            self.delivered_blocks += 1;
            self.ack_currblk += 1;
        }
        self.ack_currdof = self.decoders.get(&self.ack_currblk).map_or(0, |d| d.rank() as u16);
    }

    /// Decoded bytes not yet returned, in stream order.
    pub fn deliver(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.pending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Block;

    fn sys(block: u32, seq: u32, len: u16, idx: u16, payload: Vec<u8>) -> Packet {
        Packet::systematic(block, seq, len, idx, payload)
    }

    #[test]
    fn single_packet_block_advances() {
        let mut r = Receiver::new(2, 2, None);
        let a = r.on_packet(&sys(0, 0, 1, 0, vec![7, 8]));
        assert_eq!(a.ack_currblk, 1);
        assert_eq!(a.ack_currdof, 0);
        assert_eq!(a.ack_seqno, 0);
        assert_eq!(r.deliver(), vec![7, 8]);
    }

    #[test]
    fn duplicate_leaves_state() {
        let mut r = Receiver::new(2, 2, None);
        r.on_packet(&sys(0, 0, 3, 0, vec![1, 1]));
        let a = r.on_packet(&sys(0, 1, 3, 0, vec![1, 1]));
        assert_eq!((a.ack_currblk, a.ack_currdof, a.ack_seqno), (0, 1, 1));
        assert_eq!(r.redundant_packets(), 1);
    }

    #[test]
    fn later_block_waits_for_current() {
        let mut r = Receiver::new(3, 1, None);
        r.on_packet(&sys(0, 0, 2, 0, vec![0]));
        // block 1 completes first
        r.on_packet(&sys(1, 1, 2, 0, vec![10]));
        let a = r.on_packet(&sys(1, 2, 2, 1, vec![11]));
        assert_eq!((a.ack_currblk, a.ack_currdof), (0, 1));
        // block 2 partially received
        r.on_packet(&sys(2, 3, 2, 1, vec![21]));
        let a = r.on_packet(&sys(0, 4, 2, 1, vec![1]));
        assert_eq!((a.ack_currblk, a.ack_currdof), (2, 1));
        assert_eq!(r.deliver(), vec![0, 1, 10, 11]);
    }

    #[test]
    fn out_of_window_is_acked_not_stored() {
        let mut r = Receiver::new(2, 1, None);
        let a = r.on_packet(&sys(5, 9, 2, 0, vec![1]));
        assert_eq!(a.ack_seqno, 9);
        assert_eq!(r.rank_of(5), None);
    }

    #[test]
    fn padding_stripped() {
        let data: Vec<u8> = (1..=7).collect();
        let block = Block::from_bytes(0, &data, 3).unwrap();
        let mut r = Receiver::new(1, 3, Some(7));
        assert!(r.deliver().is_empty());
        for i in 0..3 {
            r.on_packet(&sys(0, i, 3, i as u16, block.packets()[i as usize].clone()));
        }
        assert_eq!(r.deliver(), data);
        assert!(r.is_complete());
        assert_eq!(r.decoded_bytes(), 7);
    }

    #[test]
    fn coded_packets_repair() {
        let data: Vec<u8> = (0..16).collect();
        let block = Block::from_bytes(0, &data, 4).unwrap();
        let mut r = Receiver::new(1, 4, Some(16));
        r.on_packet(&sys(0, 0, 4, 0, block.packets()[0].clone()));
        r.on_packet(&sys(0, 1, 4, 2, block.packets()[2].clone()));
        for (seq, seed) in [(2u32, 77u32), (3, 78)] {
            let a = r.on_packet(&Packet::coded(0, seq, 4, seed, block.encode_coded(seed)));
            assert_eq!(a.ack_seqno, seq);
        }
        assert_eq!(r.ack_currblk(), 1);
        assert_eq!(r.deliver(), data);
    }
}
