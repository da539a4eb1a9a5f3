//! 24-bit frame header: MCS id, payload length, frame kind, parity, tail.
//!
//! ```text
//! bit  0..4   MCS id (LSB first)
//! bit  4..16  payload length in bytes (LSB first)
//! bit 16      kind (0 = NDP, 1 = DATA)
//! bit 17      even parity over bits 0..17
//! bit 18..24  zero tail
//! ```
//!
//! The header is carried in one OFDM symbol with BPSK rate 1/2.

use thiserror::Error;

use crate::config::Mcs;
use crate::frame::FrameKind;

pub const HEADER_BITS: usize = 24;
pub const HEADER_CODED_BITS: usize = 2 * HEADER_BITS;
pub const MAX_PAYLOAD_LEN: usize = (1 << 12) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub mcs: Mcs,
    pub payload_len: usize,
    pub kind: FrameKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("payload length {0} does not fit the 12-bit length field")]
    LengthOverflow(usize),
    #[error("header parity check failed")]
    Parity,
    #[error("unknown MCS id {0}")]
    UnknownMcs(u8),
    #[error("header tail bits are not zero")]
    Tail,
    #[error("NDP header carries nonzero length {0}")]
    NdpWithPayload(usize),
    #[error("DATA header carries a zero-length payload")]
    EmptyData,
    #[error("header needs {HEADER_CODED_BITS} coded bits, got {0}")]
    Truncated(usize),
}

fn push_field(bits: &mut Vec<u8>, value: usize, width: usize) {
    for i in 0..width {
        bits.push(((value >> i) & 1) as u8);
    }
}

fn read_field(bits: &[u8]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| (b as usize & 1) << i).sum()
}

impl Header {
    pub fn new(mcs: Mcs, payload_len: usize, kind: FrameKind) -> Result<Self, HeaderError> {
        if payload_len > MAX_PAYLOAD_LEN {
            return Err(HeaderError::LengthOverflow(payload_len));
        }
        let payload_len = match kind {
            FrameKind::Ndp => 0,
            FrameKind::Data => payload_len,
        };
        Ok(Header { mcs, payload_len, kind })
    }

    pub fn to_bits(&self) -> [u8; HEADER_BITS] {
        let mut bits = Vec::with_capacity(HEADER_BITS);
        push_field(&mut bits, self.mcs.id() as usize, 4);
        push_field(&mut bits, self.payload_len, 12);
        bits.push(matches!(self.kind, FrameKind::Data) as u8);
        let parity = bits.iter().fold(0u8, |p, b| p ^ b);
        bits.push(parity);
        bits.resize(HEADER_BITS, 0);
        bits.try_into().unwrap()
    }

    pub fn from_bits(bits: &[u8; HEADER_BITS]) -> Result<Self, HeaderError> {
        let parity = bits[..18].iter().fold(0u8, |p, b| p ^ (b & 1));
        if parity != 0 {
            return Err(HeaderError::Parity);
        }
        if bits[18..].iter().any(|b| b & 1 != 0) {
            return Err(HeaderError::Tail);
        }
        let id = read_field(&bits[0..4]) as u8;
        let mcs = Mcs::from_id(id).ok_or(HeaderError::UnknownMcs(id))?;
        let payload_len = read_field(&bits[4..16]);
        let kind = if bits[16] & 1 == 1 { FrameKind::Data } else { FrameKind::Ndp };
        match kind {
            FrameKind::Ndp if payload_len != 0 => Err(HeaderError::NdpWithPayload(payload_len)),
            FrameKind::Data if payload_len == 0 => Err(HeaderError::EmptyData),
            _ => Ok(Header { mcs, payload_len, kind }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        let h = Header::new(Mcs::QAM16_3_4, 500, FrameKind::Data).unwrap();
        assert_eq!(Header::from_bits(&h.to_bits()).unwrap(), h);
    }

    #[test]
    fn ndp_length_is_zero() {
        let h = Header::new(Mcs::BPSK_1_2, 123, FrameKind::Ndp).unwrap();
        assert_eq!(h.payload_len, 0);
        assert_eq!(Header::from_bits(&h.to_bits()).unwrap().kind, FrameKind::Ndp);
    }

    #[test]
    fn parity_flip_rejected() {
        let h = Header::new(Mcs::QPSK_1_2, 77, FrameKind::Data).unwrap();
        let mut bits = h.to_bits();
        bits[17] ^= 1;
        assert_eq!(Header::from_bits(&bits), Err(HeaderError::Parity));
        let mut bits = h.to_bits();
        bits[5] ^= 1;
        assert_eq!(Header::from_bits(&bits), Err(HeaderError::Parity));
    }

    #[test]
    fn length_overflow() {
        assert_eq!(Header::new(Mcs::QPSK_1_2, 4096, FrameKind::Data), Err(HeaderError::LengthOverflow(4096)));
        assert!(Header::new(Mcs::QPSK_1_2, 4095, FrameKind::Data).is_ok());
    }
}
