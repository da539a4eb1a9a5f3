use crate::config::Mcs;

use super::coding::{conv_encode, puncture, TAIL_BITS};
use super::crc::crc32_append;
use super::scrambler::scramble;
use super::TxError;

/// Coded, punctured bits of one payload.
///
/// Information bits before coding are
/// `seed (8, clear) | scrambled(payload || CRC) | zero pad | 6 zero tail`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    pub bits: Vec<u8>,
    pub mcs: Mcs,
    pub source_len: usize,
    pub seed: u8,
    pub n_symbols: usize,
}

pub(crate) fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|b| (0..8).map(move |i| (b >> i) & 1)).collect()
}

pub(crate) fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, b)| acc | ((b & 1) << i))).collect()
}

/// Information bits before padding for a payload of `payload_len` bytes.
pub(crate) fn unpadded_bits(payload_len: usize) -> usize {
    8 + 8 * (payload_len + 4) + TAIL_BITS
}

/// OFDM symbols needed for a payload at the given MCS.
pub fn n_data_symbols(payload_len: usize, mcs: Mcs, n_data_subcarriers: usize) -> usize {
    unpadded_bits(payload_len).div_ceil(mcs.data_bits_per_symbol(n_data_subcarriers))
}

pub fn encode_payload(payload: &[u8], mcs: Mcs, seed: u8, n_data_subcarriers: usize) -> Result<EncodedStream, TxError> {
    let framed = crc32_append(payload)?;
    let n_symbols = n_data_symbols(payload.len(), mcs, n_data_subcarriers);
    let total = n_symbols * mcs.data_bits_per_symbol(n_data_subcarriers);

    let mut info = Vec::with_capacity(total);
    info.extend(bytes_to_bits(&[seed]));
    info.extend(scramble(&bytes_to_bits(&framed), seed)?);
    info.resize(total - TAIL_BITS, 0);
    info.resize(total, 0);

    let bits = puncture(&conv_encode(&info), mcs.code_rate)?;
    debug_assert_eq!(bits.len(), n_symbols * mcs.coded_bits_per_symbol(n_data_subcarriers));
    Ok(EncodedStream { bits, mcs, source_len: payload.len(), seed, n_symbols })
}
