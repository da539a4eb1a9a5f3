//! Transmit pipeline: payload bytes to per-chain baseband samples.
//!
//! `crc32_append -> scramble -> conv_encode -> puncture -> map_symbols`
//! produce an [`EncodedStream`]; [`assemble_frame`] lays it out with the
//! training fields and precoding, and [`ofdm_modulate`] runs the IFFT and
//! cyclic prefix per chain.

mod assemble;
pub(crate) mod coding;
mod crc;
mod encoder;
mod mapper;
mod modulate;
mod precoder;
mod scrambler;

pub use assemble::{assemble_frame, build_header};
pub use coding::{conv_encode, puncture, CONSTRAINT_LENGTH, G0, G1, PUNCTURE_3_4, TAIL_BITS};
pub use crc::{crc32, crc32_append, crc_check};
pub(crate) use encoder::bits_to_bytes;
pub use encoder::{encode_payload, n_data_symbols, EncodedStream};
pub use mapper::{constellation, map_symbols};
pub use modulate::{ofdm_modulate, FrameMarker, TxBaseband};
pub use precoder::{compute_steering, SteeringMatrix, SteeringSource};
pub use scrambler::{prbs, scramble};

use thiserror::Error;

use crate::config::{Mcs, SystemConfig};
use crate::frame::FrameKind;
use crate::header::HeaderError;

#[derive(Debug, Error)]
pub enum TxError {
    #[error("payload must contain at least one byte")]
    EmptyPayload,
    #[error("scrambler seed must be a nonzero 7-bit value, got {0:#x}")]
    BadSeed(u8),
    #[error("puncturer input of {len} bits is not a multiple of the period {period}")]
    PunctureLength { len: usize, period: usize },
    #[error("{len} bits cannot be split into {bits_per_symbol}-bit symbols")]
    BitCount { len: usize, bits_per_symbol: usize },
    #[error(transparent)]
    Header(#[from] HeaderError),
    #[error("frame needs {n_symbols} payload symbols, limit is {max}")]
    FrameTooLong { n_symbols: usize, max: usize },
    #[error("DATA frames require an encoded stream")]
    MissingStream,
    #[error("NDP frames carry no payload stream")]
    UnexpectedStream,
    #[error("channel feedback is {got_sc}x{got_tx}, expected {want_sc}x{want_tx}")]
    FeedbackShape { got_sc: usize, got_tx: usize, want_sc: usize, want_tx: usize },
}

/// Build and modulate one frame.
pub struct Transmitter {
    cfg: SystemConfig,
    steering: SteeringMatrix,
}

impl Transmitter {
    pub fn new(cfg: SystemConfig) -> Self {
        let steering = SteeringMatrix::identity(&cfg);
        Transmitter { cfg, steering }
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn steering(&self) -> &SteeringMatrix {
        &self.steering
    }

    pub fn set_steering(&mut self, steering: SteeringMatrix) {
        self.steering = steering;
    }

    pub fn ndp_grid(&self) -> Result<crate::FrameGrid, TxError> {
        assemble_frame(None, FrameKind::Ndp, &self.steering, &self.cfg)
    }

    pub fn data_grid(&self, payload: &[u8], mcs: Mcs, seed: u8) -> Result<crate::FrameGrid, TxError> {
        let n_data = self.cfg.data_subcarriers.len();
        let stream = encode_payload(payload, mcs, seed, n_data)?;
        assemble_frame(Some(&stream), FrameKind::Data, &self.steering, &self.cfg)
    }

    pub fn ndp(&self) -> Result<(crate::FrameGrid, TxBaseband), TxError> {
        let grid = self.ndp_grid()?;
        let bb = ofdm_modulate(&grid, &self.cfg);
        Ok((grid, bb))
    }

    pub fn data(&self, payload: &[u8], mcs: Mcs, seed: u8) -> Result<(crate::FrameGrid, TxBaseband), TxError> {
        let grid = self.data_grid(payload, mcs, seed)?;
        let bb = ofdm_modulate(&grid, &self.cfg);
        Ok((grid, bb))
    }
}
