//! MIMO OFDM joint radar-communication baseband.
//!
//! One engine builds coded, precoded OFDM frames for `N_tx` transmit chains,
//! images reflectors in range and angle from its own reflected waveform over
//! the `N_tx x N_rx` virtual array, and serves a separate SISO receiver. The
//! RF front-end and the environment are replaced by a point-target channel
//! simulator.
//!
//! Processing chains:
//!
//! ```text
//! payload -> CRC -> scramble -> conv encode -> puncture -> map -> frame -> precode -> IFFT+CP
//!                                                                         |
//!          (channel simulator: monostatic radar returns / one-way comm link)
//!                                                                         |
//! radar:   FFT -> per-virtual-channel estimate -> SI removal -> range IFFT x angle FFT -> detect
//! comm:    DC block -> delay-and-correlate -> CFO -> LS/STA -> equalize -> demap -> Viterbi -> CRC
//! ```

pub mod analysis;
pub mod channel;
pub mod config;
pub mod dsp;
pub mod frame;
pub mod header;
pub mod io;
pub mod radar;
pub mod rx;
pub mod tx;

pub use config::{CodeRate, Mcs, Modulation, SystemConfig};
pub use frame::{FrameGrid, FrameKind};

/// Complex baseband sample.
pub type C64 = num_complex::Complex<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
