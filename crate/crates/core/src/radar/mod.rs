//! Monostatic radar processing over the virtual array.
//!
//! [`ofdm_demodulate`] strips the prefix and transforms each received symbol,
//! [`estimate_radar_channel`] divides the MIMO-preamble slots by the known
//! transmit symbols, [`SiCanceller`] subtracts the background mean, and
//! [`range_angle_image`] plus [`detect`] turn the channel into detections.

mod detect;
mod estimate;
mod image;
mod si;

pub use detect::{cfar_mask, detect, half_power_width, threshold_db_for_pfa, Axis, DetectMethod, Detection};
pub use estimate::{estimate_radar_channel, ofdm_demodulate, MeasurementMatrix, RxGrid};
pub use image::{range_angle_image, RangeAngleImage};
pub use si::{remove_si, SiCanceller, SiEstimate, SiWindow};

use thiserror::Error;

use crate::channel::RxBaseband;
use crate::config::SystemConfig;
use crate::FrameGrid;

#[derive(Debug, Error, PartialEq)]
pub enum RadarError {
    #[error("received stream has {len} samples, one frame needs {need}")]
    ShortStream { len: usize, need: usize },
    #[error("received grid has {got} symbols, known frame has {want}")]
    SymbolCount { got: usize, want: usize },
    #[error("received {got} chains, configuration has {want}")]
    ChainCount { got: usize, want: usize },
    #[error("known preamble of TX {tx} is too weak on bin {bin} to divide by")]
    WeakReference { tx: usize, bin: usize },
    #[error("matrix is {got_sc}x{got_virt}, expected {want_sc}x{want_virt}")]
    Shape { got_sc: usize, got_virt: usize, want_sc: usize, want_virt: usize },
    #[error("half-power crossing falls outside the image")]
    Unbounded,
}

/// Everything produced for one radar frame.
#[derive(Debug, Clone)]
pub struct RadarFrame {
    pub raw: MeasurementMatrix,
    pub cleaned: MeasurementMatrix,
    pub image: RangeAngleImage,
    pub detections: Vec<Detection>,
}

/// Per-frame radar chain with the background window as its only state.
#[derive(Debug, Clone)]
pub struct RadarProcessor {
    cfg: SystemConfig,
    si: SiCanceller,
    method: DetectMethod,
    frame_index: u64,
}

impl RadarProcessor {
    pub fn new(cfg: SystemConfig) -> Self {
        let si = SiCanceller::new(cfg.radar.si_window);
        let method = DetectMethod::Cfar(cfg.radar.cfar);
        RadarProcessor { cfg, si, method, frame_index: 0 }
    }

    pub fn with_method(mut self, method: DetectMethod) -> Self {
        self.method = method;
        self
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn si(&self) -> &SiCanceller {
        &self.si
    }

    pub fn si_mut(&mut self) -> &mut SiCanceller {
        &mut self.si
    }

    pub fn process(&mut self, rx: &RxBaseband, frame: &FrameGrid) -> Result<RadarFrame, RadarError> {
        let grid = ofdm_demodulate(rx, &self.cfg)?;
        let mut raw = estimate_radar_channel(&grid, frame, &self.cfg)?;
        raw.frame_index = self.frame_index;
        self.frame_index += 1;
        let cleaned = self.si.process(&raw)?;
        let image = range_angle_image(&cleaned, &self.cfg);
        let detections = detect(&image, &self.method);
        Ok(RadarFrame { raw, cleaned, image, detections })
    }
}
