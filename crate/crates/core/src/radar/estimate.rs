use crate::channel::RxBaseband;
use crate::config::SystemConfig;
use crate::dsp::UnitaryFft;
use crate::frame::FrameLayout;
use crate::{FrameGrid, C64};

use super::RadarError;

/// Demodulated symbols, `grid[rx_chain][symbol][fft_bin]`.
pub type RxGrid = Vec<Vec<Vec<C64>>>;

/// Smallest known-symbol magnitude the estimator divides by.
const MIN_REFERENCE: f64 = 1e-6;

/// Unstructured radar channel, `h[fft_bin][column]` with
/// `column = rx * N_tx + tx`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub h: Vec<Vec<C64>>,
    pub n_tx: usize,
    pub n_rx: usize,
    pub frame_index: u64,
}

impl MeasurementMatrix {
    pub fn zeros(cfg: &SystemConfig) -> Self {
        MeasurementMatrix {
            h: vec![vec![C64::new(0.0, 0.0); cfg.n_virt()]; cfg.n_sc],
            n_tx: cfg.n_tx,
            n_rx: cfg.n_rx,
            frame_index: 0,
        }
    }

    pub fn n_sc(&self) -> usize {
        self.h.len()
    }

    pub fn n_virt(&self) -> usize {
        self.n_tx * self.n_rx
    }

    pub fn column(rx: usize, tx: usize, n_tx: usize) -> usize {
        rx * n_tx + tx
    }

    pub fn get(&self, bin: usize, rx: usize, tx: usize) -> C64 {
        self.h[bin][Self::column(rx, tx, self.n_tx)]
    }

    pub fn energy(&self) -> f64 {
        self.h.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, a: C64) -> Self {
        MeasurementMatrix { h: self.h.iter().map(|r| r.iter().map(|v| v * a).collect()).collect(), ..self.clone() }
    }

    pub(crate) fn check_shape(&self, other: &MeasurementMatrix) -> Result<(), RadarError> {
        if self.n_sc() != other.n_sc() || self.n_virt() != other.n_virt() {
            return Err(RadarError::Shape {
                got_sc: other.n_sc(),
                got_virt: other.n_virt(),
                want_sc: self.n_sc(),
                want_virt: self.n_virt(),
            });
        }
        Ok(())
    }
}

/// Strip the prefix and FFT every whole symbol of every RX chain. Timing is
/// the monostatic one: symbol 0 starts at sample 0.
pub fn ofdm_demodulate(rx: &RxBaseband, cfg: &SystemConfig) -> Result<RxGrid, RadarError> {
    let need = FrameLayout::new(cfg.n_tx, 0).n_samples(cfg);
    if rx.len() < need {
        return Err(RadarError::ShortStream { len: rx.len(), need });
    }
    let fft = UnitaryFft::new(cfg.n_sc);
    let l = cfg.symbol_len();
    Ok(rx
        .chains
        .iter()
        .map(|chain| {
            chain
                .chunks_exact(l)
                .map(|s| {
                    let mut body = s[cfg.n_cp..].to_vec();
                    fft.forward(&mut body);
                    body
                })
                .collect()
        })
        .collect())
}

/// `h[n][(k, l)] = Y_k[slot l][n] / X_l[slot l][n]` on occupied bins.
pub fn estimate_radar_channel(
    grid: &RxGrid,
    frame: &FrameGrid,
    cfg: &SystemConfig,
) -> Result<MeasurementMatrix, RadarError> {
    if grid.len() != cfg.n_rx {
        return Err(RadarError::ChainCount { got: grid.len(), want: cfg.n_rx });
    }
    let want = frame.layout.preamble().end;
    if let Some(got) = grid.iter().map(|c| c.len()).find(|&n| n < want) {
        return Err(RadarError::SymbolCount { got, want });
    }
    let plan = cfg.plan();
    let mut m = MeasurementMatrix::zeros(cfg);
    for l in 0..cfg.n_tx {
        let slot = frame.layout.preamble_slot(l);
        let x = &frame.grid[l][slot];
        for &bin in &plan.occupied {
            if x[bin].norm() < MIN_REFERENCE {
                return Err(RadarError::WeakReference { tx: l, bin });
            }
            for (k, chain) in grid.iter().enumerate() {
                m.h[bin][MeasurementMatrix::column(k, l, cfg.n_tx)] = chain[slot][bin] / x[bin];
            }
        }
    }
    Ok(m)
}
