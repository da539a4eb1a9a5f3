use crate::config::SystemConfig;
use crate::dsp::UnitaryFft;
use crate::frame::{FrameGrid, FrameKind};
use crate::C64;

/// Where a frame sits inside a [`TxBaseband`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameMarker {
    pub start: usize,
    pub n_symbols: usize,
    pub kind: FrameKind,
}

/// Time-domain samples per TX chain. All chains have equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct TxBaseband {
    pub chains: Vec<Vec<C64>>,
    pub sample_rate: f64,
    pub frames: Vec<FrameMarker>,
}

impl TxBaseband {
    pub fn len(&self) -> usize {
        self.chains.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenate another burst after this one.
    pub fn append(&mut self, other: &TxBaseband) {
        let offset = self.len();
        if self.chains.is_empty() {
            self.chains = vec![Vec::new(); other.chains.len()];
            self.sample_rate = other.sample_rate;
        }
        for (a, b) in self.chains.iter_mut().zip(&other.chains) {
            a.extend_from_slice(b);
        }
        self.frames.extend(other.frames.iter().map(|m| FrameMarker { start: m.start + offset, ..*m }));
    }

    pub fn scaled(&self, a: C64) -> TxBaseband {
        TxBaseband { chains: self.chains.iter().map(|c| c.iter().map(|v| v * a).collect()).collect(), ..self.clone() }
    }
}

/// Per chain and symbol: unitary IFFT, then prepend the last `N_cp` samples.
pub fn ofdm_modulate(grid: &FrameGrid, cfg: &SystemConfig) -> TxBaseband {
    let fft = UnitaryFft::new(cfg.n_sc);
    let l = cfg.symbol_len();
    let chains = grid
        .grid
        .iter()
        .map(|chain| {
            let mut out = Vec::with_capacity(chain.len() * l);
            let mut buf = vec![C64::new(0.0, 0.0); cfg.n_sc];
            for sym in chain {
                buf.copy_from_slice(sym);
                fft.inverse(&mut buf);
                out.extend_from_slice(&buf[cfg.n_sc - cfg.n_cp..]);
                out.extend_from_slice(&buf);
            }
            out
        })
        .collect();
    TxBaseband {
        chains,
        sample_rate: cfg.bandwidth_hz,
        frames: vec![FrameMarker { start: 0, n_symbols: grid.n_symbols(), kind: grid.kind }],
    }
}
