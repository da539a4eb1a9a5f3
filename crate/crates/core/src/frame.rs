//! Frame layout and the frequency-domain symbol grid.
//!
//! Every frame is, in order: 2 STS symbols, 2 LTS symbols, 1 header symbol,
//! `N_tx` MIMO-preamble symbols and `N_data` payload symbols (zero for NDP).

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{bin_of, SubcarrierPlan, SystemConfig};
use crate::C64;

pub const N_STS: usize = 2;
pub const N_LTS: usize = 2;
pub const N_HEADER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Ndp,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Sts,
    Lts,
    Header,
    MimoPreamble,
    Data,
}

/// Symbol counts of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub n_tx: usize,
    pub n_data: usize,
}

impl FrameLayout {
    pub fn new(n_tx: usize, n_data: usize) -> Self {
        FrameLayout { n_tx, n_data }
    }

    pub fn sts(&self) -> Range<usize> {
        0..N_STS
    }

    pub fn lts(&self) -> Range<usize> {
        N_STS..N_STS + N_LTS
    }

    pub fn header(&self) -> usize {
        N_STS + N_LTS
    }

    pub fn preamble(&self) -> Range<usize> {
        let s = self.header() + N_HEADER;
        s..s + self.n_tx
    }

    /// Symbol index of the MIMO-preamble slot assigned to TX chain `tx`.
    pub fn preamble_slot(&self, tx: usize) -> usize {
        self.preamble().start + tx
    }

    pub fn data(&self) -> Range<usize> {
        let s = self.preamble().end;
        s..s + self.n_data
    }

    pub fn n_symbols(&self) -> usize {
        self.data().end
    }

    pub fn segments(&self) -> Vec<(Segment, Range<usize>)> {
        let h = self.header();
        vec![
            (Segment::Sts, self.sts()),
            (Segment::Lts, self.lts()),
            (Segment::Header, h..h + 1),
            (Segment::MimoPreamble, self.preamble()),
            (Segment::Data, self.data()),
        ]
    }

    pub fn segment_of(&self, symbol: usize) -> Option<Segment> {
        self.segments().into_iter().find(|(_, r)| r.contains(&symbol)).map(|(s, _)| s)
    }

    /// Samples per chain once modulated.
    pub fn n_samples(&self, cfg: &SystemConfig) -> usize {
        self.n_symbols() * cfg.symbol_len()
    }
}

/// Frequency-domain frame: `grid[tx_chain][ofdm_symbol][fft_bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub kind: FrameKind,
    pub layout: FrameLayout,
    pub grid: Vec<Vec<Vec<C64>>>,
}

impl FrameGrid {
    pub fn zeros(kind: FrameKind, layout: FrameLayout, n_sc: usize) -> Self {
        FrameGrid { kind, layout, grid: vec![vec![vec![C64::new(0.0, 0.0); n_sc]; layout.n_symbols()]; layout.n_tx] }
    }

    pub fn n_tx(&self) -> usize {
        self.grid.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.layout.n_symbols()
    }

    pub fn symbol(&self, tx: usize, sym: usize) -> &[C64] {
        &self.grid[tx][sym]
    }

    pub fn energy(&self) -> f64 {
        self.grid.iter().flatten().flatten().map(|v| v.norm_sqr()).sum()
    }
}

/// Chains that carry STS, LTS and header (at most the first two).
pub fn training_chains(cfg: &SystemConfig) -> usize {
    cfg.n_tx.min(2)
}

// 802.11a training sequences on subcarriers -26..=26.
const LTS_80211: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1,
    -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];
// Nonzero STS entries as (subcarrier, sign of 1+j).
const STS_80211: [(i32, i8); 12] =
    [(-24, 1), (-20, -1), (-16, 1), (-12, -1), (-8, -1), (-4, 1), (4, -1), (8, -1), (12, 1), (16, 1), (20, 1), (24, 1)];

/// Deterministic +-1 sequence for plans without a tabulated training symbol.
fn pn_signs(n: usize) -> Vec<f64> {
    let mut state: u8 = 0x7f;
    (0..n)
        .map(|_| {
            let b = ((state >> 6) ^ (state >> 3)) & 1;
            state = ((state << 1) | b) & 0x7f;
            if b == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Long training symbol in FFT-bin order; unit modulus on occupied bins.
pub fn lts_symbol(cfg: &SystemConfig, plan: &SubcarrierPlan) -> Vec<C64> {
    let n = cfg.n_sc;
    let mut out = vec![C64::new(0.0, 0.0); n];
    let fallback = pn_signs(plan.occupied.len());
    for (i, &bin) in plan.occupied.iter().enumerate() {
        let k = crate::config::index_of(bin, n);
        let v = if n == 64 && (-26..=26).contains(&k) && LTS_80211[(k + 26) as usize] != 0 {
            LTS_80211[(k + 26) as usize] as f64
        } else {
            fallback[i]
        };
        out[bin] = C64::new(v, 0.0);
    }
    out
}

/// Short training symbol in FFT-bin order; periodic with `N_sc / 4` samples.
///
/// Scaled so its energy matches the LTS.
pub fn sts_symbol(cfg: &SystemConfig, plan: &SubcarrierPlan) -> Vec<C64> {
    let n = cfg.n_sc;
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n == 64 {
        for (k, s) in STS_80211 {
            let bin = bin_of(k, n);
            if plan.is_occupied(bin) {
                out[bin] = C64::new(1.0, 1.0) * s as f64;
            }
        }
    } else {
        let bins: Vec<usize> =
            plan.occupied.iter().copied().filter(|&b| crate::config::index_of(b, n) % 4 == 0).collect();
        for (b, s) in bins.iter().zip(pn_signs(bins.len())) {
            out[*b] = C64::new(1.0, 1.0) * s;
        }
    }
    let e: f64 = out.iter().map(|v| v.norm_sqr()).sum();
    if e > 0.0 {
        let scale = (plan.occupied.len() as f64 / e).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
    }
    out
}

/// Pilot value per pilot bin, in plan order.
pub fn pilot_values(cfg: &SystemConfig) -> Vec<C64> {
    cfg.pilot_values.iter().map(|&v| C64::new(v, 0.0)).collect()
}
