use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::dsp::UnitaryFft;
use crate::frame::{self, FrameLayout, N_STS};
use crate::C64;

/// Coarse estimates at or beyond this fraction of the STS ambiguity bound are
/// flagged as unreliable.
const CFO_RANGE_MARGIN: f64 = 0.95;
/// LTS cross-correlation search half-width around the coarse start, samples.
const FINE_SEARCH: usize = 32;
/// Leading LTS samples left out of the fine CFO sum.
const FINE_CFO_SKIP: usize = 4;

/// Result of detection and synchronisation for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncState {
    /// Start of the first STS symbol (its cyclic prefix), samples.
    pub frame_start: usize,
    /// Start of the detector plateau, samples.
    pub plateau_start: usize,
    pub coarse_cfo: f64,
    pub fine_cfo: f64,
    /// Fine-timing correction relative to the detector estimate, samples.
    pub timing_offset: i64,
    /// Coarse CFO is at the edge of the unambiguous range.
    pub cfo_out_of_range: bool,
}

impl SyncState {
    pub fn cfo(&self) -> f64 {
        self.coarse_cfo + self.fine_cfo
    }
}

/// `y[n] = x[n] - mean(x[n-L+1..=n])`, causal with a zero history.
pub fn dc_block(x: &[C64], len: usize) -> Vec<C64> {
    let len = len.max(1);
    let mut acc = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        acc += x[n];
        if n >= len {
            acc -= x[n - len];
        }
        // refresh occasionally so the running sum cannot drift
        if n % 4096 == 4095 {
            acc = x[n + 1 - len.min(n + 1)..=n].iter().sum();
        }
        out.push(x[n] - acc / len as f64);
    }
    out
}

/// Delay-and-correlate metric
/// `m[n] = |sum_k r[n+k] conj(r[n+k+D])| / sum_k |r[n+k+D]|^2`, `k < W`,
/// for every `n` with a complete window. Zero where the normaliser vanishes.
pub fn detect_metric(r: &[C64], lag: usize, window: usize) -> Vec<f64> {
    if r.len() < lag + window {
        return Vec::new();
    }
    let n_out = r.len() - lag - window + 1;
    let prod: Vec<C64> = (0..r.len() - lag).map(|n| r[n] * r[n + lag].conj()).collect();
    let pow: Vec<f64> = r.iter().map(|v| v.norm_sqr()).collect();
    // exact window sums: short blocks recomputed from scratch keep zeros exact
    (0..n_out)
        .map(|n| {
            let p: C64 = prod[n..n + window].iter().sum();
            let e: f64 = pow[n + lag..n + lag + window].iter().sum();
            if e > 0.0 && e.is_finite() {
                (p.norm() / e).min(1e3)
            } else {
                0.0
            }
        })
        .collect()
}

/// First plateau of at least `plateau_len` samples at or above `threshold`,
/// searched from `from`. Returns the plateau start.
pub fn find_plateau(metric: &[f64], threshold: f64, plateau_len: usize, from: usize) -> Option<usize> {
    let mut run = 0usize;
    for (n, &m) in metric.iter().enumerate().skip(from) {
        if m >= threshold {
            run += 1;
            if run >= plateau_len.max(1) {
                return Some(n + 1 - run);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Coarse frame start from the plateau: the window reaches the threshold
/// about `(1 - threshold) * W` samples before the STS begins. A plateau at
/// sample 0 is censored (the frame may start anywhere up to that lead), so
/// the middle of the lead is used.
pub fn plateau_to_start(plateau: usize, cfg: &SystemConfig) -> usize {
    let rp = &cfg.receiver;
    let lead = ((1.0 - rp.detect_threshold) * rp.detect_window as f64).round() as usize;
    if plateau == 0 {
        lead / 2
    } else {
        plateau + lead
    }
}

/// Detect the next frame at or after `from`. `None` if no plateau is found.
pub fn detect_frame(stream: &[C64], cfg: &SystemConfig, from: usize) -> Option<usize> {
    let blocked = dc_block(stream, cfg.receiver.dc_block_len);
    let metric = detect_metric(&blocked, cfg.sts_period(), cfg.receiver.detect_window);
    find_plateau(&metric, cfg.receiver.detect_threshold, cfg.receiver.plateau_len, from)
}

/// Frequency offset from the phase of `sum conj(r[n]) r[n + lag]` over `range`.
fn lag_cfo(r: &[C64], start: usize, count: usize, lag: usize, fs: f64) -> f64 {
    let acc: C64 = (start..start + count).map(|n| r[n].conj() * r[n + lag]).sum();
    acc.arg() * fs / (2.0 * PI * lag as f64)
}

/// Apply `exp(-j 2 pi f n / fs)` with `n` counted from the start of `x`.
pub fn derotate(x: &[C64], cfo: f64, fs: f64) -> Vec<C64> {
    let w = -2.0 * PI * cfo / fs;
    x.iter().enumerate().map(|(n, v)| v * C64::from_polar(1.0, w * n as f64)).collect()
}

/// Time-domain LTS body (no prefix) as transmitted from one training chain.
pub fn lts_time(cfg: &SystemConfig) -> Vec<C64> {
    let mut x = frame::lts_symbol(cfg, &cfg.plan());
    UnitaryFft::new(cfg.n_sc).inverse(&mut x);
    x
}

/// Coarse CFO over the STS, returned in Hz.
///
/// Uses the middle of the two STS symbols so a few samples of timing error on
/// either side cannot pull noise or the LTS into the sum.
pub fn estimate_coarse_cfo(r: &[C64], start: usize, cfg: &SystemConfig) -> f64 {
    let lag = cfg.sts_period();
    let sts_len = N_STS * cfg.symbol_len();
    let margin = lag / 2;
    let count = sts_len.saturating_sub(lag + 2 * margin);
    lag_cfo(r, start + margin, count, lag, cfg.bandwidth_hz)
}

/// Fine CFO from the two LTS symbols. Each carries its own prefix, so the
/// whole symbol repeats one symbol length later; a few leading samples are
/// skipped to tolerate early timing.
pub fn estimate_fine_cfo(r: &[C64], start: usize, cfg: &SystemConfig) -> f64 {
    let layout = FrameLayout::new(cfg.n_tx, 0);
    let lts = start + layout.lts().start * cfg.symbol_len();
    let skip = FINE_CFO_SKIP.min(cfg.n_cp);
    lag_cfo(r, lts + skip, cfg.symbol_len() - skip, cfg.symbol_len(), cfg.bandwidth_hz)
}

/// Whether a coarse estimate sits at the STS ambiguity edge `B / (2 D)`.
pub fn cfo_out_of_range(coarse: f64, cfg: &SystemConfig) -> bool {
    coarse.abs() >= CFO_RANGE_MARGIN * cfg.bandwidth_hz / (2.0 * cfg.sts_period() as f64)
}

/// Coarse and fine CFO for a frame starting at `start`.
///
/// The fine stage runs on the coarse-corrected samples.
pub fn estimate_cfo(r: &[C64], start: usize, cfg: &SystemConfig) -> (f64, f64) {
    let coarse = estimate_coarse_cfo(r, start, cfg);
    let n = FrameLayout::new(cfg.n_tx, 0).preamble().start * cfg.symbol_len();
    let seg = derotate(&r[start..(start + n).min(r.len())], coarse, cfg.bandwidth_hz);
    let fine = estimate_fine_cfo(&seg, 0, cfg);
    (coarse, fine)
}

/// Refine `coarse_start` by cross-correlating with the first LTS body.
/// `r` must already be coarse-CFO corrected.
pub fn fine_timing(r: &[C64], coarse_start: usize, cfg: &SystemConfig) -> usize {
    let reference = lts_time(cfg);
    let offset = FrameLayout::new(cfg.n_tx, 0).lts().start * cfg.symbol_len() + cfg.n_cp;
    let nominal = coarse_start + offset;
    let lo = nominal.saturating_sub(FINE_SEARCH);
    let hi = (nominal + FINE_SEARCH).min(r.len().saturating_sub(reference.len()));
    let mut best = (nominal, f64::NEG_INFINITY);
    for p in lo..=hi.max(lo) {
        if p + reference.len() > r.len() {
            break;
        }
        let c: C64 = r[p..p + reference.len()].iter().zip(&reference).map(|(a, b)| a * b.conj()).sum();
        if c.norm_sqr() > best.1 {
            best = (p, c.norm_sqr());
        }
    }
    best.0.saturating_sub(offset)
}

/// Full synchronisation of the frame whose plateau starts at `plateau`.
/// Returns `None` when the stream ends before the preamble does.
pub fn synchronize(r: &[C64], plateau: usize, cfg: &SystemConfig) -> Option<SyncState> {
    let coarse_start = plateau_to_start(plateau, cfg);
    let pre_len = FrameLayout::new(cfg.n_tx, 0).preamble().start * cfg.symbol_len();
    if coarse_start + pre_len + FINE_SEARCH + cfg.symbol_len() > r.len() {
        return None;
    }
    let provisional = estimate_coarse_cfo(r, coarse_start, cfg);
    let lo = coarse_start.saturating_sub(FINE_SEARCH);
    let seg_end = (coarse_start + pre_len + FINE_SEARCH + cfg.symbol_len()).min(r.len());
    let seg = derotate(&r[lo..seg_end], provisional, cfg.bandwidth_hz);
    let start = lo + fine_timing(&seg, coarse_start - lo, cfg);
    if start + pre_len > r.len() {
        return None;
    }
    // re-estimated on the refined start so the result depends on the frame
    // position only, not on where the plateau happened to begin
    let coarse = estimate_coarse_cfo(r, start, cfg);
    let local = derotate(&r[start..start + pre_len], coarse, cfg.bandwidth_hz);
    let fine = estimate_fine_cfo(&local, 0, cfg);
    Some(SyncState {
        frame_start: start,
        plateau_start: plateau,
        coarse_cfo: coarse,
        fine_cfo: fine,
        timing_offset: start as i64 - coarse_start as i64,
        cfo_out_of_range: cfo_out_of_range(coarse, cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_comm, Scene};
    use crate::tx::Transmitter;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg() -> SystemConfig {
        SystemConfig::paper_defaults()
    }

    fn awgn(n: usize, power: f64, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, (power / 2.0).sqrt()).unwrap();
        (0..n).map(|_| C64::new(d.sample(&mut rng), d.sample(&mut rng))).collect()
    }

    #[test]
    fn dc_block_removes_constant() {
        let x = vec![C64::new(0.7, -0.2); 500];
        let y = dc_block(&x, 64);
        assert!(y[64..].iter().all(|v| v.norm() < 1e-12));
        assert!(dc_block(&[C64::new(0.0, 0.0); 100], 64).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn dc_block_passes_subcarrier_ten() {
        let x: Vec<C64> = (0..1000).map(|n| C64::from_polar(1.0, 2.0 * PI * 10.0 * n as f64 / 64.0)).collect();
        let y = dc_block(&x, 64);
        // filter response of 1 - moving average at the subcarrier frequency
        let w = 2.0 * PI * 10.0 / 64.0;
        let ma: C64 = (0..64).map(|k| C64::from_polar(1.0 / 64.0, -w * k as f64)).sum();
        let gain = (C64::new(1.0, 0.0) - ma).norm();
        assert!((gain - 1.0).abs() < 0.01);
        for v in &y[64..] {
            assert!((v.norm() - gain).abs() < 1e-9);
        }
    }

    #[test]
    fn zeros_never_detect() {
        let c = cfg();
        assert_eq!(detect_frame(&vec![C64::new(0.0, 0.0); 5000], &c, 0), None);
    }

    #[test]
    fn noise_never_detects() {
        let c = cfg();
        let x = awgn(1_000_000, 1.0, 17);
        assert_eq!(detect_frame(&x, &c, 0), None);
    }

    fn frame_at_snr(snr_db: f64, cfo: f64, seed: u64) -> (Vec<C64>, usize) {
        let c = cfg();
        let (_, bb) = Transmitter::new(c.clone()).data(&[0x3c; 100], crate::Mcs::QPSK_1_2, 0x21).unwrap();
        let s = Scene {
            noise_power: 10f64.powf(-snr_db / 10.0),
            cfo_hz: cfo,
            comm_max_offset: 300,
            rng_seed: seed,
            ..Scene::default()
        };
        let rx = simulate_comm(&bb, 1.0, &s, &c).unwrap();
        (rx.chains[0].clone(), rx.arrival_offset)
    }

    #[test]
    fn detection_near_true_start_at_10_db() {
        let c = cfg();
        for seed in 0..20 {
            let (r, truth) = frame_at_snr(10.0, 0.0, seed);
            let plateau = detect_frame(&r, &c, 0).expect("detected");
            let coarse = plateau_to_start(plateau, &c) as i64;
            assert!((coarse - truth as i64).abs() <= 8, "seed {seed}: {coarse} vs {truth}");
            let sync = synchronize(&r, plateau, &c).unwrap();
            assert_eq!(sync.frame_start, truth, "seed {seed}");
        }
    }

    /// Standard deviation, Hz, of the lag-`L` estimator over `N` products at
    /// per-sample SNR `rho`: `B / (2 pi L) * sqrt((1 + 1 / (2 rho)) / (N rho))`.
    fn fine_cfo_sigma(c: &SystemConfig, snr_db: f64) -> f64 {
        let (_, bb) = Transmitter::new(c.clone()).ndp().unwrap();
        let s = Scene { comm_max_offset: 0, ..Scene::default() };
        let clean = simulate_comm(&bb, 1.0, &s, c).unwrap().chains[0].clone();
        let lts = FrameLayout::new(c.n_tx, 0).lts().start * c.symbol_len();
        let n = c.symbol_len() - FINE_CFO_SKIP;
        let p = clean[lts + FINE_CFO_SKIP..lts + c.symbol_len()].iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let rho = p / 10f64.powf(-snr_db / 10.0);
        let l = c.symbol_len() as f64;
        c.bandwidth_hz / (2.0 * PI * l) * ((1.0 + 1.0 / (2.0 * rho)) / (n as f64 * rho)).sqrt()
    }

    #[test]
    fn zero_cfo_estimate_noise_limited() {
        let c = cfg();
        let sigma = fine_cfo_sigma(&c, 20.0);
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let (r, truth) = frame_at_snr(20.0, 0.0, seed + 100);
            let (coarse, fine) = estimate_cfo(&r, truth, &c);
            worst = worst.max((coarse + fine).abs());
        }
        assert!(worst < 4.0 * sigma, "{worst} vs sigma {sigma}");
    }

    #[test]
    fn cfo_200k_recovered_unbiased() {
        let c = cfg();
        let sigma = fine_cfo_sigma(&c, 20.0);
        let n = 100;
        let errs: Vec<f64> = (0..n)
            .map(|seed| {
                let (r, truth) = frame_at_snr(20.0, 200e3, seed + 200);
                let (coarse, fine) = estimate_cfo(&r, truth, &c);
                coarse + fine - 200e3
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let rms = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(rms < 1.25 * sigma, "rms {rms} vs sigma {sigma}");
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn cfo_at_ambiguity_edge_flagged() {
        let c = cfg();
        let edge = c.bandwidth_hz / 32.0;
        let (r, truth) = frame_at_snr(40.0, edge, 5);
        let coarse = estimate_coarse_cfo(&r, truth, &c);
        assert!(cfo_out_of_range(coarse, &c), "{coarse}");
        assert!(!cfo_out_of_range(100e3, &c));
    }

    #[test]
    fn noiseless_cfo_exact() {
        let c = cfg();
        let (r, truth) = frame_at_snr(300.0, -731e3, 1);
        let (coarse, fine) = estimate_cfo(&r, truth, &c);
        assert!((coarse + fine + 731e3).abs() < 1e-3);
    }
}
