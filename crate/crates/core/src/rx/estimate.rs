use crate::config::{index_of, EstimatorKind};
use crate::C64;

/// Channel estimate on the occupied subcarriers, `h[fft_bin][column]`.
///
/// NDP estimates carry one column per TX chain; DATA estimates a single
/// effective column. Unoccupied bins stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h: Vec<Vec<C64>>,
    pub kind: EstimatorKind,
    /// `|h|^2` summed over columns; zero on unoccupied bins.
    pub confidence: Vec<f64>,
}

impl ChannelEstimate {
    pub fn from_columns(h: Vec<Vec<C64>>, kind: EstimatorKind) -> Self {
        let confidence = h.iter().map(|r| r.iter().map(|v| v.norm_sqr()).sum()).collect();
        ChannelEstimate { h, kind, confidence }
    }

    pub fn from_effective(h: Vec<C64>, kind: EstimatorKind) -> Self {
        Self::from_columns(h.into_iter().map(|v| vec![v]).collect(), kind)
    }

    pub fn n_columns(&self) -> usize {
        self.h.first().map_or(0, |r| r.len())
    }

    /// Column `col` as a per-bin vector.
    pub fn column(&self, col: usize) -> Vec<C64> {
        self.h.iter().map(|r| r[col]).collect()
    }

    /// Sum over columns: the channel seen by a frame sent from every chain
    /// with unit weights.
    pub fn effective(&self) -> Vec<C64> {
        self.h.iter().map(|r| r.iter().sum()).collect()
    }
}

/// `mean_i Y_i[n] / X[n]` over the supplied symbols, on `bins` only.
pub fn ls_estimate(symbols: &[&[C64]], known: &[C64], bins: &[usize]) -> Vec<C64> {
    let n = known.len();
    let mut h = vec![C64::new(0.0, 0.0); n];
    if symbols.is_empty() {
        return h;
    }
    for &b in bins {
        if known[b].norm_sqr() == 0.0 {
            continue;
        }
        let acc: C64 = symbols.iter().map(|y| y[b]).sum();
        h[b] = acc / (symbols.len() as f64 * known[b]);
    }
    h
}

/// Spectral-temporal averaging parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaParams {
    /// Time forgetting factor; the update step is `1 / alpha`.
    pub alpha: f64,
    /// Half-width of the uniform frequency smoothing window, in occupied
    /// subcarriers.
    pub beta: usize,
    /// Known linear phase across subcarriers, radians per subcarrier index,
    /// removed before smoothing and restored after.
    pub phase_slope: f64,
}

/// One decision-directed update.
///
/// `h_inst = Y / decided` on `bins`, averaged uniformly over up to `beta`
/// occupied neighbours each side, then blended in time:
/// `h_new = (1 - 1/alpha) prev + (1/alpha) h_freq`.
pub fn sta_update(prev: &[C64], y: &[C64], decided: &[C64], bins: &[usize], p: &StaParams) -> Vec<C64> {
    let n = prev.len();
    let derot = |b: usize| C64::from_polar(1.0, -p.phase_slope * index_of(b, n) as f64);
    let inst: Vec<C64> = bins
        .iter()
        .map(|&b| {
            assert!(decided[b].norm_sqr() > 0.0, "decided symbol on bin {b} is zero");
            y[b] / decided[b] * derot(b)
        })
        .collect();
    let step = 1.0 / p.alpha;
    let mut out = prev.to_vec();
    for (i, &b) in bins.iter().enumerate() {
        let lo = i.saturating_sub(p.beta);
        let hi = (i + p.beta + 1).min(bins.len());
        let freq = inst[lo..hi].iter().sum::<C64>() / (hi - lo) as f64 * derot(b).conj();
        out[b] = prev[b] * (1.0 - step) + freq * step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_comm, Scene};
    use crate::config::SystemConfig;
    use crate::dsp::UnitaryFft;
    use crate::frame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn setup() -> (SystemConfig, Vec<usize>, Vec<C64>) {
        let c = SystemConfig::paper_defaults();
        let plan = c.plan();
        let lts = frame::lts_symbol(&c, &plan);
        (c, plan.occupied, lts)
    }

    fn noisy(x: &[C64], h: &[C64], sigma2: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
        let d = Normal::new(0.0, (sigma2 / 2.0).sqrt()).unwrap();
        x.iter().zip(h).map(|(a, b)| a * b + C64::new(d.sample(rng), d.sample(rng))).collect()
    }

    #[test]
    fn identity_gives_ones() {
        let (_, bins, lts) = setup();
        let h = ls_estimate(&[&lts, &lts], &lts, &bins);
        for b in 0..64 {
            let want = if bins.contains(&b) { 1.0 } else { 0.0 };
            assert!((h[b] - C64::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_tap_channel_matches_its_dft() {
        let (c, bins, _) = setup();
        let (_, bb) = crate::tx::Transmitter::new(c.clone()).ndp().unwrap();
        let taps = [C64::new(0.8, 0.1), C64::new(-0.3, 0.25)];
        // y[n] = h0 x[n] + h1 x[n-1] on the summed training chains
        let x: Vec<C64> = (0..bb.len()).map(|n| bb.chains.iter().map(|ch| ch[n]).sum()).collect();
        let y: Vec<C64> = (0..x.len())
            .map(|n| taps[0] * x[n] + if n > 0 { taps[1] * x[n - 1] } else { C64::new(0.0, 0.0) })
            .collect();
        let fft = UnitaryFft::new(64);
        let lts_sym = frame::FrameLayout::new(4, 0).lts().start;
        let demod = |s: usize| {
            let mut b = y[s * 80 + 16..s * 80 + 80].to_vec();
            fft.forward(&mut b);
            b
        };
        let y0 = demod(lts_sym);
        let y1 = demod(lts_sym + 1);
        // both training chains send lts / sqrt(2)
        let known: Vec<C64> = frame::lts_symbol(&c, &c.plan()).iter().map(|v| v * 2f64.sqrt()).collect();
        let h = ls_estimate(&[&y0, &y1], &known, &bins);
        for &b in &bins {
            let k = index_of(b, 64) as f64;
            let want = taps[0] + taps[1] * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k / 64.0);
            assert!((h[b] - want).norm() < 1e-6, "bin {b}");
        }
    }

    #[test]
    fn two_lts_halve_variance() {
        let (_, bins, lts) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = vec![C64::new(0.6, -0.4); 64];
        let (mut e1, mut e2) = (0.0, 0.0);
        for _ in 0..200 {
            let a = noisy(&lts, &truth, 0.1, &mut rng);
            let b = noisy(&lts, &truth, 0.1, &mut rng);
            let h1 = ls_estimate(&[&a], &lts, &bins);
            let h2 = ls_estimate(&[&a, &b], &lts, &bins);
            e1 += bins.iter().map(|&k| (h1[k] - truth[k]).norm_sqr()).sum::<f64>();
            e2 += bins.iter().map(|&k| (h2[k] - truth[k]).norm_sqr()).sum::<f64>();
        }
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.15, "{ratio}");
    }

    fn qpsk(rng: &mut ChaCha8Rng) -> Vec<C64> {
        let r = 1.0 / 2f64.sqrt();
        (0..64).map(|_| C64::new(if rng.gen() { r } else { -r }, if rng.gen() { r } else { -r })).collect()
    }

    #[test]
    fn sta_beats_ls_in_steady_state() {
        let (_, bins, lts) = setup();
        let sigma2 = 10f64.powf(-1.5);
        let p = StaParams { alpha: 2.0, beta: 2, phase_slope: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut mse_ls, mut mse_sta) = (0.0, 0.0);
        for _ in 0..100 {
            let truth: Vec<C64> = vec![C64::from_polar(0.9, rng.gen_range(-3.0..3.0)); 64];
            let y = noisy(&lts, &truth, sigma2, &mut rng);
            let ls = ls_estimate(&[&y], &lts, &bins);
            let mut h = ls.clone();
            for _ in 0..30 {
                let d = qpsk(&mut rng);
                let y = noisy(&d, &truth, sigma2, &mut rng);
                h = sta_update(&h, &y, &d, &bins, &p);
            }
            mse_ls += bins.iter().map(|&k| (ls[k] - truth[k]).norm_sqr()).sum::<f64>();
            mse_sta += bins.iter().map(|&k| (h[k] - truth[k]).norm_sqr()).sum::<f64>();
        }
        assert!(mse_sta < mse_ls, "sta {mse_sta} ls {mse_ls}");
    }

    #[test]
    fn sta_limits() {
        let (_, bins, lts) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prev: Vec<C64> = ls_estimate(&[&lts], &lts, &bins);
        let truth = vec![C64::new(0.2, 0.7); 64];
        let d = qpsk(&mut rng);
        let y = noisy(&d, &truth, 0.05, &mut rng);
        let frozen = sta_update(&prev, &y, &d, &bins, &StaParams { alpha: 1e12, beta: 2, phase_slope: 0.0 });
        for &b in &bins {
            assert!((frozen[b] - prev[b]).norm() < 1e-9);
        }
        let inst = sta_update(&prev, &y, &d, &bins, &StaParams { alpha: 1.0, beta: 0, phase_slope: 0.0 });
        for &b in &bins {
            assert!((inst[b] - y[b] / d[b]).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_slope_is_preserved_by_smoothing() {
        let (_, bins, _) = setup();
        let slope = 2.0 * std::f64::consts::PI * 2.0 / 64.0;
        let truth: Vec<C64> = (0..64).map(|b| C64::from_polar(1.1, slope * index_of(b, 64) as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = qpsk(&mut rng);
        let y: Vec<C64> = d.iter().zip(&truth).map(|(a, b)| a * b).collect();
        let p = StaParams { alpha: 1.0, beta: 2, phase_slope: slope };
        let h = sta_update(&truth, &y, &d, &bins, &p);
        for &b in &bins {
            assert!((h[b] - truth[b]).norm() < 1e-12, "bin {b}");
        }
    }

    #[test]
    fn comm_link_effective_channel() {
        let (c, bins, lts) = setup();
        let (_, bb) = crate::tx::Transmitter::new(c.clone()).ndp().unwrap();
        let s = Scene { comm_max_offset: 0, ..Scene::default() };
        let rx = simulate_comm(&bb, 2.0, &s, &c).unwrap();
        let fft = UnitaryFft::new(64);
        let slot = frame::FrameLayout::new(4, 0).preamble_slot(3);
        let mut y = rx.chains[0][slot * 80 + 16..slot * 80 + 80].to_vec();
        fft.forward(&mut y);
        let h = ls_estimate(&[&y], &lts, &bins);
        for &b in &bins {
            assert!((h[b] - C64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }
}
