//! Point-target channel simulator.
//!
//! Radar returns are the monostatic sum over TX chains and scatterers of the
//! transmitted waveform delayed by the round trip and rotated by the TX and RX
//! element steering phases. The communication link is a single line-of-sight
//! ray to a SISO receiver with a carrier offset and an unknown arrival time.
//!
//! Delays are applied per OFDM symbol: the symbol body is transformed, rotated
//! by `exp(-j 2 pi f tau)` on every subcarrier and evaluated on the delayed
//! symbol window. For delays up to the cyclic prefix this is exactly the
//! per-subcarrier phase ramp once the receiver strips the prefix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::config::{index_of, SystemConfig};
use crate::dsp::UnitaryFft;
use crate::tx::TxBaseband;
use crate::{C64, SPEED_OF_LIGHT};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("target at {range} m is beyond the unambiguous range {max_range:.3} m")]
    RangeOutOfBounds { range: f64, max_range: f64 },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("baseband length {len} is not a whole number of {symbol_len}-sample symbols")]
    Ragged { len: usize, symbol_len: usize },
    #[error("communication distance must be positive, got {0}")]
    BadDistance(f64),
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointTarget {
    /// Meters.
    pub range: f64,
    /// Degrees from broadside.
    pub angle: f64,
    /// Linear amplitude.
    pub reflectivity: f64,
    /// Radial velocity in m/s, applied by [`Scene::advance`].
    #[serde(default = "zero")]
    pub velocity: f64,
}

impl PointTarget {
    pub fn new(range: f64, angle: f64, reflectivity: f64) -> Self {
        PointTarget { range, angle, reflectivity, velocity: 0.0 }
    }

    fn check(&self, cfg: &SystemConfig) -> Result<(), ChannelError> {
        if !(self.range > 0.0) {
            return Err(ChannelError::InvalidTarget(format!("range must be positive, got {}", self.range)));
        }
        if self.range >= cfg.max_range() {
            return Err(ChannelError::RangeOutOfBounds { range: self.range, max_range: cfg.max_range() });
        }
        if !(self.angle.abs() < 90.0) {
            return Err(ChannelError::InvalidTarget(format!(
                "angle must be inside (-90, 90) degrees, got {}",
                self.angle
            )));
        }
        if !(self.reflectivity > 0.0) || !self.reflectivity.is_finite() {
            return Err(ChannelError::InvalidTarget(format!(
                "reflectivity must be positive, got {}",
                self.reflectivity
            )));
        }
        Ok(())
    }
}

/// Direct TX to RX coupling, identical on every chain pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiLeakage {
    pub amplitude: f64,
    #[serde(default = "zero")]
    pub phase_deg: f64,
    /// Samples; may be fractional.
    #[serde(default = "zero")]
    pub delay_samples: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    pub targets: Vec<PointTarget>,
    pub clutter: Vec<PointTarget>,
    pub si_leakage: Option<SiLeakage>,
    /// Complex noise power per sample.
    pub noise_power: f64,
    pub radar_pl_exponent: f64,
    pub comm_pl_exponent: f64,
    /// Carrier offset of the communication link, Hz.
    pub cfo_hz: f64,
    /// Receiver bearing seen from the transmit array, degrees.
    pub comm_angle: f64,
    /// Largest random arrival offset of the communication receiver, samples.
    pub comm_max_offset: usize,
    /// Exponent `q` of the two-way `cos^q` element amplitude taper.
    pub element_taper_q: f64,
    pub rng_seed: u64,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            targets: Vec::new(),
            clutter: Vec::new(),
            si_leakage: None,
            noise_power: 0.0,
            radar_pl_exponent: 4.0,
            comm_pl_exponent: 2.0,
            cfo_hz: 0.0,
            comm_angle: 0.0,
            comm_max_offset: 200,
            element_taper_q: 0.0,
            rng_seed: 0,
        }
    }
}

/// Taper exponent that puts the two-way 3 dB points at `+-half_fov_deg`.
pub fn taper_for_fov(half_fov_deg: f64) -> f64 {
    0.5f64.ln() / (2.0 * half_fov_deg.to_radians().cos().ln())
}

impl Scene {
    pub fn with_seed(&self, seed: u64) -> Scene {
        Scene { rng_seed: seed, ..self.clone() }
    }

    /// Move every scatterer along its radial velocity.
    pub fn advance(&mut self, dt: f64) {
        for t in self.targets.iter_mut().chain(self.clutter.iter_mut()) {
            t.range += t.velocity * dt;
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<(), ChannelError> {
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            return Err(ChannelError::InvalidScene(format!("noise_power must be >= 0, got {}", self.noise_power)));
        }
        if !(self.radar_pl_exponent > 0.0) || !(self.comm_pl_exponent > 0.0) {
            return Err(ChannelError::InvalidScene("path-loss exponents must be positive".into()));
        }
        if !(self.element_taper_q >= 0.0) {
            return Err(ChannelError::InvalidScene("element_taper_q must be >= 0".into()));
        }
        if !(self.comm_angle.abs() < 90.0) {
            return Err(ChannelError::InvalidScene("comm_angle must be inside (-90, 90) degrees".into()));
        }
        if let Some(si) = &self.si_leakage {
            if !(si.amplitude >= 0.0) || !(si.delay_samples >= 0.0) || si.delay_samples > cfg.n_cp as f64 {
                return Err(ChannelError::InvalidScene("si_leakage needs amplitude >= 0 and 0 <= delay <= CP".into()));
            }
        }
        for t in self.targets.iter().chain(&self.clutter) {
            t.check(cfg)?;
        }
        Ok(())
    }
}

/// Samples per receive chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBaseband {
    pub chains: Vec<Vec<C64>>,
    pub sample_rate: f64,
    /// Arrival offset of the first transmitted sample, for the comm link.
    pub arrival_offset: usize,
}

impl RxBaseband {
    pub fn len(&self) -> usize {
        self.chains.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Far-field phase of an element at `position` meters for a plane wave from
/// `angle_deg`.
pub fn steering_phase(angle_deg: f64, position: f64, wavelength: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * position * angle_deg.to_radians().sin() / wavelength)
}

/// Per-chain symbol spectra of a baseband, `spectra[chain][symbol][bin]`.
struct SymbolSpectra {
    spectra: Vec<Vec<Vec<C64>>>,
    n_symbols: usize,
}

impl SymbolSpectra {
    fn new(chains: &[Vec<C64>], cfg: &SystemConfig, fft: &UnitaryFft) -> Result<Self, ChannelError> {
        let l = cfg.symbol_len();
        let len = chains.first().map_or(0, |c| c.len());
        if !len.is_multiple_of(l) {
            return Err(ChannelError::Ragged { len, symbol_len: l });
        }
        let spectra = chains
            .iter()
            .map(|c| {
                c.chunks_exact(l)
                    .map(|s| {
                        let mut buf = s[cfg.n_cp..].to_vec();
                        fft.forward(&mut buf);
                        buf
                    })
                    .collect()
            })
            .collect();
        Ok(SymbolSpectra { spectra, n_symbols: len / l })
    }

    /// Add `gain * chain(t - tau)` into `out`, `tau` in samples.
    fn add_delayed(&self, chain: usize, tau: f64, gain: C64, cfg: &SystemConfig, fft: &UnitaryFft, out: &mut [C64]) {
        let n = cfg.n_sc;
        let l = cfg.symbol_len();
        let ramp: Vec<C64> =
            (0..n).map(|b| C64::from_polar(1.0, -2.0 * PI * index_of(b, n) as f64 * tau / n as f64) * gain).collect();
        let first = (tau - cfg.n_cp as f64).ceil() as i64;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (s, spec) in self.spectra[chain].iter().enumerate() {
            if spec.iter().all(|v| v.norm_sqr() == 0.0) {
                continue;
            }
            for ((b, x), r) in buf.iter_mut().zip(spec).zip(&ramp) {
                *b = x * r;
            }
            fft.inverse(&mut buf);
            let body_start = (s * l + cfg.n_cp) as i64;
            for t in first..first + l as i64 {
                let idx = body_start + t;
                if idx < 0 || idx as usize >= out.len() {
                    continue;
                }
                out[idx as usize] += buf[t.rem_euclid(n as i64) as usize];
            }
        }
        debug_assert!(self.n_symbols * l <= out.len() || out.is_empty());
    }
}

fn add_noise(chains: &mut [Vec<C64>], noise_power: f64, rng: &mut ChaCha8Rng) {
    if noise_power <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite noise power");
    for c in chains.iter_mut() {
        for v in c.iter_mut() {
            *v += C64::new(normal.sample(rng), normal.sample(rng));
        }
    }
}

fn taper(angle_deg: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        angle_deg.to_radians().cos().max(0.0).powf(q)
    }
}

/// Monostatic radar returns at every RX chain.
pub fn simulate_radar(tx: &TxBaseband, scene: &Scene, cfg: &SystemConfig) -> Result<RxBaseband, ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    simulate_radar_with_rng(tx, scene, cfg, &mut rng)
}

pub fn simulate_radar_with_rng(
    tx: &TxBaseband,
    scene: &Scene,
    cfg: &SystemConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RxBaseband, ChannelError> {
    scene.validate(cfg)?;
    let fft = UnitaryFft::new(cfg.n_sc);
    let spectra = SymbolSpectra::new(&tx.chains, cfg, &fft)?;
    let len = tx.len();
    let lambda = cfg.wavelength();
    let mut chains = vec![vec![C64::new(0.0, 0.0); len]; cfg.n_rx];

    for target in scene.targets.iter().chain(&scene.clutter) {
        let tau_s = 2.0 * target.range / SPEED_OF_LIGHT;
        let tau = tau_s * cfg.bandwidth_hz;
        let amp = target.reflectivity
            * target.range.powf(-scene.radar_pl_exponent / 2.0)
            * taper(target.angle, scene.element_taper_q);
        let carrier = C64::from_polar(amp, -2.0 * PI * cfg.carrier_hz * tau_s);
        for l in 0..cfg.n_tx.min(tx.chains.len()) {
            let mut delayed = vec![C64::new(0.0, 0.0); len];
            spectra.add_delayed(l, tau, carrier, cfg, &fft, &mut delayed);
            let a_tx = steering_phase(target.angle, l as f64 * cfg.d_tx_m, lambda);
            for (k, chain) in chains.iter_mut().enumerate() {
                let g = a_tx * steering_phase(target.angle, k as f64 * cfg.d_rx_m, lambda);
                for (o, d) in chain.iter_mut().zip(&delayed) {
                    *o += d * g;
                }
            }
        }
    }

    if let Some(si) = &scene.si_leakage {
        if si.amplitude > 0.0 {
            let mut direct = vec![C64::new(0.0, 0.0); len];
            let g = C64::from_polar(si.amplitude, si.phase_deg.to_radians());
            for l in 0..cfg.n_tx.min(tx.chains.len()) {
                spectra.add_delayed(l, si.delay_samples, g, cfg, &fft, &mut direct);
            }
            for chain in chains.iter_mut() {
                for (o, d) in chain.iter_mut().zip(&direct) {
                    *o += d;
                }
            }
        }
    }

    add_noise(&mut chains, scene.noise_power, rng);
    Ok(RxBaseband { chains, sample_rate: cfg.bandwidth_hz, arrival_offset: 0 })
}

/// One-way link to a SISO receiver at `distance` meters and `scene.comm_angle`.
///
/// The output holds `offset` noise-only samples, the delayed signal and
/// `comm_max_offset - offset` trailing samples, with `offset` drawn uniformly.
pub fn simulate_comm(
    tx: &TxBaseband,
    distance: f64,
    scene: &Scene,
    cfg: &SystemConfig,
) -> Result<RxBaseband, ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    simulate_comm_with_rng(tx, distance, scene, cfg, &mut rng)
}

pub fn simulate_comm_with_rng(
    tx: &TxBaseband,
    distance: f64,
    scene: &Scene,
    cfg: &SystemConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RxBaseband, ChannelError> {
    use rand::Rng;
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(ChannelError::BadDistance(distance));
    }
    scene.validate(cfg)?;
    let lambda = cfg.wavelength();
    let amp = distance.powf(-scene.comm_pl_exponent / 2.0) * taper(scene.comm_angle, scene.element_taper_q / 2.0);
    let offset = rng.gen_range(0..=scene.comm_max_offset);
    let len = tx.len();
    let mut out = vec![C64::new(0.0, 0.0); len + scene.comm_max_offset];
    for (l, chain) in tx.chains.iter().enumerate().take(cfg.n_tx) {
        let g = steering_phase(scene.comm_angle, l as f64 * cfg.d_tx_m, lambda) * amp;
        for (o, x) in out[offset..offset + len].iter_mut().zip(chain) {
            *o += x * g;
        }
    }
    if scene.cfo_hz != 0.0 {
        let w = 2.0 * PI * scene.cfo_hz / cfg.bandwidth_hz;
        for (n, v) in out.iter_mut().enumerate() {
            *v *= C64::from_polar(1.0, w * n as f64);
        }
    }
    let mut chains = vec![out];
    add_noise(&mut chains, scene.noise_power, rng);
    Ok(RxBaseband { chains, sample_rate: cfg.bandwidth_hz, arrival_offset: offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::Transmitter;
    use crate::Mcs;

    fn cfg() -> SystemConfig {
        SystemConfig::paper_defaults()
    }

    fn ndp(c: &SystemConfig) -> TxBaseband {
        Transmitter::new(c.clone()).ndp().unwrap().1
    }

    fn power(x: &[C64]) -> f64 {
        x.iter().map(|v| v.norm_sqr()).sum()
    }

    #[test]
    fn steering_phase_examples() {
        let lambda = 0.0125;
        assert!((steering_phase(0.0, 0.37, lambda) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((steering_phase(30.0, lambda / 2.0, lambda) - C64::new(0.0, 1.0)).norm() < 1e-12);
        let p = steering_phase(17.0, 0.02, lambda);
        assert!((steering_phase(-17.0, 0.02, lambda) - p.conj()).norm() < 1e-12);
    }

    #[test]
    fn empty_scene_is_silent() {
        let c = cfg();
        let rx = simulate_radar(&ndp(&c), &Scene::default(), &c).unwrap();
        assert_eq!(rx.chains.len(), 2);
        assert!(rx.chains.iter().all(|ch| ch.iter().all(|v| v.norm() == 0.0)));
    }

    #[test]
    fn integer_delay_is_a_shift() {
        let c = cfg();
        let tx = ndp(&c);
        // two samples of round trip
        let range = SPEED_OF_LIGHT / c.bandwidth_hz;
        let scene = Scene { targets: vec![PointTarget::new(range, 0.0, range * range)], ..Scene::default() };
        let rx = simulate_radar(&tx, &scene, &c).unwrap();
        for chain in &rx.chains {
            for n in 2..tx.len() {
                let want: C64 = tx.chains.iter().map(|x| x[n - 2]).sum();
                assert!((chain[n] - want).norm() < 1e-9, "sample {n}");
            }
        }
    }

    #[test]
    fn doubling_range_costs_12_db() {
        let c = cfg();
        let tx = ndp(&c);
        let p = |r: f64| {
            let s = Scene { targets: vec![PointTarget::new(r, 0.0, 1.0)], ..Scene::default() };
            power(&simulate_radar(&tx, &s, &c).unwrap().chains[0][200..])
        };
        let drop = 10.0 * (p(3.0) / p(6.0)).log10();
        assert!((drop - 40.0 * 2f64.log10()).abs() < 0.05, "{drop}");
    }

    #[test]
    fn doubling_distance_costs_6_db() {
        let c = cfg();
        let tx = ndp(&c);
        let s = Scene { comm_max_offset: 0, ..Scene::default() };
        let p4 = power(&simulate_comm(&tx, 4.0, &s, &c).unwrap().chains[0]);
        let p8 = power(&simulate_comm(&tx, 8.0, &s, &c).unwrap().chains[0]);
        assert!((10.0 * (p4 / p8).log10() - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn comm_copy_at_unit_amplitude() {
        let c = cfg();
        let tx = ndp(&c);
        let s = Scene { comm_max_offset: 50, rng_seed: 3, ..Scene::default() };
        let rx = simulate_comm(&tx, 1.0, &s, &c).unwrap();
        let off = rx.arrival_offset;
        assert!(off <= 50);
        assert_eq!(rx.len(), tx.len() + 50);
        for n in 0..tx.len() {
            let want: C64 = tx.chains.iter().map(|x| x[n]).sum();
            assert!((rx.chains[0][off + n] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cfo_advances_sts_phase() {
        let c = cfg();
        let tx = ndp(&c);
        let cfo = 100e3;
        let s = Scene { comm_max_offset: 0, cfo_hz: cfo, ..Scene::default() };
        let rx = simulate_comm(&tx, 1.0, &s, &c).unwrap();
        let p = c.sts_period();
        let acc: C64 = (0..3 * p).map(|n| rx.chains[0][n].conj() * rx.chains[0][n + p]).sum();
        let want = 2.0 * PI * cfo * p as f64 / c.bandwidth_hz;
        assert!((acc.arg() - want).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_target_rejected() {
        let c = cfg();
        let s = Scene { targets: vec![PointTarget::new(c.max_range() + 1.0, 0.0, 1.0)], ..Scene::default() };
        assert!(matches!(simulate_radar(&ndp(&c), &s, &c), Err(ChannelError::RangeOutOfBounds { .. })));
    }

    #[test]
    fn linear_and_superposed() {
        let c = cfg();
        let tx = Transmitter::new(c.clone()).data(&[3; 60], Mcs::QPSK_1_2, 9).unwrap().1;
        let a = PointTarget::new(5.3, 12.0, 1.0);
        let b = PointTarget::new(8.9, -31.0, 0.4);
        let one = |ts: Vec<PointTarget>, x: &TxBaseband| {
            simulate_radar(x, &Scene { targets: ts, ..Scene::default() }, &c).unwrap()
        };
        let ra = one(vec![a], &tx);
        let rb = one(vec![b], &tx);
        let rab = one(vec![a, b], &tx);
        let k = C64::new(-0.6, 2.1);
        let rk = one(vec![a], &tx.scaled(k));
        for ch in 0..2 {
            for n in 0..tx.len() {
                assert!((rab.chains[ch][n] - ra.chains[ch][n] - rb.chains[ch][n]).norm() < 1e-9);
                assert!((rk.chains[ch][n] - ra.chains[ch][n] * k).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg();
        let tx = ndp(&c);
        let s = Scene {
            targets: vec![PointTarget::new(6.0, 5.0, 1.0)],
            noise_power: 1e-3,
            rng_seed: 77,
            ..Scene::default()
        };
        assert_eq!(simulate_radar(&tx, &s, &c).unwrap(), simulate_radar(&tx, &s, &c).unwrap());
        assert_ne!(simulate_radar(&tx, &s.with_seed(78), &c).unwrap(), simulate_radar(&tx, &s, &c).unwrap());
    }

    #[test]
    fn taper_calibration() {
        let q = taper_for_fov(27.5);
        assert!((20.0 * taper(27.5, q).log10() + 10.0 * 2f64.log10()).abs() < 1e-9);
    }
}
