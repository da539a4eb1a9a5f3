//! System parameters shared by every stage.
//!
//! A [`SystemConfig`] is plain data. Call [`SystemConfig::validate`] once and
//! share the result read-only; nothing downstream re-checks the invariants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Subcarrier modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

/// Convolutional code rate after puncturing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "3/4")]
    ThreeQuarters,
}

impl CodeRate {
    /// Data bits per coded bit as `(numerator, denominator)`.
    pub fn ratio(self) -> (usize, usize) {
        match self {
            CodeRate::Half => (1, 2),
            CodeRate::ThreeQuarters => (3, 4),
        }
    }
}

/// Modulation and coding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Mcs {
    pub modulation: Modulation,
    pub code_rate: CodeRate,
}

impl Mcs {
    pub const BPSK_1_2: Mcs = Mcs::new(Modulation::Bpsk, CodeRate::Half);
    pub const BPSK_3_4: Mcs = Mcs::new(Modulation::Bpsk, CodeRate::ThreeQuarters);
    pub const QPSK_1_2: Mcs = Mcs::new(Modulation::Qpsk, CodeRate::Half);
    pub const QPSK_3_4: Mcs = Mcs::new(Modulation::Qpsk, CodeRate::ThreeQuarters);
    pub const QAM16_1_2: Mcs = Mcs::new(Modulation::Qam16, CodeRate::Half);
    pub const QAM16_3_4: Mcs = Mcs::new(Modulation::Qam16, CodeRate::ThreeQuarters);

    /// Every supported scheme, ordered by header id.
    pub const ALL: [Mcs; 6] =
        [Mcs::BPSK_1_2, Mcs::BPSK_3_4, Mcs::QPSK_1_2, Mcs::QPSK_3_4, Mcs::QAM16_1_2, Mcs::QAM16_3_4];

    pub const fn new(modulation: Modulation, code_rate: CodeRate) -> Self {
        Mcs { modulation, code_rate }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// 4-bit identifier carried in the frame header.
    pub fn id(self) -> u8 {
        Mcs::ALL.iter().position(|m| *m == self).unwrap() as u8
    }

    pub fn from_id(id: u8) -> Option<Mcs> {
        Mcs::ALL.get(id as usize).copied()
    }

    /// Coded bits carried by one OFDM symbol.
    pub fn coded_bits_per_symbol(self, n_data_subcarriers: usize) -> usize {
        self.bits_per_symbol() * n_data_subcarriers
    }

    /// Information bits carried by one OFDM symbol.
    pub fn data_bits_per_symbol(self, n_data_subcarriers: usize) -> usize {
        let (num, den) = self.code_rate.ratio();
        self.coded_bits_per_symbol(n_data_subcarriers) * num / den
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.modulation {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        };
        let r = match self.code_rate {
            CodeRate::Half => "1/2",
            CodeRate::ThreeQuarters => "3/4",
        };
        write!(f, "{m}-{r}")
    }
}

impl FromStr for Mcs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Mcs::ALL
            .iter()
            .copied()
            .find(|m| m.to_string() == lower)
            .ok_or_else(|| format!("unknown MCS '{s}' (expected e.g. qpsk-1/2, qam16-3/4)"))
    }
}

impl TryFrom<String> for Mcs {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Mcs> for String {
    fn from(m: Mcs) -> String {
        m.to_string()
    }
}

/// Taper applied across subcarriers (range) or virtual elements (angle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

/// Channel estimator used for DATA frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ls,
    #[default]
    Sta,
}

/// Two-dimensional cell-averaging CFAR parameters, in image bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarParams {
    pub guard_range: usize,
    pub guard_angle: usize,
    pub train_range: usize,
    pub train_angle: usize,
    /// Threshold as a multiple of the local training-cell mean, dB.
    pub threshold_db: f64,
    /// Keep only cells that are the maximum of their guard neighbourhood.
    pub group_peaks: bool,
}

impl Default for CfarParams {
    fn default() -> Self {
        CfarParams {
            guard_range: 8,
            guard_angle: 12,
            train_range: 16,
            train_angle: 4,
            threshold_db: 18.0,
            group_peaks: true,
        }
    }
}

/// Radar imaging parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    pub n_fft_range: usize,
    pub n_fft_angle: usize,
    pub range_window: Window,
    pub angle_window: Window,
    /// Depth of the SI/background measurement window.
    pub si_window: usize,
    /// Bins beyond this fraction of the unambiguous range set the noise floor.
    pub noise_floor_fraction: f64,
    /// Far rows within this many range resolution cells of the strongest
    /// cell, measured circularly, are left out of the noise floor.
    pub floor_exclusion_cells: usize,
    /// Interpolate nulled subcarriers inside the occupied band (DC) before
    /// the range transform. A hole in the band otherwise leaves a flat
    /// pedestal about -50 dB under every target.
    pub fill_interior_nulls: bool,
    pub cfar: CfarParams,
}

impl Default for RadarParams {
    fn default() -> Self {
        RadarParams {
            n_fft_range: 256,
            n_fft_angle: 128,
            range_window: Window::Rect,
            angle_window: Window::Rect,
            si_window: 10,
            noise_floor_fraction: 0.75,
            floor_exclusion_cells: 8,
            fill_interior_nulls: true,
            cfar: CfarParams::default(),
        }
    }
}

/// SISO communication receiver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverParams {
    /// Delay-and-correlate plateau threshold on the normalised metric.
    pub detect_threshold: f64,
    /// Samples the metric must stay above threshold.
    pub plateau_len: usize,
    /// Moving-average length of the DC blocker.
    pub dc_block_len: usize,
    /// Correlation window of the detector.
    pub detect_window: usize,
    pub estimator: EstimatorKind,
    pub sta_alpha: f64,
    pub sta_beta: usize,
    /// FFT windows start this many samples inside the cyclic prefix.
    pub timing_backoff: usize,
    pub soft_decisions: bool,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        ReceiverParams {
            detect_threshold: 0.8,
            plateau_len: 32,
            dc_block_len: 64,
            detect_window: 48,
            estimator: EstimatorKind::Sta,
            sta_alpha: 2.0,
            sta_beta: 2,
            timing_backoff: 2,
            soft_decisions: false,
        }
    }
}

/// Every radio, waveform and processing parameter.
///
/// Subcarrier indices are signed (`-N_sc/2 .. N_sc/2`, DC = 0). Any index that is
/// neither data nor pilot is a guard (null) subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_sc: usize,
    pub n_cp: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_tx_m: f64,
    pub d_rx_m: f64,
    pub data_subcarriers: Vec<i32>,
    pub pilot_subcarriers: Vec<i32>,
    pub pilot_values: Vec<f64>,
    pub mcs: Mcs,
    pub max_data_symbols: usize,
    pub radar: RadarParams,
    pub receiver: ReceiverParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::paper_defaults()
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  - {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

impl ConfigError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ConfigError::Invalid(d) => d,
        }
    }
}

/// Subcarrier sets resolved to FFT bins (`0..N_sc`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierPlan {
    pub n_sc: usize,
    /// Data bins, in ascending signed-frequency order.
    pub data: Vec<usize>,
    /// Pilot bins, in the order of `pilot_values`.
    pub pilot: Vec<usize>,
    /// Data and pilot bins, ascending signed-frequency order.
    pub occupied: Vec<usize>,
    pub guard: Vec<usize>,
}

impl SubcarrierPlan {
    pub fn is_occupied(&self, bin: usize) -> bool {
        self.occupied.contains(&bin)
    }
}

/// FFT bin of a signed subcarrier index.
pub fn bin_of(index: i32, n_sc: usize) -> usize {
    index.rem_euclid(n_sc as i32) as usize
}

/// Signed subcarrier index of an FFT bin.
pub fn index_of(bin: usize, n_sc: usize) -> i32 {
    if bin >= n_sc / 2 {
        bin as i32 - n_sc as i32
    } else {
        bin as i32
    }
}

fn default_data_subcarriers() -> Vec<i32> {
    (-26..=26).filter(|k| *k != 0 && ![-21, -7, 7, 21].contains(k)).collect()
}

impl SystemConfig {
    /// 24 GHz, 125 MHz, 64 subcarriers, 4x2 array with 6.35 mm TX spacing.
    pub fn paper_defaults() -> Self {
        let d_tx = 6.35e-3;
        SystemConfig {
            carrier_hz: 24e9,
            bandwidth_hz: 125e6,
            n_sc: 64,
            n_cp: 16,
            n_tx: 4,
            n_rx: 2,
            d_tx_m: d_tx,
            d_rx_m: 4.0 * d_tx,
            data_subcarriers: default_data_subcarriers(),
            pilot_subcarriers: vec![-21, -7, 7, 21],
            pilot_values: vec![1.0, 1.0, 1.0, -1.0],
            mcs: Mcs::QPSK_1_2,
            max_data_symbols: 2048,
            radar: RadarParams::default(),
            receiver: ReceiverParams::default(),
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// `c / 2B`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }

    /// `N_sc * c / 2B`.
    pub fn max_range(&self) -> f64 {
        self.n_sc as f64 * self.range_resolution()
    }

    pub fn n_virt(&self) -> usize {
        self.n_tx * self.n_rx
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_sc + self.n_cp
    }

    /// Period of the short training symbol, samples.
    pub fn sts_period(&self) -> usize {
        self.n_sc / 4
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Position of virtual element `(rx k, tx l)` along the array axis.
    pub fn virtual_position(&self, rx: usize, tx: usize) -> f64 {
        tx as f64 * self.d_tx_m + rx as f64 * self.d_rx_m
    }

    pub fn plan(&self) -> SubcarrierPlan {
        let n = self.n_sc;
        let mut data_sorted = self.data_subcarriers.clone();
        data_sorted.sort_unstable();
        let data: Vec<usize> = data_sorted.iter().map(|&k| bin_of(k, n)).collect();
        let pilot: Vec<usize> = self.pilot_subcarriers.iter().map(|&k| bin_of(k, n)).collect();
        let mut occ_signed: Vec<i32> =
            self.data_subcarriers.iter().chain(self.pilot_subcarriers.iter()).copied().collect();
        occ_signed.sort_unstable();
        occ_signed.dedup();
        let occupied: Vec<usize> = occ_signed.iter().map(|&k| bin_of(k, n)).collect();
        let guard = (0..n).filter(|b| !occupied.contains(b)).collect();
        SubcarrierPlan { n_sc: n, data, pilot, occupied, guard }
    }

    /// Check every invariant; returns the config unchanged when all hold.
    pub fn validate(self) -> Result<SystemConfig, ConfigError> {
        let diags = self.diagnostics();
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(diags))
        }
    }

    /// All invariant violations, one per problem.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |field: &'static str, message: String| out.push(Diagnostic { field, message });

        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("d_tx_m", self.d_tx_m),
            ("d_rx_m", self.d_rx_m),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                push(field, format!("must be positive and finite, got {v}"));
            }
        }
        if self.n_sc < 8 || !self.n_sc.is_power_of_two() {
            push("n_sc", format!("subcarrier count must be a power of two >= 8, got {}", self.n_sc));
        }
        if self.n_cp >= self.n_sc {
            push("n_cp", format!("cyclic prefix too long ({} >= {})", self.n_cp, self.n_sc));
        }
        if self.n_tx == 0 || self.n_tx > 16 {
            push("n_tx", format!("transmit chain count must be 1..=16, got {}", self.n_tx));
        }
        if self.n_rx == 0 || self.n_rx > 16 {
            push("n_rx", format!("receive chain count must be 1..=16, got {}", self.n_rx));
        }
        if self.n_rx > 1 && self.n_tx > 0 {
            let want = self.n_tx as f64 * self.d_tx_m;
            if (self.d_rx_m - want).abs() > 1e-9 * want.abs().max(1e-12) {
                push(
                    "d_rx_m",
                    format!("virtual array is not uniform: d_rx = {} m but n_tx * d_tx = {} m", self.d_rx_m, want),
                );
            }
        }

        let half = (self.n_sc / 2) as i32;
        let in_range = |k: i32| self.n_sc >= 2 && k >= -half && k < half;
        let mut seen_data = std::collections::BTreeSet::new();
        for &k in &self.data_subcarriers {
            if !in_range(k) {
                push("data_subcarriers", format!("subcarrier {k} outside [{}, {})", -half, half));
            } else if !seen_data.insert(k) {
                push("data_subcarriers", format!("subcarrier {k} listed twice"));
            }
        }
        let mut seen_pilot = std::collections::BTreeSet::new();
        for &k in &self.pilot_subcarriers {
            if !in_range(k) {
                push("pilot_subcarriers", format!("subcarrier {k} outside [{}, {})", -half, half));
            } else if !seen_pilot.insert(k) {
                push("pilot_subcarriers", format!("subcarrier {k} listed twice"));
            }
            if seen_data.contains(&k) {
                push(
                    "pilot_subcarriers",
                    format!("subcarrier {k} listed as both pilot (pilot_subcarriers) and data (data_subcarriers)"),
                );
            }
        }
        if self.pilot_subcarriers.is_empty() {
            push("pilot_subcarriers", "at least one pilot is required for phase tracking".into());
        }
        if self.pilot_values.len() != self.pilot_subcarriers.len() {
            push(
                "pilot_values",
                format!("{} values for {} pilot subcarriers", self.pilot_values.len(), self.pilot_subcarriers.len()),
            );
        }
        if self.pilot_values.iter().any(|v| !v.is_finite() || v.abs() < 1e-6) {
            push("pilot_values", "pilot values must be finite and nonzero".into());
        }
        if self.data_subcarriers.len() < crate::header::HEADER_CODED_BITS {
            push(
                "data_subcarriers",
                format!(
                    "{} data subcarriers cannot carry the {}-bit coded header",
                    self.data_subcarriers.len(),
                    crate::header::HEADER_CODED_BITS
                ),
            );
        }
        if self.max_data_symbols == 0 {
            push("max_data_symbols", "must be at least 1".into());
        }

        let r = &self.radar;
        if r.n_fft_range < self.n_sc || !r.n_fft_range.is_power_of_two() {
            push("radar.n_fft_range", format!("must be a power of two >= n_sc, got {}", r.n_fft_range));
        }
        if r.n_fft_angle < self.n_virt() || !r.n_fft_angle.is_multiple_of(2) {
            push("radar.n_fft_angle", format!("must be even and >= n_virt ({}), got {}", self.n_virt(), r.n_fft_angle));
        }
        if r.si_window == 0 {
            push("radar.si_window", "measurement window depth must be positive".into());
        }
        if !(r.noise_floor_fraction > 0.0 && r.noise_floor_fraction < 1.0) {
            push("radar.noise_floor_fraction", format!("must lie in (0, 1), got {}", r.noise_floor_fraction));
        }
        if !r.cfar.threshold_db.is_finite() {
            push("radar.cfar.threshold_db", "must be finite".into());
        }
        if r.cfar.train_range == 0 && r.cfar.train_angle == 0 {
            push("radar.cfar", "at least one training cell is required".into());
        }

        let rx = &self.receiver;
        if !(rx.detect_threshold > 0.0 && rx.detect_threshold <= 1.0) {
            push("receiver.detect_threshold", format!("must lie in (0, 1], got {}", rx.detect_threshold));
        }
        if rx.plateau_len == 0 {
            push("receiver.plateau_len", "must be positive".into());
        }
        if rx.dc_block_len == 0 {
            push("receiver.dc_block_len", "must be positive".into());
        }
        if rx.detect_window == 0 {
            push("receiver.detect_window", "must be positive".into());
        }
        if !(rx.sta_alpha >= 1.0) {
            push("receiver.sta_alpha", format!("must be >= 1, got {}", rx.sta_alpha));
        }
        if rx.timing_backoff > self.n_cp {
            push("receiver.timing_backoff", format!("must not exceed n_cp ({})", self.n_cp));
        }
        out
    }
}

/// Physical axes of a range-angle image.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarAxes {
    /// Range of each image row, meters.
    pub range_m: Vec<f64>,
    /// Angle of each image column, degrees; `NaN` where `|sin| > 1` (aliased).
    pub angle_deg: Vec<f64>,
}

impl RadarAxes {
    pub fn angle_valid(&self, col: usize) -> bool {
        self.angle_deg[col].is_finite()
    }

    pub fn valid_angle_range(&self) -> std::ops::Range<usize> {
        let first = self.angle_deg.iter().position(|a| a.is_finite()).unwrap_or(0);
        let last = self.angle_deg.iter().rposition(|a| a.is_finite()).map_or(0, |i| i + 1);
        first..last
    }
}

/// Sine of the look angle for a (possibly fractional) centred angle-FFT column.
pub fn column_sine(cfg: &SystemConfig, col: f64) -> f64 {
    let m = cfg.radar.n_fft_angle as f64;
    cfg.wavelength() * (col - m / 2.0) / (m * cfg.d_tx_m)
}

/// Map image bins to meters and degrees.
pub fn derive_radar_axes(cfg: &SystemConfig) -> RadarAxes {
    let n_r = cfg.radar.n_fft_range;
    let step = cfg.range_resolution() * cfg.n_sc as f64 / n_r as f64;
    let range_m = (0..n_r).map(|i| i as f64 * step).collect();
    let angle_deg = (0..cfg.radar.n_fft_angle)
        .map(|c| {
            let s = column_sine(cfg, c as f64);
            if s.abs() <= 1.0 {
                s.asin().to_degrees()
            } else {
                f64::NAN
            }
        })
        .collect();
    RadarAxes { range_m, angle_deg }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_are_valid() {
        let cfg = SystemConfig::paper_defaults().validate().unwrap();
        let plan = cfg.plan();
        assert_eq!(plan.data.len(), 48);
        assert_eq!(plan.pilot.len(), 4);
        assert_eq!(plan.guard.len(), 12);
        assert!(plan.guard.contains(&0));
        assert_eq!(plan.data.len() + plan.pilot.len() + plan.guard.len(), 64);
    }

    #[test]
    fn axes_for_125_and_200_mhz() {
        let cfg = SystemConfig {
            radar: RadarParams { n_fft_range: 64, ..Default::default() },
            ..SystemConfig::paper_defaults()
        };
        let axes = derive_radar_axes(&cfg);
        // Table values use c ~ 3e8; c = 299 792 458 m/s is within 0.1 %.
        assert!((cfg.max_range() - 76.8).abs() / 76.8 < 1e-3);
        assert!((axes.range_m[1] - 1.2).abs() / 1.2 < 1e-3);

        let cfg200 = SystemConfig { bandwidth_hz: 200e6, ..cfg };
        let axes = derive_radar_axes(&cfg200);
        assert!((axes.range_m[1] - 0.75).abs() / 0.75 < 1e-3);
        assert!((cfg200.max_range() - 48.0).abs() / 48.0 < 1e-3);
    }

    #[test]
    fn half_wavelength_angle_bins() {
        let mut cfg = SystemConfig::paper_defaults();
        cfg.d_tx_m = cfg.wavelength() / 2.0;
        cfg.d_rx_m = 4.0 * cfg.d_tx_m;
        cfg.radar.n_fft_angle = 8;
        let axes = derive_radar_axes(&cfg);
        for (c, k) in (-4..4).enumerate() {
            let want = (k as f64 / 4.0).asin().to_degrees();
            assert!((axes.angle_deg[c] - want).abs() < 1e-9, "bin {c}");
        }
    }

    #[test]
    fn narrow_spacing_flags_invisible_angles() {
        let mut cfg = SystemConfig::paper_defaults();
        cfg.d_tx_m = cfg.wavelength() / 4.0;
        cfg.d_rx_m = 4.0 * cfg.d_tx_m;
        let axes = derive_radar_axes(&cfg);
        let n_bad = axes.angle_deg.iter().filter(|a| a.is_nan()).count();
        assert!(n_bad > 0);
        // |sin| <= 1 only for the central half of the spatial frequencies.
        assert_eq!(axes.valid_angle_range().len(), cfg.radar.n_fft_angle / 2 + 1);
    }

    #[test]
    fn cyclic_prefix_boundary() {
        let cfg = SystemConfig { n_cp: 64, ..SystemConfig::paper_defaults() };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.diagnostics().len(), 1);
        assert!(err.diagnostics()[0].message.contains("cyclic prefix too long"));
    }

    #[test]
    fn overlapping_pilot_and_data_names_index() {
        let mut cfg = SystemConfig::paper_defaults();
        cfg.data_subcarriers.push(7);
        let err = cfg.validate().unwrap_err();
        let msgs: Vec<_> = err.diagnostics().iter().map(|d| d.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("subcarrier 7") && m.contains("pilot") && m.contains("data")));
    }

    #[test]
    fn each_violation_reported() {
        let cfg =
            SystemConfig { n_sc: 48, n_cp: 100, n_rx: 0, pilot_values: vec![1.0], ..SystemConfig::paper_defaults() };
        let fields: Vec<_> = cfg.diagnostics().iter().map(|d| d.field).collect();
        for f in ["n_sc", "n_cp", "n_rx", "pilot_values"] {
            assert!(fields.contains(&f), "missing {f} in {fields:?}");
        }
    }

    #[test]
    fn mcs_ids_and_names_round_trip() {
        for m in Mcs::ALL {
            assert_eq!(Mcs::from_id(m.id()), Some(m));
            assert_eq!(m.to_string().parse::<Mcs>().unwrap(), m);
        }
        assert_eq!(Mcs::from_id(6), None);
        assert_eq!(Mcs::QAM16_3_4.coded_bits_per_symbol(48), 192);
        assert_eq!(Mcs::QAM16_3_4.data_bits_per_symbol(48), 144);
    }

    #[test]
    fn range_identity() {
        let cfg = SystemConfig::paper_defaults();
        assert!((cfg.range_resolution() * cfg.n_sc as f64 - cfg.max_range()).abs() < 1e-12);
    }
}
