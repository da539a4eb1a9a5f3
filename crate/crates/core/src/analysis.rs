//! Desk-scale experiment harness: path-loss fitting, distance and angle
//! sweeps, and the two-target resolution scenario.
//!
//! Sweep points are independent and run on the rayon pool; records are
//! sorted by the independent variable afterwards, so results do not depend
//! on scheduling.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{simulate_comm, simulate_radar, ChannelError, PointTarget, Scene, SiLeakage};
use crate::config::SystemConfig;
use crate::dsp::{db, from_db};
use crate::radar::{detect, half_power_width, Axis, DetectMethod, Detection, RadarError, RadarFrame, RadarProcessor};
use crate::rx::{Receiver, RxEvent};
use crate::tx::{Transmitter, TxError};

/// Reference distance of the path-loss model, m.
pub const D0_M: f64 = 7.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("path-loss fit needs at least two distinct distances")]
    Singular,
    #[error("distance {0} m is not positive and finite")]
    BadDistance(f64),
    #[error("sweep needs at least one seed")]
    NoSeeds,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Radar(#[from] RadarError),
    #[error(transparent)]
    Tx(#[from] TxError),
}

/// `snr(d) = beta - alpha * 10 log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLossFit {
    pub alpha: f64,
    pub beta: f64,
    pub d0: f64,
    /// Sum of squared dB errors.
    pub residual: f64,
}

impl PathLossFit {
    pub fn predict(&self, d: f64) -> f64 {
        self.beta - self.alpha * 10.0 * (d / self.d0).log10()
    }
}

/// Linear least squares in `x = 10 log10(d / d0)`.
pub fn fit_path_loss(samples: &[(f64, f64)], d0: f64) -> Result<PathLossFit, AnalysisError> {
    if !(d0 > 0.0) || !d0.is_finite() {
        return Err(AnalysisError::BadDistance(d0));
    }
    if let Some(&(d, _)) = samples.iter().find(|(d, _)| !(*d > 0.0) || !d.is_finite()) {
        return Err(AnalysisError::BadDistance(d));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(d, _)| 10.0 * (d / d0).log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if samples.len() < 2 || sxx <= 1e-12 * n {
        return Err(AnalysisError::Singular);
    }
    let sxy: f64 = xs.iter().zip(samples).map(|(x, (_, y))| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let beta = my - slope * mx;
    let residual = xs.iter().zip(samples).map(|(x, (_, y))| (y - beta - slope * x).powi(2)).sum();
    Ok(PathLossFit { alpha: -slope, beta, d0, residual })
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Distance in meters or angle in degrees.
    pub x: f64,
    /// Seed-averaged SNR (mean of linear ratios), dB. `None` when every
    /// repetition missed.
    pub snr_db: Option<f64>,
    /// Seed-averaged position estimate on the swept axis.
    pub estimate: Option<f64>,
    /// Repetitions that produced a measurement.
    pub repetitions: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSweep {
    pub records: Vec<SweepRecord>,
    /// `None` when fewer than two distances were measured.
    pub fit: Option<PathLossFit>,
    /// Distances left out of the fit because nothing was detected.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSweep {
    pub records: Vec<SweepRecord>,
    /// Width of the region within 3 dB of the peak, degrees. `None` when
    /// the sweep does not reach the -3 dB level on both sides.
    pub fov_3db: Option<f64>,
}

/// Peak-over-floor radar SNR of one NDP with a single target.
///
/// Returns the global-peak detection, or `None` when it lands farther than
/// `tolerance_bins` range bins from `expect_range`.
pub fn radar_measurement(
    cfg: &SystemConfig,
    scene: &Scene,
    expect_range: f64,
    tolerance_bins: usize,
) -> Result<Option<Detection>, AnalysisError> {
    let (grid, bb) = Transmitter::new(cfg.clone()).ndp()?;
    let rx = simulate_radar(&bb, scene, cfg)?;
    let mut proc = RadarProcessor::new(cfg.clone()).with_method(DetectMethod::GlobalPeak);
    let frame = proc.process(&rx, &grid)?;
    let Some(det) = frame.detections.first().copied() else { return Ok(None) };
    let (want_bin, _) = frame.image.bin_of(expect_range, det.angle_deg);
    Ok((det.range_bin.abs_diff(want_bin) <= tolerance_bins).then_some(det))
}

/// Pilot SNR of one DATA frame over the communication link, `None` when
/// the frame is not decoded with a valid CRC.
pub fn comm_measurement(
    cfg: &SystemConfig,
    scene: &Scene,
    distance: f64,
    payload: &[u8],
) -> Result<Option<f64>, AnalysisError> {
    let (_, bb) = Transmitter::new(cfg.clone()).data(payload, cfg.mcs, 0x5d)?;
    let rx = simulate_comm(&bb, distance, scene, cfg)?;
    let events = Receiver::new(cfg.clone()).receive(&rx.chains[0]);
    Ok(events.into_iter().find_map(|e| match e {
        RxEvent::Packet(p) if p.crc_ok => Some(p.snr_db),
        _ => None,
    }))
}

/// Sweeps use one noise realisation per seed at every point, so the scatter
/// of the median floor is common to all points and drops out of slopes.
fn seed_for(base: u64, stream: usize, rep: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((stream as u64) << 32 | rep)
}

fn aggregate(x: f64, results: Vec<(u64, Option<(f64, f64)>)>) -> SweepRecord {
    let seeds = results.iter().map(|(s, _)| *s).collect();
    let hits: Vec<(f64, f64)> = results.into_iter().filter_map(|(_, r)| r).collect();
    let n = hits.len();
    let (snr_db, estimate) = if n == 0 {
        (None, None)
    } else {
        let lin = hits.iter().map(|(s, _)| from_db(*s)).sum::<f64>() / n as f64;
        (Some(db(lin)), Some(hits.iter().map(|(_, e)| e).sum::<f64>() / n as f64))
    };
    SweepRecord { x, snr_db, estimate, repetitions: n, seeds }
}

fn finish_distance_sweep(mut records: Vec<SweepRecord>, d0: f64) -> DistanceSweep {
    records.sort_by(|a, b| a.x.total_cmp(&b.x));
    let gaps: Vec<f64> = records.iter().filter(|r| r.snr_db.is_none()).map(|r| r.x).collect();
    for g in &gaps {
        log::warn!("no detection at {g} m, left out of the path-loss fit");
    }
    let samples: Vec<(f64, f64)> = records.iter().filter_map(|r| r.snr_db.map(|s| (r.x, s))).collect();
    let fit = fit_path_loss(&samples, d0).ok();
    DistanceSweep { records, fit, gaps }
}

/// Radar SNR against distance for a single target at 0 degrees added to
/// `template`, fitted with `d0`.
pub fn run_radar_distance_sweep(
    distances: &[f64],
    template: &Scene,
    cfg: &SystemConfig,
    seeds: &[u64],
    d0: f64,
) -> Result<DistanceSweep, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::NoSeeds);
    }
    let max = cfg.max_range();
    if let Some(&d) = distances.iter().find(|d| !(**d > 0.0 && **d < max)) {
        return Err(AnalysisError::BadDistance(d));
    }
    let records = distances
        .par_iter()
        .map(|&d| {
            let results = seeds
                .iter()
                .map(|&s| {
                    let mut scene = template.clone().with_seed(seed_for(s, 0, 0));
                    scene.targets.push(PointTarget::new(d, 0.0, 1.0));
                    let det = radar_measurement(cfg, &scene, d, 2)?;
                    Ok((scene.rng_seed, det.map(|det| (det.snr_db, det.range_m))))
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            Ok(aggregate(d, results))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(finish_distance_sweep(records, d0))
}

/// Receiver pilot SNR against link distance.
pub fn run_comm_distance_sweep(
    distances: &[f64],
    template: &Scene,
    cfg: &SystemConfig,
    seeds: &[u64],
    d0: f64,
) -> Result<DistanceSweep, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::NoSeeds);
    }
    if let Some(&d) = distances.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(AnalysisError::BadDistance(d));
    }
    let payload: Vec<u8> = (0..500u32).map(|i| (i * 7 + 3) as u8).collect();
    let records = distances
        .par_iter()
        .map(|&d| {
            let results = seeds
                .iter()
                .map(|&s| {
                    let scene = template.clone().with_seed(seed_for(s, 0, 1));
                    let snr = comm_measurement(cfg, &scene, d, &payload)?;
                    Ok((scene.rng_seed, snr.map(|v| (v, d))))
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            Ok(aggregate(d, results))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(finish_distance_sweep(records, d0))
}

/// Radar SNR against target bearing at a fixed range.
pub fn run_angle_sweep(
    angles: &[f64],
    range: f64,
    template: &Scene,
    cfg: &SystemConfig,
    seeds: &[u64],
) -> Result<AngleSweep, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::NoSeeds);
    }
    let mut records = angles
        .par_iter()
        .map(|&a| {
            let results = seeds
                .iter()
                .map(|&s| {
                    let mut scene = template.clone().with_seed(seed_for(s, 0, 2));
                    scene.targets.push(PointTarget::new(range, a, 1.0));
                    let det = radar_measurement(cfg, &scene, range, 2)?;
                    Ok((scene.rng_seed, det.map(|det| (det.snr_db, det.angle_deg))))
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            Ok(aggregate(a, results))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    records.sort_by(|a, b| a.x.total_cmp(&b.x));
    let fov_3db = fov_width(&records);
    Ok(AngleSweep { records, fov_3db })
}

/// Distance between the -3 dB crossings around the peak, linear in dB
/// between sweep points.
fn fov_width(records: &[SweepRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records.iter().filter_map(|r| r.snr_db.map(|s| (r.x, s))).collect();
    let (peak, &(_, top)) = pts.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let level = top - 3.0;
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (level - a.1) / (b.1 - a.1) * (b.0 - a.0);
    let right =
        (peak..pts.len().saturating_sub(1)).find(|&i| pts[i + 1].1 < level).map(|i| cross(pts[i], pts[i + 1]))?;
    let left = (1..=peak).rev().find(|&i| pts[i - 1].1 < level).map(|i| cross(pts[i], pts[i - 1]))?;
    Some(right - left)
}

/// Static background and reflectors for the two-target scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTargetScenario {
    /// Leakage, clutter and noise; must not contain targets.
    pub background: Scene,
    pub targets: Vec<PointTarget>,
    /// Background-only frames captured before the targets appear.
    pub capture_frames: usize,
    pub seed: u64,
}

impl TwoTargetScenario {
    /// Two unit reflectors at 6 m, -10 and +10 degrees, behind direct
    /// leakage and two static reflectors each 40 dB above one target.
    pub fn paper(cfg: &SystemConfig) -> Self {
        TwoTargetScenario {
            background: background_scene(6.0, 40.0),
            targets: vec![PointTarget::new(6.0, -10.0, 1.0), PointTarget::new(6.0, 10.0, 1.0)],
            capture_frames: cfg.radar.si_window + 1,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Background whose leakage and clutter returns sit `above_db` over a unit
/// reflector at `reference_range` under the default radar path loss.
pub fn background_scene(reference_range: f64, above_db: f64) -> Scene {
    let target_amp = reference_range.powf(-2.0);
    let amp = target_amp * 10f64.powf(above_db / 20.0);
    let clutter =
        [(2.0, 30.0), (4.5, -35.0)].iter().map(|&(r, a): &(f64, f64)| PointTarget::new(r, a, amp * r * r)).collect();
    Scene {
        si_leakage: Some(SiLeakage { amplitude: amp, phase_deg: 37.0, delay_samples: 0.6 }),
        clutter,
        noise_power: 1e-4,
        ..Scene::default()
    }
}

#[derive(Debug, Clone)]
pub struct TwoTargetReport {
    pub detections: Vec<Detection>,
    /// Range and angle 3 dB widths, per detection; `None` when a crossing
    /// leaves the image.
    pub widths: Vec<(Option<f64>, Option<f64>)>,
    /// Every target has its own detection.
    pub resolved: bool,
    pub frame: RadarFrame,
}

/// Capture the background, freeze the estimate, add the targets and image
/// one frame.
pub fn run_two_target_report(
    scenario: &TwoTargetScenario,
    cfg: &SystemConfig,
) -> Result<TwoTargetReport, AnalysisError> {
    let (grid, bb) = Transmitter::new(cfg.clone()).ndp()?;
    let mut proc = RadarProcessor::new(cfg.clone());
    proc.si_mut().start_capture();
    for k in 0..scenario.capture_frames as u64 {
        let scene = scenario.background.clone().with_seed(seed_for(scenario.seed, 0, k));
        proc.process(&simulate_radar(&bb, &scene, cfg)?, &grid)?;
    }
    proc.si_mut().stop_capture();
    let mut scene = scenario.background.clone().with_seed(seed_for(scenario.seed, 1, 0));
    scene.targets.extend(scenario.targets.iter().cloned());
    let frame = proc.process(&simulate_radar(&bb, &scene, cfg)?, &grid)?;
    let detections = frame.detections.clone();
    let widths = detections
        .iter()
        .map(|d| {
            (half_power_width(&frame.image, d, Axis::Range).ok(), half_power_width(&frame.image, d, Axis::Angle).ok())
        })
        .collect();
    let resolved = detections.len() >= scenario.targets.len();
    Ok(TwoTargetReport { detections, widths, resolved, frame })
}

/// Re-run detection on an existing frame with another method.
pub fn redetect(frame: &RadarFrame, method: &DetectMethod) -> Vec<Detection> {
    detect(&frame.image, method)
}
