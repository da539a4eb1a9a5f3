use serde::{Deserialize, Serialize};

use crate::config::CfarParams;
use crate::dsp::{db, from_db};

use super::{RadarError, RangeAngleImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub range_m: f64,
    pub angle_deg: f64,
    pub snr_db: f64,
    pub peak_power: f64,
    pub range_bin: usize,
    pub angle_bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectMethod {
    GlobalPeak,
    Cfar(CfarParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Range,
    Angle,
}

fn detection(image: &RangeAngleImage, r: usize, c: usize) -> Detection {
    let p = image.power[r][c];
    Detection {
        range_m: image.axes.range_m[r],
        angle_deg: image.axes.angle_deg[c],
        snr_db: db(p / image.noise_floor),
        peak_power: p,
        range_bin: r,
        angle_bin: c,
    }
}

/// CA-CFAR threshold for a false-alarm probability on exponential cells with
/// `n_train` training cells: `alpha = N (P_fa^(-1/N) - 1)`.
pub fn threshold_db_for_pfa(pfa: f64, n_train: usize) -> f64 {
    let n = n_train as f64;
    db(n * (pfa.powf(-1.0 / n) - 1.0))
}

/// Summed-area table with one row and column of zero padding.
struct Integral {
    s: Vec<Vec<f64>>,
}

impl Integral {
    fn new(power: &[Vec<f64>], cols: std::ops::Range<usize>) -> Self {
        let w = cols.len();
        let mut s = vec![vec![0.0; w + 1]; power.len() + 1];
        for (r, row) in power.iter().enumerate() {
            let mut acc = 0.0;
            for (j, c) in cols.clone().enumerate() {
                acc += row[c];
                s[r + 1][j + 1] = s[r][j + 1] + acc;
            }
        }
        Integral { s }
    }

    /// Sum and count over rows `r0..r1`, columns `c0..c1` (local indices).
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> (f64, usize) {
        let sum = self.s[r1][c1] - self.s[r0][c1] - self.s[r1][c0] + self.s[r0][c0];
        (sum, (r1 - r0) * (c1 - c0))
    }
}

/// Cells above the CA-CFAR threshold, `mask[range][angle]`. Training windows
/// are clipped at the image edges and at aliased angle columns.
pub fn cfar_mask(image: &RangeAngleImage, p: &CfarParams) -> Vec<Vec<bool>> {
    let n_r = image.n_range();
    let valid = image.axes.valid_angle_range();
    let n_c = valid.len();
    let integral = Integral::new(&image.power, valid.clone());
    let alpha = from_db(p.threshold_db);
    let outer_r = p.guard_range + p.train_range;
    let outer_a = p.guard_angle + p.train_angle;
    let mut mask = vec![vec![false; image.n_angle()]; n_r];
    for r in 0..n_r {
        for j in 0..n_c {
            let span = |g: usize, i: usize, n: usize| (i.saturating_sub(g), (i + g + 1).min(n));
            let (or0, or1) = span(outer_r, r, n_r);
            let (oc0, oc1) = span(outer_a, j, n_c);
            let (gr0, gr1) = span(p.guard_range, r, n_r);
            let (gc0, gc1) = span(p.guard_angle, j, n_c);
            let (so, no) = integral.rect(or0, or1, oc0, oc1);
            let (sg, ng) = integral.rect(gr0, gr1, gc0, gc1);
            let n = no - ng;
            if n == 0 {
                continue;
            }
            let mean = (so - sg).max(0.0) / n as f64;
            let c = valid.start + j;
            mask[r][c] = image.power[r][c] > alpha * mean;
        }
    }
    mask
}

fn is_local_max(image: &RangeAngleImage, r: usize, c: usize, gr: usize, gc: usize) -> bool {
    let valid = image.axes.valid_angle_range();
    let p = image.power[r][c];
    let r0 = r.saturating_sub(gr);
    let r1 = (r + gr + 1).min(image.n_range());
    let c0 = c.saturating_sub(gc).max(valid.start);
    let c1 = (c + gc + 1).min(valid.end);
    for rr in r0..r1 {
        for cc in c0..c1 {
            let q = image.power[rr][cc];
            // ties resolve to the first cell in scan order
            if q > p || (q == p && (rr, cc) < (r, c)) {
                return false;
            }
        }
    }
    true
}

/// Detections sorted by SNR, strongest first.
pub fn detect(image: &RangeAngleImage, method: &DetectMethod) -> Vec<Detection> {
    let mut out = match method {
        DetectMethod::GlobalPeak => {
            if image.n_range() == 0 || image.axes.valid_angle_range().is_empty() {
                return Vec::new();
            }
            let (r, c, _) = image.argmax();
            vec![detection(image, r, c)]
        }
        DetectMethod::Cfar(p) => {
            let mask = cfar_mask(image, p);
            let mut v = Vec::new();
            for (r, row) in mask.iter().enumerate() {
                for (c, hit) in row.iter().enumerate() {
                    if *hit && (!p.group_peaks || is_local_max(image, r, c, p.guard_range, p.guard_angle)) {
                        v.push(detection(image, r, c));
                    }
                }
            }
            v
        }
    };
    out.sort_by(|a, b| b.snr_db.total_cmp(&a.snr_db));
    out
}

/// Distance between the linearly interpolated -3 dB crossings of the cut
/// through `det`, in meters or degrees.
pub fn half_power_width(image: &RangeAngleImage, det: &Detection, axis: Axis) -> Result<f64, RadarError> {
    let (cut, peak, lo, hi): (Vec<f64>, usize, usize, usize) = match axis {
        Axis::Range => (image.power.iter().map(|row| row[det.angle_bin]).collect(), det.range_bin, 0, image.n_range()),
        Axis::Angle => {
            let v = image.axes.valid_angle_range();
            (image.power[det.range_bin].clone(), det.angle_bin, v.start, v.end)
        }
    };
    let half = cut[peak] / 2.0;
    let crossing = |dir: i64| -> Result<f64, RadarError> {
        let mut i = peak as i64;
        loop {
            let j = i + dir;
            if j < lo as i64 || j >= hi as i64 {
                return Err(RadarError::Unbounded);
            }
            let (a, b) = (cut[i as usize], cut[j as usize]);
            if b < half {
                return Ok(i as f64 + dir as f64 * (a - half) / (a - b));
            }
            i = j;
        }
    };
    let left = crossing(-1)?;
    let right = crossing(1)?;
    match axis {
        Axis::Range => {
            let step = image.axes.range_m.get(1).copied().unwrap_or(0.0);
            Ok((right - left) * step)
        }
        Axis::Angle => {
            let to_deg = |x: f64| -> Result<f64, RadarError> {
                let i = x.floor() as usize;
                let f = x - i as f64;
                let a = image.axes.angle_deg[i].to_radians().sin();
                let b = image.axes.angle_deg.get(i + 1).map_or(a, |v| v.to_radians().sin());
                let s = a + f * (b - a);
                if s.abs() > 1.0 {
                    return Err(RadarError::Unbounded);
                }
                Ok(s.asin().to_degrees())
            };
            Ok(to_deg(right)? - to_deg(left)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{derive_radar_axes, RadarAxes};
    use crate::SystemConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    fn flat_axes(n_r: usize, n_a: usize) -> RadarAxes {
        RadarAxes {
            range_m: (0..n_r).map(|i| i as f64 * 0.3).collect(),
            angle_deg: (0..n_a)
                .map(|c| ((c as f64 - n_a as f64 / 2.0) / n_a as f64 * 1.8).asin().to_degrees())
                .collect(),
        }
    }

    fn noise_image(rng: &mut ChaCha8Rng, n_r: usize, n_a: usize) -> Vec<Vec<f64>> {
        (0..n_r).map(|_| (0..n_a).map(|_| Exp1.sample(rng)).collect()).collect()
    }

    #[test]
    fn single_target_one_detection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = noise_image(&mut rng, 256, 128);
        p[40][70] = 1e4;
        let img = RangeAngleImage::from_power(p, flat_axes(256, 128), 192);
        let d = detect(&img, &DetectMethod::Cfar(CfarParams::default()));
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].range_bin, d[0].angle_bin), (40, 70));
        assert!((d[0].snr_db - db(1e4 / img.noise_floor)).abs() < 1e-12);
        let g = detect(&img, &DetectMethod::GlobalPeak);
        assert_eq!((g[0].range_bin, g[0].angle_bin), (40, 70));
    }

    #[test]
    fn false_alarm_rate_matches_design() {
        let p = CfarParams {
            guard_range: 2,
            guard_angle: 2,
            train_range: 4,
            train_angle: 4,
            group_peaks: false,
            threshold_db: 0.0,
        };
        let n_train = 13 * 13 - 5 * 5;
        let pfa = 1e-4;
        let p = CfarParams { threshold_db: threshold_db_for_pfa(pfa, n_train), ..p };
        let (n_r, n_a) = (256, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let images = 40;
        let mut alarms = 0usize;
        let mut cells = 0usize;
        for _ in 0..images {
            let img = RangeAngleImage::from_power(noise_image(&mut rng, n_r, n_a), flat_axes(n_r, n_a), 0);
            let mask = cfar_mask(&img, &p);
            for r in 6..n_r - 6 {
                for c in 6..n_a - 6 {
                    cells += 1;
                    alarms += mask[r][c] as usize;
                }
            }
        }
        let expect = pfa * cells as f64;
        let sigma = (cells as f64 * pfa * (1.0 - pfa)).sqrt();
        assert!((alarms as f64 - expect).abs() <= 3.0 * sigma, "{alarms} vs {expect} +- {sigma}");
    }

    #[test]
    fn sinc_squared_width() {
        // sinc^2(x / a) has its first null at a and its half-power points at +-0.44295 a
        let a = 12.0;
        let n = 256;
        let peak = 100.0;
        let profile: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 - peak) / a;
                if u == 0.0 {
                    1.0
                } else {
                    let s = (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u);
                    s * s
                }
            })
            .collect();
        let power: Vec<Vec<f64>> = profile.iter().map(|&v| vec![v; 4]).collect();
        let img = RangeAngleImage::from_power(power, flat_axes(n, 4), 0);
        let det = detection(&img, 100, 2);
        let w = half_power_width(&img, &det, Axis::Range).unwrap();
        let want = 2.0 * 0.442_946_470_4 * a * 0.3;
        assert!((w - want).abs() / want < 0.02, "{w} vs {want}");
    }

    #[test]
    fn unbounded_when_crossing_leaves_image() {
        let img = RangeAngleImage::from_power(vec![vec![1.0; 8]; 8], flat_axes(8, 8), 0);
        let det = detection(&img, 3, 3);
        assert_eq!(half_power_width(&img, &det, Axis::Range), Err(RadarError::Unbounded));
    }

    #[test]
    fn pfa_threshold_formula() {
        let n = 16;
        let t = from_db(threshold_db_for_pfa(1e-3, n));
        assert!(((1.0 + t / n as f64).powi(-(n as i32)) - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn empty_image_no_cfar_detections() {
        let c = SystemConfig::paper_defaults();
        let axes = derive_radar_axes(&c);
        let img = RangeAngleImage::from_power(vec![vec![0.0; 128]; 256], axes, 192);
        assert!(detect(&img, &DetectMethod::Cfar(CfarParams::default())).is_empty());
    }
}
