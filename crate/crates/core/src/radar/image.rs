use crate::config::{bin_of, derive_radar_axes, index_of, RadarAxes, SystemConfig};
use crate::dsp::{window, UnitaryFft};
use crate::C64;

use super::MeasurementMatrix;

/// Smallest reported noise floor.
const FLOOR_MIN: f64 = 1e-30;

/// Linear power over `power[range_bin][angle_bin]`, angle axis centred.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeAngleImage {
    pub power: Vec<Vec<f64>>,
    pub axes: RadarAxes,
    pub noise_floor: f64,
}

impl RangeAngleImage {
    /// Wrap an existing power map and estimate its noise floor from rows
    /// at or beyond `far_row`.
    pub fn from_power(power: Vec<Vec<f64>>, axes: RadarAxes, far_row: usize) -> Self {
        Self::from_power_excluding(power, axes, far_row, 0)
    }

    /// As [`from_power`](Self::from_power), also skipping rows within
    /// `exclusion_rows` of the strongest cell's row, circularly. Range
    /// sidelobes of a near target wrap into the last rows.
    pub fn from_power_excluding(power: Vec<Vec<f64>>, axes: RadarAxes, far_row: usize, exclusion_rows: usize) -> Self {
        let mut img = RangeAngleImage { power, axes, noise_floor: FLOOR_MIN };
        let n_r = img.n_range();
        let peak_row = if n_r > 0 && exclusion_rows > 0 { img.argmax().0 } else { 0 };
        let keep = |r: usize| {
            let d = r.abs_diff(peak_row);
            exclusion_rows == 0 || d.min(n_r - d) >= exclusion_rows
        };
        let rows: Vec<usize> = (far_row..n_r).filter(|&r| keep(r)).collect();
        let rows = if rows.is_empty() { (far_row..n_r).collect() } else { rows };
        img.noise_floor = noise_floor(&img.power, &img.axes, &rows);
        img
    }

    pub fn n_range(&self) -> usize {
        self.power.len()
    }

    pub fn n_angle(&self) -> usize {
        self.power.first().map_or(0, |r| r.len())
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().flatten().sum()
    }

    /// Largest cell over valid angles, as `(range_bin, angle_bin, power)`.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let valid = self.axes.valid_angle_range();
        let mut best = (0, valid.start, f64::NEG_INFINITY);
        for (r, row) in self.power.iter().enumerate() {
            for c in valid.clone() {
                if row[c] > best.2 {
                    best = (r, c, row[c]);
                }
            }
        }
        best
    }

    /// Nearest image bins to a physical position.
    pub fn bin_of(&self, range_m: f64, angle_deg: f64) -> (usize, usize) {
        let step = self.axes.range_m.get(1).copied().unwrap_or(1.0);
        let r = ((range_m / step).round().max(0.0) as usize).min(self.n_range().saturating_sub(1));
        let s = angle_deg.to_radians().sin();
        let c = self
            .axes
            .angle_deg
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_finite())
            .min_by(|(_, a), (_, b)| (a.to_radians().sin() - s).abs().total_cmp(&(b.to_radians().sin() - s).abs()))
            .map_or(0, |(i, _)| i);
        (r, c)
    }
}

fn noise_floor(power: &[Vec<f64>], axes: &RadarAxes, rows: &[usize]) -> f64 {
    let valid = axes.valid_angle_range();
    let mut cells: Vec<f64> = rows.iter().flat_map(|&r| power[r][valid.clone()].iter().copied()).collect();
    if cells.is_empty() {
        return FLOOR_MIN;
    }
    let mid = cells.len() / 2;
    let (_, m, _) = cells.select_nth_unstable_by(mid, f64::total_cmp);
    m.max(FLOOR_MIN)
}

/// Subcarrier samples of one virtual column over the signed index span
/// `kmin..=kmax`: occupied bins as measured, interior nulls interpolated
/// from the nearest occupied neighbours when `fill` is set, else zero.
///
/// Interpolation follows the column's mean phase step between adjacent
/// occupied bins, so a single delay is filled exactly.
fn column_span(h: &MeasurementMatrix, col: usize, occupied: &[i32], n_sc: usize, fill: bool) -> Vec<(i32, C64)> {
    let (kmin, kmax) = (occupied[0], occupied[occupied.len() - 1]);
    let value = |k: i32| h.h[bin_of(k, n_sc)][col];
    let step: C64 = occupied.windows(2).filter(|w| w[1] == w[0] + 1).map(|w| value(w[1]) * value(w[0]).conj()).sum();
    let step = if step.norm() > 0.0 { step / step.norm() } else { C64::new(1.0, 0.0) };
    let mut out = Vec::with_capacity((kmax - kmin + 1) as usize);
    let mut next = 0usize;
    for k in kmin..=kmax {
        if occupied[next] == k {
            out.push((k, value(k)));
            next += 1;
        } else if fill {
            let (lo, hi) = (occupied[next - 1], occupied[next]);
            let t = (k - lo) as f64 / (hi - lo) as f64;
            let from_lo = value(lo) * step.powi(k - lo);
            let from_hi = value(hi) * step.conj().powi(hi - k);
            out.push((k, from_lo * (1.0 - t) + from_hi * t));
        } else {
            out.push((k, C64::new(0.0, 0.0)));
        }
    }
    out
}

/// Window, zero-pad, inverse DFT over subcarriers and DFT over virtual
/// elements. The 2-D transform is unitary, so with rectangular windows and
/// no null filling the image holds exactly the energy of `H`.
///
/// The range window spans the occupied band edge to edge, nulls included.
pub fn range_angle_image(h: &MeasurementMatrix, cfg: &SystemConfig) -> RangeAngleImage {
    let n_r = cfg.radar.n_fft_range;
    let n_a = cfg.radar.n_fft_angle;
    let n_virt = h.n_virt();
    let plan = cfg.plan();
    let mut occupied: Vec<i32> = plan.occupied.iter().map(|&b| index_of(b, cfg.n_sc)).collect();
    occupied.sort_unstable();
    let span = (occupied[occupied.len() - 1] - occupied[0] + 1) as usize;
    let w_r = window(cfg.radar.range_window, span);
    let w_a = window(cfg.radar.angle_window, n_virt);

    let ifft = UnitaryFft::new(n_r);
    let mut range_profiles = vec![vec![C64::new(0.0, 0.0); n_r]; n_virt];
    for (col, profile) in range_profiles.iter_mut().enumerate() {
        for (i, (k, v)) in
            column_span(h, col, &occupied, cfg.n_sc, cfg.radar.fill_interior_nulls).into_iter().enumerate()
        {
            profile[k.rem_euclid(n_r as i32) as usize] = v * (w_r[i] * w_a[col]);
        }
        ifft.inverse(profile);
    }

    let fft = UnitaryFft::new(n_a);
    let mut buf = vec![C64::new(0.0, 0.0); n_a];
    let power = (0..n_r)
        .map(|r| {
            buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (col, profile) in range_profiles.iter().enumerate() {
                buf[col] = profile[r];
            }
            fft.forward(&mut buf);
            (0..n_a).map(|c| buf[(c + n_a / 2) % n_a].norm_sqr()).collect()
        })
        .collect();

    let axes = derive_radar_axes(cfg);
    let far_row =
        axes.range_m.iter().position(|&r| r > cfg.radar.noise_floor_fraction * cfg.max_range()).unwrap_or(n_r);
    let exclusion_rows = cfg.radar.floor_exclusion_cells * n_r / cfg.n_sc;
    RangeAngleImage::from_power_excluding(power, axes, far_row, exclusion_rows)
}
