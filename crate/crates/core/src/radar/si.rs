use std::collections::VecDeque;

use crate::C64;

use super::{MeasurementMatrix, RadarError};

/// Background estimate: the mean of the captured measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct SiEstimate {
    pub h_si: Vec<Vec<C64>>,
    /// Matrices averaged into `h_si`.
    pub n_frames: usize,
    pub n_win: usize,
    /// Subtracted by [`remove_si`] only when set.
    pub active: bool,
}

impl SiEstimate {
    /// Fewer than `n_win` frames went into the mean.
    pub fn is_provisional(&self) -> bool {
        self.n_frames < self.n_win
    }
}

/// Sliding FIFO of the last `n_win` measurements.
#[derive(Debug, Clone)]
pub struct SiWindow {
    frames: VecDeque<MeasurementMatrix>,
    n_win: usize,
}

impl SiWindow {
    pub fn new(n_win: usize) -> Self {
        assert!(n_win > 0, "SI window depth must be positive");
        SiWindow { frames: VecDeque::with_capacity(n_win + 1), n_win }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n_win(&self) -> usize {
        self.n_win
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// Push `latest`, evict anything older than the window, return the mean.
    pub fn update(&mut self, latest: &MeasurementMatrix) -> Result<SiEstimate, RadarError> {
        if let Some(first) = self.frames.front() {
            first.check_shape(latest)?;
        }
        self.frames.push_back(latest.clone());
        while self.frames.len() > self.n_win {
            self.frames.pop_front();
        }
        Ok(self.mean().expect("window is non-empty"))
    }

    pub fn mean(&self) -> Option<SiEstimate> {
        let first = self.frames.front()?;
        let n = self.frames.len() as f64;
        let mut h_si = vec![vec![C64::new(0.0, 0.0); first.n_virt()]; first.n_sc()];
        for m in &self.frames {
            for (acc, row) in h_si.iter_mut().zip(&m.h) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
        }
        h_si.iter_mut().flatten().for_each(|v| *v /= n);
        Some(SiEstimate { h_si, n_frames: self.frames.len(), n_win: self.n_win, active: true })
    }
}

/// `latest - h_si`, or `latest` unchanged when the estimate is inactive.
pub fn remove_si(latest: &MeasurementMatrix, si: &SiEstimate) -> Result<MeasurementMatrix, RadarError> {
    if !si.active {
        return Ok(latest.clone());
    }
    let want_virt = si.h_si.first().map_or(0, |r| r.len());
    if si.h_si.len() != latest.n_sc() || want_virt != latest.n_virt() {
        return Err(RadarError::Shape {
            got_sc: latest.n_sc(),
            got_virt: latest.n_virt(),
            want_sc: si.h_si.len(),
            want_virt,
        });
    }
    let h = latest.h.iter().zip(&si.h_si).map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect()).collect();
    Ok(MeasurementMatrix { h, ..latest.clone() })
}

/// Background canceller with a manual capture toggle.
///
/// While capturing, each frame is cleaned with the mean of the frames before
/// it and then enters the window. Stopping the capture freezes the mean.
#[derive(Debug, Clone)]
pub struct SiCanceller {
    window: SiWindow,
    capturing: bool,
    estimate: Option<SiEstimate>,
}

impl SiCanceller {
    pub fn new(n_win: usize) -> Self {
        SiCanceller { window: SiWindow::new(n_win), capturing: false, estimate: None }
    }

    /// Begin a fresh capture; the previous window is discarded.
    pub fn start_capture(&mut self) {
        self.window.clear();
        self.capturing = true;
    }

    pub fn stop_capture(&mut self) {
        self.capturing = false;
    }

    pub fn is_capturing(&self) -> bool {
        self.capturing
    }

    pub fn estimate(&self) -> Option<&SiEstimate> {
        self.estimate.as_ref()
    }

    /// Drop the estimate; frames pass through until the next capture.
    pub fn reset(&mut self) {
        self.window.clear();
        self.capturing = false;
        self.estimate = None;
    }

    pub fn process(&mut self, latest: &MeasurementMatrix) -> Result<MeasurementMatrix, RadarError> {
        let out = match &self.estimate {
            Some(est) => remove_si(latest, est)?,
            None => latest.clone(),
        };
        if self.capturing {
            self.estimate = Some(self.window.update(latest)?);
        }
        Ok(out)
    }
}
