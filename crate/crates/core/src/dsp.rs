//! FFT plumbing shared by the modulator, demodulators, simulator and imager.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::config::Window;
use crate::C64;

/// Forward/inverse FFT pair of one size with unitary (`1/sqrt(N)`) scaling.
#[derive(Clone)]
pub struct UnitaryFft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryFft").field("n", &self.n).finish()
    }
}

impl UnitaryFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        UnitaryFft {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }
}

pub fn window(kind: Window, len: usize) -> Vec<f64> {
    match kind {
        Window::Rect => vec![1.0; len],
        Window::Hann => {
            if len <= 1 {
                return vec![1.0; len];
            }
            (0..len).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos()).collect()
        }
    }
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}
