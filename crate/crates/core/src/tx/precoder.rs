use crate::config::SystemConfig;
use crate::C64;

use super::TxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringSource {
    Identity,
    Feedback,
}

/// Per-subcarrier transmit weights, `weights[fft_bin][tx_chain]`, unit L2 norm
/// on every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    pub weights: Vec<Vec<C64>>,
    pub source: SteeringSource,
}

fn unit_vector(n_tx: usize) -> Vec<C64> {
    let mut w = vec![C64::new(0.0, 0.0); n_tx];
    w[0] = C64::new(1.0, 0.0);
    w
}

impl SteeringMatrix {
    /// All power on chain 1.
    pub fn identity(cfg: &SystemConfig) -> Self {
        SteeringMatrix { weights: vec![unit_vector(cfg.n_tx); cfg.n_sc], source: SteeringSource::Identity }
    }

    pub fn weight(&self, bin: usize, tx: usize) -> C64 {
        self.weights[bin][tx]
    }
}

/// Maximum-ratio transmission from channel feedback `h[fft_bin][tx_chain]`:
/// `w = conj(h) / |h|`. Subcarriers with zero feedback fall back to identity.
pub fn compute_steering(feedback: &[Vec<C64>], cfg: &SystemConfig) -> Result<SteeringMatrix, TxError> {
    let got_tx = feedback.first().map_or(0, |r| r.len());
    if feedback.len() != cfg.n_sc || feedback.iter().any(|r| r.len() != cfg.n_tx) {
        return Err(TxError::FeedbackShape { got_sc: feedback.len(), got_tx, want_sc: cfg.n_sc, want_tx: cfg.n_tx });
    }
    let weights = feedback
        .iter()
        .map(|h| {
            let norm = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-12 && norm.is_finite() {
                h.iter().map(|v| v.conj() / norm).collect()
            } else {
                unit_vector(cfg.n_tx)
            }
        })
        .collect();
    Ok(SteeringMatrix { weights, source: SteeringSource::Feedback })
}
