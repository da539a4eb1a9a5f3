use std::collections::HashSet;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{bin_of, index_of, SystemConfig};
use crate::rx::ChannelEstimate;
use crate::C64;

use super::{read_text, write_atomic, IoError};

pub const FEEDBACK_MAGIC: &str = "jrc-feedback";
pub const FEEDBACK_VERSION: u32 = 1;

/// Channel matrix from an NDP, as handed back to the transmitter.
///
/// `entries` is row-major `[subcarrier][tx]` over `occupied`, which holds
/// signed subcarrier indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackFile {
    pub magic: String,
    pub version: u32,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub n_sc: usize,
    pub n_tx: usize,
    pub occupied: Vec<i32>,
    pub entries: Vec<[f64; 2]>,
}

impl FeedbackFile {
    /// Take the occupied rows of an NDP estimate, stamped with the current
    /// time.
    pub fn from_estimate(est: &ChannelEstimate, cfg: &SystemConfig) -> Result<Self, IoError> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self::from_estimate_at(est, cfg, timestamp)
    }

    pub fn from_estimate_at(est: &ChannelEstimate, cfg: &SystemConfig, timestamp: u64) -> Result<Self, IoError> {
        if est.h.len() != cfg.n_sc || est.n_columns() != cfg.n_tx {
            return Err(IoError::Feedback(format!(
                "estimate is {}x{}, expected {}x{}",
                est.h.len(),
                est.n_columns(),
                cfg.n_sc,
                cfg.n_tx
            )));
        }
        let mut occupied: Vec<i32> = cfg.plan().occupied.iter().map(|&b| index_of(b, cfg.n_sc)).collect();
        occupied.sort_unstable();
        let entries = occupied.iter().flat_map(|&k| est.h[bin_of(k, cfg.n_sc)].iter().map(|v| [v.re, v.im])).collect();
        Ok(FeedbackFile {
            magic: FEEDBACK_MAGIC.into(),
            version: FEEDBACK_VERSION,
            timestamp,
            n_sc: cfg.n_sc,
            n_tx: cfg.n_tx,
            occupied,
            entries,
        })
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let f: FeedbackFile = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
        f.check()?;
        Ok(f)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("feedback serialises to TOML")
    }

    fn check(&self) -> Result<(), IoError> {
        if self.magic != FEEDBACK_MAGIC || self.version != FEEDBACK_VERSION {
            return Err(IoError::Format {
                want: FEEDBACK_MAGIC,
                want_version: FEEDBACK_VERSION,
                got: self.magic.clone(),
                got_version: self.version,
            });
        }
        if self.n_sc == 0 || self.n_tx == 0 {
            return Err(IoError::Feedback("n_sc and n_tx must be positive".into()));
        }
        let half = (self.n_sc / 2) as i64;
        let mut seen = HashSet::new();
        for &k in &self.occupied {
            if (k as i64) < -half || (k as i64) >= half {
                return Err(IoError::Feedback(format!("subcarrier {k} outside -{half}..{half}")));
            }
            if !seen.insert(k) {
                return Err(IoError::Feedback(format!("subcarrier {k} listed twice")));
            }
        }
        let want = self.occupied.len().checked_mul(self.n_tx);
        if want != Some(self.entries.len()) {
            return Err(IoError::Feedback(format!(
                "{} entries for {} subcarriers x {} chains",
                self.entries.len(),
                self.occupied.len(),
                self.n_tx
            )));
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(IoError::Feedback("non-finite entry".into()));
        }
        Ok(())
    }

    /// The matrix `h[fft_bin][tx]` for `compute_steering`; unlisted bins are
    /// zero. Shape and occupied set must match `cfg`.
    pub fn to_matrix(&self, cfg: &SystemConfig) -> Result<Vec<Vec<C64>>, IoError> {
        self.check()?;
        if self.n_sc != cfg.n_sc || self.n_tx != cfg.n_tx {
            return Err(IoError::Feedback(format!(
                "file is for {} subcarriers x {} chains, configuration has {} x {}",
                self.n_sc, self.n_tx, cfg.n_sc, cfg.n_tx
            )));
        }
        let mut want: Vec<i32> = cfg.plan().occupied.iter().map(|&b| index_of(b, cfg.n_sc)).collect();
        let mut got = self.occupied.clone();
        want.sort_unstable();
        got.sort_unstable();
        if want != got {
            return Err(IoError::Feedback("occupied subcarriers differ from the configuration".into()));
        }
        let mut h = vec![vec![C64::new(0.0, 0.0); self.n_tx]; self.n_sc];
        for (row, &k) in self.entries.chunks_exact(self.n_tx).zip(&self.occupied) {
            for (slot, [re, im]) in h[bin_of(k, self.n_sc)].iter_mut().zip(row) {
                *slot = C64::new(*re, *im);
            }
        }
        Ok(h)
    }
}

/// Atomic replace; a failed write leaves the previous file valid.
pub fn write_feedback(path: &Path, fb: &FeedbackFile) -> Result<(), IoError> {
    write_atomic(path, fb.to_toml().as_bytes())
}

pub fn read_feedback(path: &Path) -> Result<FeedbackFile, IoError> {
    FeedbackFile::parse(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Scene;
    use crate::config::EstimatorKind;
    use crate::rx::{Receiver, RxEvent};
    use crate::tx::{compute_steering, Transmitter};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_estimate(cfg: &SystemConfig, seed: u64) -> ChannelEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = cfg.plan();
        let h = (0..cfg.n_sc)
            .map(|b| {
                (0..cfg.n_tx)
                    .map(|_| {
                        if plan.is_occupied(b) {
                            C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        ChannelEstimate::from_columns(h, EstimatorKind::Ls)
    }

    #[test]
    fn write_read_round_trip_exact_and_byte_stable() {
        let c = SystemConfig::paper_defaults();
        let est = random_estimate(&c, 1);
        let fb = FeedbackFile::from_estimate_at(&est, &c, 1_700_000_000).unwrap();
        assert_eq!(fb.entries.len(), 52 * 4);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("feedback.toml");
        write_feedback(&p, &fb).unwrap();
        let back = read_feedback(&p).unwrap();
        assert_eq!(back, fb);
        let m = back.to_matrix(&c).unwrap();
        for (a, b) in m.iter().flatten().zip(est.h.iter().flatten()) {
            assert!((a - b).norm() < 1e-7);
        }
        let q = dir.path().join("again.toml");
        write_feedback(&q, &back).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }

    #[test]
    fn identity_ndp_feedback_is_unit_magnitude() {
        let c = SystemConfig::paper_defaults();
        let (_, bb) = Transmitter::new(c.clone()).ndp().unwrap();
        let rx =
            crate::channel::simulate_comm(&bb, 1.0, &Scene { comm_max_offset: 0, ..Scene::default() }, &c).unwrap();
        let report = Receiver::new(c.clone())
            .receive(&rx.chains[0])
            .into_iter()
            .find_map(|e| if let RxEvent::Feedback(r) = e { Some(r) } else { None })
            .unwrap();
        let fb = FeedbackFile::from_estimate(&report.estimate, &c).unwrap();
        for [re, im] in &fb.entries {
            assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-9);
        }
        let steering = compute_steering(&fb.to_matrix(&c).unwrap(), &c).unwrap();
        assert_eq!(steering.weights.len(), 64);
    }

    #[test]
    fn malformed_documents_rejected() {
        let c = SystemConfig::paper_defaults();
        let good = FeedbackFile::from_estimate_at(&random_estimate(&c, 2), &c, 0).unwrap();
        let mut short = good.clone();
        short.entries.pop();
        assert!(FeedbackFile::parse(&short.to_toml()).is_err());
        let mut dup = good.clone();
        dup.occupied[1] = dup.occupied[0];
        assert!(FeedbackFile::parse(&dup.to_toml()).is_err());
        let mut far = good.clone();
        far.occupied[0] = 40;
        assert!(FeedbackFile::parse(&far.to_toml()).is_err());
        let text = good.to_toml().replace(FEEDBACK_MAGIC, "nope");
        assert!(matches!(FeedbackFile::parse(&text), Err(IoError::Format { .. })));
        let other = SystemConfig { n_tx: 2, d_rx_m: 2.0 * 6.35e-3, ..c.clone() };
        assert!(good.to_matrix(&other).is_err());
    }
}
