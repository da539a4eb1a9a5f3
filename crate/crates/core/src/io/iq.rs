use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::RxBaseband;
use crate::C64;

use super::{read_text, write_plain, IoError};

pub const IQ_MAGIC: &str = "jrc-iq";
pub const IQ_VERSION: u32 = 1;

/// Metadata stored next to each IQ file as `<file>.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqSidecar {
    pub magic: String,
    pub version: u32,
    pub sample_rate: f64,
    pub f_c: f64,
    pub chain_id: usize,
    pub n_samples: usize,
    /// Sample offsets where frames start.
    #[serde(default)]
    pub frame_markers: Vec<usize>,
}

impl IqSidecar {
    pub fn new(sample_rate: f64, f_c: f64, chain_id: usize) -> Self {
        IqSidecar {
            magic: IQ_MAGIC.into(),
            version: IQ_VERSION,
            sample_rate,
            f_c,
            chain_id,
            n_samples: 0,
            frame_markers: Vec::new(),
        }
    }
}

/// Samples as interleaved little-endian `f32` I/Q pairs.
pub fn encode_iq(samples: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8]) -> Result<Vec<C64>, IoError> {
    if !bytes.len().is_multiple_of(8) {
        return Err(IoError::RaggedIq(bytes.len()));
    }
    bytes
        .chunks_exact(8)
        .enumerate()
        .map(|(i, c)| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            if re.is_finite() && im.is_finite() {
                Ok(C64::new(re as f64, im as f64))
            } else {
                Err(IoError::NonFiniteSample(i))
            }
        })
        .collect()
}

pub fn sidecar_path(iq: &Path) -> PathBuf {
    let mut name = iq.as_os_str().to_owned();
    name.push(".toml");
    PathBuf::from(name)
}

pub fn parse_sidecar(text: &str) -> Result<IqSidecar, IoError> {
    let s: IqSidecar = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    if s.magic != IQ_MAGIC || s.version != IQ_VERSION {
        return Err(IoError::Format { want: IQ_MAGIC, want_version: IQ_VERSION, got: s.magic, got_version: s.version });
    }
    if let Some(&m) = s.frame_markers.iter().find(|&&m| m >= s.n_samples.max(1)) {
        return Err(IoError::Parse(format!("frame marker {m} lies beyond {} samples", s.n_samples)));
    }
    Ok(s)
}

/// Write the samples and their sidecar. `n_samples` is filled in.
pub fn write_iq(path: &Path, samples: &[C64], sidecar: &IqSidecar) -> Result<(), IoError> {
    let meta = IqSidecar { n_samples: samples.len(), ..sidecar.clone() };
    write_plain(path, &encode_iq(samples))?;
    write_plain(&sidecar_path(path), toml::to_string(&meta).expect("sidecar serialises").as_bytes())
}

pub fn read_iq(path: &Path) -> Result<(Vec<C64>, IqSidecar), IoError> {
    let meta = parse_sidecar(&read_text(&sidecar_path(path))?)?;
    let bytes = fs::read(path).map_err(IoError::file(path))?;
    let samples = decode_iq(&bytes)?;
    if samples.len() != meta.n_samples {
        return Err(IoError::SampleCount { declared: meta.n_samples, actual: samples.len() });
    }
    Ok((samples, meta))
}

/// One `<stem>.ch<k>.cf32` file per chain of `rx` inside `dir`.
pub fn write_capture(
    dir: &Path,
    stem: &str,
    rx: &RxBaseband,
    f_c: f64,
    frame_markers: &[usize],
) -> Result<Vec<PathBuf>, IoError> {
    rx.chains
        .iter()
        .enumerate()
        .map(|(k, chain)| {
            let path = dir.join(format!("{stem}.ch{k}.cf32"));
            let meta = IqSidecar { frame_markers: frame_markers.to_vec(), ..IqSidecar::new(rx.sample_rate, f_c, k) };
            write_iq(&path, chain, &meta)?;
            Ok(path)
        })
        .collect()
}

/// Reassemble a multi-chain capture. Chains are ordered by `chain_id`,
/// which must run `0..n` with equal lengths and sample rates.
pub fn read_capture(paths: &[PathBuf]) -> Result<(RxBaseband, Vec<IqSidecar>), IoError> {
    let mut parts = paths.iter().map(|p| read_iq(p)).collect::<Result<Vec<_>, _>>()?;
    parts.sort_by_key(|(_, m)| m.chain_id);
    if parts.is_empty() {
        return Err(IoError::Capture("no IQ files given".into()));
    }
    for (k, (samples, meta)) in parts.iter().enumerate() {
        if meta.chain_id != k {
            return Err(IoError::Capture(format!("chain ids must run 0..{}, found {}", parts.len(), meta.chain_id)));
        }
        if samples.len() != parts[0].0.len() || meta.sample_rate != parts[0].1.sample_rate {
            return Err(IoError::Capture(format!("chain {k} disagrees with chain 0 in length or sample rate")));
        }
    }
    let sample_rate = parts[0].1.sample_rate;
    let (chains, metas): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok((RxBaseband { chains, sample_rate, arrival_offset: 0 }, metas))
}
