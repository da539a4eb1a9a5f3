//! Persistent formats and datagram ingestion.
//!
//! | file | format |
//! |------|--------|
//! | config, scene | TOML documents mirroring [`SystemConfig`](crate::SystemConfig) and [`Scene`](crate::channel::Scene) |
//! | IQ capture | raw little-endian `f32` (I, Q) pairs, one file per chain, plus a `<file>.toml` sidecar |
//! | feedback | TOML matrix `[subcarrier][tx]` of `(re, im)` pairs, replaced atomically |
//! | image | comma-separated grid, angle axis in the first row, range axis in the first column, dB body |
//! | detections | one JSON object per line |
//!
//! Every writer is deterministic, so write, read and write again gives the
//! same bytes.

mod config_file;
mod detections;
mod feedback;
mod image;
mod iq;
mod udp;

pub use config_file::{
    config_to_string, load_config, load_scene, parse_config, parse_scene, scene_to_string, PAPER_DEFAULTS,
};
pub use detections::{detections_to_jsonl, parse_detections_jsonl, DetectionRecord};
pub use feedback::{read_feedback, write_feedback, FeedbackFile, FEEDBACK_MAGIC, FEEDBACK_VERSION};
pub use image::ImageFile;
pub use iq::{
    decode_iq, encode_iq, parse_sidecar, read_capture, read_iq, sidecar_path, write_capture, write_iq, IqSidecar,
    IQ_MAGIC, IQ_VERSION,
};
pub use udp::{max_payload_len, IngestCounters, Offer, PacketQueue, UdpIngest};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error("socket: {0}")]
    Socket(std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected format {want:?} version {want_version}, found {got:?} version {got_version}")]
    Format { want: &'static str, want_version: u32, got: String, got_version: u32 },
    #[error("IQ data is {0} bytes, not a whole number of 8-byte samples")]
    RaggedIq(usize),
    #[error("IQ sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("sidecar declares {declared} samples, data holds {actual}")]
    SampleCount { declared: usize, actual: usize },
    #[error("capture chains: {0}")]
    Capture(String),
    #[error("feedback: {0}")]
    Feedback(String),
    #[error("image: {0}")]
    Image(String),
}

impl IoError {
    fn file(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
        move |source| IoError::File { path: path.to_path_buf(), source }
    }

    /// Errors caused by the content of an input rather than by the file
    /// system or the socket.
    pub fn is_malformed_input(&self) -> bool {
        !matches!(self, IoError::File { .. } | IoError::Socket(_))
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(IoError::file(path))
}

/// Write `bytes` to a sibling temporary file, sync it and rename it over
/// `path`. A failure leaves any previous file untouched.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let name = path.file_name().ok_or_else(|| IoError::File {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"),
    })?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(IoError::file(path))
}

pub(crate) fn write_plain(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(IoError::file(path))
}
