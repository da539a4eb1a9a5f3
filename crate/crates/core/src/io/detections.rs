use serde::{Deserialize, Serialize};

use crate::radar::Detection;

use super::IoError;

/// One line of a detection log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub frame: u64,
    pub range_m: f64,
    pub angle_deg: f64,
    pub snr_db: f64,
    pub peak_power: f64,
    pub range_bin: usize,
    pub angle_bin: usize,
}

impl DetectionRecord {
    pub fn new(frame: u64, d: &Detection) -> Self {
        DetectionRecord {
            frame,
            range_m: d.range_m,
            angle_deg: d.angle_deg,
            snr_db: d.snr_db,
            peak_power: d.peak_power,
            range_bin: d.range_bin,
            angle_bin: d.angle_bin,
        }
    }

    pub fn detection(&self) -> Detection {
        Detection {
            range_m: self.range_m,
            angle_deg: self.angle_deg,
            snr_db: self.snr_db,
            peak_power: self.peak_power,
            range_bin: self.range_bin,
            angle_bin: self.angle_bin,
        }
    }
}

pub fn detections_to_jsonl(records: &[DetectionRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("finite detection serialises") + "\n").collect()
}

/// Blank lines are skipped.
pub fn parse_detections_jsonl(text: &str) -> Result<Vec<DetectionRecord>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| IoError::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}
