#![no_main]

use jrc_core::io::{detections_to_jsonl, parse_detections_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(recs) = parse_detections_jsonl(text) {
        if recs.iter().all(|r| {
            r.range_m.is_finite() && r.angle_deg.is_finite() && r.snr_db.is_finite() && r.peak_power.is_finite()
        }) {
            assert_eq!(parse_detections_jsonl(&detections_to_jsonl(&recs)).expect("canonical log parses"), recs);
        }
    }
});
