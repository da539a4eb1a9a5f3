#![no_main]

use jrc_core::io::FeedbackFile;
use jrc_core::SystemConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(fb) = FeedbackFile::parse(text) {
        let _ = fb.to_matrix(&SystemConfig::paper_defaults());
        assert_eq!(FeedbackFile::parse(&fb.to_toml()).expect("canonical feedback parses").to_toml(), fb.to_toml());
    }
});
