#![no_main]

use jrc_core::io::{config_to_string, parse_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        let again = parse_config(&config_to_string(&cfg)).expect("canonical config parses");
        assert_eq!(again, cfg);
    }
});
