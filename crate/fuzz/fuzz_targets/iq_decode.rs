#![no_main]

use jrc_core::io::{decode_iq, encode_iq};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = decode_iq(data) {
        assert_eq!(encode_iq(&samples), data);
    }
});
