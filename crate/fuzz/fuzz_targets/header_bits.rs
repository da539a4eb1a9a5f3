#![no_main]

use jrc_core::header::{Header, HEADER_BITS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: [u8; 3]| {
    let mut bits = [0u8; HEADER_BITS];
    for (i, b) in bits.iter_mut().enumerate() {
        *b = (data[i / 8] >> (i % 8)) & 1;
    }
    if let Ok(h) = Header::from_bits(&bits) {
        assert_eq!(h.to_bits(), bits);
    }
});
