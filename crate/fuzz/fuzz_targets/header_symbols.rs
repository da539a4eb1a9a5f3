#![no_main]

use jrc_core::rx::decode_header;
use jrc_core::C64;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let symbols: Vec<C64> =
        data.chunks_exact(2).map(|c| C64::new(c[0] as i8 as f64 / 64.0, c[1] as i8 as f64 / 64.0)).collect();
    let erased: Vec<bool> = data.iter().map(|b| b & 0x80 != 0).collect();
    let _ = decode_header(&symbols, &erased);
});
