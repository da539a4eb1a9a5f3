#![no_main]

use jrc_core::io::decode_iq;
use jrc_core::rx::StreamReceiver;
use jrc_core::SystemConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&chunk, body)) = data.split_first() else { return };
    let usable = body.len() / 8 * 8;
    let Ok(samples) = decode_iq(&body[..usable]) else { return };
    let mut rx = StreamReceiver::new(SystemConfig::paper_defaults());
    for c in samples.chunks(chunk as usize + 1) {
        let _ = rx.push(c);
    }
});
