#![no_main]

use jrc_core::io::ImageFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(img) = ImageFile::parse(text) {
        let _ = ImageFile::parse(&img.to_text()).expect("canonical image parses");
    }
});
