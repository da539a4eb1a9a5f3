#![no_main]

use jrc_core::io::{parse_scene, scene_to_string};
use jrc_core::SystemConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scene) = parse_scene(text) {
        let _ = scene.validate(&SystemConfig::paper_defaults());
        let again = parse_scene(&scene_to_string(&scene)).expect("canonical scene parses");
        assert_eq!(scene_to_string(&again), scene_to_string(&scene));
    }
});
