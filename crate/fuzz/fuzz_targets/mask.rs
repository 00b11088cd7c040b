#![no_main]

use libfuzzer_sys::fuzz_target;
use wdmqn::stability::parse_mask;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(masks) = parse_mask(&text) {
        assert!(masks.iter().all(|m| m.end > m.start));
    }
});
