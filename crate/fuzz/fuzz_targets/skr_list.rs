#![no_main]

use libfuzzer_sys::fuzz_target;
use wdmqn::scoring::{parse_skr_list, ScoreFunction};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(entries) = parse_skr_list(&text) {
        let report = ScoreFunction::default()
            .report("fuzz", &entries)
            .expect("parsed rates score");
        assert!((0.0..=1.0).contains(&report.w));
    }
});
