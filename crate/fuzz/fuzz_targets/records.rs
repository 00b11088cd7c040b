#![no_main]

use libfuzzer_sys::fuzz_target;
use wdmqn::stability::{detect_failure, ingest, parse_records};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let records = parse_records(&text);
    if let Ok(trace) = ingest(&records.samples, 600.0, None, &[]) {
        let _ = detect_failure(&trace, 0.1);
    }
});
