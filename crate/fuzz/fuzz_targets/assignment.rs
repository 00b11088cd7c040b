#![no_main]

use libfuzzer_sys::fuzz_target;
use wdmqn::grid::Grid;
use wdmqn::topology::{served_links, ChannelAssignment};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(a) = ChannelAssignment::from_json(text) else {
        return;
    };
    if a.validate(&Grid::default()).is_ok() {
        let _ = served_links(&a);
        assert_eq!(
            ChannelAssignment::from_json(&a.to_json()).expect("round trip"),
            a
        );
    }
});
