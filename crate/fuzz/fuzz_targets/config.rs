#![no_main]

use libfuzzer_sys::fuzz_target;
use wdmqn::config::NetworkConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = NetworkConfig::from_json(text) {
        // a config that loads must survive its own serialisation
        let again = NetworkConfig::from_json(&cfg.to_json()).expect("round trip");
        assert_eq!(again, cfg);
        let _ = cfg.model().expect("validated config builds a model");
    }
});
