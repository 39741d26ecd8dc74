#![no_main]

use libfuzzer_sys::fuzz_target;
use oodro::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        // Accepted configs must survive a serialization round trip.
        let again = serde_json::to_string(&cfg).expect("config serializes");
        let back = ExperimentConfig::from_json(&again).expect("round trip parses");
        assert_eq!(serde_json::to_string(&back).unwrap(), again);
    }
});
