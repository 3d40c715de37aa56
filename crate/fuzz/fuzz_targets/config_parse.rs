#![no_main]

use fsisplit::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = RunConfig::from_toml_str(text) {
            // Anything accepted must survive its own serialization.
            let again = RunConfig::from_toml_str(&config.to_toml_string()).expect("round trip");
            assert_eq!(again, config);
        }
    }
});
