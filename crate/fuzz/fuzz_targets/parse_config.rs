#![no_main]

use libfuzzer_sys::fuzz_target;

// The strict TOML run-configuration parser must reject arbitrary input
// gracefully: no panics, no hangs, errors only.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = basketmc::config::RunConfig::from_toml_str(text);
    }
});
