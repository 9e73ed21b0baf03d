#![no_main]

use libfuzzer_sys::fuzz_target;

// `t0:t1:steps` grid descriptions come straight from the command line.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = basketmc::config::parse_grid(text);
    }
});
