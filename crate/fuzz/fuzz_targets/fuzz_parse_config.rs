//! Feeds arbitrary bytes to the experiment config parser. Parsing must
//! either produce a validated config or return an error; any panic or
//! crash is a finding.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hus::cli::parse_config(text);
    }
});
