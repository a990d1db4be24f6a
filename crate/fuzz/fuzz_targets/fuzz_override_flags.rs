//! Applies arbitrary override flags (one per input line) to a small valid
//! config. Overrides must either update the named field or return an
//! error; any panic is a finding.

#![no_main]

use libfuzzer_sys::fuzz_target;

const BASE: &str = r#"
[field]
kind = "rotation"
rates = [1.0]

[lambda]
re = 1.0

[perturbation]
shape = "bump"
magnitude = 0.1

[sample_grid]
axes = [
    { min = -2.0, max = 2.0, count = 5 },
    { min = -2.0, max = 2.0, count = 5 },
]

[eval_window]
t_min = -1.0
t_max = 1.0
count = 3
"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut config = hus::cli::parse_config(BASE).expect("base config is valid");
    let flags: Vec<String> = text.lines().map(str::to_owned).collect();
    let _ = hus::cli::apply_overrides(&mut config, &flags);
});
