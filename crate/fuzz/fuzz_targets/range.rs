#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_cli::range::{parse_range, MAX_POINTS};

fuzz_target!(|data: &str| {
    if let Ok(points) = parse_range(data) {
        assert!(!points.is_empty());
        assert!(points.len() <= MAX_POINTS);
    }
});
