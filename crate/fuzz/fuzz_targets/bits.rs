#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::Bits;

fuzz_target!(|data: &str| {
    if let Ok(b) = data.parse::<Bits>() {
        assert_eq!(b.to_string().parse::<Bits>().unwrap(), b);
        assert_eq!(b.width(), data.len());
    }
});
