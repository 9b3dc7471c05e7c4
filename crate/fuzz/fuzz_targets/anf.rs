#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::boolfn::{AnfFunction, KeyFunction};
use qpke_core::Bits;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = serde_json::from_slice::<AnfFunction>(data) {
        let again: AnfFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again, f);
        let _ = f.evaluate(&Bits::zeros(f.m()));
    }
    let _ = serde_json::from_slice::<KeyFunction>(data);
});
