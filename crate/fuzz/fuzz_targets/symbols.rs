#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::qsym::{Basis, ProductState, TwoTermState};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = text.parse::<Basis>();
    }
    if let Ok(p) = serde_json::from_slice::<ProductState>(data) {
        let again: ProductState = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert!(again.same_ray(&p));
    }
    if let Ok(t) = serde_json::from_slice::<TwoTermState>(data) {
        let again: TwoTermState = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(again, t);
    }
});
