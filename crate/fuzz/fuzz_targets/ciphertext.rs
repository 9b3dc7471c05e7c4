#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::schemes::{AdversaryView, Ciphertext};

fuzz_target!(|data: &[u8]| {
    if let Ok(ct) = serde_json::from_slice::<Ciphertext>(data) {
        let _ = serde_json::to_string(&ct).unwrap();
    }
    let _ = serde_json::from_slice::<AdversaryView>(data);
});
