#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::schemes::PrivateKey;

fuzz_target!(|data: &[u8]| {
    if let Ok(sk) = serde_json::from_slice::<PrivateKey>(data) {
        let _ = sk.validate();
    }
});
