#![no_main]

use libfuzzer_sys::fuzz_target;
use qpke_core::schemes::PublicKey;

fuzz_target!(|data: &[u8]| {
    if let Ok(pk) = serde_json::from_slice::<PublicKey>(data) {
        let _ = pk.validate();
    }
});
