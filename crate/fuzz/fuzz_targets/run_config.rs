//! Run configuration decoder: serde defaults, range validation, and the
//! canonical-form digest, which must never panic on a value that survived
//! validation.

#![no_main]

use gazsl::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = serde_json::from_str::<RunConfig>(text) {
        if config.validate().is_ok() {
            let _ = config.digest();
        }
    }
});
