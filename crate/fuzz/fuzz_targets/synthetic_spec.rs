//! Synthetic dataset spec decoder: serde defaults plus the consistency
//! validation (split arithmetic, dimension bounds, rate ranges).

#![no_main]

use gazsl::data::synthetic::SyntheticSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = serde_json::from_str::<SyntheticSpec>(text) {
        let _ = spec.validate();
    }
});
