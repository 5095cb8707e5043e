//! Model artifact decoder: serde structure, then the shape cross-checks in
//! validate_model (layer dimension agreement, class counts, scaler width).

#![no_main]

use gazsl::artifact::{validate_model, ModelArtifact};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(artifact) = serde_json::from_str::<ModelArtifact>(text) {
        let _ = validate_model(&artifact.model);
    }
});
