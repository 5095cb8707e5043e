//! Textual feature matrix decoder: float parsing, ragged row detection, and
//! the non-finite value rejection.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let root = gazsl_fuzz::scaffold("features.csv");
    std::fs::write(root.join("features.csv"), data).expect("write fuzz input");
    let _ = gazsl::data::load_dataset(root);
});
