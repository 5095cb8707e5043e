//! Binary feature matrix decoder: header framing, length arithmetic, and
//! the finiteness scan over the payload.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let root = gazsl_fuzz::scaffold("features.bin");
    std::fs::write(root.join("features.bin"), data).expect("write fuzz input");
    let _ = gazsl::data::load_dataset(root);
});
