//! Label table decoder: header check, consecutive-id rule, and class id
//! parsing.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let root = gazsl_fuzz::scaffold("labels.csv");
    std::fs::write(root.join("labels.csv"), data).expect("write fuzz input");
    let _ = gazsl::data::load_dataset(root);
});
