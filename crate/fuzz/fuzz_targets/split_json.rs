//! Split manifest decoder plus the cross-file validation it triggers:
//! overlap and duplicate checks, then document discovery for every class
//! the manifest names.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let root = gazsl_fuzz::scaffold("split.json");
    std::fs::write(root.join("split.json"), data).expect("write fuzz input");
    let _ = gazsl::data::load_dataset(root);
});
