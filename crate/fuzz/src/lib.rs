//! Shared scaffolding for the fuzz targets.
//!
//! The dataset loader reads a directory of files that cross-validate each
//! other, so fuzzing one decoder means surrounding it with companions that
//! are already valid. `scaffold` builds that directory once per process,
//! leaving out the file the target is about to fuzz.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

/// A minimal valid `features.bin`: magic, version 1, and a row-major
/// little-endian payload.
pub fn feature_bytes(rows: u32, cols: u32, values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + values.len() * 8);
    bytes.extend_from_slice(b"GZFB");
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&rows.to_le_bytes());
    bytes.extend_from_slice(&cols.to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Dataset directory with a valid two-class skeleton, minus `fuzzed_file`,
/// which the target overwrites before every `load_dataset` call. The path is
/// created once and reused for the life of the fuzzing process.
pub fn scaffold(fuzzed_file: &str) -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("gazsl-fuzz-{}", std::process::id()));
        let docs = dir.join("docs");
        fs::create_dir_all(&docs).expect("scaffold directory");
        // The loader prefers features.bin over features.csv, so neither may
        // exist when the csv decoder is the one under test.
        if fuzzed_file != "features.bin" && fuzzed_file != "features.csv" {
            fs::write(
                dir.join("features.bin"),
                feature_bytes(2, 2, &[0.5, -1.0, 1.5, 2.0]),
            )
            .expect("scaffold features");
        }
        if fuzzed_file != "labels.csv" {
            fs::write(dir.join("labels.csv"), "instance_id,class_id\n0,0\n1,1\n")
                .expect("scaffold labels");
        }
        if fuzzed_file != "split.json" {
            fs::write(
                dir.join("split.json"),
                "{\"seen\":[0],\"unseen\":[1],\"style\":\"fuzz\"}",
            )
            .expect("scaffold split");
        }
        fs::write(docs.join("0.txt"), "alpha beta gamma").expect("scaffold doc");
        fs::write(docs.join("1.txt"), "delta epsilon").expect("scaffold doc");
        dir
    })
}
