//! Dataset loading, validation, and on-disk formats.
//!
//! A dataset lives in one directory:
//!
//! ```text
//! <root>/
//!   features.bin   (or features.csv)   N x x_dim feature matrix
//!   labels.csv                         instance_id,class_id per row
//!   docs/<class_id>.txt                one description per class
//!   split.json                         {"seen": [...], "unseen": [...], "style": "..."}
//! ```
//!
//! The binary feature file starts with a 16-byte header: the magic `GZFB`,
//! then format version, row count, and column count as little-endian u32,
//! followed by row-major little-endian f64 values. The CSV alternative is
//! headerless numeric rows and is picked by extension.
//!
//! Every load revalidates the bundle invariants; nothing is assumed from the
//! writer having been well behaved.

pub mod scaler;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::ClassId;

pub use scaler::FeatureScaler;
pub use synthetic::{generate_synthetic, SyntheticSpec};

const FEATURE_MAGIC: &[u8; 4] = b"GZFB";
const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("classes {classes:?} appear in both the seen and unseen sets; the split must be disjoint")]
    OverlappingSplit { classes: Vec<ClassId> },
    #[error("class {class} has no document (expected {path})")]
    MissingDocument { class: ClassId, path: PathBuf },
    #[error("labels list {labels} instances but the feature matrix has {rows} rows")]
    RowCountMismatch { labels: usize, rows: usize },
    #[error("label {class} at row {row} is in neither the seen nor the unseen split")]
    LabelOutsideSplit { row: usize, class: ClassId },
    #[error("cannot fit a scaler on an empty feature matrix")]
    EmptyFeatures,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> DataError {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Class membership split, with a free-form style tag that is carried
/// through to evaluation reports but never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seen: Vec<ClassId>,
    pub unseen: Vec<ClassId>,
    pub style: String,
}

impl Split {
    pub fn seen_set(&self) -> BTreeSet<ClassId> {
        self.seen.iter().copied().collect()
    }

    pub fn unseen_set(&self) -> BTreeSet<ClassId> {
        self.unseen.iter().copied().collect()
    }

    fn validate(&self) -> Result<(), DataError> {
        let seen = self.seen_set();
        let unseen = self.unseen_set();
        let overlap: Vec<ClassId> = seen.intersection(&unseen).copied().collect();
        if !overlap.is_empty() {
            return Err(DataError::OverlappingSplit { classes: overlap });
        }
        if seen.len() != self.seen.len() || unseen.len() != self.unseen.len() {
            return Err(DataError::Format {
                path: PathBuf::from("split.json"),
                message: "duplicate class id within a split list".into(),
            });
        }
        Ok(())
    }
}

/// Which on-disk representation to use for the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Binary,
    Csv,
}

/// A fully loaded and validated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    /// N x x_dim matrix, one instance per row.
    pub features: Tensor,
    /// Class id per instance, aligned with feature rows.
    pub labels: Vec<ClassId>,
    /// Per-class text description.
    pub documents: BTreeMap<ClassId, String>,
    pub split: Split,
}

impl DatasetBundle {
    /// Checks every bundle invariant: split disjointness, labels confined to
    /// the split, a document for every class, and row-count agreement.
    pub fn validate(&self) -> Result<(), DataError> {
        self.split.validate()?;
        if self.features.rows() != self.labels.len() {
            return Err(DataError::RowCountMismatch {
                labels: self.labels.len(),
                rows: self.features.rows(),
            });
        }
        let mut known = self.split.seen_set();
        known.extend(self.split.unseen_set());
        for (row, &class) in self.labels.iter().enumerate() {
            if !known.contains(&class) {
                return Err(DataError::LabelOutsideSplit { row, class });
            }
        }
        for &class in &known {
            if !self.documents.contains_key(&class) {
                return Err(DataError::MissingDocument {
                    class,
                    path: PathBuf::from(format!("docs/{class}.txt")),
                });
            }
        }
        Ok(())
    }

    /// Feature rows and labels for the instances whose class satisfies the
    /// predicate, in dataset order.
    pub fn rows_where(&self, keep: impl Fn(ClassId) -> bool) -> (Tensor, Vec<ClassId>) {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, &class) in self.labels.iter().enumerate() {
            if keep(class) {
                values.extend_from_slice(self.features.row(row));
                labels.push(class);
            }
        }
        let matrix = Tensor::new(vec![labels.len(), self.features.cols()], values)
            .expect("row slices preserve width");
        (matrix, labels)
    }

    /// Writes the bundle under `root`, creating the directory tree.
    pub fn write(&self, root: &Path, format: FeatureFormat) -> Result<(), DataError> {
        self.validate()?;
        fs::create_dir_all(root).map_err(|e| DataError::io(root, e))?;
        match format {
            FeatureFormat::Binary => {
                write_features_bin(&root.join("features.bin"), &self.features)?
            }
            FeatureFormat::Csv => write_features_csv(&root.join("features.csv"), &self.features)?,
        }
        write_labels(&root.join("labels.csv"), &self.labels)?;
        let docs_dir = root.join("docs");
        fs::create_dir_all(&docs_dir).map_err(|e| DataError::io(&docs_dir, e))?;
        for (class, text) in &self.documents {
            let path = docs_dir.join(format!("{class}.txt"));
            fs::write(&path, text).map_err(|e| DataError::io(&path, e))?;
        }
        let split_path = root.join("split.json");
        let json = serde_json::to_string_pretty(&self.split).expect("split serializes");
        fs::write(&split_path, json).map_err(|e| DataError::io(&split_path, e))?;
        Ok(())
    }
}

/// Loads and validates the dataset under `root`. `features.bin` takes
/// precedence when both representations are present.
pub fn load_dataset(root: &Path) -> Result<DatasetBundle, DataError> {
    let bin = root.join("features.bin");
    let csv = root.join("features.csv");
    let features = if bin.exists() {
        read_features_bin(&bin)?
    } else if csv.exists() {
        read_features_csv(&csv)?
    } else {
        return Err(DataError::Format {
            path: root.to_path_buf(),
            message: "no features.bin or features.csv found".into(),
        });
    };
    let labels = read_labels(&root.join("labels.csv"))?;
    let split = read_split(&root.join("split.json"))?;
    let documents = read_documents(&root.join("docs"), &split)?;
    let name = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let bundle = DatasetBundle {
        name,
        features,
        labels,
        documents,
        split,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn write_features_bin(path: &Path, features: &Tensor) -> Result<(), DataError> {
    let mut file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut header = Vec::with_capacity(16);
    header.extend_from_slice(FEATURE_MAGIC);
    header.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    header.extend_from_slice(&(features.rows() as u32).to_le_bytes());
    header.extend_from_slice(&(features.cols() as u32).to_le_bytes());
    file.write_all(&header).map_err(|e| DataError::io(path, e))?;
    let mut body = Vec::with_capacity(features.len() * 8);
    for &x in features.values() {
        body.extend_from_slice(&x.to_le_bytes());
    }
    file.write_all(&body).map_err(|e| DataError::io(path, e))
}

fn read_features_bin(path: &Path) -> Result<Tensor, DataError> {
    let format_err = |message: String| DataError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| DataError::io(path, e))?;
    if bytes.len() < 16 {
        return Err(format_err(format!(
            "file is {} bytes, shorter than the 16-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != FEATURE_MAGIC {
        return Err(format_err("bad magic, not a feature file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(format_err(format!(
            "unsupported feature file version {version}, expected {FEATURE_VERSION}"
        )));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = 16 + rows * cols * 8;
    if bytes.len() != expected {
        return Err(format_err(format!(
            "header promises {rows} x {cols} values ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[16..].chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err(format_err(format!(
                "non-finite value at row {}, column {}",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        values.push(x);
    }
    Tensor::new(vec![rows, cols], values)
        .map_err(|_| format_err("row/column counts disagree with payload".into()))
}

fn write_features_csv(path: &Path, features: &Tensor) -> Result<(), DataError> {
    let mut out = String::new();
    for r in 0..features.rows() {
        let row: Vec<String> = features.row(r).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

fn read_features_csv(path: &Path) -> Result<Tensor, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let malformed = |line: usize, message: String| DataError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(malformed(
                    idx + 1,
                    format!("row has {} fields, expected {c}", fields.len()),
                ))
            }
            _ => {}
        }
        for field in fields {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|e| malformed(idx + 1, format!("bad float {field:?}: {e}")))?;
            if !x.is_finite() {
                return Err(malformed(idx + 1, format!("non-finite value {field:?}")));
            }
            values.push(x);
        }
        rows += 1;
    }
    Tensor::new(vec![rows, cols.unwrap_or(0)], values).map_err(|_| DataError::Format {
        path: path.to_path_buf(),
        message: "inconsistent row widths".into(),
    })
}

fn write_labels(path: &Path, labels: &[ClassId]) -> Result<(), DataError> {
    let mut out = String::from("instance_id,class_id\n");
    for (i, class) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{class}\n"));
    }
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

fn read_labels(path: &Path) -> Result<Vec<ClassId>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let malformed = |line: usize, message: String| DataError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "instance_id,class_id" => {}
        Some((_, header)) => {
            return Err(malformed(
                1,
                format!("expected header \"instance_id,class_id\", found {header:?}"),
            ))
        }
        None => return Err(malformed(1, "empty label file".into())),
    }
    let mut labels = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (id_str, class_str) = line
            .split_once(',')
            .ok_or_else(|| malformed(idx + 1, "expected instance_id,class_id".into()))?;
        let id: usize = id_str
            .trim()
            .parse()
            .map_err(|e| malformed(idx + 1, format!("bad instance id {id_str:?}: {e}")))?;
        if id != labels.len() {
            return Err(malformed(
                idx + 1,
                format!("instance ids must be consecutive from 0; expected {}, found {id}", labels.len()),
            ));
        }
        let class: ClassId = class_str
            .trim()
            .parse()
            .map_err(|e| malformed(idx + 1, format!("bad class id {class_str:?}: {e}")))?;
        labels.push(class);
    }
    Ok(labels)
}

fn read_split(path: &Path) -> Result<Split, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let split: Split = serde_json::from_str(&text).map_err(|e| DataError::Malformed {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    split.validate()?;
    Ok(split)
}

fn read_documents(dir: &Path, split: &Split) -> Result<BTreeMap<ClassId, String>, DataError> {
    let mut documents = BTreeMap::new();
    let mut classes = split.seen_set();
    classes.extend(split.unseen_set());
    for class in classes {
        let path = dir.join(format!("{class}.txt"));
        if !path.exists() {
            return Err(DataError::MissingDocument { class, path });
        }
        let text = fs::read_to_string(&path).map_err(|e| DataError::io(&path, e))?;
        documents.insert(class, text);
    }
    Ok(documents)
}
